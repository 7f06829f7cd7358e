#pragma once

#include <map>
#include <string>
#include <vector>

namespace d2t::nn {

// Token table with four reserved ids. Build order: count desc, token asc.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  std::vector<std::string> tokens;
  std::map<std::string, int> index;

  static Vocab build(const std::vector<std::vector<std::string>>& seqs,
                     int min_count = 1, size_t max_size = 0);
  static Vocab from_tokens(std::vector<std::string> toks);

  int id(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? kUnk : it->second;
  }
  const std::string& token(int id) const { return tokens.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(tokens.size()); }

  std::vector<int> encode(const std::vector<std::string>& seq) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;
};

}  // namespace d2t::nn
