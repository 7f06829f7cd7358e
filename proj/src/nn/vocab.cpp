#include "d2t/nn/vocab.hpp"

#include <algorithm>

namespace d2t::nn {

namespace {
const char* kReserved[4] = {"<pad>", "<s>", "</s>", "<unk>"};
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& seqs, int min_count,
                   size_t max_size) {
  std::map<std::string, int> counts;
  for (const auto& seq : seqs)
    for (const auto& tok : seq) ++counts[tok];
  std::vector<std::pair<std::string, int>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  for (const char* r : kReserved) {
    v.index[r] = static_cast<int>(v.tokens.size());
    v.tokens.push_back(r);
  }
  for (const auto& [tok, count] : sorted) {
    if (count < min_count) break;
    if (max_size > 0 && v.tokens.size() >= max_size) break;
    if (v.index.count(tok) > 0) continue;  // reserved name in data
    v.index[tok] = static_cast<int>(v.tokens.size());
    v.tokens.push_back(tok);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> toks) {
  Vocab v;
  v.tokens = std::move(toks);
  for (size_t i = 0; i < v.tokens.size(); ++i)
    v.index[v.tokens[i]] = static_cast<int>(i);
  return v;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto& tok : seq) out.push_back(id(tok));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

}  // namespace d2t::nn
