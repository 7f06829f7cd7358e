#include "d2t/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

namespace d2t {

std::vector<std::string> utf8_split(const std::string& word) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < word.size()) {
    unsigned char c = static_cast<unsigned char>(word[i]);
    size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    if (i + len > word.size()) len = 1;
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

using Pieces = std::vector<std::string>;

void apply_merge(Pieces& p, const std::string& a, const std::string& b) {
  size_t w = 0;
  for (size_t r = 0; r < p.size(); ++r) {
    if (r + 1 < p.size() && p[r] == a && p[r + 1] == b) {
      p[w++] = a + b;
      ++r;
    } else {
      if (w != r) p[w] = std::move(p[r]);
      ++w;
    }
  }
  p.resize(w);
}

}  // namespace

BPEModel bpe_train(const std::vector<std::vector<std::string>>& lines, int merges,
                   int threshold) {
  if (merges <= 0) throw CorpusError("bpe: merge target must be positive");
  std::map<std::string, int> word_freq;
  for (const auto& line : lines)
    for (const auto& tok : line) ++word_freq[tok];
  if (word_freq.empty()) throw CorpusError("bpe: empty training corpus");

  std::vector<std::pair<Pieces, int>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.emplace_back(utf8_split(w), f);

  BPEModel m;
  m.merge_target = merges;
  m.threshold = threshold;
  for (int step = 0; step < merges; ++step) {
    std::map<std::pair<std::string, std::string>, int> pair_counts;
    for (const auto& [pieces, freq] : words)
      for (size_t i = 0; i + 1 < pieces.size(); ++i)
        pair_counts[{pieces[i], pieces[i + 1]}] += freq;

    const std::pair<std::string, std::string>* best = nullptr;
    int best_count = 0;
    for (const auto& [pr, count] : pair_counts) {
      if (count > best_count) {  // map order makes ties lexicographic-first
        best = &pr;
        best_count = count;
      }
    }
    if (!best || best_count < threshold) break;
    m.merges.push_back(*best);
    for (auto& [pieces, freq] : words) apply_merge(pieces, best->first, best->second);
  }
  return m;
}

std::vector<std::string> bpe_encode(const BPEModel& m,
                                    const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const std::string& tok : tokens) {
    Pieces pieces = utf8_split(tok);
    for (const auto& [a, b] : m.merges) apply_merge(pieces, a, b);
    for (size_t i = 0; i < pieces.size(); ++i) {
      if (i + 1 < pieces.size())
        out.push_back(pieces[i] + kBpeMarker);
      else
        out.push_back(pieces[i]);
    }
  }
  return out;
}

std::vector<std::string> bpe_decode(const BPEModel&,
                                    const std::vector<std::string>& subwords) {
  std::vector<std::string> out;
  std::string current;
  for (const std::string& piece : subwords) {
    if (ends_with(piece, kBpeMarker)) {
      current += piece.substr(0, piece.size() - 2);
    } else {
      current += piece;
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));  // dangling continuation
  return out;
}

void save_bpe(const BPEModel& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  os << m.merge_target << '\t' << m.threshold << '\n';
  for (const auto& [a, b] : m.merges) os << a << '\t' << b << '\n';
}

BPEModel load_bpe(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorpusError("cannot open " + path.string());
  BPEModel m;
  std::string line;
  if (std::getline(is, line)) {
    auto parts = split_on(line, '\t');
    if (parts.size() == 2) {
      m.merge_target = std::stoi(parts[0]);
      m.threshold = std::stoi(parts[1]);
    }
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto parts = split_on(line, '\t');
    if (parts.size() == 2) m.merges.emplace_back(parts[0], parts[1]);
  }
  return m;
}

}  // namespace d2t
