#include "d2t/structuring.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "d2t/corpus.hpp"
#include "d2t/rng.hpp"
#include "d2t/strings.hpp"

namespace d2t {

Partition structure_random(const std::vector<Triple>& ordered, uint64_t seed) {
  if (ordered.empty()) throw CorpusError("cannot structure an empty triple list");
  Rng rng(seed);
  Partition out;
  int begin = 0;
  int n = static_cast<int>(ordered.size());
  for (int i = 1; i < n; ++i) {
    if (rng.bernoulli(0.5)) {
      out.emplace_back(begin, i);
      begin = i;
    }
  }
  out.emplace_back(begin, n);
  return out;
}

namespace {

// Parses `<SNT> p p </SNT> ...` into (predicates, partition); empty result on
// malformed bracketing.
std::pair<std::vector<std::string>, Partition> parse_tagged(
    const std::vector<std::string>& tokens) {
  std::vector<std::string> preds;
  Partition part;
  size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i] != kSentenceOpen) return {};
    ++i;
    int begin = static_cast<int>(preds.size());
    while (i < tokens.size() && tokens[i] != kSentenceClose &&
           tokens[i] != kSentenceOpen) {
      preds.push_back(tokens[i]);
      ++i;
    }
    if (i >= tokens.size() || tokens[i] != kSentenceClose) return {};
    ++i;
    int end = static_cast<int>(preds.size());
    if (end == begin) return {};
    part.emplace_back(begin, end);
  }
  if (preds.empty()) return {};
  return {preds, part};
}

std::string partition_key(const Partition& p) {
  std::string s;
  for (const auto& [b, e] : p) s += std::to_string(b) + "-" + std::to_string(e) + ",";
  return s;
}

// Highest count, then fewest sentences, then lexicographic serialization.
const Partition* pick_majority(const std::map<Partition, int>& candidates) {
  const Partition* best = nullptr;
  int best_count = 0;
  for (const auto& [part, count] : candidates) {
    if (!best) {
      best = &part;
      best_count = count;
      continue;
    }
    if (count != best_count) {
      if (count > best_count) {
        best = &part;
        best_count = count;
      }
      continue;
    }
    if (part.size() != best->size()) {
      if (part.size() < best->size()) best = &part;
      continue;
    }
    if (partition_key(part) < partition_key(*best)) best = &part;
  }
  return best;
}

}  // namespace

void rebuild_subkeys(StructModel& m) {
  m.subkeys.clear();
  for (const auto& [key, partitions] : m.table) {
    for (const auto& [part, count] : partitions) {
      for (size_t first = 0; first < part.size(); ++first) {
        for (size_t last = first; last < part.size(); ++last) {
          int base = part[first].first;
          std::vector<std::string> sub(key.begin() + base,
                                       key.begin() + part[last].second);
          Partition rebased;
          for (size_t s = first; s <= last; ++s)
            rebased.emplace_back(part[s].first - base, part[s].second - base);
          m.subkeys[sub][rebased] += count;
        }
      }
    }
  }
}

StructModel structure_majority_train(const TaskDataset& ds) {
  StructModel m;
  for (const DatasetInstance& inst : ds.instances) {
    for (const auto& target : inst.targets) {
      auto [preds, part] = parse_tagged(target);
      if (preds.empty()) continue;
      ++m.table[preds][part];
    }
  }
  rebuild_subkeys(m);
  return m;
}

Partition structure_majority(const StructModel& m, const std::vector<Triple>& ordered) {
  if (ordered.empty()) throw CorpusError("cannot structure an empty triple list");
  std::vector<std::string> preds;
  preds.reserve(ordered.size());
  for (const Triple& t : ordered) preds.push_back(t.predicate);

  if (auto it = m.table.find(preds); it != m.table.end())
    return *pick_majority(it->second);

  // Greedy longest-prefix cover over the sub-key index.
  Partition out;
  int offset = 0;
  int n = static_cast<int>(preds.size());
  while (offset < n) {
    int len = n - offset;
    const Partition* found = nullptr;
    for (; len >= 1; --len) {
      std::vector<std::string> prefix(preds.begin() + offset,
                                      preds.begin() + offset + len);
      if (auto sit = m.subkeys.find(prefix); sit != m.subkeys.end()) {
        found = pick_majority(sit->second);
        break;
      }
    }
    if (!found) {
      out.emplace_back(offset, offset + 1);
      ++offset;
      continue;
    }
    for (const auto& [b, e] : *found) out.emplace_back(b + offset, e + offset);
    offset += len;
  }
  return out;
}

Partition structure_from_prediction(const std::vector<Triple>& ordered,
                                    const std::vector<std::string>& decoded,
                                    bool* fell_back) {
  std::vector<std::string> preds;
  for (const Triple& t : ordered) preds.push_back(t.predicate);
  auto [decoded_preds, part] = parse_tagged(decoded);
  if (decoded_preds == preds && !part.empty()) {
    if (fell_back) *fell_back = false;
    return part;
  }
  if (fell_back) *fell_back = true;
  Partition out;
  for (int i = 0; i < static_cast<int>(ordered.size()); ++i) out.emplace_back(i, i + 1);
  return out;
}

void save_struct_model(const StructModel& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  for (const auto& [key, partitions] : m.table) {
    nlohmann::ordered_json j;
    j["predicates"] = key;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [part, count] : partitions) {
      nlohmann::ordered_json p;
      nlohmann::ordered_json ivs = nlohmann::ordered_json::array();
      for (const auto& [b, e] : part) ivs.push_back(nlohmann::ordered_json::array({b, e}));
      p["breaks"] = ivs;
      p["count"] = count;
      arr.push_back(p);
    }
    j["partitions"] = arr;
    os << j.dump() << '\n';
  }
}

StructModel load_struct_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorpusError("cannot open " + path.string());
  StructModel m;
  std::string line;
  while (std::getline(is, line)) {
    if (strip(line).empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    auto key = j.at("predicates").get<std::vector<std::string>>();
    for (const auto& p : j.at("partitions")) {
      Partition part;
      for (const auto& iv : p.at("breaks"))
        part.emplace_back(iv.at(0).get<int>(), iv.at(1).get<int>());
      m.table[key][part] = p.at("count").get<int>();
    }
  }
  rebuild_subkeys(m);
  return m;
}

}  // namespace d2t
