#include "d2t/ordering.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "d2t/corpus.hpp"
#include "d2t/rng.hpp"
#include "d2t/strings.hpp"

namespace d2t {

std::vector<Triple> order_random(const TripleSet& ts, uint64_t seed) {
  if (ts.triples.empty()) throw CorpusError("cannot order an empty triple set");
  std::vector<Triple> out = ts.triples;
  Rng rng(seed);
  rng.shuffle(out);
  return out;
}

OrderModel order_majority_train(const TaskDataset& ds) {
  OrderModel m;
  for (const DatasetInstance& inst : ds.instances) {
    for (const auto& target : inst.targets) {
      std::vector<std::string> key = target;
      std::sort(key.begin(), key.end());
      ++m.table[key][target];
    }
  }
  return m;
}

namespace {

// Rearranges triples to follow a predicate sequence drawn from the same
// multiset; duplicates consume matching triples in input order.
std::vector<Triple> arrange(const std::vector<Triple>& triples,
                            const std::vector<std::string>& order) {
  std::vector<Triple> out;
  std::vector<bool> used(triples.size(), false);
  for (const std::string& pred : order) {
    for (size_t i = 0; i < triples.size(); ++i) {
      if (!used[i] && triples[i].predicate == pred) {
        used[i] = true;
        out.push_back(triples[i]);
        break;
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Triple> order_majority(const OrderModel& m, const TripleSet& ts) {
  std::vector<std::string> key;
  key.reserve(ts.triples.size());
  for (const Triple& t : ts.triples) key.push_back(t.predicate);
  std::sort(key.begin(), key.end());

  auto it = m.table.find(key);
  if (it == m.table.end()) return ts.triples;

  const std::vector<std::string>* best = nullptr;
  int best_count = 0;
  for (const auto& [order, count] : it->second) {
    if (count > best_count || (count == best_count && best && join(order) < join(*best))) {
      best = &order;
      best_count = count;
    }
  }
  std::vector<Triple> out = arrange(ts.triples, *best);
  if (out.size() != ts.triples.size()) return ts.triples;  // corrupt model entry
  return out;
}

std::vector<Triple> order_from_prediction(const TripleSet& ts,
                                          const std::vector<std::string>& predicted,
                                          uint64_t seed) {
  Rng rng(seed);
  std::vector<Triple> out;
  std::vector<bool> used(ts.triples.size(), false);
  for (const std::string& pred : predicted) {
    std::vector<size_t> matches;
    for (size_t i = 0; i < ts.triples.size(); ++i)
      if (!used[i] && ts.triples[i].predicate == pred) matches.push_back(i);
    if (matches.empty()) continue;  // predicate not in the input: skip
    size_t pick = matches[rng.uniform_int(static_cast<int>(matches.size()))];
    used[pick] = true;
    out.push_back(ts.triples[pick]);
  }
  std::vector<Triple> leftover;
  for (size_t i = 0; i < ts.triples.size(); ++i)
    if (!used[i]) leftover.push_back(ts.triples[i]);
  for (Triple& t : canonical_order(leftover)) out.push_back(std::move(t));
  return out;
}

void save_order_model(const OrderModel& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  for (const auto& [key, orders] : m.table) {
    nlohmann::ordered_json j;
    j["predicates"] = key;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [order, count] : orders) {
      nlohmann::ordered_json o;
      o["seq"] = order;
      o["count"] = count;
      arr.push_back(o);
    }
    j["orders"] = arr;
    os << j.dump() << '\n';
  }
}

OrderModel load_order_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorpusError("cannot open " + path.string());
  OrderModel m;
  std::string line;
  while (std::getline(is, line)) {
    if (strip(line).empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    auto key = j.at("predicates").get<std::vector<std::string>>();
    for (const auto& o : j.at("orders"))
      m.table[key][o.at("seq").get<std::vector<std::string>>()] =
          o.at("count").get<int>();
  }
  return m;
}

}  // namespace d2t
