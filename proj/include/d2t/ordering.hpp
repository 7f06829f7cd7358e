#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

// Majority table: sorted predicate multiset -> observed orders with counts.
struct OrderModel {
  std::map<std::vector<std::string>, std::map<std::vector<std::string>, int>> table;

  bool empty() const { return table.empty(); }
};

// Uniform random permutation, reproducible from seed.
std::vector<Triple> order_random(const TripleSet& ts, uint64_t seed);

// Counts every gold predicate order per multiset key.
OrderModel order_majority_train(const TaskDataset& ds);

// Seen key: rearrange to the highest-count order (ties: lexicographically
// smallest joined order). Unseen key: input order unchanged.
std::vector<Triple> order_majority(const OrderModel& m, const TripleSet& ts);

// Realizes a predicted predicate sequence against the input set: each
// predicted predicate consumes a random remaining matching triple (seeded);
// unknown predicates are skipped; leftover triples append in canonical order.
std::vector<Triple> order_from_prediction(const TripleSet& ts,
                                          const std::vector<std::string>& predicted,
                                          uint64_t seed);

void save_order_model(const OrderModel& m, const std::filesystem::path& path);
OrderModel load_order_model(const std::filesystem::path& path);

}  // namespace d2t
