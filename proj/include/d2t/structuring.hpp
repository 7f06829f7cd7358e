#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

// Majority table: ordered predicate sequence -> sentence partitions with
// counts. The sub-key index additionally exposes every contiguous run of
// whole sentences from a stored partition, re-based to offset 0; it backs the
// unseen-key fallback and is rebuilt rather than persisted.
struct StructModel {
  std::map<std::vector<std::string>, std::map<Partition, int>> table;
  std::map<std::vector<std::string>, std::map<Partition, int>> subkeys;

  bool empty() const { return table.empty(); }
};

// Uniform over the 2^(n-1) contiguous partitions, reproducible from seed.
Partition structure_random(const std::vector<Triple>& ordered, uint64_t seed);

StructModel structure_majority_train(const TaskDataset& ds);

// Seen sequence: highest-count partition (ties: fewest sentences, then
// lexicographic). Unseen: greedy longest-prefix cover over stored keys and
// sub-keys; a never-matched triple becomes its own sentence.
Partition structure_majority(const StructModel& m, const std::vector<Triple>& ordered);

// Validates a decoded tagged predicate sequence against the input order;
// malformed or mismatched decodes fall back to one sentence per triple.
Partition structure_from_prediction(const std::vector<Triple>& ordered,
                                    const std::vector<std::string>& decoded,
                                    bool* fell_back = nullptr);

void save_struct_model(const StructModel& m, const std::filesystem::path& path);
StructModel load_struct_model(const std::filesystem::path& path);

// Recomputes the sub-key index from `table` (train and load call this).
void rebuild_subkeys(StructModel& m);

}  // namespace d2t
