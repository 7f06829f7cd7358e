#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

// Subword segmentation by learned merges. Pieces of a split word carry a
// trailing "@@" continuation marker except the last, which makes decoding a
// pure concatenation replay.
struct BPEModel {
  std::vector<std::pair<std::string, std::string>> merges;
  int merge_target = 0;
  int threshold = 1;

  bool empty() const { return merges.empty(); }
};

inline constexpr const char* kBpeMarker = "@@";

// Learns up to `merges` merge operations over the token sequences; pairs
// occurring fewer than `threshold` times are never merged.
BPEModel bpe_train(const std::vector<std::vector<std::string>>& lines, int merges,
                   int threshold);

std::vector<std::string> bpe_encode(const BPEModel& m,
                                    const std::vector<std::string>& tokens);
std::vector<std::string> bpe_decode(const BPEModel& m,
                                    const std::vector<std::string>& subwords);

// Splits a UTF-8 string into code points (bytes on malformed input).
std::vector<std::string> utf8_split(const std::string& word);

void save_bpe(const BPEModel& m, const std::filesystem::path& path);
BPEModel load_bpe(const std::filesystem::path& path);

}  // namespace d2t
