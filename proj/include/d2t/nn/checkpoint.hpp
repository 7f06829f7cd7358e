#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "d2t/bpe.hpp"
#include "d2t/nn/graph.hpp"

namespace d2t::nn {

struct ModelConfig;

// Checkpoint layout: a magic line, a one-line JSON header carrying the model
// description plus a tensor manifest, then the tensor values as raw
// little-endian doubles in manifest order.
inline constexpr char kCheckpointMagic[] = "D2TCKPT1";

// `header` should describe the model (kind, config, vocab, ...); the tensor
// manifest is appended here.
void write_checkpoint(const std::filesystem::path& path, nlohmann::ordered_json header,
                      const ParamStore& params);

// Recreates every tensor listed in the manifest inside `params` and returns
// the header.
nlohmann::ordered_json read_checkpoint(const std::filesystem::path& path,
                                       ParamStore& params);

nlohmann::ordered_json model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json bpe_json(const BPEModel& bpe);
BPEModel bpe_from_json(const nlohmann::json& j);

}  // namespace d2t::nn
