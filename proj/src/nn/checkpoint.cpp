#include "d2t/nn/checkpoint.hpp"

#include <fstream>

#include "d2t/nn/seq2seq.hpp"

namespace d2t::nn {

void write_checkpoint(const std::filesystem::path& path, nlohmann::ordered_json header,
                      const ParamStore& params) {
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  params.for_each([&](const Tensor& t) {
    manifest.push_back({{"name", t.name},
                        {"rows", t.value.rows()},
                        {"cols", t.value.cols()}});
  });
  header["tensors"] = std::move(manifest);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw NnError("cannot write checkpoint: " + path.string());
  out << kCheckpointMagic << "\n" << header.dump() << "\n";
  params.for_each([&](const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.value.size())));
  });
  if (!out) throw NnError("short write for checkpoint: " + path.string());
}

nlohmann::ordered_json read_checkpoint(const std::filesystem::path& path,
                                       ParamStore& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NnError("cannot open checkpoint: " + path.string());
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kCheckpointMagic)
    throw NnError("not a checkpoint file: " + path.string());
  std::getline(in, header_line);
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw NnError("bad checkpoint header: " + std::string(e.what()));
  }
  if (!header.contains("tensors")) throw NnError("checkpoint header lacks tensors");
  for (const auto& entry : header.at("tensors")) {
    Tensor& t = params.create(entry.at("name").get<std::string>(),
                              entry.at("rows").get<int>(), entry.at("cols").get<int>());
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(t.value.size())));
    if (!in) throw NnError("truncated checkpoint: " + path.string());
  }
  return header;
}

nlohmann::ordered_json model_config_json(const ModelConfig& cfg) {
  return {{"arch", cfg.arch},
          {"emb", cfg.emb},
          {"hidden", cfg.hidden},
          {"layers", cfg.layers},
          {"heads", cfg.heads},
          {"ff", cfg.ff},
          {"dropout", cfg.dropout},
          {"label_smoothing", cfg.label_smoothing},
          {"tied", cfg.tied}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.arch = j.at("arch").get<std::string>();
  c.emb = j.at("emb").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff = j.at("ff").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.label_smoothing = j.at("label_smoothing").get<double>();
  c.tied = j.at("tied").get<bool>();
  return c;
}

nlohmann::ordered_json bpe_json(const BPEModel& bpe) {
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const auto& [a, b] : bpe.merges) merges.push_back({a, b});
  return {{"merge_target", bpe.merge_target},
          {"threshold", bpe.threshold},
          {"merges", std::move(merges)}};
}

BPEModel bpe_from_json(const nlohmann::json& j) {
  BPEModel bpe;
  bpe.merge_target = j.at("merge_target").get<int>();
  bpe.threshold = j.at("threshold").get<int>();
  for (const auto& pair : j.at("merges"))
    bpe.merges.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  return bpe;
}

}  // namespace d2t::nn
