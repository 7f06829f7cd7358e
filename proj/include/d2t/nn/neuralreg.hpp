#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "d2t/nn/seq2seq.hpp"
#include "d2t/reg.hpp"
#include "d2t/types.hpp"

namespace d2t::nn {

// Referring-expression model: separate bidirectional encoders over the pre-
// and post-context of a slot, an entity embedding, and a decoder that attends
// over both contexts while emitting the expression tokens.

struct RegModelConfig {
  int emb = 64;
  int hidden = 128;
  int layers = 1;
  double dropout = 0.2;

  static RegModelConfig desk();
  static RegModelConfig paper();
};

struct RegTrainConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  int epochs = 60;
  int batch_size = 80;
  int patience = 10;
  int beam = 5;
  int max_decode_len = 30;
  double grad_clip = 5.0;
  uint64_t seed = 13;

  static RegTrainConfig desk();
  static RegTrainConfig paper();
};

struct RegModel {
  RegModelConfig cfg;
  Vocab words;  // context and expression tokens (tied output embedding)
  std::vector<std::string> entity_names;
  std::map<std::string, int> entity_index;
  bool trained = false;
  ParamStore params;

  bool knows(const std::string& entity) const {
    return entity_index.count(entity) > 0;
  }
  std::set<std::string> known_entities() const {
    return {entity_names.begin(), entity_names.end()};
  }
};

RegModel reg_init(const RegModelConfig& cfg, Vocab words,
                  std::vector<std::string> entities, uint64_t seed);

// Teacher-forced batch loss shared by training and the gradient checker.
Graph::Node* reg_loss(Graph& g, RegModel& m,
                      const std::vector<const ReferenceInstance*>& batch, Rng& rng);

// Epoch-based training with per-epoch dev evaluation, patience, and best
// checkpoint restoration. Deterministic per seed.
RegModel reg_train(const std::vector<ReferenceInstance>& train,
                   const std::vector<ReferenceInstance>& dev, const RegModelConfig& mcfg,
                   const RegTrainConfig& tcfg, TrainLog* log = nullptr);

// Beam-decoded expression for one slot. Throws NnError if the model is
// untrained or the entity is not in the embedding table.
std::vector<std::string> reg_generate(const RegModel& m,
                                      const std::vector<std::string>& pre,
                                      const std::vector<std::string>& post,
                                      const std::string& entity, int beam = 5,
                                      int max_len = 30);

// Adapter for reg_resolve.
RegGenerator make_reg_generator(std::shared_ptr<const RegModel> m, int beam = 5,
                                int max_len = 30);

double reg_grad_check(RegModel& m, const std::vector<const ReferenceInstance*>& batch,
                      double epsilon, int samples_per_tensor = 3);

void save_reg_model(const RegModel& m, const std::filesystem::path& path);
RegModel load_reg_model(const std::filesystem::path& path);

}  // namespace d2t::nn
