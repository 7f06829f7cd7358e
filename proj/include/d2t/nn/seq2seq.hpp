#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d2t/bpe.hpp"
#include "d2t/nn/graph.hpp"
#include "d2t/nn/vocab.hpp"

namespace d2t::nn {

struct ModelConfig {
  std::string arch = "gru";  // "gru" | "transformer"
  int emb = 64;              // transformer model dim
  int hidden = 128;
  int layers = 2;
  int heads = 2;
  int ff = 256;
  double dropout = 0.2;
  double label_smoothing = 0.0;
  bool tied = true;

  static ModelConfig desk(const std::string& arch);
  static ModelConfig paper(const std::string& arch);
};

struct TrainConfig {
  double lr = 0.001;  // transformer: Noam factor
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  long max_updates = 200000;
  int eval_every = 5000;
  int patience = 30;
  int batch_size = 32;
  int beam = 5;
  int max_decode_len = 100;
  int warmup = 8000;
  double grad_clip = 5.0;
  uint64_t seed = 13;

  static TrainConfig desk();
  static TrainConfig paper();
};

using Pair = std::pair<std::vector<std::string>, std::vector<std::string>>;

struct TrainLog {
  long updates = 0;
  int evals = 0;
  double best_dev_loss = 0.0;
  std::vector<double> dev_history;
  bool stopped_early = false;
};

struct Seq2SeqModel {
  ModelConfig cfg;
  TrainConfig trained_with;
  Vocab vocab;    // joint source/target vocabulary (tied embeddings)
  BPEModel bpe;   // empty unless the task used subword targets
  ParamStore params;
};

// Teacher-forced batch loss on the tape; shared by training, dev evaluation,
// and the gradient checker.
Graph::Node* seq2seq_loss(Graph& g, Seq2SeqModel& m, const std::vector<Pair>& batch,
                          Rng& rng);

Seq2SeqModel seq2seq_init(const ModelConfig& cfg, const Vocab& vocab, uint64_t seed);

// Adam + schedule + periodic dev evaluation with patience; restores the best
// dev checkpoint. Deterministic per seed. Throws NnError on divergence.
Seq2SeqModel seq2seq_train(const std::vector<Pair>& train, const std::vector<Pair>& dev,
                           const ModelConfig& mcfg, const TrainConfig& tcfg,
                           TrainLog* log = nullptr);

struct Hypothesis {
  std::vector<std::string> tokens;
  double score = 0.0;       // sum of token log-probabilities
  double normalized = 0.0;  // score / generated length
};

// Incremental decoding surface: slots hold hypotheses' decoder states.
// step() consumes, for each new slot k, the token extending previous slot
// parents[k], and returns next-token probabilities, one column per slot.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;
  virtual int vocab_size() const = 0;
  virtual Mat step(const std::vector<int>& parents, const std::vector<int>& tokens) = 0;
};

std::unique_ptr<DecodeSession> open_session(const Seq2SeqModel& m,
                                            const std::vector<std::string>& source);

std::vector<Hypothesis> beam_decode(const Seq2SeqModel& m,
                                    const std::vector<std::string>& source, int beam,
                                    int max_len);

// Per-step probability averaging across models sharing one vocabulary.
std::vector<Hypothesis> ensemble_decode(
    const std::vector<const Seq2SeqModel*>& models,
    const std::vector<std::string>& source, int beam, int max_len);

// Beam search over preopened sessions (the ensemble/NeuralREG entry point).
std::vector<Hypothesis> beam_over_sessions(
    std::vector<std::unique_ptr<DecodeSession>> sessions, const Vocab& vocab, int beam,
    int max_len);

// Max relative error between analytic and central-difference gradients over a
// deterministic parameter subsample.
double grad_check(Seq2SeqModel& m, const std::vector<Pair>& batch, double epsilon,
                  int samples_per_tensor = 3);

void save_model(const Seq2SeqModel& m, const std::filesystem::path& path);
Seq2SeqModel load_model(const std::filesystem::path& path);

}  // namespace d2t::nn
