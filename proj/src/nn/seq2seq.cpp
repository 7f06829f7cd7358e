#include "d2t/nn/seq2seq.hpp"

#include <algorithm>
#include <cmath>

#include "d2t/nn/checkpoint.hpp"
#include "d2t/nn/layers.hpp"

namespace d2t::nn {

ModelConfig ModelConfig::desk(const std::string& arch) {
  ModelConfig c;
  c.arch = arch;
  c.emb = 64;
  c.hidden = 128;
  c.layers = 2;
  c.heads = 2;
  c.ff = 256;
  c.dropout = 0.2;
  c.label_smoothing = arch == "transformer" ? 0.1 : 0.0;
  return c;
}

ModelConfig ModelConfig::paper(const std::string& arch) {
  ModelConfig c;
  c.arch = arch;
  if (arch == "transformer") {
    c.emb = 512;
    c.hidden = 512;
    c.layers = 6;
    c.heads = 8;
    c.ff = 2048;
    c.dropout = 0.1;
    c.label_smoothing = 0.1;
  } else {
    c.emb = 300;
    c.hidden = 512;
    c.layers = 2;
    c.heads = 1;
    c.ff = 1024;
    c.dropout = 0.2;
  }
  return c;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.max_updates = 5000;
  c.eval_every = 200;
  c.patience = 5;
  c.batch_size = 16;
  c.warmup = 400;
  c.lr = 0.002;
  return c;
}

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.max_updates = 200000;
  c.eval_every = 5000;
  c.patience = 30;
  c.batch_size = 64;
  c.warmup = 8000;
  c.lr = 0.001;
  return c;
}

namespace {

using Node = Graph::Node;

std::string pname(const std::string& a, int i, const std::string& b) {
  return a + std::to_string(i) + b;
}

// --- parameter initialization ---------------------------------------------------

void init_gru(Seq2SeqModel& m, Rng& rng) {
  const ModelConfig& c = m.cfg;
  m.params.glorot("emb", c.emb, m.vocab.size(), rng);
  init_gru_encoder(m.params, "enc", c.layers, c.emb, c.hidden, rng);
  for (int l = 0; l < c.layers; ++l) {
    int din = l == 0 ? c.emb + c.hidden : c.hidden;
    init_gru_gates(m.params, pname("dec", l, "_"), din, c.hidden, rng);
    m.params.glorot(pname("dec", l, "_init_W"), c.hidden, 2 * c.hidden, rng);
    m.params.create(pname("dec", l, "_init_b"), c.hidden, 1);
  }
  init_attention(m.params, "att_", c.hidden, rng);
  m.params.glorot("out_W", c.emb, 2 * c.hidden, rng);
  m.params.create("out_b", c.emb, 1);
}

void init_transformer(Seq2SeqModel& m, Rng& rng) {
  const ModelConfig& c = m.cfg;
  if (c.emb % c.heads != 0) throw NnError("model dim must divide into heads");
  int d = c.emb;
  m.params.glorot("emb", d, m.vocab.size(), rng);
  for (int l = 0; l < c.layers; ++l) {
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"})
      m.params.glorot(pname("enc", l, "_") + w, d, d, rng);
    m.params.glorot(pname("enc", l, "_W1"), c.ff, d, rng);
    m.params.create(pname("enc", l, "_b1"), c.ff, 1);
    m.params.glorot(pname("enc", l, "_W2"), d, c.ff, rng);
    m.params.create(pname("enc", l, "_b2"), d, 1);
    for (const char* ln : {"_ln1", "_ln2"}) {
      m.params.create(pname("enc", l, ln) + "_g", d, 1).value.setOnes();
      m.params.create(pname("enc", l, ln) + "_b", d, 1);
    }
    for (const char* w : {"Wq", "Wk", "Wv", "Wo"}) {
      m.params.glorot(pname("dec", l, "_s") + w, d, d, rng);
      m.params.glorot(pname("dec", l, "_c") + w, d, d, rng);
    }
    m.params.glorot(pname("dec", l, "_W1"), c.ff, d, rng);
    m.params.create(pname("dec", l, "_b1"), c.ff, 1);
    m.params.glorot(pname("dec", l, "_W2"), d, c.ff, rng);
    m.params.create(pname("dec", l, "_b2"), d, 1);
    for (const char* ln : {"_ln1", "_ln2", "_ln3"}) {
      m.params.create(pname("dec", l, ln) + "_g", d, 1).value.setOnes();
      m.params.create(pname("dec", l, ln) + "_b", d, 1);
    }
  }
}

// --- GRU forward -----------------------------------------------------------------

// ids[t] = token ids at position t across the batch; row_mask[t] is 1 for
// real tokens, 0 for padding.
GruEncoding gru_encode_ids(Graph& G, Seq2SeqModel& m,
                           const std::vector<std::vector<int>>& ids,
                           const std::vector<Mat>& row_mask, Rng& rng) {
  Node* embN = G.param(m.params.at("emb"));
  std::vector<Node*> inputs(ids.size());
  for (size_t t = 0; t < ids.size(); ++t)
    inputs[t] = G.dropout(G.select_cols(embN, ids[t]), m.cfg.dropout, rng);
  return gru_encode(G, m.params, "enc", m.cfg.layers, m.cfg.dropout, inputs, row_mask,
                    m.cfg.hidden, rng);
}

std::vector<Node*> gru_init_states(Graph& G, Seq2SeqModel& m, const GruEncoding& enc) {
  std::vector<Node*> states;
  Node* cat = G.concat_rows({enc.fwd_end, enc.bwd_start});
  for (int l = 0; l < m.cfg.layers; ++l) {
    Node* w = G.param(m.params.at(pname("dec", l, "_init_W")));
    Node* b = G.param(m.params.at(pname("dec", l, "_init_b")));
    states.push_back(G.tanh_(G.add_colb(G.matmul(w, cat), b)));
  }
  return states;
}

// One decoder step shared by training and decoding. `states` is updated in
// place; returns the pre-logit deep output (emb x B).
Node* gru_decoder_step(Graph& G, Seq2SeqModel& m, const GruAttention& att,
                       std::vector<Node*>& states, Node* y_emb) {
  Node* ctx = attention_context(G, att, states.back());
  Node* x = G.concat_rows({y_emb, ctx});
  for (int l = 0; l < m.cfg.layers; ++l) {
    states[static_cast<size_t>(l)] =
        gru_cell(G, m.params, pname("dec", l, "_"), x, states[static_cast<size_t>(l)]);
    x = states[static_cast<size_t>(l)];
  }
  Node* outW = G.param(m.params.at("out_W"));
  Node* outb = G.param(m.params.at("out_b"));
  return G.tanh_(G.add_colb(G.matmul(outW, G.concat_rows({states.back(), ctx})), outb));
}

// --- Transformer forward ----------------------------------------------------------

Mat positional_encoding(int d, int L) {
  Mat pe(d, L);
  for (int pos = 0; pos < L; ++pos) {
    for (int i = 0; i < d; i += 2) {
      double angle = pos / std::pow(10000.0, static_cast<double>(i) / d);
      pe(i, pos) = std::sin(angle);
      if (i + 1 < d) pe(i + 1, pos) = std::cos(angle);
    }
  }
  return pe;
}

Node* mha(Graph& G, ParamStore& P, const std::string& prefix, Node* q_in, Node* kv_in,
          int heads, bool causal) {
  Node* Q = G.matmul(G.param(P.at(prefix + "Wq")), q_in);
  Node* K = G.matmul(G.param(P.at(prefix + "Wk")), kv_in);
  Node* V = G.matmul(G.param(P.at(prefix + "Wv")), kv_in);
  int d = static_cast<int>(Q->value.rows());
  int dh = d / heads;
  long Lq = Q->value.cols();
  long Lk = K->value.cols();
  Node* mask = nullptr;
  if (causal) {
    Mat mm = Mat::Zero(Lk, Lq);
    for (long k = 0; k < Lk; ++k)
      for (long q = 0; q < Lq; ++q)
        if (k > q) mm(k, q) = -1e9;
    mask = G.input(std::move(mm));
  }
  std::vector<Node*> head_outs;
  for (int hI = 0; hI < heads; ++hI) {
    Node* Qh = G.slice_rows(Q, hI * dh, dh);
    Node* Kh = G.slice_rows(K, hI * dh, dh);
    Node* Vh = G.slice_rows(V, hI * dh, dh);
    Node* scores = G.scale(G.matmul(G.transpose(Kh), Qh), 1.0 / std::sqrt(dh));
    if (mask) scores = G.add(scores, mask);
    Node* alpha = G.softmax_cols(scores);
    head_outs.push_back(G.matmul(Vh, alpha));
  }
  return G.matmul(G.param(P.at(prefix + "Wo")), G.concat_rows(head_outs));
}

Node* transformer_ff(Graph& G, ParamStore& P, const std::string& prefix, Node* x) {
  Node* h = G.relu(G.add_colb(G.matmul(G.param(P.at(prefix + "W1")), x),
                              G.param(P.at(prefix + "b1"))));
  return G.add_colb(G.matmul(G.param(P.at(prefix + "W2")), h),
                    G.param(P.at(prefix + "b2")));
}

Node* embed_positions(Graph& G, Seq2SeqModel& m, Node* embN, const std::vector<int>& ids,
                      Rng& rng) {
  Node* x = G.scale(G.select_cols(embN, ids), std::sqrt(static_cast<double>(m.cfg.emb)));
  x = G.add(x, G.input(positional_encoding(m.cfg.emb, static_cast<int>(ids.size()))));
  return G.dropout(x, m.cfg.dropout, rng);
}

Node* transformer_encode_item(Graph& G, Seq2SeqModel& m, Node* embN,
                              const std::vector<int>& ids, Rng& rng) {
  Node* x = embed_positions(G, m, embN, ids, rng);
  for (int l = 0; l < m.cfg.layers; ++l) {
    std::string pre = pname("enc", l, "_");
    auto ln = [&](const char* tag, Node* v) {
      return G.layer_norm(v, G.param(m.params.at(pre + tag + std::string("_g"))),
                          G.param(m.params.at(pre + tag + std::string("_b"))));
    };
    Node* a = mha(G, m.params, pre, x, x, m.cfg.heads, false);
    x = ln("ln1", G.add(x, G.dropout(a, m.cfg.dropout, rng)));
    Node* f = transformer_ff(G, m.params, pre, x);
    x = ln("ln2", G.add(x, G.dropout(f, m.cfg.dropout, rng)));
  }
  return x;
}

Node* transformer_decode_item(Graph& G, Seq2SeqModel& m, Node* embN, Node* enc,
                              const std::vector<int>& tgt_in, Rng& rng) {
  Node* y = embed_positions(G, m, embN, tgt_in, rng);
  for (int l = 0; l < m.cfg.layers; ++l) {
    std::string pre = pname("dec", l, "_");
    auto ln = [&](const char* tag, Node* v) {
      return G.layer_norm(v, G.param(m.params.at(pre + tag + std::string("_g"))),
                          G.param(m.params.at(pre + tag + std::string("_b"))));
    };
    Node* a = mha(G, m.params, pre + "s", y, y, m.cfg.heads, true);
    y = ln("ln1", G.add(y, G.dropout(a, m.cfg.dropout, rng)));
    Node* c = mha(G, m.params, pre + "c", y, enc, m.cfg.heads, false);
    y = ln("ln2", G.add(y, G.dropout(c, m.cfg.dropout, rng)));
    Node* f = transformer_ff(G, m.params, pre, y);
    y = ln("ln3", G.add(y, G.dropout(f, m.cfg.dropout, rng)));
  }
  return y;  // d x Lt pre-logit states
}

// --- batch assembly ----------------------------------------------------------------

struct GruBatch {
  std::vector<std::vector<int>> src;  // [t][b]
  std::vector<Mat> row_mask;          // per t, 1 x B
  Mat att_mask;                       // L x B additive
  std::vector<std::vector<int>> tgt_in;
  std::vector<int> flat_targets;
  std::vector<double> flat_weights;
};

GruBatch make_gru_batch(const Seq2SeqModel& m, const std::vector<Pair>& batch) {
  GruBatch out;
  size_t B = batch.size();
  size_t Ls = 1, Lt = 1;
  for (const auto& [s, t] : batch) {
    Ls = std::max(Ls, s.size());
    Lt = std::max(Lt, t.size() + 1);  // room for EOS
  }
  out.src.assign(Ls, std::vector<int>(B, Vocab::kPad));
  out.row_mask.assign(Ls, Mat::Zero(1, static_cast<long>(B)));
  out.att_mask = Mat::Zero(static_cast<long>(Ls), static_cast<long>(B));
  out.tgt_in.assign(Lt, std::vector<int>(B, Vocab::kPad));
  out.flat_targets.assign(Lt * B, Vocab::kPad);
  out.flat_weights.assign(Lt * B, 0.0);
  for (size_t b = 0; b < B; ++b) {
    const auto& [s, t] = batch[b];
    std::vector<int> sid = m.vocab.encode(s);
    for (size_t i = 0; i < sid.size(); ++i) {
      out.src[i][b] = sid[i];
      out.row_mask[i](0, static_cast<long>(b)) = 1.0;
    }
    for (size_t i = sid.size(); i < Ls; ++i)
      out.att_mask(static_cast<long>(i), static_cast<long>(b)) = -1e9;
    std::vector<int> tid = m.vocab.encode(t);
    tid.push_back(Vocab::kEos);
    out.tgt_in[0][b] = Vocab::kBos;
    for (size_t i = 0; i < tid.size(); ++i) {
      if (i + 1 < Lt) out.tgt_in[i + 1][b] = tid[i];
      out.flat_targets[i * B + b] = tid[i];
      out.flat_weights[i * B + b] = 1.0;
    }
  }
  return out;
}

Node* gru_loss(Graph& G, Seq2SeqModel& m, const std::vector<Pair>& batch, Rng& rng) {
  GruBatch gb = make_gru_batch(m, batch);
  GruEncoding enc = gru_encode_ids(G, m, gb.src, gb.row_mask, rng);
  GruAttention att = attention_setup(G, m.params, "att_", enc.outs, gb.att_mask);
  std::vector<Node*> states = gru_init_states(G, m, enc);
  Node* embN = G.param(m.params.at("emb"));
  std::vector<Node*> outs;
  for (const auto& ids_t : gb.tgt_in) {
    Node* y = G.dropout(G.select_cols(embN, ids_t), m.cfg.dropout, rng);
    outs.push_back(gru_decoder_step(G, m, att, states, y));
  }
  Node* logits = G.matmul(G.transpose(embN), G.concat_cols(outs));
  return G.ce_loss(logits, gb.flat_targets, gb.flat_weights, m.cfg.label_smoothing);
}

Node* transformer_loss(Graph& G, Seq2SeqModel& m, const std::vector<Pair>& batch,
                       Rng& rng) {
  Node* embN = G.param(m.params.at("emb"));
  std::vector<Node*> item_states;
  std::vector<int> targets;
  std::vector<double> weights;
  for (const auto& [s, t] : batch) {
    std::vector<int> sid = m.vocab.encode(s);
    if (sid.empty()) sid.push_back(Vocab::kUnk);
    std::vector<int> tid = m.vocab.encode(t);
    tid.push_back(Vocab::kEos);
    std::vector<int> tin;
    tin.push_back(Vocab::kBos);
    for (size_t i = 0; i + 1 < tid.size(); ++i) tin.push_back(tid[i]);
    Node* enc = transformer_encode_item(G, m, embN, sid, rng);
    item_states.push_back(transformer_decode_item(G, m, embN, enc, tin, rng));
    for (int id : tid) {
      targets.push_back(id);
      weights.push_back(1.0);
    }
  }
  Node* logits = G.matmul(G.transpose(embN), G.concat_cols(item_states));
  return G.ce_loss(logits, std::move(targets), std::move(weights), m.cfg.label_smoothing);
}

}  // namespace

Graph::Node* seq2seq_loss(Graph& g, Seq2SeqModel& m, const std::vector<Pair>& batch,
                          Rng& rng) {
  if (batch.empty()) throw NnError("empty batch");
  if (m.cfg.arch == "transformer") return transformer_loss(g, m, batch, rng);
  return gru_loss(g, m, batch, rng);
}

Seq2SeqModel seq2seq_init(const ModelConfig& cfg, const Vocab& vocab, uint64_t seed) {
  Seq2SeqModel m;
  m.cfg = cfg;
  m.vocab = vocab;
  Rng rng(Rng::mix(seed, 0x9e3779b9));
  if (cfg.arch == "transformer")
    init_transformer(m, rng);
  else if (cfg.arch == "gru")
    init_gru(m, rng);
  else
    throw NnError("unknown architecture '" + cfg.arch + "'");
  return m;
}

// --- training -----------------------------------------------------------------------

namespace {

double schedule_lr(const Seq2SeqModel& m, const TrainConfig& t, long step) {
  if (m.cfg.arch != "transformer") return t.lr;
  double d = static_cast<double>(m.cfg.emb);
  double s = static_cast<double>(std::max<long>(step, 1));
  double w = static_cast<double>(std::max(t.warmup, 1));
  return t.lr * std::pow(d, -0.5) * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

double dataset_loss(Seq2SeqModel& m, const std::vector<Pair>& data, int batch_size) {
  Rng dummy(0);
  double total = 0.0;
  long tokens = 0;
  for (size_t i = 0; i < data.size(); i += static_cast<size_t>(batch_size)) {
    std::vector<Pair> batch(data.begin() + static_cast<long>(i),
                            data.begin() + static_cast<long>(std::min(
                                               data.size(), i + static_cast<size_t>(batch_size))));
    long n = 0;
    for (const auto& [s, t] : batch) n += static_cast<long>(t.size()) + 1;
    Graph g(false);
    total += seq2seq_loss(g, m, batch, dummy)->value(0, 0) * static_cast<double>(n);
    tokens += n;
  }
  return tokens > 0 ? total / static_cast<double>(tokens) : 0.0;
}

using Snapshot = std::vector<std::pair<std::string, Mat>>;

Snapshot snapshot_params(const ParamStore& p) {
  Snapshot s;
  p.for_each([&](const Tensor& t) { s.emplace_back(t.name, t.value); });
  return s;
}

void restore_params(ParamStore& p, const Snapshot& s) {
  for (const auto& [name, value] : s) p.at(name).value = value;
}

}  // namespace

Seq2SeqModel seq2seq_train(const std::vector<Pair>& train, const std::vector<Pair>& dev,
                           const ModelConfig& mcfg, const TrainConfig& tcfg,
                           TrainLog* log) {
  if (train.empty()) throw NnError("empty training set");
  std::vector<std::vector<std::string>> seqs;
  for (const auto& [s, t] : train) {
    seqs.push_back(s);
    seqs.push_back(t);
  }
  Vocab vocab = Vocab::build(seqs);
  Seq2SeqModel m = seq2seq_init(mcfg, vocab, tcfg.seed);
  m.trained_with = tcfg;

  const std::vector<Pair>& eval_set = dev.empty() ? train : dev;
  Rng order_rng(Rng::mix(tcfg.seed, 1));
  Rng drop_rng(Rng::mix(tcfg.seed, 2));
  Adam adam{tcfg.beta1, tcfg.beta2, tcfg.adam_eps, 0};

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  size_t cursor = order.size();  // trigger shuffle on first batch

  TrainLog local;
  TrainLog& lg = log ? *log : local;
  double best = std::numeric_limits<double>::infinity();
  Snapshot best_snap = snapshot_params(m.params);
  int bad_evals = 0;

  for (long update = 1; update <= tcfg.max_updates; ++update) {
    std::vector<Pair> batch;
    for (int k = 0; k < tcfg.batch_size; ++k) {
      if (cursor >= order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(train[order[cursor++]]);
    }
    Graph g(true);
    Graph::Node* loss = seq2seq_loss(g, m, batch, drop_rng);
    double lv = loss->value(0, 0);
    if (!std::isfinite(lv))
      throw NnError("training diverged at update " + std::to_string(update) +
                    " (loss not finite)");
    g.backward(loss);
    adam.update(m.params, schedule_lr(m, tcfg, update), tcfg.grad_clip);
    lg.updates = update;

    if (update % tcfg.eval_every == 0 || update == tcfg.max_updates) {
      double dl = dataset_loss(m, eval_set, tcfg.batch_size);
      ++lg.evals;
      lg.dev_history.push_back(dl);
      if (dl < best - 1e-12) {
        best = dl;
        best_snap = snapshot_params(m.params);
        bad_evals = 0;
      } else {
        ++bad_evals;
        if (bad_evals >= tcfg.patience) {
          lg.stopped_early = true;
          break;
        }
      }
    }
  }
  restore_params(m.params, best_snap);
  lg.best_dev_loss = best;
  return m;
}

// --- decoding ------------------------------------------------------------------------

namespace {

class GruSession : public DecodeSession {
 public:
  GruSession(const Seq2SeqModel& m, const std::vector<std::string>& source)
      : m_(const_cast<Seq2SeqModel&>(m)), g_(false) {
    if (source.empty()) throw NnError("empty source sequence");
    std::vector<int> sid = m_.vocab.encode(source);
    std::vector<std::vector<int>> src(sid.size());
    std::vector<Mat> row_mask(sid.size(), Mat::Ones(1, 1));
    for (size_t t = 0; t < sid.size(); ++t) src[t] = {sid[t]};
    enc_ = gru_encode_ids(g_, m_, src, row_mask, rng_);
    base_att_ = attention_setup(g_, m_.params, "att_", enc_.outs,
                                Mat::Zero(static_cast<long>(sid.size()), 1));
    att_ = base_att_;
    states_ = gru_init_states(g_, m_, enc_);
    emb_ = g_.param(m_.params.at("emb"));
  }

  int vocab_size() const override { return m_.vocab.size(); }

  Mat step(const std::vector<int>& parents, const std::vector<int>& tokens) override {
    if (parents.size() != tokens.size() || parents.empty())
      throw NnError("step: parent/token mismatch");
    for (auto& s : states_) s = g_.select_cols(s, parents);
    widen(parents.size());
    Graph::Node* y = g_.select_cols(emb_, tokens);
    Graph::Node* o = gru_decoder_step(g_, m_, att_, states_, y);
    Graph::Node* logits = g_.matmul(g_.transpose(emb_), o);
    return g_.softmax_cols(logits)->value;
  }

 private:
  // The single encoded source column broadcasts to the current slot count so
  // attention shapes track the beam.
  void widen(size_t k) {
    if (k == att_cols_) return;
    std::vector<int> rep(k, 0);
    att_ = base_att_;
    for (Node*& e : att_.enc_outs) e = g_.select_cols(e, rep);
    for (Node*& w : att_.wh) w = g_.select_cols(w, rep);
    att_.mask = g_.input(
        Mat::Zero(static_cast<long>(enc_.outs.size()), static_cast<long>(k)));
    att_cols_ = k;
  }

  Seq2SeqModel& m_;
  Graph g_;
  Rng rng_{0};
  GruEncoding enc_;
  GruAttention base_att_;
  GruAttention att_;
  std::vector<Graph::Node*> states_;
  Graph::Node* emb_ = nullptr;
  size_t att_cols_ = 1;
};

class TransformerSession : public DecodeSession {
 public:
  TransformerSession(const Seq2SeqModel& m, const std::vector<std::string>& source)
      : m_(const_cast<Seq2SeqModel&>(m)) {
    if (source.empty()) throw NnError("empty source sequence");
    src_ids_ = m_.vocab.encode(source);
    prefixes_.push_back({});
  }

  int vocab_size() const override { return m_.vocab.size(); }

  Mat step(const std::vector<int>& parents, const std::vector<int>& tokens) override {
    if (parents.size() != tokens.size() || parents.empty())
      throw NnError("step: parent/token mismatch");
    std::vector<std::vector<int>> next;
    for (size_t k = 0; k < parents.size(); ++k) {
      std::vector<int> p = prefixes_.at(static_cast<size_t>(parents[k]));
      p.push_back(tokens[k]);
      next.push_back(std::move(p));
    }
    prefixes_ = std::move(next);

    Mat probs(m_.vocab.size(), static_cast<long>(prefixes_.size()));
    Rng dummy(0);
    Graph g(false);
    Node* embN = g.param(m_.params.at("emb"));
    Node* enc = transformer_encode_item(g, m_, embN, src_ids_, dummy);
    for (size_t k = 0; k < prefixes_.size(); ++k) {
      Node* states = transformer_decode_item(g, m_, embN, enc, prefixes_[k], dummy);
      Node* last = g.select_cols(states, {static_cast<int>(prefixes_[k].size()) - 1});
      Node* logits = g.matmul(g.transpose(embN), last);
      probs.col(static_cast<long>(k)) = g.softmax_cols(logits)->value.col(0);
    }
    return probs;
  }

 private:
  Seq2SeqModel& m_;
  std::vector<int> src_ids_;
  std::vector<std::vector<int>> prefixes_;  // slot -> decoder input (starts with BOS)
};

}  // namespace

std::unique_ptr<DecodeSession> open_session(const Seq2SeqModel& m,
                                            const std::vector<std::string>& source) {
  if (m.cfg.arch == "transformer")
    return std::make_unique<TransformerSession>(m, source);
  return std::make_unique<GruSession>(m, source);
}

std::vector<Hypothesis> beam_over_sessions(
    std::vector<std::unique_ptr<DecodeSession>> sessions, const Vocab& vocab, int beam,
    int max_len) {
  if (beam < 1) throw NnError("beam must be >= 1");
  if (sessions.empty()) throw NnError("no decode sessions");

  struct Live {
    int slot;
    std::vector<int> ids;
    double score;
  };
  std::vector<Live> live{{0, {}, 0.0}};
  std::vector<Hypothesis> done;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<int> parents, tokens;
    for (const Live& h : live) {
      parents.push_back(h.slot);
      tokens.push_back(h.ids.empty() ? Vocab::kBos : h.ids.back());
    }
    Mat probs = Mat::Zero(vocab.size(), static_cast<long>(live.size()));
    for (auto& s : sessions) probs += s->step(parents, tokens);
    probs /= static_cast<double>(sessions.size());

    struct Cand {
      int from;
      int token;
      double score;
    };
    std::vector<Cand> cands;
    for (size_t k = 0; k < live.size(); ++k) {
      for (int v = 0; v < vocab.size(); ++v) {
        if (v == Vocab::kPad || v == Vocab::kBos) continue;
        double p = probs(v, static_cast<long>(k));
        double lp = p > 0 ? std::log(p) : -1e30;
        cands.push_back({static_cast<int>(k), v, live[static_cast<size_t>(k)].score + lp});
      }
    }
    size_t keep = std::min(cands.size(), static_cast<size_t>(beam));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(keep), cands.end(),
                      [](const Cand& a, const Cand& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.from != b.from) return a.from < b.from;
                        return a.token < b.token;
                      });
    cands.resize(keep);

    std::vector<Live> next;
    for (const Cand& c : cands) {
      Live h = live[static_cast<size_t>(c.from)];
      h.score = c.score;
      if (c.token == Vocab::kEos) {
        Hypothesis hyp;
        hyp.tokens = vocab.decode(h.ids);
        hyp.score = h.score;
        hyp.normalized = h.score / static_cast<double>(h.ids.size() + 1);
        done.push_back(std::move(hyp));
        continue;
      }
      h.ids.push_back(c.token);
      h.slot = c.from;
      next.push_back(std::move(h));
    }
    if (static_cast<int>(done.size()) >= beam) {
      live.clear();
      break;
    }
    live = std::move(next);
  }
  for (const Live& h : live) {  // unterminated leftovers
    if (h.ids.empty()) continue;
    Hypothesis hyp;
    hyp.tokens = vocab.decode(h.ids);
    hyp.score = h.score;
    hyp.normalized = h.score / static_cast<double>(h.ids.size());
    done.push_back(std::move(hyp));
  }
  std::sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.normalized != b.normalized) return a.normalized > b.normalized;
    return a.tokens < b.tokens;
  });
  if (done.empty()) done.push_back(Hypothesis{});
  return done;
}

std::vector<Hypothesis> beam_decode(const Seq2SeqModel& m,
                                    const std::vector<std::string>& source, int beam,
                                    int max_len) {
  return ensemble_decode({&m}, source, beam, max_len);
}

std::vector<Hypothesis> ensemble_decode(
    const std::vector<const Seq2SeqModel*>& models,
    const std::vector<std::string>& source, int beam, int max_len) {
  if (models.empty()) throw NnError("empty ensemble");
  for (const Seq2SeqModel* m : models)
    if (m->vocab.tokens != models[0]->vocab.tokens)
      throw NnError("ensemble vocabulary mismatch");
  std::vector<std::unique_ptr<DecodeSession>> sessions;
  for (const Seq2SeqModel* m : models) sessions.push_back(open_session(*m, source));
  return beam_over_sessions(std::move(sessions), models[0]->vocab, beam, max_len);
}

// --- gradient check --------------------------------------------------------------------

double grad_check(Seq2SeqModel& m, const std::vector<Pair>& batch, double epsilon,
                  int samples_per_tensor) {
  Rng dummy(0);
  Graph g(false);
  Graph::Node* loss = seq2seq_loss(g, m, batch, dummy);
  m.params.zero_grads();
  g.backward(loss);

  struct Sample {
    Tensor* t;
    long i, j;
    double analytic;
  };
  std::vector<Sample> samples;
  Rng pick(12345);
  m.params.for_each([&](Tensor& t) {
    if (t.grad.size() == 0) return;
    for (int k = 0; k < samples_per_tensor; ++k) {
      long i = static_cast<long>(pick.uniform_int(static_cast<uint64_t>(t.value.rows())));
      long j = static_cast<long>(pick.uniform_int(static_cast<uint64_t>(t.value.cols())));
      samples.push_back({&t, i, j, t.grad(i, j)});
    }
  });

  double max_rel = 0.0;
  for (const Sample& s : samples) {
    double orig = s.t->value(s.i, s.j);
    auto eval = [&](double v) {
      s.t->value(s.i, s.j) = v;
      Rng d2(0);
      Graph g2(false);
      return seq2seq_loss(g2, m, batch, d2)->value(0, 0);
    };
    double plus = eval(orig + epsilon);
    double minus = eval(orig - epsilon);
    s.t->value(s.i, s.j) = orig;
    double numeric = (plus - minus) / (2.0 * epsilon);
    double denom = std::max(std::abs(s.analytic) + std::abs(numeric), 1e-8);
    max_rel = std::max(max_rel, std::abs(s.analytic - numeric) / denom);
  }
  m.params.zero_grads();
  return max_rel;
}

// --- persistence -------------------------------------------------------------------------

void save_model(const Seq2SeqModel& m, const std::filesystem::path& path) {
  nlohmann::ordered_json h;
  h["kind"] = "seq2seq";
  h["config"] = model_config_json(m.cfg);
  h["vocab"] = m.vocab.tokens;
  h["bpe"] = bpe_json(m.bpe);
  write_checkpoint(path, h, m.params);
}

Seq2SeqModel load_model(const std::filesystem::path& path) {
  Seq2SeqModel m;
  auto h = read_checkpoint(path, m.params);
  if (h.at("kind") != "seq2seq") throw NnError("not a sequence model checkpoint");
  m.cfg = model_config_from_json(h.at("config"));
  m.vocab = Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
  m.bpe = bpe_from_json(h.at("bpe"));
  return m;
}

}  // namespace d2t::nn
