#include "d2t/nn/neuralreg.hpp"

#include <algorithm>
#include <cmath>

#include "d2t/nn/checkpoint.hpp"
#include "d2t/nn/layers.hpp"

namespace d2t::nn {

RegModelConfig RegModelConfig::desk() {
  RegModelConfig c;
  c.emb = 48;
  c.hidden = 96;
  c.layers = 1;
  c.dropout = 0.2;
  return c;
}

RegModelConfig RegModelConfig::paper() {
  RegModelConfig c;
  c.emb = 300;
  c.hidden = 512;
  c.layers = 1;
  c.dropout = 0.2;
  return c;
}

RegTrainConfig RegTrainConfig::desk() {
  RegTrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  c.patience = 5;
  return c;
}

RegTrainConfig RegTrainConfig::paper() { return RegTrainConfig{}; }

namespace {

using Node = Graph::Node;

std::string pname(const std::string& a, int i, const std::string& b) {
  return a + std::to_string(i) + b;
}

void init_params(RegModel& m, Rng& rng) {
  const RegModelConfig& c = m.cfg;
  m.params.glorot("emb", c.emb, m.words.size(), rng);
  m.params.glorot("ent_emb", c.emb, std::max<int>(1, static_cast<int>(m.entity_names.size())), rng);
  init_gru_encoder(m.params, "pre", c.layers, c.emb, c.hidden, rng);
  init_gru_encoder(m.params, "post", c.layers, c.emb, c.hidden, rng);
  init_attention(m.params, "attp_", c.hidden, rng);
  init_attention(m.params, "attq_", c.hidden, rng);
  for (int l = 0; l < c.layers; ++l) {
    int din = l == 0 ? 2 * c.emb + 2 * c.hidden : c.hidden;
    init_gru_gates(m.params, pname("dec", l, "_"), din, c.hidden, rng);
    m.params.glorot(pname("dec", l, "_init_W"), c.hidden, 4 * c.hidden, rng);
    m.params.create(pname("dec", l, "_init_b"), c.hidden, 1);
  }
  m.params.glorot("out_W", c.emb, 3 * c.hidden + c.emb, rng);
  m.params.create("out_b", c.emb, 1);
}

// Context token columns across a batch, padded, with an end sentinel so empty
// contexts still encode one position.
struct PackedContext {
  std::vector<std::vector<int>> ids;  // [t][b]
  std::vector<Mat> row_mask;
  Mat att_mask;
};

PackedContext pack_contexts(const Vocab& words,
                            const std::vector<const std::vector<std::string>*>& ctxs) {
  PackedContext out;
  size_t B = ctxs.size(), L = 1;
  for (const auto* c : ctxs) L = std::max(L, c->size() + 1);  // + sentinel
  out.ids.assign(L, std::vector<int>(B, Vocab::kPad));
  out.row_mask.assign(L, Mat::Zero(1, static_cast<long>(B)));
  out.att_mask = Mat::Zero(static_cast<long>(L), static_cast<long>(B));
  for (size_t b = 0; b < B; ++b) {
    std::vector<int> cid = words.encode(*ctxs[b]);
    cid.push_back(Vocab::kEos);
    for (size_t t = 0; t < cid.size(); ++t) {
      out.ids[t][b] = cid[t];
      out.row_mask[t](0, static_cast<long>(b)) = 1.0;
    }
    for (size_t t = cid.size(); t < L; ++t)
      out.att_mask(static_cast<long>(t), static_cast<long>(b)) = -1e9;
  }
  return out;
}

struct EncodedContexts {
  GruAttention pre, post;
  std::vector<Node*> states;  // decoder layer states
  Node* ent = nullptr;        // emb x B entity columns
  Node* embN = nullptr;
};

EncodedContexts encode_sides(Graph& G, RegModel& m, const PackedContext& pre,
                             const PackedContext& post, const std::vector<int>& ent_ids,
                             Rng& rng) {
  const RegModelConfig& c = m.cfg;
  EncodedContexts e;
  e.embN = G.param(m.params.at("emb"));
  auto embed = [&](const PackedContext& pc) {
    std::vector<Node*> in(pc.ids.size());
    for (size_t t = 0; t < pc.ids.size(); ++t)
      in[t] = G.dropout(G.select_cols(e.embN, pc.ids[t]), c.dropout, rng);
    return in;
  };
  GruEncoding enc_pre = gru_encode(G, m.params, "pre", c.layers, c.dropout, embed(pre),
                                   pre.row_mask, c.hidden, rng);
  GruEncoding enc_post = gru_encode(G, m.params, "post", c.layers, c.dropout,
                                    embed(post), post.row_mask, c.hidden, rng);
  e.pre = attention_setup(G, m.params, "attp_", enc_pre.outs, pre.att_mask);
  e.post = attention_setup(G, m.params, "attq_", enc_post.outs, post.att_mask);
  e.ent = G.select_cols(G.param(m.params.at("ent_emb")), ent_ids);

  Node* summary = G.concat_rows(
      {enc_pre.fwd_end, enc_pre.bwd_start, enc_post.fwd_end, enc_post.bwd_start});
  for (int l = 0; l < c.layers; ++l) {
    Node* w = G.param(m.params.at(pname("dec", l, "_init_W")));
    Node* b = G.param(m.params.at(pname("dec", l, "_init_b")));
    e.states.push_back(G.tanh_(G.add_colb(G.matmul(w, summary), b)));
  }
  return e;
}

// One decoder step; updates ctx.states in place and returns the pre-logit
// output (emb x B).
Node* reg_decoder_step(Graph& G, RegModel& m, EncodedContexts& ctx, Node* y_emb) {
  Node* c_pre = attention_context(G, ctx.pre, ctx.states.back());
  Node* c_post = attention_context(G, ctx.post, ctx.states.back());
  Node* x = G.concat_rows({y_emb, ctx.ent, c_pre, c_post});
  for (int l = 0; l < m.cfg.layers; ++l) {
    ctx.states[static_cast<size_t>(l)] =
        gru_cell(G, m.params, pname("dec", l, "_"), x, ctx.states[static_cast<size_t>(l)]);
    x = ctx.states[static_cast<size_t>(l)];
  }
  Node* outW = G.param(m.params.at("out_W"));
  Node* outb = G.param(m.params.at("out_b"));
  Node* deep = G.concat_rows({ctx.states.back(), c_pre, c_post, ctx.ent});
  return G.tanh_(G.add_colb(G.matmul(outW, deep), outb));
}

}  // namespace

RegModel reg_init(const RegModelConfig& cfg, Vocab words,
                  std::vector<std::string> entities, uint64_t seed) {
  RegModel m;
  m.cfg = cfg;
  m.words = std::move(words);
  m.entity_names = std::move(entities);
  for (size_t i = 0; i < m.entity_names.size(); ++i)
    m.entity_index[m.entity_names[i]] = static_cast<int>(i);
  Rng rng(Rng::mix(seed, 0x7e57ab1e));
  init_params(m, rng);
  return m;
}

Graph::Node* reg_loss(Graph& g, RegModel& m,
                      const std::vector<const ReferenceInstance*>& batch, Rng& rng) {
  if (batch.empty()) throw NnError("empty batch");
  std::vector<const std::vector<std::string>*> pres, posts;
  std::vector<int> ent_ids;
  size_t B = batch.size(), Lt = 1;
  for (const ReferenceInstance* r : batch) {
    pres.push_back(&r->pre_context);
    posts.push_back(&r->post_context);
    auto it = m.entity_index.find(r->entity);
    if (it == m.entity_index.end()) throw NnError("unknown entity: " + r->entity);
    ent_ids.push_back(it->second);
    Lt = std::max(Lt, r->refex.size() + 1);
  }
  PackedContext pre = pack_contexts(m.words, pres);
  PackedContext post = pack_contexts(m.words, posts);
  EncodedContexts ctx = encode_sides(g, m, pre, post, ent_ids, rng);

  std::vector<std::vector<int>> tgt_in(Lt, std::vector<int>(B, Vocab::kPad));
  std::vector<int> targets(Lt * B, Vocab::kPad);
  std::vector<double> weights(Lt * B, 0.0);
  for (size_t b = 0; b < B; ++b) {
    std::vector<int> tid = m.words.encode(batch[b]->refex);
    tid.push_back(Vocab::kEos);
    tgt_in[0][b] = Vocab::kBos;
    for (size_t i = 0; i < tid.size(); ++i) {
      if (i + 1 < Lt) tgt_in[i + 1][b] = tid[i];
      targets[i * B + b] = tid[i];
      weights[i * B + b] = 1.0;
    }
  }
  std::vector<Node*> outs;
  for (const auto& ids_t : tgt_in) {
    Node* y = g.dropout(g.select_cols(ctx.embN, ids_t), m.cfg.dropout, rng);
    outs.push_back(reg_decoder_step(g, m, ctx, y));
  }
  Node* logits = g.matmul(g.transpose(ctx.embN), g.concat_cols(outs));
  return g.ce_loss(logits, std::move(targets), std::move(weights), 0.0);
}

namespace {

double reg_dataset_loss(RegModel& m, const std::vector<ReferenceInstance>& data,
                        int batch_size) {
  Rng dummy(0);
  double total = 0.0;
  long tokens = 0;
  for (size_t i = 0; i < data.size(); i += static_cast<size_t>(batch_size)) {
    std::vector<const ReferenceInstance*> batch;
    for (size_t j = i; j < std::min(data.size(), i + static_cast<size_t>(batch_size)); ++j)
      batch.push_back(&data[j]);
    long n = 0;
    for (const ReferenceInstance* r : batch) n += static_cast<long>(r->refex.size()) + 1;
    Graph g(false);
    total += reg_loss(g, m, batch, dummy)->value(0, 0) * static_cast<double>(n);
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

RegModel reg_train(const std::vector<ReferenceInstance>& train,
                   const std::vector<ReferenceInstance>& dev, const RegModelConfig& mcfg,
                   const RegTrainConfig& tcfg, TrainLog* log) {
  if (train.empty()) throw NnError("empty training set");
  std::vector<std::vector<std::string>> seqs;
  std::set<std::string> ents;
  for (const ReferenceInstance& r : train) {
    seqs.push_back(r.pre_context);
    seqs.push_back(r.post_context);
    seqs.push_back(r.refex);
    ents.insert(r.entity);
  }
  RegModel m = reg_init(mcfg, Vocab::build(seqs),
                        std::vector<std::string>(ents.begin(), ents.end()), tcfg.seed);

  const std::vector<ReferenceInstance>& eval_set = dev.empty() ? train : dev;
  Rng order_rng(Rng::mix(tcfg.seed, 1));
  Rng drop_rng(Rng::mix(tcfg.seed, 2));
  Adam adam{tcfg.beta1, tcfg.beta2, tcfg.adam_eps, 0};

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog local;
  TrainLog& lg = log ? *log : local;
  double best = std::numeric_limits<double>::infinity();
  Snapshot best_snap = snapshot_params(m.params);
  int bad_evals = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (size_t i = 0; i < order.size(); i += static_cast<size_t>(tcfg.batch_size)) {
      std::vector<const ReferenceInstance*> batch;
      for (size_t j = i; j < std::min(order.size(), i + static_cast<size_t>(tcfg.batch_size)); ++j)
        batch.push_back(&train[order[j]]);
      Graph g(true);
      Graph::Node* loss = reg_loss(g, m, batch, drop_rng);
      double lv = loss->value(0, 0);
      if (!std::isfinite(lv))
        throw NnError("training diverged at epoch " + std::to_string(epoch) +
                      " (loss not finite)");
      g.backward(loss);
      adam.update(m.params, tcfg.lr, tcfg.grad_clip);
      ++lg.updates;
    }
    double dl = reg_dataset_loss(m, eval_set, tcfg.batch_size);
    ++lg.evals;
    lg.dev_history.push_back(dl);
    if (dl < best - 1e-12) {
      best = dl;
      best_snap = snapshot_params(m.params);
      bad_evals = 0;
    } else if (++bad_evals >= tcfg.patience) {
      lg.stopped_early = true;
      break;
    }
  }
  if (lg.evals > 0) {
    restore_params(m.params, best_snap);
    lg.best_dev_loss = best;
    m.trained = true;
  }
  return m;
}

// --- decoding ----------------------------------------------------------------------

namespace {

class RegSession : public DecodeSession {
 public:
  RegSession(const RegModel& m, const std::vector<std::string>& pre,
             const std::vector<std::string>& post, int ent_id)
      : m_(const_cast<RegModel&>(m)), g_(false) {
    PackedContext pc_pre = pack_contexts(m_.words, {&pre});
    PackedContext pc_post = pack_contexts(m_.words, {&post});
    base_ = encode_sides(g_, m_, pc_pre, pc_post, {ent_id}, rng_);
    ctx_ = base_;
  }

  int vocab_size() const override { return m_.words.size(); }

  Mat step(const std::vector<int>& parents, const std::vector<int>& tokens) override {
    if (parents.size() != tokens.size() || parents.empty())
      throw NnError("step: parent/token mismatch");
    for (auto& s : ctx_.states) s = g_.select_cols(s, parents);
    widen(parents.size());
    Node* y = g_.select_cols(base_.embN, tokens);
    Node* o = reg_decoder_step(g_, m_, ctx_, y);
    Node* logits = g_.matmul(g_.transpose(base_.embN), o);
    return g_.softmax_cols(logits)->value;
  }

 private:
  void widen(size_t k) {
    if (k == cols_) return;
    std::vector<int> rep(k, 0);
    auto widen_att = [&](const GruAttention& base) {
      GruAttention a = base;
      for (Node*& e : a.enc_outs) e = g_.select_cols(e, rep);
      for (Node*& w : a.wh) w = g_.select_cols(w, rep);
      a.mask = g_.input(Mat::Zero(static_cast<long>(a.wh.size()), static_cast<long>(k)));
      return a;
    };
    ctx_.pre = widen_att(base_.pre);
    ctx_.post = widen_att(base_.post);
    ctx_.ent = g_.select_cols(base_.ent, rep);
    cols_ = k;
  }

  RegModel& m_;
  Graph g_;
  Rng rng_{0};
  EncodedContexts base_;
  EncodedContexts ctx_;
  size_t cols_ = 1;
};

}  // namespace

std::vector<std::string> reg_generate(const RegModel& m,
                                      const std::vector<std::string>& pre,
                                      const std::vector<std::string>& post,
                                      const std::string& entity, int beam, int max_len) {
  if (!m.trained) throw NnError("untrained referring-expression model");
  auto it = m.entity_index.find(entity);
  if (it == m.entity_index.end()) throw NnError("unknown entity: " + entity);
  std::vector<std::unique_ptr<DecodeSession>> sessions;
  sessions.push_back(std::make_unique<RegSession>(m, pre, post, it->second));
  auto hyps = beam_over_sessions(std::move(sessions), m.words, beam, max_len);
  return hyps.front().tokens;
}

RegGenerator make_reg_generator(std::shared_ptr<const RegModel> m, int beam,
                                int max_len) {
  return [m, beam, max_len](const std::vector<std::string>& pre,
                            const std::vector<std::string>& post,
                            const std::string& entity) {
    return reg_generate(*m, pre, post, entity, beam, max_len);
  };
}

double reg_grad_check(RegModel& m, const std::vector<const ReferenceInstance*>& batch,
                      double epsilon, int samples_per_tensor) {
  Rng dummy(0);
  Graph g(false);
  Graph::Node* loss = reg_loss(g, m, batch, dummy);
  m.params.zero_grads();
  g.backward(loss);

  struct Sample {
    Tensor* t;
    long i, j;
    double analytic;
  };
  std::vector<Sample> samples;
  Rng pick(54321);
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
      return reg_loss(g2, m, batch, d2)->value(0, 0);
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

// --- persistence ---------------------------------------------------------------------

void save_reg_model(const RegModel& m, const std::filesystem::path& path) {
  nlohmann::ordered_json h;
  h["kind"] = "neuralreg";
  h["config"] = {{"emb", m.cfg.emb},
                 {"hidden", m.cfg.hidden},
                 {"layers", m.cfg.layers},
                 {"dropout", m.cfg.dropout}};
  h["trained"] = m.trained;
  h["vocab"] = m.words.tokens;
  h["entities"] = m.entity_names;
  write_checkpoint(path, h, m.params);
}

RegModel load_reg_model(const std::filesystem::path& path) {
  RegModel m;
  auto h = read_checkpoint(path, m.params);
  if (h.at("kind") != "neuralreg")
    throw NnError("not a referring-expression model checkpoint");
  const auto& c = h.at("config");
  m.cfg.emb = c.at("emb").get<int>();
  m.cfg.hidden = c.at("hidden").get<int>();
  m.cfg.layers = c.at("layers").get<int>();
  m.cfg.dropout = c.at("dropout").get<double>();
  m.trained = h.at("trained").get<bool>();
  m.words = Vocab::from_tokens(h.at("vocab").get<std::vector<std::string>>());
  m.entity_names = h.at("entities").get<std::vector<std::string>>();
  for (size_t i = 0; i < m.entity_names.size(); ++i)
    m.entity_index[m.entity_names[i]] = static_cast<int>(i);
  return m;
}

}  // namespace d2t::nn
