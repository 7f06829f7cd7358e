#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "d2t/bpe.hpp"
#include "d2t/nn/checkpoint.hpp"
#include "d2t/nn/seq2seq.hpp"

using namespace d2t;
using namespace d2t::nn;
namespace fs = std::filesystem;

namespace {

std::vector<Pair> copy_pairs(int n, int alphabet, int lo_len, int hi_len, uint64_t seed) {
  Rng rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<Pair> out;
  while (static_cast<int>(out.size()) < n) {
    int len = lo_len + static_cast<int>(rng.uniform_int(
                           static_cast<uint64_t>(hi_len - lo_len + 1)));
    std::vector<std::string> s;
    for (int i = 0; i < len; ++i)
      s.push_back(std::string(1, static_cast<char>('a' + rng.uniform_int(
                                     static_cast<uint64_t>(alphabet)))));
    if (!seen.insert(s).second) continue;
    out.push_back({s, s});
  }
  return out;
}

ModelConfig tiny_cfg(const std::string& arch) {
  ModelConfig c;
  c.arch = arch;
  c.emb = 16;
  c.hidden = 24;
  c.layers = 1;
  c.heads = 2;
  c.ff = 32;
  c.dropout = 0.0;
  c.label_smoothing = arch == "transformer" ? 0.1 : 0.0;
  return c;
}

TrainConfig toy_train_cfg(const std::string& arch) {
  TrainConfig t;
  t.max_updates = arch == "transformer" ? 600 : 300;
  t.eval_every = 100;
  t.patience = 50;
  t.batch_size = 8;
  t.lr = arch == "transformer" ? 1.0 : 0.005;
  t.warmup = 60;
  t.seed = 7;
  return t;
}

const std::vector<Pair>& toy_data() {
  static std::vector<Pair> d = copy_pairs(20, 5, 3, 5, 99);
  return d;
}

const Seq2SeqModel& toy_model(const std::string& arch) {
  static std::map<std::string, Seq2SeqModel> cache;
  auto it = cache.find(arch);
  if (it == cache.end())
    it = cache
             .emplace(arch, seq2seq_train(toy_data(), {}, tiny_cfg(arch),
                                          toy_train_cfg(arch), nullptr))
             .first;
  return it->second;
}

// Independent greedy: argmax at every step, ties to the smaller id, skipping
// the pad and begin markers exactly as the beam does.
std::vector<std::string> greedy_decode(const Seq2SeqModel& m,
                                       const std::vector<std::string>& source,
                                       int max_len) {
  auto session = open_session(m, source);
  std::vector<int> ids;
  int prev = Vocab::kBos;
  for (int step = 0; step < max_len; ++step) {
    Mat probs = session->step({0}, {prev});
    int best = -1;
    double best_p = -1.0;
    for (int v = 0; v < m.vocab.size(); ++v) {
      if (v == Vocab::kPad || v == Vocab::kBos) continue;
      if (probs(v, 0) > best_p) {
        best_p = probs(v, 0);
        best = v;
      }
    }
    if (best == Vocab::kEos) break;
    ids.push_back(best);
    prev = best;
  }
  return m.vocab.decode(ids);
}

double eval_loss(Seq2SeqModel& m, const std::vector<Pair>& data, int batch_size) {
  Rng dummy(0);
  double total = 0.0;
  long tokens = 0;
  for (size_t i = 0; i < data.size(); i += static_cast<size_t>(batch_size)) {
    std::vector<Pair> batch(
        data.begin() + static_cast<long>(i),
        data.begin() + static_cast<long>(std::min(data.size(),
                                                  i + static_cast<size_t>(batch_size))));
    long n = 0;
    for (const auto& [s, t] : batch) n += static_cast<long>(t.size()) + 1;
    Graph g(false);
    total += seq2seq_loss(g, m, batch, dummy)->value(0, 0) * static_cast<double>(n);
    tokens += n;
  }
  return total / static_cast<double>(tokens);
}

}  // namespace

TEST_CASE("config factories carry the published shapes") {
  ModelConfig dg = ModelConfig::desk("gru");
  CHECK(dg.arch == "gru");
  CHECK(dg.emb == 64);
  CHECK(dg.hidden == 128);
  CHECK(dg.layers == 2);
  CHECK(dg.label_smoothing == 0.0);

  ModelConfig dt = ModelConfig::desk("transformer");
  CHECK(dt.heads == 2);
  CHECK(dt.ff == 256);
  CHECK(dt.label_smoothing == doctest::Approx(0.1));

  ModelConfig pt = ModelConfig::paper("transformer");
  CHECK(pt.emb == 512);
  CHECK(pt.hidden == 512);
  CHECK(pt.layers == 6);
  CHECK(pt.heads == 8);
  CHECK(pt.ff == 2048);
  CHECK(pt.dropout == doctest::Approx(0.1));
  CHECK(pt.label_smoothing == doctest::Approx(0.1));

  ModelConfig pg = ModelConfig::paper("gru");
  CHECK(pg.emb == 300);
  CHECK(pg.hidden == 512);
  CHECK(pg.layers == 2);
  CHECK(pg.dropout == doctest::Approx(0.2));

  TrainConfig td = TrainConfig::desk();
  CHECK(td.max_updates == 5000);
  CHECK(td.eval_every == 200);
  CHECK(td.patience == 5);
  CHECK(td.batch_size == 16);
  CHECK(td.warmup == 400);
  CHECK(td.lr == doctest::Approx(0.002));

  TrainConfig tp = TrainConfig::paper();
  CHECK(tp.max_updates == 200000);
  CHECK(tp.eval_every == 5000);
  CHECK(tp.patience == 30);
  CHECK(tp.batch_size == 64);
  CHECK(tp.warmup == 8000);
  CHECK(tp.lr == doctest::Approx(0.001));
  CHECK(tp.beam == 5);
  CHECK(tp.grad_clip == doctest::Approx(5.0));
  CHECK(tp.seed == 13);
}

TEST_CASE("analytic gradients match central differences on both architectures") {
  std::vector<Pair> batch = {
      {{"a", "b", "c"}, {"c", "b"}},
      {{"b", "b"}, {"a", "a", "a", "c"}},
      {{"c"}, {"b"}},
  };
  std::vector<std::vector<std::string>> seqs;
  for (const auto& [s, t] : batch) {
    seqs.push_back(s);
    seqs.push_back(t);
  }
  Vocab vocab = Vocab::build(seqs);

  SUBCASE("gru") {
    ModelConfig cfg = tiny_cfg("gru");
    cfg.layers = 2;
    Seq2SeqModel m = seq2seq_init(cfg, vocab, 3);
    CHECK(grad_check(m, batch, 1e-5) < 1e-4);
  }
  SUBCASE("transformer") {
    ModelConfig cfg = tiny_cfg("transformer");
    cfg.layers = 2;
    Seq2SeqModel m = seq2seq_init(cfg, vocab, 4);
    CHECK(grad_check(m, batch, 1e-5) < 1e-4);
  }
}

TEST_CASE("init validates the architecture") {
  Vocab v = Vocab::build({{"a"}});
  ModelConfig bad = tiny_cfg("gru");
  bad.arch = "lstm";
  CHECK_THROWS_AS(seq2seq_init(bad, v, 1), NnError);

  ModelConfig odd = tiny_cfg("transformer");
  odd.emb = 15;
  CHECK_THROWS_AS(seq2seq_init(odd, v, 1), NnError);
}

TEST_CASE("training memorizes a small copy task") {
  for (const std::string arch : {"gru", "transformer"}) {
    CAPTURE(arch);
    const Seq2SeqModel& m = toy_model(arch);
    int exact = 0;
    for (const auto& [src, tgt] : toy_data()) {
      auto hyps = beam_decode(m, src, 1, 20);
      REQUIRE(!hyps.empty());
      if (hyps[0].tokens == tgt) ++exact;
    }
    CHECK(exact >= 18);
  }
}

TEST_CASE("training logs progress and restores the best evaluation") {
  TrainLog log;
  Seq2SeqModel m =
      seq2seq_train(toy_data(), {}, tiny_cfg("gru"), toy_train_cfg("gru"), &log);
  CHECK(log.updates > 0);
  CHECK(log.evals >= 1);
  CHECK(log.dev_history.size() == static_cast<size_t>(log.evals));
  double best = log.dev_history[0];
  for (double d : log.dev_history) best = std::min(best, d);
  CHECK(log.best_dev_loss == doctest::Approx(best));
  CHECK(eval_loss(m, toy_data(), 8) == doctest::Approx(log.best_dev_loss).epsilon(1e-9));
}

TEST_CASE("zero learning rate stops early on a flat dev loss") {
  TrainConfig t = toy_train_cfg("gru");
  t.lr = 0.0;
  t.eval_every = 10;
  t.patience = 2;
  t.max_updates = 1000;
  TrainLog log;
  seq2seq_train(toy_data(), {}, tiny_cfg("gru"), t, &log);
  CHECK(log.stopped_early);
  CHECK(log.evals == 3);
  CHECK(log.updates == 30);
  CHECK(log.dev_history[1] == doctest::Approx(log.dev_history[0]));
}

TEST_CASE("training is deterministic per seed") {
  TrainConfig t = toy_train_cfg("gru");
  t.max_updates = 60;
  TrainLog la, lb;
  Seq2SeqModel a = seq2seq_train(toy_data(), {}, tiny_cfg("gru"), t, &la);
  Seq2SeqModel b = seq2seq_train(toy_data(), {}, tiny_cfg("gru"), t, &lb);
  CHECK(la.best_dev_loss == doctest::Approx(lb.best_dev_loss).epsilon(1e-15));
  bool same = true;
  a.params.for_each([&](const Tensor& ta) {
    if (ta.value != b.params.at(ta.name).value) same = false;
  });
  CHECK(same);

  t.seed = 8;
  TrainLog lc;
  seq2seq_train(toy_data(), {}, tiny_cfg("gru"), t, &lc);
  CHECK(lc.best_dev_loss != doctest::Approx(la.best_dev_loss).epsilon(1e-15));
}

TEST_CASE("beam width one reproduces independent greedy decoding") {
  for (const std::string arch : {"gru", "transformer"}) {
    CAPTURE(arch);
    const Seq2SeqModel& trained = toy_model(arch);
    for (const auto& [src, tgt] : toy_data()) {
      auto hyps = beam_decode(trained, src, 1, 20);
      CHECK(hyps[0].tokens == greedy_decode(trained, src, 20));
    }

    // An untrained model spreads probability mass; agreement there rules out
    // luck on a peaked distribution.
    Vocab v = toy_model(arch).vocab;
    Seq2SeqModel random_m = seq2seq_init(tiny_cfg(arch), v, 21);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
      std::vector<std::string> src;
      int len = 2 + static_cast<int>(rng.uniform_int(4));
      for (int k = 0; k < len; ++k)
        src.push_back(std::string(1, static_cast<char>('a' + rng.uniform_int(5))));
      auto hyps = beam_decode(random_m, src, 1, 15);
      CHECK(hyps[0].tokens == greedy_decode(random_m, src, 15));
    }
  }
}

TEST_CASE("ensembles of identical models decode exactly like one model") {
  const Seq2SeqModel& m = toy_model("gru");
  for (const auto& [src, tgt] : toy_data()) {
    auto plain = beam_decode(m, src, 3, 20);
    auto single = ensemble_decode({&m}, src, 3, 20);
    auto doubled = ensemble_decode({&m, &m}, src, 3, 20);
    REQUIRE(plain.size() == single.size());
    REQUIRE(plain.size() == doubled.size());
    for (size_t i = 0; i < plain.size(); ++i) {
      CHECK(plain[i].tokens == single[i].tokens);
      CHECK(plain[i].score == doctest::Approx(single[i].score).epsilon(1e-12));
      CHECK(plain[i].tokens == doubled[i].tokens);
    }
  }
}

TEST_CASE("ensembles require a shared vocabulary") {
  const Seq2SeqModel& m = toy_model("gru");
  std::vector<Pair> other = {{{"x", "y"}, {"y"}}};
  TrainConfig t = toy_train_cfg("gru");
  t.max_updates = 5;
  t.eval_every = 5;
  Seq2SeqModel m2 = seq2seq_train(other, {}, tiny_cfg("gru"), t, nullptr);
  CHECK_THROWS_AS(ensemble_decode({&m, &m2}, {"a", "b"}, 2, 10), NnError);
  CHECK_THROWS_AS(ensemble_decode({}, {"a"}, 2, 10), NnError);
}

TEST_CASE("beam search output is ranked and well formed") {
  const Seq2SeqModel& m = toy_model("gru");
  auto hyps = beam_decode(m, toy_data()[0].first, 4, 20);
  CHECK(!hyps.empty());
  CHECK(hyps.size() <= 8);
  for (size_t i = 1; i < hyps.size(); ++i)
    CHECK(hyps[i - 1].normalized >= hyps[i].normalized);
  for (const Hypothesis& h : hyps) {
    CHECK(h.score <= 1e-12);
    for (const std::string& tok : h.tokens) {
      CHECK(tok != "<s>");
      CHECK(tok != "</s>");
      CHECK(tok != "<pad>");
    }
  }
  CHECK_THROWS_AS(beam_decode(m, toy_data()[0].first, 0, 20), NnError);
  CHECK_THROWS_AS(beam_decode(m, {}, 2, 20), NnError);
  CHECK_THROWS_AS(beam_over_sessions({}, m.vocab, 2, 20), NnError);
}

TEST_CASE("loss rejects empty batches and training rejects empty sets") {
  Seq2SeqModel m = seq2seq_init(tiny_cfg("gru"), Vocab::build({{"a"}}), 1);
  Graph g(false);
  Rng rng(0);
  CHECK_THROWS_AS(seq2seq_loss(g, m, {}, rng), NnError);
  CHECK_THROWS_AS(
      seq2seq_train({}, {}, tiny_cfg("gru"), toy_train_cfg("gru"), nullptr), NnError);
}

TEST_CASE("checkpoints roundtrip the model and its subword table") {
  Seq2SeqModel m = seq2seq_train(toy_data(), {}, tiny_cfg("gru"),
                                 toy_train_cfg("gru"), nullptr);
  m.bpe = bpe_train({{"low", "low", "lower", "lowest"}}, 10, 1);
  REQUIRE(!m.bpe.merges.empty());

  fs::path path = fs::temp_directory_path() / "d2t_test_seq2seq.ckpt";
  save_model(m, path);
  Seq2SeqModel back = load_model(path);

  CHECK(back.cfg.arch == m.cfg.arch);
  CHECK(back.cfg.emb == m.cfg.emb);
  CHECK(back.cfg.hidden == m.cfg.hidden);
  CHECK(back.cfg.layers == m.cfg.layers);
  CHECK(back.cfg.label_smoothing == doctest::Approx(m.cfg.label_smoothing));
  CHECK(back.cfg.tied == m.cfg.tied);
  CHECK(back.vocab.tokens == m.vocab.tokens);
  CHECK(back.bpe.merges == m.bpe.merges);
  CHECK(back.bpe.merge_target == m.bpe.merge_target);
  CHECK(back.bpe.threshold == m.bpe.threshold);

  CHECK(back.params.size() == m.params.size());
  bool same = true;
  m.params.for_each([&](const Tensor& t) {
    const Tensor* other = back.params.find(t.name);
    if (!other || other->value != t.value) same = false;
  });
  CHECK(same);

  for (const auto& [src, tgt] : toy_data())
    CHECK(beam_decode(back, src, 2, 20)[0].tokens ==
          beam_decode(m, src, 2, 20)[0].tokens);
  fs::remove(path);
}

TEST_CASE("checkpoint loading rejects foreign and damaged files") {
  fs::path dir = fs::temp_directory_path();

  fs::path missing = dir / "d2t_test_missing.ckpt";
  CHECK_THROWS_AS(load_model(missing), NnError);

  fs::path garbage = dir / "d2t_test_garbage.ckpt";
  {
    std::ofstream out(garbage);
    out << "not a checkpoint\n";
  }
  CHECK_THROWS_AS(load_model(garbage), NnError);
  fs::remove(garbage);

  fs::path foreign = dir / "d2t_test_foreign.ckpt";
  {
    ParamStore ps;
    ps.create("w", 1, 1);
    nlohmann::ordered_json h;
    h["kind"] = "something-else";
    h["config"] = model_config_json(tiny_cfg("gru"));
    h["vocab"] = std::vector<std::string>{"<pad>", "<s>", "</s>", "<unk>"};
    h["bpe"] = bpe_json(BPEModel{});
    write_checkpoint(foreign, h, ps);
  }
  CHECK_THROWS_AS(load_model(foreign), NnError);
  fs::remove(foreign);

  fs::path truncated = dir / "d2t_test_truncated.ckpt";
  {
    Seq2SeqModel m = seq2seq_init(tiny_cfg("gru"), Vocab::build({{"a", "b"}}), 2);
    save_model(m, truncated);
    auto size = fs::file_size(truncated);
    fs::resize_file(truncated, size / 2);
  }
  CHECK_THROWS_AS(load_model(truncated), NnError);
  fs::remove(truncated);
}
