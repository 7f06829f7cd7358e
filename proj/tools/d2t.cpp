#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "d2t/corpus.hpp"
#include "d2t/engines.hpp"
#include "d2t/eval.hpp"
#include "d2t/nn/neuralreg.hpp"
#include "d2t/nn/seq2seq.hpp"
#include "d2t/pipeline.hpp"
#include "d2t/strings.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace d2t;

namespace {

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  return read_interchange(in, path);
}

void write_manifest(const fs::path& dir, const std::string& command,
                    ordered_json options) {
  ordered_json m;
  m["command"] = command;
  m["options"] = std::move(options);
  m["created"] = iso_now();
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path.string());
  return out;
}

// --- import ---------------------------------------------------------------------

struct ImportOpts {
  std::string in, format = "auto", out;
};

int cmd_import(const ImportOpts& o) {
  CorpusFormat fmt;
  if (o.format == "xml" || (o.format == "auto" && fs::is_directory(o.in)))
    fmt = CorpusFormat::Xml;
  else
    fmt = CorpusFormat::Jsonl;
  ImportStats stats;
  Corpus c = import_webnlg(o.in, fmt, &stats);
  write_interchange(c, fs::path(o.out));
  std::cout << "entries " << stats.entries << ", verbalizations " << stats.lexes
            << " (skipped " << stats.lexes_skipped << ")\n"
            << "missing layers: order " << stats.missing_order << ", breaks "
            << stats.missing_breaks << ", template " << stats.missing_template
            << ", references " << stats.missing_references << "\n";
  ordered_json opts{{"in", o.in}, {"format", o.format}, {"out", o.out}};
  write_manifest(fs::path(o.out).parent_path(), "import", opts);
  return 0;
}

// --- extract --------------------------------------------------------------------

struct ExtractOpts {
  std::string corpus, task, out;
};

ordered_json counts_json(const SplitCounts& s) {
  return {{"records", s.records},
          {"distinct_pairs", s.distinct_pairs},
          {"sources", s.sources},
          {"skipped", s.skipped}};
}

void print_counts(const std::string& split, const SplitCounts& s) {
  std::cout << split << ": " << s.distinct_pairs << " instances over " << s.sources
            << " inputs (" << s.records << " records, " << s.skipped << " skipped)\n";
}

int cmd_extract(const ExtractOpts& o) {
  Corpus c = load_corpus(o.corpus);
  fs::create_directories(o.out);
  Task task = parse_task(o.task);
  ExtractionStats stats;
  if (task == Task::Reg) {
    RegSplits rs = extract_reg_dataset(c);
    stats = rs.stats;
    auto dump = [&](const RegDataset& ds, const std::string& name) {
      auto out = open_out(fs::path(o.out) / (name + ".jsonl"));
      for (const ReferenceInstance& r : ds.instances) {
        ordered_json rec{{"entity", r.entity}, {"refex", r.refex},
                         {"pre", r.pre_context}, {"post", r.post_context},
                         {"domain", r.domain},  {"seen", r.seen},
                         {"size", r.size}};
        out << rec.dump() << "\n";
      }
    };
    dump(rs.train, "train");
    dump(rs.dev, "dev");
    dump(rs.test, "test");
  } else {
    TaskSplits ts = extract_task_dataset(c, task);
    stats = ts.stats;
    auto dump = [&](const TaskDataset& ds, const std::string& name) {
      auto out = open_out(fs::path(o.out) / (name + ".jsonl"));
      for (const DatasetInstance& inst : ds.instances) {
        ordered_json rec{{"source", inst.source}, {"targets", inst.targets},
                         {"domain", inst.domain}, {"seen", inst.seen},
                         {"size", inst.size}};
        out << rec.dump() << "\n";
      }
    };
    dump(ts.train, "train");
    dump(ts.dev, "dev");
    dump(ts.test, "test");
  }
  print_counts("train", stats.train);
  print_counts("dev", stats.dev);
  print_counts("test", stats.test);
  ordered_json stats_json{{"task", o.task},
                          {"train", counts_json(stats.train)},
                          {"dev", counts_json(stats.dev)},
                          {"test", counts_json(stats.test)}};
  open_out(fs::path(o.out) / "stats.json") << stats_json.dump(2) << "\n";
  write_manifest(o.out, "extract",
                 ordered_json{{"corpus", o.corpus}, {"task", o.task}, {"out", o.out}});
  return 0;
}

// --- train ----------------------------------------------------------------------

struct TrainOpts {
  std::string corpus, task, arch = "gru", profile = "desk", out;
  uint64_t seed = 13;
  int bpe_merges = 2000;
  int bpe_threshold = 5;
  bool no_bpe = false;
  long max_updates = -1;
  int eval_every = -1, patience = -1, batch = -1, epochs = -1;
  double lr = -1.0, dropout = -1.0;
};

std::vector<nn::Pair> to_pairs(const TaskDataset& ds) {
  std::vector<nn::Pair> pairs;
  for (const DatasetInstance& inst : ds.instances)
    pairs.emplace_back(inst.source, inst.targets.front());
  return pairs;
}

int cmd_train(const TrainOpts& o) {
  Corpus c = load_corpus(o.corpus);
  fs::create_directories(fs::path(o.out).parent_path().empty()
                             ? "."
                             : fs::path(o.out).parent_path());
  if (o.task == "reg") {
    RegSplits rs = extract_reg_dataset(c);
    nn::RegModelConfig mc =
        o.profile == "paper" ? nn::RegModelConfig::paper() : nn::RegModelConfig::desk();
    nn::RegTrainConfig tc =
        o.profile == "paper" ? nn::RegTrainConfig::paper() : nn::RegTrainConfig::desk();
    tc.seed = o.seed;
    if (o.epochs >= 0) tc.epochs = o.epochs;
    if (o.patience >= 0) tc.patience = o.patience;
    if (o.batch >= 0) tc.batch_size = o.batch;
    if (o.lr >= 0) tc.lr = o.lr;
    if (o.dropout >= 0) mc.dropout = o.dropout;
    nn::TrainLog log;
    nn::RegModel m = nn::reg_train(rs.train.instances, rs.dev.instances, mc, tc, &log);
    nn::save_reg_model(m, o.out);
    std::cout << "updates " << log.updates << ", evals " << log.evals
              << ", best dev loss " << log.best_dev_loss << "\n";
  } else {
    Task task = parse_task(o.task);
    TaskSplits splits = extract_task_dataset(c, task);
    std::vector<nn::Pair> train_pairs = to_pairs(splits.train);
    std::vector<nn::Pair> dev_pairs = to_pairs(splits.dev);

    BPEModel bpe;
    bool use_bpe = !o.no_bpe &&
                   (task == Task::Lexicalization || task == Task::EndToEnd) &&
                   o.bpe_merges > 0;
    if (use_bpe) {
      std::vector<std::vector<std::string>> lines;
      for (const auto& [src, tgt] : train_pairs) {
        lines.push_back(tgt);
        if (task == Task::EndToEnd) lines.push_back(src);
      }
      bpe = bpe_train(lines, o.bpe_merges, o.bpe_threshold);
      for (auto& [src, tgt] : train_pairs) {
        tgt = bpe_encode(bpe, tgt);
        if (task == Task::EndToEnd) src = bpe_encode(bpe, src);
      }
      for (auto& [src, tgt] : dev_pairs) {
        tgt = bpe_encode(bpe, tgt);
        if (task == Task::EndToEnd) src = bpe_encode(bpe, src);
      }
    }
    nn::ModelConfig mc = o.profile == "paper" ? nn::ModelConfig::paper(o.arch)
                                              : nn::ModelConfig::desk(o.arch);
    nn::TrainConfig tc =
        o.profile == "paper" ? nn::TrainConfig::paper() : nn::TrainConfig::desk();
    tc.seed = o.seed;
    if (o.max_updates >= 0) tc.max_updates = o.max_updates;
    if (o.eval_every >= 0) tc.eval_every = o.eval_every;
    if (o.patience >= 0) tc.patience = o.patience;
    if (o.batch >= 0) tc.batch_size = o.batch;
    if (o.lr >= 0) tc.lr = o.lr;
    if (o.dropout >= 0) mc.dropout = o.dropout;
    nn::TrainLog log;
    nn::Seq2SeqModel m = nn::seq2seq_train(train_pairs, dev_pairs, mc, tc, &log);
    m.bpe = bpe;
    nn::save_model(m, o.out);
    std::cout << "updates " << log.updates << ", evals " << log.evals
              << ", best dev loss " << log.best_dev_loss
              << (log.stopped_early ? " (early stop)" : "") << "\n";
  }
  ordered_json opts{{"corpus", o.corpus}, {"task", o.task},       {"arch", o.arch},
                    {"profile", o.profile}, {"seed", o.seed},     {"out", o.out},
                    {"bpe_merges", o.bpe_merges}, {"no_bpe", o.no_bpe}};
  fs::path dir = fs::path(o.out).parent_path();
  write_manifest(dir.empty() ? "." : dir, "train", opts);
  return 0;
}

// --- run ------------------------------------------------------------------------

struct RunOpts {
  std::string corpus, split = "test", mode = "pipeline", out;
  std::string ordering = "majority", structuring = "majority", lex = "majority";
  std::string reg = "onlynames", engine = "majority", policy = "onlynames";
  std::string model, order_model, struct_model, lex_model, reg_model;
  uint64_t seed = 13;
  int beam = 5, max_len = 100, oracle_upto = 0;
};

struct MajorityArtifacts {
  OrderModel order;
  StructModel structure;
  TemplateStore templates;
  RuleTable rules;
};

MajorityArtifacts train_majority(const Corpus& c) {
  MajorityArtifacts a;
  TaskSplits ord = extract_task_dataset(c, Task::Ordering);
  a.order = order_majority_train(ord.train);
  TaskSplits str = extract_task_dataset(c, Task::Structuring);
  a.structure = structure_majority_train(str.train);
  TaskSplits lex = extract_task_dataset(c, Task::Lexicalization);
  a.templates = template_store_train(lex.train);
  a.rules = rules_extract(c);
  return a;
}

std::vector<const Entry*> split_entries(const Corpus& c, const std::string& split) {
  std::vector<const Entry*> out;
  for (const Entry& e : c.entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

ordered_json trace_json(const PipelineTrace& tr) {
  ordered_json breaks = ordered_json::array();
  for (const auto& [b, e] : tr.breaks) breaks.push_back({b, e});
  return {{"ordered", linearize_ordered(tr.ordered)},
          {"breaks", std::move(breaks)},
          {"template", serialize_tokens(tr.tmpl)},
          {"referenced", serialize_tokens(tr.referenced)},
          {"order_repaired", tr.order_repaired},
          {"struct_fell_back", tr.struct_fell_back},
          {"lex_fell_back", tr.lex_fell_back},
          {"lex_bind_failed", tr.lex_bind_failed},
          {"lex_fallback_sentences", tr.lex_fallback_sentences},
          {"realize_dropped_tags", tr.realize_dropped_tags}};
}

// First verbalization carrying every annotation layer, if any.
const LexEntry* gold_lex(const Entry& e) {
  for (const LexEntry& lex : e.lexes)
    if (!lex.order.empty() && !lex.breaks.empty() && lex.tmpl &&
        !lex.references.empty())
      return &lex;
  return nullptr;
}

int cmd_run(const RunOpts& o) {
  Corpus c = load_corpus(o.corpus);
  fs::create_directories(o.out);
  auto out = open_out(fs::path(o.out) / "run.jsonl");

  ordered_json opts{{"corpus", o.corpus}, {"split", o.split},   {"mode", o.mode},
                    {"seed", o.seed},     {"beam", o.beam},     {"max_len", o.max_len},
                    {"out", o.out}};

  if (o.mode == "pipeline") {
    PipelineConfig cfg;
    cfg.ordering = parse_engine(o.ordering);
    cfg.structuring = parse_engine(o.structuring);
    cfg.lexicalization = parse_engine(o.lex);
    cfg.reg = parse_reg_policy(o.reg);
    cfg.seed = o.seed;
    cfg.beam = o.beam;
    cfg.max_decode_len = o.max_len;
    cfg.oracle_upto = o.oracle_upto;

    MajorityArtifacts maj = train_majority(c);
    PipelineModels models;
    models.order_majority = &maj.order;
    models.struct_majority = &maj.structure;
    models.templates = &maj.templates;
    models.rules = &maj.rules;

    std::optional<nn::Seq2SeqModel> om, sm, lm;
    std::optional<nn::RegModel> rm;
    if (!o.order_model.empty()) {
      om = nn::load_model(o.order_model);
      models.order_model = &*om;
    }
    if (!o.struct_model.empty()) {
      sm = nn::load_model(o.struct_model);
      models.struct_model = &*sm;
    }
    if (!o.lex_model.empty()) {
      lm = nn::load_model(o.lex_model);
      models.lex_model = &*lm;
    }
    if (!o.reg_model.empty()) {
      rm = nn::load_reg_model(o.reg_model);
      models.reg_model = &*rm;
    }

    for (const Entry* e : split_entries(c, o.split)) {
      GoldAnnotations gold;
      if (cfg.oracle_upto > 0) {
        if (const LexEntry* lex = gold_lex(*e)) {
          gold.ordered = e->ordered_triples(*lex);
          gold.breaks = lex->breaks;
          gold.tmpl = *lex->tmpl;
          gold.references = lex->references;
        }
      }
      PipelineTrace tr;
      std::string text = run_pipeline(e->set, cfg, models, &tr,
                                      cfg.oracle_upto > 0 ? &gold : nullptr);
      ordered_json golds = ordered_json::array();
      for (const LexEntry& lex : e->lexes) golds.push_back(lower(tokenize(lex.text)));
      ordered_json rec{{"id", e->eid},
                       {"domain", e->set.domain},
                       {"seen", e->set.seen},
                       {"size", static_cast<int>(e->set.triples.size())},
                       {"pred", lower(tokenize(text))},
                       {"golds", std::move(golds)},
                       {"text", text},
                       {"trace", trace_json(tr)}};
      out << rec.dump() << "\n";
    }
    opts["ordering"] = o.ordering;
    opts["structuring"] = o.structuring;
    opts["lex"] = o.lex;
    opts["reg"] = o.reg;
    opts["oracle_upto"] = o.oracle_upto;
  } else if (o.mode == "e2e") {
    if (o.model.empty()) throw std::runtime_error("e2e mode needs --model");
    nn::Seq2SeqModel m = nn::load_model(o.model);
    for (const Entry* e : split_entries(c, o.split)) {
      E2EResult r = run_e2e(e->set, m, o.beam, o.max_len);
      ordered_json golds = ordered_json::array();
      for (const LexEntry& lex : e->lexes) golds.push_back(lower(tokenize(lex.text)));
      ordered_json rec{{"id", e->eid},
                       {"domain", e->set.domain},
                       {"seen", e->set.seen},
                       {"size", static_cast<int>(e->set.triples.size())},
                       {"pred", lower(tokenize(r.text))},
                       {"golds", std::move(golds)},
                       {"text", r.text},
                       {"empty_decode", r.empty_decode}};
      out << rec.dump() << "\n";
    }
    opts["model"] = o.model;
  } else if (o.mode == "ordering" || o.mode == "structuring" || o.mode == "lex") {
    Task task = o.mode == "ordering"   ? Task::Ordering
                : o.mode == "structuring" ? Task::Structuring
                                          : Task::Lexicalization;
    TaskSplits splits = extract_task_dataset(c, task);
    const TaskDataset& ds = o.split == "train"
                                ? splits.train
                                : (o.split == "dev" ? splits.dev : splits.test);
    std::optional<nn::Seq2SeqModel> nm;
    if (o.engine == "neural") {
      if (o.model.empty()) throw std::runtime_error("neural engine needs --model");
      nm = nn::load_model(o.model);
    }
    OrderModel om;
    StructModel sm;
    TemplateStore store;
    if (o.engine == "majority" || o.mode == "lex") {
      // the lexicalization store also backs the neural fallback
      if (task == Task::Ordering) om = order_majority_train(splits.train);
      if (task == Task::Structuring) sm = structure_majority_train(splits.train);
      if (task == Task::Lexicalization) store = template_store_train(splits.train);
    }
    int idx = 0;
    for (const DatasetInstance& inst : ds.instances) {
      std::vector<std::string> pred;
      if (task == Task::Ordering) {
        TripleSet ts{parse_linearized(inst.source), inst.domain, inst.seen};
        std::vector<Triple> ordered;
        if (o.engine == "random")
          ordered = order_random(ts, Rng::mix(o.seed, static_cast<uint64_t>(idx)));
        else if (o.engine == "majority")
          ordered = order_majority(om, ts);
        else
          ordered = order_neural(*nm, ts, Rng::mix(o.seed, static_cast<uint64_t>(idx)),
                                 o.beam, o.max_len);
        for (const Triple& t : ordered) pred.push_back(t.predicate);
      } else if (task == Task::Structuring) {
        std::vector<Triple> ordered = parse_linearized(inst.source);
        Partition breaks;
        if (o.engine == "random")
          breaks = structure_random(ordered, Rng::mix(o.seed, static_cast<uint64_t>(idx)));
        else if (o.engine == "majority")
          breaks = structure_majority(sm, ordered);
        else
          breaks = structure_neural(*nm, ordered, o.beam, o.max_len);
        pred = structuring_target(ordered, breaks);
      } else {
        auto [ordered, breaks] = parse_structured(inst.source);
        Template tmpl;
        if (o.engine == "random")
          tmpl = lexicalize_lookup(ordered, breaks, store, LexMode::Random,
                                   Rng::mix(o.seed, static_cast<uint64_t>(idx)));
        else if (o.engine == "majority")
          tmpl = lexicalize_lookup(ordered, breaks, store, LexMode::Majority,
                                   Rng::mix(o.seed, static_cast<uint64_t>(idx)));
        else
          tmpl = lexicalize_neural(*nm, ordered, breaks, store, o.beam, o.max_len);
        pred = uncased_template_tokens(tmpl);
      }
      ordered_json rec{{"id", idx},
                       {"domain", inst.domain},
                       {"seen", inst.seen},
                       {"size", inst.size},
                       {"pred", std::move(pred)},
                       {"golds", inst.targets}};
      out << rec.dump() << "\n";
      ++idx;
    }
    opts["engine"] = o.engine;
    if (!o.model.empty()) opts["model"] = o.model;
  } else if (o.mode == "reg") {
    RegSplits splits = extract_reg_dataset(c);
    const RegDataset& ds = o.split == "train"
                               ? splits.train
                               : (o.split == "dev" ? splits.dev : splits.test);
    std::optional<nn::RegModel> rm;
    if (o.policy == "neural") {
      if (o.reg_model.empty() && o.model.empty())
        throw std::runtime_error("neural policy needs --reg-model");
      rm = nn::load_reg_model(o.reg_model.empty() ? o.model : o.reg_model);
    }
    int idx = 0;
    for (const ReferenceInstance& r : ds.instances) {
      std::vector<std::string> pred;
      if (rm && rm->knows(r.entity)) {
        pred = nn::reg_generate(*rm, r.pre_context, r.post_context, r.entity, o.beam,
                                30);
      } else {
        pred = only_names_tokens(r.entity);
      }
      ordered_json rec{{"id", idx},
                       {"domain", r.domain},
                       {"seen", r.seen},
                       {"size", r.size},
                       {"pred", lower(pred)},
                       {"golds", ordered_json::array({lower(r.refex)})}};
      out << rec.dump() << "\n";
      ++idx;
    }
    opts["policy"] = o.policy;
  } else {
    throw std::runtime_error("unknown mode: " + o.mode);
  }
  write_manifest(o.out, "run", opts);
  return 0;
}

// --- eval -----------------------------------------------------------------------

struct EvalOpts {
  std::string run, metric = "accuracy", out, label;
  bool per_domain = false;
};

ordered_json bucket_json(const BucketScore& b) {
  return {{"score", b.score}, {"count", b.count}, {"valid", b.valid}};
}

int cmd_eval(const EvalOpts& o) {
  fs::path run_path(o.run);
  if (fs::is_directory(run_path)) run_path /= "run.jsonl";
  std::ifstream in(run_path);
  if (!in) throw std::runtime_error("cannot open run artifact: " + run_path.string());

  std::vector<TokenSeq> preds;
  std::vector<GoldSet> golds;
  std::vector<std::string> domains;
  std::vector<bool> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json rec = ordered_json::parse(line);
    preds.push_back(rec.at("pred").get<TokenSeq>());
    golds.push_back(rec.at("golds").get<GoldSet>());
    domains.push_back(rec.at("domain").get<std::string>());
    seen.push_back(rec.at("seen").get<bool>());
  }
  EvalReport report = o.metric == "bleu"
                          ? bleu_report(preds, golds, domains, seen)
                          : accuracy_report(preds, golds, domains, seen);
  print_report(report, std::cout, o.per_domain);

  ordered_json rj{{"label", o.label.empty() ? o.run : o.label},
                  {"metric", report.metric},
                  {"all", bucket_json(report.all)},
                  {"seen", bucket_json(report.seen)},
                  {"unseen", bucket_json(report.unseen)}};
  ordered_json dom = ordered_json::object();
  for (const auto& [name, b] : report.per_domain) dom[name] = bucket_json(b);
  rj["per_domain"] = std::move(dom);
  fs::path out_path = o.out.empty()
                          ? (fs::is_directory(o.run) ? fs::path(o.run) / "report.json"
                                                     : fs::path("report.json"))
                          : fs::path(o.out);
  open_out(out_path) << rj.dump(2) << "\n";
  return 0;
}

// --- report ---------------------------------------------------------------------

struct ReportOpts {
  std::vector<std::string> inputs;
};

int cmd_report(const ReportOpts& o) {
  struct Row {
    std::string label, metric;
    double all, seen_s, unseen_s;
    bool seen_v, unseen_v;
  };
  std::vector<Row> rows;
  for (const std::string& path : o.inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    ordered_json j;
    in >> j;
    rows.push_back({j.at("label").get<std::string>(), j.at("metric").get<std::string>(),
                    j.at("all").at("score").get<double>(),
                    j.at("seen").at("score").get<double>(),
                    j.at("unseen").at("score").get<double>(),
                    j.at("seen").at("valid").get<bool>(),
                    j.at("unseen").at("valid").get<bool>()});
  }
  auto fmt = [](const Row& r, double v, bool valid) {
    if (!valid) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, r.metric == "bleu" ? "%.2f" : "%.4f", v);
    return std::string(buf);
  };
  std::printf("%-40s %-10s %10s %10s %10s %8s\n", "run", "metric", "all", "seen",
              "unseen", "meteor");
  for (const Row& r : rows)
    std::printf("%-40s %-10s %10s %10s %10s %8s\n", r.label.c_str(), r.metric.c_str(),
                fmt(r, r.all, true).c_str(), fmt(r, r.seen_s, r.seen_v).c_str(),
                fmt(r, r.unseen_s, r.unseen_v).c_str(), "n/a");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular RDF-to-text generation"};
  app.require_subcommand(1);

  ImportOpts io;
  auto* imp = app.add_subcommand("import", "Normalize a corpus into interchange JSONL");
  imp->add_option("--in", io.in, "Corpus directory (XML) or file (JSONL)")->required();
  imp->add_option("--format", io.format, "xml|jsonl|auto")
      ->check(CLI::IsMember({"xml", "jsonl", "auto"}));
  imp->add_option("--out", io.out, "Output interchange file")->required();

  ExtractOpts eo;
  auto* ext = app.add_subcommand("extract", "Write per-task datasets");
  ext->add_option("--corpus", eo.corpus, "Interchange corpus")->required();
  ext->add_option("--task", eo.task, "ordering|structuring|lex|reg|e2e")->required();
  ext->add_option("--out", eo.out, "Output directory")->required();

  TrainOpts to;
  auto* trn = app.add_subcommand("train", "Train a stage model");
  trn->add_option("--corpus", to.corpus, "Interchange corpus")->required();
  trn->add_option("--task", to.task, "ordering|structuring|lex|reg|e2e")->required();
  trn->add_option("--arch", to.arch, "gru|transformer")
      ->check(CLI::IsMember({"gru", "transformer"}));
  trn->add_option("--profile", to.profile, "desk|paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  trn->add_option("--out", to.out, "Checkpoint path")->required();
  trn->add_option("--seed", to.seed, "Seed")->envname("D2T_SEED");
  trn->add_option("--bpe-merges", to.bpe_merges, "BPE merge budget (lex/e2e)");
  trn->add_option("--bpe-threshold", to.bpe_threshold, "BPE pair threshold");
  trn->add_flag("--no-bpe", to.no_bpe, "Disable subword targets");
  trn->add_option("--max-updates", to.max_updates, "Override update budget");
  trn->add_option("--eval-every", to.eval_every, "Override eval period");
  trn->add_option("--patience", to.patience, "Override early-stop patience");
  trn->add_option("--batch", to.batch, "Override batch size");
  trn->add_option("--epochs", to.epochs, "Override epochs (reg)");
  trn->add_option("--lr", to.lr, "Override learning rate");
  trn->add_option("--dropout", to.dropout, "Override dropout");

  RunOpts ro;
  auto* run = app.add_subcommand("run", "Generate predictions into a run artifact");
  run->add_option("--corpus", ro.corpus, "Interchange corpus")->required();
  run->add_option("--split", ro.split, "train|dev|test");
  run->add_option("--mode", ro.mode, "pipeline|e2e|ordering|structuring|lex|reg");
  run->add_option("--out", ro.out, "Output directory")->required();
  run->add_option("--ordering", ro.ordering, "Pipeline ordering engine");
  run->add_option("--structuring", ro.structuring, "Pipeline structuring engine");
  run->add_option("--lex", ro.lex, "Pipeline lexicalization engine");
  run->add_option("--reg", ro.reg, "Pipeline reg policy: onlynames|neural");
  run->add_option("--engine", ro.engine, "Stage engine: random|majority|neural");
  run->add_option("--policy", ro.policy, "Reg stage policy: onlynames|neural");
  run->add_option("--model", ro.model, "Model checkpoint (stage/e2e modes)");
  run->add_option("--order-model", ro.order_model, "Ordering checkpoint");
  run->add_option("--struct-model", ro.struct_model, "Structuring checkpoint");
  run->add_option("--lex-model", ro.lex_model, "Lexicalization checkpoint");
  run->add_option("--reg-model", ro.reg_model, "Reg checkpoint");
  run->add_option("--seed", ro.seed, "Seed")->envname("D2T_SEED");
  run->add_option("--beam", ro.beam, "Beam size");
  run->add_option("--max-len", ro.max_len, "Max decode length");
  run->add_option("--oracle-upto", ro.oracle_upto,
                  "Inject gold through stage N (1 order, 2 struct, 3 template, 4 refs)");

  EvalOpts vo;
  auto* evl = app.add_subcommand("eval", "Score a run artifact");
  evl->add_option("--run", vo.run, "Run directory or run.jsonl")->required();
  evl->add_option("--metric", vo.metric, "accuracy|bleu")
      ->check(CLI::IsMember({"accuracy", "bleu"}));
  evl->add_option("--out", vo.out, "Report JSON path");
  evl->add_option("--label", vo.label, "Row label for report aggregation");
  evl->add_flag("--per-domain", vo.per_domain, "Include per-domain rows");

  ReportOpts po;
  auto* rep = app.add_subcommand("report", "Tabulate several report.json files");
  rep->add_option("--inputs", po.inputs, "report.json paths")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (imp->parsed()) return cmd_import(io);
    if (ext->parsed()) return cmd_extract(eo);
    if (trn->parsed()) return cmd_train(to);
    if (run->parsed()) return cmd_run(ro);
    if (evl->parsed()) return cmd_eval(vo);
    if (rep->parsed()) return cmd_report(po);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
