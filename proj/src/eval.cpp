#include "d2t/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <sstream>

#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

namespace d2t {

namespace {

bool match_any(const TokenSeq& pred, const GoldSet& golds) {
  TokenSeq p = lower(pred);
  for (const TokenSeq& g : golds)
    if (p == lower(g)) return true;
  return false;
}

std::map<std::string, int> ngram_counts(const TokenSeq& toks, int n) {
  std::map<std::string, int> out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (size_t i = 0; i + static_cast<size_t>(n) <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      key += toks[i + static_cast<size_t>(k)];
      key += '\x1f';
    }
    ++out[key];
  }
  return out;
}

}  // namespace

double accuracy(const std::vector<TokenSeq>& preds, const std::vector<GoldSet>& golds) {
  if (preds.size() != golds.size())
    throw CorpusError("accuracy: prediction/gold count mismatch");
  if (preds.empty()) throw CorpusError("accuracy: empty input");
  int correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (golds[i].empty()) throw CorpusError("accuracy: empty gold set");
    if (match_any(preds[i], golds[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double corpus_bleu(const std::vector<TokenSeq>& hyps, const std::vector<GoldSet>& refs) {
  if (hyps.size() != refs.size())
    throw CorpusError("bleu: hypothesis/reference count mismatch");
  if (hyps.empty()) throw CorpusError("bleu: empty input");

  double matched[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  long hyp_len = 0;
  long ref_len = 0;

  for (size_t i = 0; i < hyps.size(); ++i) {
    TokenSeq hyp = lower(hyps[i]);
    std::vector<TokenSeq> rr;
    rr.reserve(refs[i].size());
    for (const TokenSeq& r : refs[i]) rr.push_back(lower(r));
    if (rr.empty()) throw CorpusError("bleu: empty reference set");

    hyp_len += static_cast<long>(hyp.size());
    long closest = static_cast<long>(rr[0].size());
    for (const TokenSeq& r : rr) {
      long len = static_cast<long>(r.size());
      long c = static_cast<long>(hyp.size());
      if (std::labs(len - c) < std::labs(closest - c) ||
          (std::labs(len - c) == std::labs(closest - c) && len < closest))
        closest = len;
    }
    ref_len += closest;

    for (int n = 1; n <= 4; ++n) {
      auto hyp_counts = ngram_counts(hyp, n);
      std::map<std::string, int> max_ref;
      for (const TokenSeq& r : rr)
        for (const auto& [g, cnt] : ngram_counts(r, n))
          max_ref[g] = std::max(max_ref[g], cnt);
      for (const auto& [g, cnt] : hyp_counts) {
        auto it = max_ref.find(g);
        matched[n - 1] += std::min(cnt, it == max_ref.end() ? 0 : it->second);
      }
      total[n - 1] += std::max<long>(0, static_cast<long>(hyp.size()) - n + 1);
    }
  }

  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  double bp = 1.0;
  if (hyp_len == 0) return 0.0;
  if (hyp_len < ref_len)
    bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

namespace {

template <typename Metric>
EvalReport build_report(const std::string& name, Metric metric,
                        const std::vector<TokenSeq>& preds,
                        const std::vector<GoldSet>& golds,
                        const std::vector<std::string>& domains,
                        const std::vector<bool>& seen) {
  if (preds.size() != golds.size() || preds.size() != domains.size() ||
      preds.size() != seen.size())
    throw CorpusError("report: input length mismatch");
  EvalReport r;
  r.metric = name;

  auto bucket = [&](auto keep) {
    std::vector<TokenSeq> p;
    std::vector<GoldSet> g;
    for (size_t i = 0; i < preds.size(); ++i) {
      if (!keep(i)) continue;
      p.push_back(preds[i]);
      g.push_back(golds[i]);
    }
    BucketScore b;
    b.count = static_cast<int>(p.size());
    if (!p.empty()) {
      b.score = metric(p, g);
      b.valid = true;
    }
    return b;
  };

  r.all = bucket([](size_t) { return true; });
  r.seen = bucket([&](size_t i) { return seen[i]; });
  r.unseen = bucket([&](size_t i) { return !seen[i]; });
  std::map<std::string, bool> domain_names;
  for (const auto& d : domains) domain_names[d] = true;
  for (const auto& [d, unused] : domain_names)
    r.per_domain[d] = bucket([&](size_t i) { return domains[i] == d; });
  return r;
}

std::string fmt_score(const std::string& metric, const BucketScore& b) {
  if (!b.valid) return "n/a";
  char buf[32];
  if (metric == "bleu")
    std::snprintf(buf, sizeof buf, "%.2f", b.score);
  else
    std::snprintf(buf, sizeof buf, "%.4f", b.score);
  return buf;
}

}  // namespace

EvalReport accuracy_report(const std::vector<TokenSeq>& preds,
                           const std::vector<GoldSet>& golds,
                           const std::vector<std::string>& domains,
                           const std::vector<bool>& seen) {
  return build_report("accuracy", [](const auto& p, const auto& g) { return accuracy(p, g); },
                      preds, golds, domains, seen);
}

EvalReport bleu_report(const std::vector<TokenSeq>& hyps,
                       const std::vector<GoldSet>& refs,
                       const std::vector<std::string>& domains,
                       const std::vector<bool>& seen) {
  return build_report("bleu", [](const auto& h, const auto& r) { return corpus_bleu(h, r); },
                      hyps, refs, domains, seen);
}

std::string format_report(const EvalReport& r, bool per_domain) {
  std::ostringstream os;
  os << "bucket      n       " << r.metric << "      meteor\n";
  auto row = [&](const std::string& name, const BucketScore& b) {
    os << name;
    for (size_t i = name.size(); i < 12; ++i) os << ' ';
    std::string n = std::to_string(b.count);
    os << n;
    for (size_t i = n.size(); i < 8; ++i) os << ' ';
    std::string s = fmt_score(r.metric, b);
    os << s;
    for (size_t i = s.size(); i < 11; ++i) os << ' ';
    os << "n/a\n";
  };
  row("all", r.all);
  row("seen", r.seen);
  row("unseen", r.unseen);
  if (per_domain)
    for (const auto& [d, b] : r.per_domain) row(d, b);
  return os.str();
}

void print_report(const EvalReport& r, std::ostream& os, bool per_domain) {
  os << format_report(r, per_domain);
}

}  // namespace d2t
