#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

using TokenSeq = std::vector<std::string>;
using GoldSet = std::vector<TokenSeq>;

struct BucketScore {
  double score = 0.0;
  int count = 0;
  bool valid = false;  // false when the bucket is empty
};

struct EvalReport {
  std::string metric;  // "accuracy" | "bleu"
  BucketScore all, seen, unseen;
  std::map<std::string, BucketScore> per_domain;
};

// Fraction of predictions exactly matching any member of their gold set,
// uncased. Throws on length mismatch or an empty gold set.
double accuracy(const std::vector<TokenSeq>& preds, const std::vector<GoldSet>& golds);

// Corpus-level multi-reference BLEU (n-grams 1..4, clipped counts, geometric
// mean, brevity penalty against the closest reference length with ties going
// to the shorter). Uncased; no smoothing. Range 0..100.
double corpus_bleu(const std::vector<TokenSeq>& hyps, const std::vector<GoldSet>& refs);

// Per-bucket recomputation of a metric over all / seen / unseen / domain.
EvalReport accuracy_report(const std::vector<TokenSeq>& preds,
                           const std::vector<GoldSet>& golds,
                           const std::vector<std::string>& domains,
                           const std::vector<bool>& seen);
EvalReport bleu_report(const std::vector<TokenSeq>& hyps,
                       const std::vector<GoldSet>& refs,
                       const std::vector<std::string>& domains,
                       const std::vector<bool>& seen);

// Table layout: one row per bucket, metric column plus an n/a METEOR column.
void print_report(const EvalReport& r, std::ostream& os, bool per_domain = false);
std::string format_report(const EvalReport& r, bool per_domain = false);

}  // namespace d2t
