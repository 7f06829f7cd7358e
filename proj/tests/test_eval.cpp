#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "d2t/corpus.hpp"
#include "d2t/eval.hpp"
#include "d2t/strings.hpp"

using namespace d2t;
using V = std::vector<std::string>;

namespace {

TokenSeq toks(const std::string& s) { return tokenize(s); }

// Independent reference implementation: explicit n-gram lists, no shared
// counting code with the library.
double bleu_oracle(const std::vector<TokenSeq>& hyps,
                   const std::vector<GoldSet>& refs) {
  auto grams = [](const TokenSeq& t, int n) {
    std::vector<TokenSeq> out;
    for (int i = 0; i + n <= static_cast<int>(t.size()); ++i)
      out.emplace_back(t.begin() + i, t.begin() + i + n);
    return out;
  };
  double matched[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  long hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hyps.size(); ++i) {
    TokenSeq hyp = lower(hyps[i]);
    std::vector<TokenSeq> rr;
    for (const TokenSeq& r : refs[i]) rr.push_back(lower(r));
    hyp_len += static_cast<long>(hyp.size());
    long best = static_cast<long>(rr[0].size());
    for (const TokenSeq& r : rr) {
      long len = static_cast<long>(r.size()), h = static_cast<long>(hyp.size());
      long d = len > h ? len - h : h - len;
      long bd = best > h ? best - h : h - best;
      if (d < bd || (d == bd && len < best)) best = len;
    }
    ref_len += best;
    for (int n = 1; n <= 4; ++n) {
      std::vector<TokenSeq> hg = grams(hyp, n);
      std::vector<TokenSeq> done;
      for (const TokenSeq& g : hg) {
        if (std::find(done.begin(), done.end(), g) != done.end()) continue;
        done.push_back(g);
        long in_hyp = std::count(hg.begin(), hg.end(), g);
        long best_ref = 0;
        for (const TokenSeq& r : rr) {
          std::vector<TokenSeq> rg = grams(r, n);
          best_ref = std::max<long>(best_ref, std::count(rg.begin(), rg.end(), g));
        }
        matched[n - 1] += static_cast<double>(std::min(in_hyp, best_ref));
      }
      total[n - 1] += static_cast<double>(hg.size());
    }
  }
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  if (hyp_len == 0) return 0.0;
  double bp = hyp_len < ref_len
                  ? std::exp(1.0 - static_cast<double>(ref_len) / hyp_len)
                  : 1.0;
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

// Ten hand instances with varied overlap, reference counts, and lengths.
void hand_instances(std::vector<TokenSeq>& hyps, std::vector<GoldSet>& refs) {
  auto add = [&](const std::string& h, std::initializer_list<std::string> rs) {
    hyps.push_back(toks(h));
    GoldSet g;
    for (const std::string& r : rs) g.push_back(toks(r));
    refs.push_back(g);
  };
  add("massimo drago played for the club potenza calcio .",
      {"massimo drago played for the club potenza calcio .",
       "massimo drago was a player of potenza calcio ."});
  add("he is managing ac cesena .", {"he currently manages ac cesena ."});
  add("ajoblanco comes from spain .",
      {"ajoblanco is a dish from spain .", "ajoblanco originates in spain ."});
  add("buzz aldrin was born in glen ridge new jersey .",
      {"buzz aldrin was born in glen ridge , new jersey ."});
  add("the leader of spain is felipe .", {"felipe leads spain .", "spain "
       "is led by felipe ."});
  add("a b c d e f", {"a b c d", "b c d e f g h"});
  add("one two three four five", {"one two three four five"});
  add("x y z w", {"totally different tokens here"});
  add("repeat repeat repeat repeat", {"repeat repeat other words", "repeat x y z"});
  add("calcio catania plays in serie c .",
      {"calcio catania competes in the serie c league .",
       "calcio catania plays in serie c ."});
}

}  // namespace

TEST_CASE("accuracy is uncased match-any") {
  std::vector<TokenSeq> preds = {toks("He is Here"), toks("wrong answer")};
  std::vector<GoldSet> golds = {{toks("he is here"), toks("other")},
                                {toks("right answer")}};
  CHECK(accuracy(preds, golds) == doctest::Approx(0.5));
  CHECK(accuracy({toks("a")}, {{toks("A")}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(accuracy({toks("a")}, {}), CorpusError);
  CHECK_THROWS_AS(accuracy({}, {}), CorpusError);
  CHECK_THROWS_AS(accuracy({toks("a")}, {GoldSet{}}), CorpusError);
}

TEST_CASE("bleu of a corpus against itself is 100") {
  std::vector<TokenSeq> hyps;
  std::vector<GoldSet> refs;
  hand_instances(hyps, refs);
  std::vector<GoldSet> self;
  for (const TokenSeq& h : hyps) self.push_back({h});
  CHECK(corpus_bleu(hyps, self) == doctest::Approx(100.0));
}

TEST_CASE("bleu matches a brute-force oracle on hand instances") {
  std::vector<TokenSeq> hyps;
  std::vector<GoldSet> refs;
  hand_instances(hyps, refs);
  REQUIRE(hyps.size() == 10);
  CHECK(corpus_bleu(hyps, refs) == doctest::Approx(bleu_oracle(hyps, refs)));
  // Also per-instance, where clipping and BP behave differently.
  for (size_t i = 0; i < hyps.size(); ++i) {
    std::vector<TokenSeq> h = {hyps[i]};
    std::vector<GoldSet> r = {refs[i]};
    INFO("instance ", i);
    CHECK(corpus_bleu(h, r) == doctest::Approx(bleu_oracle(h, r)));
  }
}

TEST_CASE("bleu is invariant under instance permutation") {
  std::vector<TokenSeq> hyps;
  std::vector<GoldSet> refs;
  hand_instances(hyps, refs);
  double base = corpus_bleu(hyps, refs);
  std::vector<size_t> idx(hyps.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = idx.size() - 1 - i;
  std::vector<TokenSeq> ph;
  std::vector<GoldSet> pr;
  for (size_t i : idx) {
    ph.push_back(hyps[i]);
    pr.push_back(refs[i]);
  }
  CHECK(corpus_bleu(ph, pr) == doctest::Approx(base));
}

TEST_CASE("adding a reference never lowers bleu") {
  std::vector<TokenSeq> hyps;
  std::vector<GoldSet> refs;
  hand_instances(hyps, refs);
  double base = corpus_bleu(hyps, refs);
  for (size_t i = 0; i < hyps.size(); ++i) {
    std::vector<GoldSet> widened = refs;
    widened[i].push_back(hyps[i]);  // a perfect extra reference
    CHECK(corpus_bleu(hyps, widened) >= base - 1e-9);
  }
}

TEST_CASE("brevity penalty uses the closest reference, ties to shorter") {
  // Hypothesis matches the first half of an 8-token reference.
  TokenSeq ref8 = toks("a b c d e f g h");
  TokenSeq hyp4 = toks("a b c d");
  double penalized = corpus_bleu({hyp4}, {{ref8}});
  CHECK(penalized == doctest::Approx(100.0 * std::exp(1.0 - 8.0 / 4.0)));

  // Lengths 4 and 6 are equally distant from 5: the shorter one wins,
  // so no penalty applies.
  TokenSeq hyp5 = toks("a b c d e");
  TokenSeq ref6 = toks("a b c d e f");
  TokenSeq ref4 = toks("a b c d");
  CHECK(corpus_bleu({hyp5}, {{ref4, ref6}}) == doctest::Approx(100.0));
}

TEST_CASE("bleu returns zero when any order has no match") {
  CHECK(corpus_bleu({toks("a b c d")}, {{toks("x y z w")}}) == doctest::Approx(0.0));
  // Shorter than 4 tokens: no 4-grams at all.
  CHECK(corpus_bleu({toks("a b c")}, {{toks("a b c")}}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(corpus_bleu({}, {}), CorpusError);
  CHECK_THROWS_AS(corpus_bleu({toks("a")}, {}), CorpusError);
  CHECK_THROWS_AS(corpus_bleu({toks("a")}, {GoldSet{}}), CorpusError);
}

TEST_CASE("reports bucket by seen flag and domain") {
  std::vector<TokenSeq> preds = {toks("a"), toks("b"), toks("c")};
  std::vector<GoldSet> golds = {{toks("a")}, {toks("x")}, {toks("c")}};
  std::vector<std::string> domains = {"Food", "Food", "Astronaut"};
  std::vector<bool> seen = {true, true, false};

  EvalReport r = accuracy_report(preds, golds, domains, seen);
  CHECK(r.metric == "accuracy");
  CHECK(r.all.count == 3);
  CHECK(r.all.score == doctest::Approx(2.0 / 3.0));
  CHECK(r.seen.count == 2);
  CHECK(r.seen.score == doctest::Approx(0.5));
  CHECK(r.unseen.count == 1);
  CHECK(r.unseen.score == doctest::Approx(1.0));
  CHECK(r.per_domain.at("Food").count == 2);
  CHECK(r.per_domain.at("Astronaut").score == doctest::Approx(1.0));

  EvalReport all_seen = accuracy_report({toks("a")}, {{toks("a")}}, {"Food"}, {true});
  CHECK(all_seen.unseen.valid == false);
  CHECK(all_seen.unseen.count == 0);

  CHECK_THROWS_AS(accuracy_report(preds, golds, {"Food"}, seen), CorpusError);
}

TEST_CASE("report table prints an n/a meteor column") {
  EvalReport r = accuracy_report({toks("a")}, {{toks("a")}}, {"Food"}, {true});
  std::string table = format_report(r);
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  CHECK(line.find("meteor") != std::string::npos);
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(ends_with(line, "n/a"));
  }
  CHECK(rows == 3);
  CHECK(table.find("1.0000") != std::string::npos);

  std::string with_domains = format_report(r, true);
  CHECK(with_domains.find("Food") != std::string::npos);

  std::ostringstream os;
  print_report(r, os);
  CHECK(os.str() == table);
}

TEST_CASE("bleu formats with two decimals in reports") {
  std::vector<TokenSeq> hyps = {toks("a b c d e")};
  std::vector<GoldSet> refs = {{toks("a b c d e")}};
  EvalReport r = bleu_report(hyps, refs, {"Food"}, {true});
  CHECK(r.metric == "bleu");
  CHECK(format_report(r).find("100.00") != std::string::npos);
}
