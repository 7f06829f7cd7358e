#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

using namespace d2t;
namespace fs = std::filesystem;
using V = std::vector<std::string>;

namespace {

const fs::path kRoot = D2T_SOURCE_DIR;

std::vector<Triple> fig_triples() {
  return {
      {"A.C._Cesena", "manager", "Massimo_Drago"},
      {"Massimo_Drago", "club", "S.S.D._Potenza_Calcio"},
      {"Massimo_Drago", "club", "Calcio_Catania"},
  };
}

Corpus load_sample(ImportStats* stats = nullptr) {
  std::ifstream in(kRoot / "data/sample/sample.jsonl");
  if (!in) throw std::runtime_error("sample corpus missing");
  return read_interchange(in, "sample.jsonl", stats);
}

std::string sorted_interchange(Corpus c) {
  std::sort(c.entries.begin(), c.entries.end(),
            [](const Entry& a, const Entry& b) { return a.eid < b.eid; });
  std::ostringstream os;
  write_interchange(c, os);
  return os.str();
}

const Entry& entry_by_suffix(const Corpus& c, const std::string& suffix) {
  for (const Entry& e : c.entries)
    if (ends_with(e.eid, suffix)) return e;
  throw std::runtime_error("no entry " + suffix);
}

void check_counts(const SplitCounts& sc, int records, int pairs, int sources,
                  int skipped) {
  CHECK(sc.records == records);
  CHECK(sc.distinct_pairs == pairs);
  CHECK(sc.sources == sources);
  CHECK(sc.skipped == skipped);
}

}  // namespace

TEST_CASE("canonical_linearize sorts by predicate, subject, object") {
  TripleSet ts{fig_triples(), "SportsTeam", true};
  V expect = {
      "<TRIPLE>", "Massimo_Drago", "club", "Calcio_Catania", "</TRIPLE>",
      "<TRIPLE>", "Massimo_Drago", "club", "S.S.D._Potenza_Calcio", "</TRIPLE>",
      "<TRIPLE>", "A.C._Cesena", "manager", "Massimo_Drago", "</TRIPLE>",
  };
  CHECK(canonical_linearize(ts) == expect);
}

TEST_CASE("canonical_linearize is invariant under input permutation") {
  TripleSet ts{fig_triples(), "SportsTeam", true};
  V expect = canonical_linearize(ts);
  std::vector<int> idx = {0, 1, 2};
  do {
    TripleSet perm;
    for (int i : idx) perm.triples.push_back(ts.triples[static_cast<size_t>(i)]);
    CHECK(canonical_linearize(perm) == expect);
  } while (std::next_permutation(idx.begin(), idx.end()));
}

TEST_CASE("linearize_ordered respects order and roundtrips") {
  std::vector<Triple> ordered = fig_triples();
  V tokens = linearize_ordered(ordered);
  REQUIRE(tokens.size() == 15);
  CHECK(tokens[0] == kTripleOpen);
  CHECK(tokens[1] == "A.C._Cesena");
  CHECK(parse_linearized(tokens) == ordered);
}

TEST_CASE("linearize_structured wraps sentences and roundtrips") {
  std::vector<Triple> ordered = fig_triples();
  Partition breaks = {{0, 2}, {2, 3}};
  V tokens = linearize_structured(ordered, breaks);
  CHECK(tokens.front() == kSentenceOpen);
  CHECK(std::count(tokens.begin(), tokens.end(), kSentenceOpen) == 2);
  auto [t2, b2] = parse_structured(tokens);
  CHECK(t2 == ordered);
  CHECK(b2 == breaks);
}

TEST_CASE("de-linearizers reject malformed sequences") {
  CHECK_THROWS_AS(parse_linearized({}), CorpusError);
  CHECK_THROWS_AS(parse_linearized({"<TRIPLE>", "a", "b", "c"}), CorpusError);
  CHECK_THROWS_AS(parse_linearized({"a", "b", "c", "d", "e"}), CorpusError);
  CHECK_THROWS_AS(parse_structured({"<TRIPLE>", "a", "b", "c", "</TRIPLE>"}),
                  CorpusError);
  CHECK_THROWS_AS(parse_structured({"<SNT>", "</SNT>"}), CorpusError);
  CHECK_THROWS_AS(parse_structured(V{"<SNT>"}), CorpusError);
}

TEST_CASE("validate_partition accepts contiguous covers only") {
  CHECK_NOTHROW(validate_partition({{0, 2}, {2, 3}}, 3));
  CHECK_NOTHROW(validate_partition({{0, 1}}, 1));
  CHECK_NOTHROW(validate_partition({}, 0));
  CHECK_THROWS_AS(validate_partition({{0, 1}, {2, 3}}, 3), CorpusError);
  CHECK_THROWS_AS(validate_partition({{0, 2}, {1, 3}}, 3), CorpusError);
  CHECK_THROWS_AS(validate_partition({{0, 2}}, 3), CorpusError);
  CHECK_THROWS_AS(validate_partition({{1, 3}}, 3), CorpusError);
  CHECK_THROWS_AS(validate_partition({{0, 0}, {0, 2}}, 2), CorpusError);
  CHECK_THROWS_AS(validate_partition({}, 1), CorpusError);
}

TEST_CASE("sample corpus loads with the expected layer statistics") {
  ImportStats st;
  Corpus c = load_sample(&st);
  CHECK(st.entries == 20);
  CHECK(st.lexes == 30);
  CHECK(st.lexes_skipped == 0);
  CHECK(st.missing_order == 0);
  CHECK(st.missing_breaks == 0);
  CHECK(st.missing_template == 1);
  CHECK(st.missing_references == 1);

  int train = 0, dev = 0, test = 0, unseen = 0;
  for (const Entry& e : c.entries) {
    if (e.split == "train") ++train;
    if (e.split == "dev") ++dev;
    if (e.split == "test") ++test;
    if (!e.set.seen) ++unseen;
  }
  CHECK(train == 10);
  CHECK(dev == 4);
  CHECK(test == 6);
  CHECK(unseen == 2);
  for (const Entry& e : c.entries)
    CHECK(e.set.seen == (e.set.domain != "Astronaut"));
}

TEST_CASE("xml import matches the interchange corpus") {
  ImportStats xst;
  Corpus xml = import_webnlg(kRoot / "data/sample/xml", CorpusFormat::Xml, &xst);
  CHECK(xst.entries == 20);
  CHECK(xst.lexes == 30);
  CHECK(xst.missing_template == 1);
  CHECK(xst.missing_references == 1);
  CHECK(sorted_interchange(xml) == sorted_interchange(load_sample()));
}

TEST_CASE("interchange write then read is the identity") {
  Corpus c = load_sample();
  std::stringstream buf;
  write_interchange(c, buf);
  Corpus back = read_interchange(buf, "roundtrip");
  CHECK(sorted_interchange(back) == sorted_interchange(c));
}

TEST_CASE("read_interchange rejects broken records") {
  auto parse = [](const std::string& line) {
    std::istringstream is(line);
    return read_interchange(is, "bad");
  };
  CHECK_THROWS_AS(parse("{not json"), CorpusError);
  CHECK_THROWS_AS(parse(R"({"eid":"x","domain":"D","split":"train","triples":[],)"
                        R"("lexes":[{"text":"t"}]})"),
                  CorpusError);
  CHECK_THROWS_AS(parse(R"({"eid":"x","domain":"D","split":"train",)"
                        R"("triples":[["s","p","o"]],"lexes":[{"text":"  "}]})"),
                  CorpusError);
}

TEST_CASE("ordering extraction keeps all verbalizations and groups eval splits") {
  Corpus c = load_sample();
  TaskSplits s = extract_task_dataset(c, Task::Ordering);
  check_counts(s.stats.train, 16, 13, 10, 0);
  check_counts(s.stats.dev, 6, 5, 4, 0);
  check_counts(s.stats.test, 8, 7, 6, 0);
  CHECK(s.train.instances.size() == 16);
  CHECK(s.dev.instances.size() == 4);
  CHECK(s.test.instances.size() == 6);
  for (const DatasetInstance& di : s.train.instances) {
    CHECK(di.targets.size() == 1);
    CHECK(di.size >= 1);
  }

  const Entry& id12 = entry_by_suffix(c, "Id12");
  V source = canonical_linearize(id12.set);
  for (const DatasetInstance& di : s.dev.instances) {
    if (di.source != source) continue;
    REQUIRE(di.targets.size() == 2);
    CHECK(di.targets[0] == V{"country", "mainIngredient"});
    CHECK(di.targets[1] == V{"mainIngredient", "country"});
    CHECK(di.domain == "Food");
    CHECK(di.seen);
    CHECK(di.size == 2);
  }

  const Entry& id11 = entry_by_suffix(c, "Id11");
  V source11 = canonical_linearize(id11.set);
  for (const DatasetInstance& di : s.dev.instances)
    if (di.source == source11) CHECK(di.targets.size() == 1);
}

TEST_CASE("structuring extraction groups by entry and order") {
  Corpus c = load_sample();
  TaskSplits s = extract_task_dataset(c, Task::Structuring);
  check_counts(s.stats.train, 16, 14, 13, 0);
  check_counts(s.stats.dev, 6, 5, 5, 0);
  check_counts(s.stats.test, 8, 7, 7, 0);
  CHECK(s.train.instances.size() == 16);
  CHECK(s.dev.instances.size() == 5);
  CHECK(s.test.instances.size() == 7);

  const Entry& id17 = entry_by_suffix(c, "Id17");
  V source = linearize_ordered(id17.ordered_triples(id17.lexes[0]));
  int hits = 0;
  for (const DatasetInstance& di : s.test.instances) {
    if (di.source != source) continue;
    ++hits;
    CHECK(di.targets == std::vector<V>{{"<SNT>", "league", "</SNT>"}});
  }
  CHECK(hits == 1);
}

TEST_CASE("lexicalization extraction skips template-less verbalizations") {
  Corpus c = load_sample();
  TaskSplits s = extract_task_dataset(c, Task::Lexicalization);
  check_counts(s.stats.train, 15, 15, 14, 1);
  check_counts(s.stats.dev, 6, 6, 5, 0);
  check_counts(s.stats.test, 8, 8, 7, 0);
  CHECK(s.train.instances.size() == 15);
  CHECK(s.dev.instances.size() == 5);
  CHECK(s.test.instances.size() == 7);
  for (const DatasetInstance& di : s.train.instances) {
    CHECK(di.source.front() == kSentenceOpen);
    for (const V& tgt : di.targets)
      for (const std::string& tok : tgt) {
        bool tag = starts_with(tok, "ENTITY-") || starts_with(tok, "VP[") ||
                   starts_with(tok, "DT[");
        if (!tag) CHECK(tok == lower(tok));
      }
  }
}

TEST_CASE("end-to-end extraction needs only text") {
  Corpus c = load_sample();
  TaskSplits s = extract_task_dataset(c, Task::EndToEnd);
  check_counts(s.stats.train, 16, 16, 10, 0);
  check_counts(s.stats.dev, 6, 6, 4, 0);
  check_counts(s.stats.test, 8, 8, 6, 0);
  CHECK(s.train.instances.size() == 16);
  CHECK(s.dev.instances.size() == 4);
  CHECK(s.test.instances.size() == 6);
  CHECK_THROWS_AS(extract_task_dataset(c, Task::Reg), CorpusError);
}

TEST_CASE("structuring_target tags predicate runs") {
  std::vector<Triple> ordered = fig_triples();
  CHECK(structuring_target(ordered, {{0, 2}, {2, 3}}) ==
        V{"<SNT>", "manager", "club", "</SNT>", "<SNT>", "club", "</SNT>"});
}

TEST_CASE("uncased_template_tokens lowers words but not tags") {
  Template t = template_parse("ENTITY-1 VP[tense=past] Bought DT[form=defined] The X .");
  CHECK(uncased_template_tokens(t) ==
        V{"ENTITY-1", "VP[aspect=null,tense=past,voice=null,person=null,number=null]",
          "bought", "DT[form=defined]", "the", "x", "."});
}

TEST_CASE("reg extraction emits one instance per reference slot") {
  Corpus c = load_sample();
  RegSplits s = extract_reg_dataset(c);
  check_counts(s.stats.train, 61, 61, 61, 1);
  check_counts(s.stats.dev, 24, 24, 24, 0);
  check_counts(s.stats.test, 34, 34, 34, 0);
  CHECK(s.train.instances.size() == 61);
  CHECK(s.dev.instances.size() == 24);
  CHECK(s.test.instances.size() == 34);

  // Id1 is the first train entry; its first verbalization has six slots.
  const ReferenceInstance& first = s.train.instances[0];
  CHECK(first.entity == "Massimo_Drago");
  CHECK(first.refex == V{"Massimo", "Drago"});
  CHECK(first.pre_context.empty());
  REQUIRE(!first.post_context.empty());
  CHECK(first.post_context[1] == "play");
  CHECK(first.domain == "SportsTeam");
  CHECK(first.seen);
  CHECK(first.size == 3);

  // Third slot of the same verbalization: earlier slots realized, later raw.
  const ReferenceInstance& third = s.train.instances[2];
  CHECK(third.entity == "Massimo_Drago");
  CHECK(third.refex == V{"his"});
  REQUIRE(third.pre_context.size() >= 4);
  CHECK(V(third.pre_context.end() - 4, third.pre_context.end()) ==
        V{"ssd", "potenza", "calcio", "and"});
  CHECK(std::count(third.post_context.begin(), third.post_context.end(),
                   "calcio_catania") == 1);
  CHECK(std::count(third.post_context.begin(), third.post_context.end(),
                   "a.c._cesena") == 1);
}

TEST_CASE("slot_contexts splits around the slot with raw later entities") {
  Template t = template_parse("ENTITY-1 VP[tense=past] like ENTITY-2 .");
  BoundTemplate bt = bind_entities(
      t, {{"Alan_Shepard", "likes", "Glen_Ridge,_New_Jersey"}});
  auto [pre0, post0] = slot_contexts(bt, 0, {});
  CHECK(pre0 == V{});
  CHECK(post0 == V{"vp[aspect=null,tense=past,voice=null,person=null,number=null]",
                   "like", "glen_ridge,_new_jersey", "."});
  auto [pre1, post1] = slot_contexts(bt, 1, {{"Alan", "Shepard"}});
  CHECK(pre1 == V{"alan", "shepard",
                  "vp[aspect=null,tense=past,voice=null,person=null,number=null]",
                  "like"});
  CHECK(post1 == V{"."});
}
