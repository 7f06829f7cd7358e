#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "d2t/bpe.hpp"
#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

using namespace d2t;
namespace fs = std::filesystem;
using V = std::vector<std::string>;
using MergeList = std::vector<std::pair<std::string, std::string>>;

namespace {

const fs::path kRoot = D2T_SOURCE_DIR;

}

TEST_CASE("two merges on a three-word line follow pair frequency") {
  BPEModel m = bpe_train({{"low", "low", "lower"}}, 2, 1);
  CHECK(m.merges == MergeList{{"l", "o"}, {"lo", "w"}});
  CHECK(m.merge_target == 2);
  CHECK(m.threshold == 1);
  CHECK(bpe_encode(m, {"lower"}) == V{"low@@", "e@@", "r"});
  CHECK(bpe_encode(m, {"low"}) == V{"low"});
  CHECK(bpe_encode(m, {"slow"}) == V{"s@@", "low"});
  CHECK(bpe_decode(m, {"low@@", "e@@", "r"}) == V{"lower"});
}

TEST_CASE("training stops at the threshold") {
  BPEModel rare = bpe_train({{"ab"}}, 10, 2);
  CHECK(rare.empty());
  BPEModel ok = bpe_train({{"ab", "ab"}}, 10, 2);
  CHECK(ok.merges == MergeList{{"a", "b"}});
}

TEST_CASE("training stops at the merge budget") {
  BPEModel m = bpe_train({{"abcd", "abcd"}}, 1, 1);
  CHECK(m.merges.size() == 1);
}

TEST_CASE("degenerate training inputs are rejected") {
  CHECK_THROWS_AS(bpe_train({{"a"}}, 0, 1), CorpusError);
  CHECK_THROWS_AS(bpe_train({}, 5, 1), CorpusError);
  CHECK_THROWS_AS(bpe_train({{}}, 5, 1), CorpusError);
}

TEST_CASE("utf8_split keeps multibyte code points whole") {
  CHECK(utf8_split("cafe\xcc\x81") == V{"c", "a", "f", "e", "\xcc\x81"});
  CHECK(utf8_split("\xe6\x97\xa5\xe6\x9c\xac") == V{"\xe6\x97\xa5", "\xe6\x9c\xac"});
  CHECK(utf8_split("ab") == V{"a", "b"});
  // A truncated multibyte sequence degrades to single bytes.
  CHECK(utf8_split("\xe6\x97").size() == 2);
}

TEST_CASE("decode inverts encode on adversarial tokens") {
  BPEModel m = bpe_train({{"low", "lower", "newest", "widest"}}, 10, 1);
  for (const V& line : {
           V{"low", "lower", "lowest"},
           V{"unseen", "tokens", "entirely"},
           V{"caf\xc3\xa9", "na\xc3\xafve"},
           V{"a@@b", "@@", "x"},
           V{"ENTITY-1", "VP[tense=past]", "."},
       }) {
    CHECK(bpe_decode(m, bpe_encode(m, line)) == line);
  }
  CHECK(bpe_decode(m, {}) == V{});
  // A dangling continuation still flushes.
  CHECK(bpe_decode(m, {"ab@@"}) == V{"ab"});
}

TEST_CASE("roundtrip identity holds over every sample corpus target") {
  std::ifstream in(kRoot / "data/sample/sample.jsonl");
  REQUIRE(in.good());
  Corpus c = read_interchange(in, "sample.jsonl");

  std::vector<V> lines;
  for (const Entry& e : c.entries) {
    for (const LexEntry& lex : e.lexes) {
      lines.push_back(lower(tokenize(lex.text)));
      if (lex.tmpl) lines.push_back(uncased_template_tokens(*lex.tmpl));
    }
  }
  REQUIRE(lines.size() > 40);

  BPEModel m = bpe_train(lines, 2000, 5);
  CHECK(!m.empty());
  for (const V& line : lines) CHECK(bpe_decode(m, bpe_encode(m, line)) == line);

  // Encoding is not a no-op: frequent words learn merges, rare ones split.
  bool any_split = false;
  for (const V& line : lines)
    if (bpe_encode(m, line).size() > line.size()) any_split = true;
  CHECK(any_split);
}

TEST_CASE("bpe model survives a save/load roundtrip") {
  BPEModel m = bpe_train({{"low", "low", "lower", "lowest"}}, 5, 1);
  auto path = fs::temp_directory_path() / "d2t_test_bpe.txt";
  save_bpe(m, path);
  BPEModel back = load_bpe(path);
  CHECK(back.merges == m.merges);
  CHECK(back.merge_target == m.merge_target);
  CHECK(back.threshold == m.threshold);
  CHECK(bpe_encode(back, {"lowest"}) == bpe_encode(m, {"lowest"}));
  fs::remove(path);
}
