#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "d2t/realization.hpp"
#include "d2t/template.hpp"

using namespace d2t;
using V = std::vector<std::string>;

namespace {

VerbFeatures feat(const std::string& aspect, const std::string& tense,
                  const std::string& voice, const std::string& person = "null",
                  const std::string& number = "null") {
  return {aspect, tense, voice, person, number};
}

Entry train_entry(const std::string& tmpl, std::vector<ReferenceSlot> refs,
                  const std::string& text, const std::string& split = "train") {
  Entry e;
  e.eid = "t/" + text.substr(0, 8);
  e.split = split;
  e.set.triples = {{"S", "p", "O"}};
  LexEntry lex;
  lex.text = text;
  lex.tmpl = template_parse(tmpl);
  lex.references = std::move(refs);
  e.lexes.push_back(std::move(lex));
  return e;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("third_singular covers the spelling classes") {
  CHECK(third_singular("play") == "plays");
  CHECK(third_singular("manage") == "manages");
  CHECK(third_singular("watch") == "watches");
  CHECK(third_singular("miss") == "misses");
  CHECK(third_singular("go") == "goes");
  CHECK(third_singular("fly") == "flies");
  CHECK(third_singular("stay") == "stays");
  CHECK(third_singular("be") == "is");
  CHECK(third_singular("have") == "has");
  CHECK(third_singular("do") == "does");
}

TEST_CASE("past_form and participle fall back to regular endings") {
  CHECK(past_form("play") == "played");
  CHECK(past_form("manage") == "managed");
  CHECK(past_form("study") == "studied");
  CHECK(past_form("bear") == "bore");
  CHECK(past_form("win") == "won");
  CHECK(past_form("lead") == "led");
  CHECK(past_form("find") == "found");
  CHECK(past_form("fly") == "flew");
  CHECK(participle("bear") == "born");
  CHECK(participle("fly") == "flown");
  CHECK(participle("play") == "played");
  CHECK(participle("be") == "been");
  CHECK(participle("give") == "given");
}

TEST_CASE("progressive handles silent-e and ie stems") {
  CHECK(progressive("manage") == "managing");
  CHECK(progressive("play") == "playing");
  CHECK(progressive("die") == "dying");
  CHECK(progressive("see") == "seeing");
  CHECK(progressive("live") == "living");
}

TEST_CASE("inflect composes auxiliaries by voice, aspect, and tense") {
  CHECK(inflect(feat("simple", "past", "passive"), "bear") == V{"was", "born"});
  CHECK(inflect(feat("simple", "past", "passive", "null", "plural"), "bear") ==
        V{"were", "born"});
  CHECK(inflect(feat("progressive", "present", "active"), "manage") ==
        V{"is", "managing"});
  CHECK(inflect(feat("progressive", "present", "active", "2nd"), "manage") ==
        V{"are", "managing"});
  CHECK(inflect(feat("perfect", "present", "active"), "work") == V{"has", "worked"});
  CHECK(inflect(feat("perfect", "past", "active"), "work") == V{"had", "worked"});
  CHECK(inflect(feat("simple", "future", "active"), "retire") == V{"will", "retire"});
  CHECK(inflect(feat("simple", "past", "active"), "play") == V{"played"});
  CHECK(inflect(feat("simple", "past", "active"), "be") == V{"was"});
  CHECK(inflect(feat("simple", "present", "active", "3rd", "singular"), "play") ==
        V{"plays"});
  CHECK(inflect(feat("simple", "present", "active", "3rd", "plural"), "play") ==
        V{"play"});
  CHECK(inflect(feat("null", "null", "null"), "run") == V{"run"});
  CHECK(inflect(feat("null", "null", "null"), "be") == V{"is"});
}

TEST_CASE("letter_class uses first letters with sound exceptions") {
  CHECK(letter_class("apple") == "vowel");
  CHECK(letter_class("banana") == "consonant");
  CHECK(letter_class("hour") == "vowel");
  CHECK(letter_class("University") == "consonant");
  CHECK(letter_class("one") == "consonant");
  CHECK(letter_class("Indiana") == "vowel");
  CHECK(letter_class("") == "consonant");
}

TEST_CASE("realize inflects tags against the next word and detokenizes") {
  RuleTable empty;
  int dropped = -1;
  Template rt = template_parse(
      "Alan Shepard VP[tense=past,voice=passive] bear in Sparta .");
  CHECK(realize(rt, empty, &dropped) == "Alan Shepard was born in Sparta.");
  CHECK(dropped == 0);

  Template dt = template_parse("He won DT[form=undefined] a award .");
  CHECK(realize(dt, empty) == "He won an award.");
  Template dt2 = template_parse("He won DT[form=undefined] a medal .");
  CHECK(realize(dt2, empty) == "He won a medal.");
  Template dt3 = template_parse("He joined DT[form=defined] a club .");
  CHECK(realize(dt3, empty) == "He joined the club.");
}

TEST_CASE("tags without a following word are dropped and counted") {
  RuleTable empty;
  int dropped = 0;
  Template t = template_parse("It works VP[tense=past]");
  CHECK(realize(t, empty, &dropped) == "It works");
  CHECK(dropped == 1);

  Template t2;
  t2.tokens.push_back(TemplateToken::make_verb(feat("simple", "past", "active")));
  t2.tokens.push_back(TemplateToken::make_entity(1));
  t2.tokens.back().word = "Buzz_Aldrin";
  t2.tokens.push_back(TemplateToken::make_word("."));
  CHECK(realize(t2, empty, &dropped) == "Buzz Aldrin.");
  CHECK(dropped == 1);
}

TEST_CASE("bound entity tokens left in the template realize as names") {
  RuleTable empty;
  Template t;
  t.tokens.push_back(TemplateToken::make_entity(1));
  t.tokens.back().word = "Glen_Ridge,_New_Jersey";
  t.tokens.push_back(TemplateToken::make_word("."));
  CHECK(realize(t, empty) == "Glen Ridge, New Jersey.");
}

TEST_CASE("mined rules beat regular morphology, majority surface wins") {
  RuleTable rules;
  VerbFeatures f = feat("simple", "past", "active");
  rules.verb["play"].push_back(VerbRule{f, {"played"}, 3});
  rules.verb["play"].push_back(VerbRule{f, {"did", "play"}, 1});
  Template t = template_parse("He VP[aspect=simple,tense=past,voice=active] play .");
  CHECK(realize(t, rules) == "He played.");

  // No exact feature match: a compatible rule still applies.
  Template t2 = template_parse(
      "He VP[aspect=simple,tense=past,voice=active,person=3rd] play .");
  CHECK(realize(t2, rules) == "He played.");

  // Unknown lemma: regular morphology.
  Template t3 = template_parse("He VP[tense=past] jump .");
  CHECK(realize(t3, rules) == "He jumped.");
}

TEST_CASE("mined determiner surfaces key on form and letter class") {
  RuleTable rules;
  rules.det["undefined\x1f" "vowel"]["an"] = 5;
  rules.det["defined\x1f" "consonant"]["the"] = 2;
  Template t = template_parse("He is DT[form=undefined] a astronaut .");
  CHECK(realize(t, rules) == "He is an astronaut.");
}

TEST_CASE("rules_extract mines train alignments only") {
  Corpus c;
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[aspect=simple,tense=past,voice=active] play for ENTITY-2 .",
      {{"Rolando_Maran", {"Rolando", "Maran"}}, {"Vicenza_Calcio", {"Vicenza"}}},
      "Rolando Maran played for Vicenza."));
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[aspect=simple,tense=past,voice=active] play for ENTITY-2 .",
      {{"Rolando_Maran", {"He"}}, {"Vicenza_Calcio", {"Vicenza"}}},
      "He played for Vicenza."));
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[tense=past,voice=passive] bear in DT[form=defined] the city of "
      "ENTITY-2 .",
      {{"Buzz_Aldrin", {"Buzz", "Aldrin"}}, {"Glen_Ridge", {"Glen", "Ridge"}}},
      "Buzz Aldrin was born in the city of Glen Ridge."));
  // Unalignable text bumps the skip counter.
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[tense=past] win ENTITY-2 .",
      {{"A", {"A"}}, {"B", {"B"}}}, "Completely unrelated words here."));
  // Dev entries are never mined.
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[tense=past] fly ENTITY-2 .",
      {{"A", {"A"}}, {"B", {"B"}}}, "A flew B.", "dev"));

  RuleTable rt = rules_extract(c);
  CHECK(rt.skipped == 1);
  REQUIRE(rt.verb.count("play") == 1);
  int play_total = 0;
  for (const VerbRule& r : rt.verb.at("play")) {
    CHECK(r.surface == V{"played"});
    play_total += r.count;
  }
  CHECK(play_total == 2);
  REQUIRE(rt.verb.count("bear") == 1);
  CHECK(rt.verb.at("bear")[0].surface == V{"was", "born"});
  CHECK(rt.verb.count("fly") == 0);
  CHECK(rt.det.count("defined\x1f" "consonant") == 1);
  CHECK(rt.det.at("defined\x1f" "consonant").at("the") == 1);
}

TEST_CASE("mined rules reproduce their own training surfaces") {
  Corpus c;
  c.entries.push_back(train_entry(
      "ENTITY-1 VP[aspect=simple,tense=past,voice=active] play for ENTITY-2 .",
      {{"Rolando_Maran", {"Rolando", "Maran"}}, {"Vicenza_Calcio", {"Vicenza"}}},
      "Rolando Maran played for Vicenza."));
  RuleTable rt = rules_extract(c);
  Template t = template_parse(
      "Rolando Maran VP[aspect=simple,tense=past,voice=active] play for Vicenza .");
  CHECK(realize(t, rt) == "Rolando Maran played for Vicenza.");
}

TEST_CASE("rule table survives a save/load roundtrip") {
  RuleTable rt;
  rt.verb["play"].push_back(VerbRule{feat("simple", "past", "active"), {"played"}, 3});
  rt.verb["bear"].push_back(
      VerbRule{feat("simple", "past", "passive"), {"was", "born"}, 7});
  rt.det["undefined\x1f" "vowel"]["an"] = 5;

  auto p1 = std::filesystem::temp_directory_path() / "d2t_test_rules_1.jsonl";
  auto p2 = std::filesystem::temp_directory_path() / "d2t_test_rules_2.jsonl";
  save_rule_table(rt, p1);
  RuleTable back = load_rule_table(p1);
  save_rule_table(back, p2);
  CHECK(file_bytes(p1) == file_bytes(p2));
  CHECK(back.verb.size() == 2);
  CHECK(back.det.size() == 1);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}
