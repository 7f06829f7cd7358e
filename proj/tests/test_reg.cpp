#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "d2t/reg.hpp"
#include "d2t/strings.hpp"
#include "d2t/template.hpp"

using namespace d2t;
using V = std::vector<std::string>;

namespace {

BoundTemplate bio_bound() {
  Template t = template_parse(
      "ENTITY-1 VP[tense=past,voice=passive] bear on ENTITY-2 in ENTITY-3 . "
      "ENTITY-1 VP[tense=present] be retired .");
  std::vector<Triple> ordered = {
      {"Buzz_Aldrin", "birthDate", "1930-01-20"},
      {"Buzz_Aldrin", "birthPlace", "Glen_Ridge,_New_Jersey"},
  };
  return bind_entities(t, ordered);
}

bool has_entity_token(const ReferencedTemplate& rt) {
  for (const auto& tok : rt.tokens)
    if (tok.kind == TemplateToken::Kind::Entity) return true;
  return false;
}

}  // namespace

TEST_CASE("only_names strips quotes and underscores") {
  CHECK(only_names("Massimo_Drago") == "Massimo Drago");
  CHECK(only_names("\"Ajoblanco\"") == "Ajoblanco");
  CHECK(only_names("'single'") == "single");
  CHECK(only_names("Glen_Ridge,_New_Jersey") == "Glen Ridge, New Jersey");
  CHECK(only_names_tokens("Glen_Ridge,_New_Jersey") ==
        V{"Glen", "Ridge", ",", "New", "Jersey"});
  CHECK(only_names_tokens("A.C._Cesena") == V{"A.C.", "Cesena"});
}

TEST_CASE("realize_literal formats ISO dates") {
  CHECK(realize_literal("1930-01-20") == "January 20, 1930");
  CHECK(realize_literal("\"1923-12-05\"") == "December 5, 1923");
  CHECK(realize_literal("2000-06-30") == "June 30, 2000");
  CHECK_FALSE(realize_literal("2000-13-01").has_value());
  CHECK_FALSE(realize_literal("2000-00-10").has_value());
  CHECK_FALSE(realize_literal("193-01-20").has_value());
}

TEST_CASE("realize_literal passes numbers through and rejects names") {
  CHECK(realize_literal("1923") == "1923");
  CHECK(realize_literal("8.5") == "8.5");
  CHECK(realize_literal("-4") == "-4");
  CHECK(realize_literal("+2.50") == "+2.50");
  CHECK(realize_literal("\"120\"") == "120");
  CHECK_FALSE(realize_literal("Spain").has_value());
  CHECK_FALSE(realize_literal("Route_66").has_value());
  CHECK_FALSE(realize_literal("1.2.3").has_value());
  CHECK_FALSE(realize_literal("").has_value());
}

TEST_CASE("reg_resolve applies the literal rule before any generator") {
  int calls = 0;
  RegGenerator gen = [&](const V&, const V&, const std::string&) -> V {
    ++calls;
    return {"GEN"};
  };
  std::vector<RegSlotTrace> trace;
  ReferencedTemplate rt =
      reg_resolve(bio_bound(), gen, {"1930-01-20", "Buzz_Aldrin"}, &trace);
  REQUIRE(trace.size() == 4);
  CHECK(trace[1].entity == "1930-01-20");
  CHECK(trace[1].policy == SlotPolicy::Literal);
  CHECK(trace[1].tokens == V{"January", "20", ",", "1930"});
  CHECK(calls == 2);  // both Buzz_Aldrin slots, never the literal or unseen one
  CHECK_FALSE(has_entity_token(rt));
}

TEST_CASE("reg_resolve hands the generator recomputed contexts") {
  std::vector<V> pres;
  RegGenerator gen = [&](const V& pre, const V&, const std::string& entity) -> V {
    pres.push_back(pre);
    return entity == "Buzz_Aldrin" && !pre.empty() ? V{"He"} : V{"Buzz", "Aldrin"};
  };
  std::vector<RegSlotTrace> trace;
  reg_resolve(bio_bound(), gen, {"Buzz_Aldrin"}, &trace);
  REQUIRE(pres.size() == 2);
  CHECK(pres[0].empty());
  // The second slot's pre-context contains the realized earlier slots.
  CHECK(std::count(pres[1].begin(), pres[1].end(), "buzz") == 1);
  CHECK(std::count(pres[1].begin(), pres[1].end(), "january") == 1);
  CHECK(std::count(pres[1].begin(), pres[1].end(), "glen") == 1);
  CHECK(trace[3].tokens == V{"He"});
  CHECK(trace[3].policy == SlotPolicy::Neural);
}

TEST_CASE("unseen entities and failing generators fall back to only_names") {
  RegGenerator throwing = [](const V&, const V&, const std::string&) -> V {
    throw std::runtime_error("no model");
  };
  std::vector<RegSlotTrace> trace;
  reg_resolve(bio_bound(), throwing, {"Buzz_Aldrin"}, &trace);
  CHECK(trace[0].policy == SlotPolicy::OnlyNames);
  CHECK(trace[0].tokens == V{"Buzz", "Aldrin"});
  CHECK(trace[2].policy == SlotPolicy::OnlyNames);
  CHECK(trace[2].tokens == V{"Glen", "Ridge", ",", "New", "Jersey"});

  RegGenerator empty_gen = [](const V&, const V&, const std::string&) -> V {
    return {};
  };
  reg_resolve(bio_bound(), empty_gen, {"Buzz_Aldrin"}, &trace);
  CHECK(trace[0].policy == SlotPolicy::OnlyNames);

  // No generator at all: every non-literal slot uses only_names.
  reg_resolve(bio_bound(), nullptr, {"Buzz_Aldrin"}, &trace);
  CHECK(trace[0].policy == SlotPolicy::OnlyNames);
  CHECK(trace[1].policy == SlotPolicy::Literal);
}

TEST_CASE("reg_resolve splices tokens in place of the slots") {
  RegGenerator gen;
  ReferencedTemplate rt = reg_resolve(bio_bound(), gen, {});
  std::string flat;
  for (const auto& tok : rt.tokens)
    if (tok.kind == TemplateToken::Kind::Word) flat += tok.word + " ";
  CHECK(flat.find("Buzz Aldrin") != std::string::npos);
  CHECK(flat.find("January 20 , 1930") != std::string::npos);
  CHECK(flat.find("Glen Ridge , New Jersey") != std::string::npos);
}

TEST_CASE("reference_entities collects training targets") {
  RegDataset ds;
  ReferenceInstance a;
  a.entity = "Buzz_Aldrin";
  ReferenceInstance b;
  b.entity = "Spain";
  ds.instances = {a, b, a};
  CHECK(reference_entities(ds) == std::set<std::string>{"Buzz_Aldrin", "Spain"});
  CHECK(reference_entities(RegDataset{}).empty());
}
