#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d2t/engines.hpp"
#include "d2t/nn/neuralreg.hpp"
#include "d2t/realization.hpp"
#include "d2t/reg.hpp"
#include "d2t/types.hpp"

namespace d2t {

enum class Engine { Random, Majority, Neural };
enum class RegPolicy { OnlyNames, Neural };

Engine parse_engine(const std::string& name);
std::string engine_name(Engine e);
RegPolicy parse_reg_policy(const std::string& name);
std::string reg_policy_name(RegPolicy p);

// Non-owning handles to whatever the chosen engines need.
struct PipelineModels {
  const OrderModel* order_majority = nullptr;
  const StructModel* struct_majority = nullptr;
  const TemplateStore* templates = nullptr;  // lexicalization store + neural fallback
  const RuleTable* rules = nullptr;
  const nn::Seq2SeqModel* order_model = nullptr;
  const nn::Seq2SeqModel* struct_model = nullptr;
  const nn::Seq2SeqModel* lex_model = nullptr;
  const nn::RegModel* reg_model = nullptr;
};

struct PipelineConfig {
  Engine ordering = Engine::Majority;
  Engine structuring = Engine::Majority;
  Engine lexicalization = Engine::Majority;
  RegPolicy reg = RegPolicy::OnlyNames;
  uint64_t seed = 13;
  int beam = 5;
  int max_decode_len = 100;
  // Stages up to this point take their output from gold annotations instead
  // of an engine: 1 ordering, 2 structuring, 3 template, 4 references.
  int oracle_upto = 0;
};

// Gold layers for oracle mode; only the stages covered by oracle_upto need to
// be present.
struct GoldAnnotations {
  std::optional<std::vector<Triple>> ordered;
  std::optional<Partition> breaks;
  std::optional<Template> tmpl;
  std::optional<std::vector<ReferenceSlot>> references;
};

struct PipelineTrace {
  std::vector<Triple> ordered;
  Partition breaks;
  Template tmpl;
  BoundTemplate bound;
  ReferencedTemplate referenced;
  std::vector<RegSlotTrace> reg_slots;
  std::string text;
  bool order_repaired = false;
  bool struct_fell_back = false;
  bool lex_fell_back = false;       // neural decode rejected
  bool lex_bind_failed = false;     // tag out of range, majority re-lookup
  int lex_fallback_sentences = 0;   // synthetic clauses from the store lookup
  int realize_dropped_tags = 0;
};

// Five stages chained with documented fallbacks; always returns text.
std::string run_pipeline(const TripleSet& ts, const PipelineConfig& cfg,
                         const PipelineModels& models, PipelineTrace* trace = nullptr,
                         const GoldAnnotations* gold = nullptr);

struct E2EResult {
  std::string text;
  bool empty_decode = false;
};

// Single-model mode: linearized set in, text out, no intermediate stages.
E2EResult run_e2e(const TripleSet& ts, const nn::Seq2SeqModel& m, int beam = 5,
                  int max_len = 100);

}  // namespace d2t
