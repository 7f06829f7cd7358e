#include "d2t/pipeline.hpp"

#include <stdexcept>

#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

namespace d2t {

Engine parse_engine(const std::string& name) {
  if (name == "random") return Engine::Random;
  if (name == "majority") return Engine::Majority;
  if (name == "neural") return Engine::Neural;
  throw std::invalid_argument("unknown engine: " + name);
}

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::Random: return "random";
    case Engine::Majority: return "majority";
    case Engine::Neural: return "neural";
  }
  return "?";
}

RegPolicy parse_reg_policy(const std::string& name) {
  if (name == "onlynames") return RegPolicy::OnlyNames;
  if (name == "neural") return RegPolicy::Neural;
  throw std::invalid_argument("unknown reg policy: " + name);
}

std::string reg_policy_name(RegPolicy p) {
  return p == RegPolicy::OnlyNames ? "onlynames" : "neural";
}

namespace {

const RuleTable& rules_or_empty(const PipelineModels& m) {
  static const RuleTable empty;
  return m.rules ? *m.rules : empty;
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " engine needs its model");
  return *p;
}

// Gold references spliced into the bound template, slot order.
ReferencedTemplate apply_gold_references(const BoundTemplate& bt,
                                         const std::vector<ReferenceSlot>& refs) {
  ReferencedTemplate out;
  size_t slot = 0;
  for (const TemplateToken& tok : bt.tokens) {
    if (tok.kind != TemplateToken::Kind::Entity) {
      out.tokens.push_back(tok);
      continue;
    }
    if (slot < refs.size())
      for (const std::string& w : refs[slot].refex)
        out.tokens.push_back(TemplateToken::make_word(w));
    else
      for (const std::string& w : only_names_tokens(tok.word))
        out.tokens.push_back(TemplateToken::make_word(w));
    ++slot;
  }
  return out;
}

}  // namespace

std::string run_pipeline(const TripleSet& ts, const PipelineConfig& cfg,
                         const PipelineModels& models, PipelineTrace* trace,
                         const GoldAnnotations* gold) {
  PipelineTrace local;
  PipelineTrace& tr = trace ? *trace : local;
  tr = PipelineTrace{};

  if (cfg.oracle_upto >= 1 && gold && gold->ordered) {
    tr.ordered = *gold->ordered;
  } else {
    switch (cfg.ordering) {
      case Engine::Random:
        tr.ordered = order_random(ts, Rng::mix(cfg.seed, 101));
        break;
      case Engine::Majority:
        tr.ordered = order_majority(need(models.order_majority, "ordering"), ts);
        break;
      case Engine::Neural:
        tr.ordered = order_neural(need(models.order_model, "ordering"), ts,
                                  Rng::mix(cfg.seed, 102), cfg.beam, cfg.max_decode_len,
                                  &tr.order_repaired);
        break;
    }
  }

  if (cfg.oracle_upto >= 2 && gold && gold->breaks) {
    tr.breaks = *gold->breaks;
  } else {
    switch (cfg.structuring) {
      case Engine::Random:
        tr.breaks = structure_random(tr.ordered, Rng::mix(cfg.seed, 201));
        break;
      case Engine::Majority:
        tr.breaks = structure_majority(need(models.struct_majority, "structuring"),
                                       tr.ordered);
        break;
      case Engine::Neural:
        tr.breaks = structure_neural(need(models.struct_model, "structuring"),
                                     tr.ordered, cfg.beam, cfg.max_decode_len,
                                     &tr.struct_fell_back);
        break;
    }
  }

  if (cfg.oracle_upto >= 3 && gold && gold->tmpl) {
    tr.tmpl = *gold->tmpl;
  } else {
    switch (cfg.lexicalization) {
      case Engine::Random:
        tr.tmpl = lexicalize_lookup(tr.ordered, tr.breaks,
                                    need(models.templates, "lexicalization"),
                                    LexMode::Random, Rng::mix(cfg.seed, 301),
                                    &tr.lex_fallback_sentences);
        break;
      case Engine::Majority:
        tr.tmpl = lexicalize_lookup(tr.ordered, tr.breaks,
                                    need(models.templates, "lexicalization"),
                                    LexMode::Majority, Rng::mix(cfg.seed, 302),
                                    &tr.lex_fallback_sentences);
        break;
      case Engine::Neural:
        tr.tmpl = lexicalize_neural(need(models.lex_model, "lexicalization"), tr.ordered,
                                    tr.breaks, need(models.templates, "lexicalization"),
                                    cfg.beam, cfg.max_decode_len, &tr.lex_fell_back);
        break;
    }
  }

  try {
    tr.bound = bind_entities(tr.tmpl, tr.ordered);
  } catch (const BindError&) {
    tr.lex_bind_failed = true;
    tr.tmpl = lexicalize_lookup(tr.ordered, tr.breaks,
                                need(models.templates, "lexicalization"),
                                LexMode::Majority, Rng::mix(cfg.seed, 303),
                                &tr.lex_fallback_sentences);
    tr.bound = bind_entities(tr.tmpl, tr.ordered);
  }

  if (cfg.oracle_upto >= 4 && gold && gold->references) {
    tr.referenced = apply_gold_references(tr.bound, *gold->references);
  } else {
    RegGenerator gen;
    std::set<std::string> seen;
    if (cfg.reg == RegPolicy::Neural) {
      const nn::RegModel& rm = need(models.reg_model, "reg");
      seen = rm.known_entities();
      int beam = cfg.beam;
      const nn::RegModel* rmp = &rm;
      gen = [rmp, beam](const std::vector<std::string>& pre,
                        const std::vector<std::string>& post,
                        const std::string& entity) {
        return nn::reg_generate(*rmp, pre, post, entity, beam, 30);
      };
    }
    tr.referenced = reg_resolve(tr.bound, gen, seen, &tr.reg_slots);
  }

  tr.text = realize(tr.referenced, rules_or_empty(models), &tr.realize_dropped_tags);
  return tr.text;
}

E2EResult run_e2e(const TripleSet& ts, const nn::Seq2SeqModel& m, int beam,
                  int max_len) {
  std::vector<std::string> source = canonical_linearize(ts);
  if (!m.bpe.merges.empty()) source = bpe_encode(m.bpe, source);
  auto hyps = nn::beam_decode(m, source, beam, max_len);
  std::vector<std::string> tokens = bpe_decode(m.bpe, hyps.front().tokens);
  E2EResult r;
  r.empty_decode = tokens.empty();
  r.text = detokenize(tokens);
  return r;
}

}  // namespace d2t
