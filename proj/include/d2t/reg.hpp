#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

// Identifier with surrounding quotes stripped and underscores as spaces.
std::string only_names(const std::string& entity);
std::vector<std::string> only_names_tokens(const std::string& entity);

// ISO dates become "Month d, yyyy"; bare integers/decimals pass through.
// Anything else is not a literal.
std::optional<std::string> realize_literal(const std::string& entity);

enum class SlotPolicy { Literal, Neural, OnlyNames };

struct RegSlotTrace {
  std::string entity;
  SlotPolicy policy = SlotPolicy::OnlyNames;
  std::vector<std::string> tokens;
};

// Produces referring-expression tokens for one slot given its contexts.
using RegGenerator = std::function<std::vector<std::string>(
    const std::vector<std::string>& pre, const std::vector<std::string>& post,
    const std::string& entity)>;

// Resolves entity slots left to right: literal rule first, then the generator
// for seen entities, then only_names. Contexts are recomputed after each
// substitution so later slots see earlier realizations.
ReferencedTemplate reg_resolve(const BoundTemplate& bt, const RegGenerator& gen,
                               const std::set<std::string>& seen_entities,
                               std::vector<RegSlotTrace>* trace = nullptr);

// Entities that appear as reference targets in a training split.
std::set<std::string> reference_entities(const RegDataset& train);

}  // namespace d2t
