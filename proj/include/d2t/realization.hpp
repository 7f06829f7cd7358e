#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

struct VerbRule {
  VerbFeatures features;
  std::vector<std::string> surface;
  int count = 0;
};

// Surface rules mined from gold template/text alignments. Verb rules are
// grouped by lemma; determiner rules key on (form, letter class of the next
// word). Small built-in irregular tables back the fallbacks.
struct RuleTable {
  std::map<std::string, std::vector<VerbRule>> verb;
  std::map<std::string, std::map<std::string, int>> det;
  int skipped = 0;  // unalignable training verbalizations

  bool empty() const { return verb.empty() && det.empty(); }
};

// Aligns each train-split gold template (entity slots filled with the gold
// referring expressions) against the gold text and counts the surface spans
// covering each VP/DT tag.
RuleTable rules_extract(const Corpus& c);

// "vowel" or "consonant" by first letter, with a sound-exception list
// (hour -> vowel, university/one -> consonant).
std::string letter_class(const std::string& word);

// Inflects VP tags (rules, then regular morphology), chooses determiner
// surfaces, strips any leftover slot defensively, and detokenizes.
// A tag with no following word is dropped and counted in `dropped_tags`.
std::string realize(const ReferencedTemplate& rt, const RuleTable& rules,
                    int* dropped_tags = nullptr);

// Regular morphology helpers (exposed for direct checks).
std::string third_singular(const std::string& lemma);
std::string past_form(const std::string& lemma);
std::string participle(const std::string& lemma);
std::string progressive(const std::string& lemma);
std::vector<std::string> inflect(const VerbFeatures& f, const std::string& lemma);

void save_rule_table(const RuleTable& rt, const std::filesystem::path& path);
RuleTable load_rule_table(const std::filesystem::path& path);

}  // namespace d2t
