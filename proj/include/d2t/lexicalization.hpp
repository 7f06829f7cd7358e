#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

enum class LexMode { Random, Majority };

// Majority/random template table keyed by the sentence-partitioned predicate
// sequence of the instance that produced each gold template. Values count
// serialized templates.
struct TemplateStore {
  std::map<std::vector<std::string>, std::map<std::string, int>> table;

  bool empty() const { return table.empty(); }
};

// Tagged predicate key `<SNT> p p </SNT> ...` for a sentence range
// [first, last) of the partition.
std::vector<std::string> structured_key(const std::vector<Triple>& ordered,
                                        const Partition& breaks, size_t first,
                                        size_t last);

TemplateStore template_store_train(const TaskDataset& ds, int* skipped = nullptr);

// Sliding-window template selection over the sentence list: the longest
// window whose key is stored (and whose template fits the window's entities)
// emits a template renumbered to the global entity ranks, then the window
// advances; a sentence no window covers falls back to one synthetic clause
// per triple: `ENTITY-i <predicate words> ENTITY-j .`. `fallback_sentences`
// counts the fallback events.
Template lexicalize_lookup(const std::vector<Triple>& ordered, const Partition& breaks,
                           const TemplateStore& store, LexMode mode, uint64_t seed,
                           int* fallback_sentences = nullptr);

// Validates a decoded token sequence as a template for the given input: it
// must parse and its entity tags must cover ranks 1..|distinct entities|
// exactly. On failure returns the majority lookup instead.
Template lexicalize_from_tokens(const std::vector<std::string>& decoded,
                                const std::vector<Triple>& ordered,
                                const Partition& breaks, const TemplateStore& store,
                                bool* fell_back = nullptr);

void save_template_store(const TemplateStore& s, const std::filesystem::path& path);
TemplateStore load_template_store(const std::filesystem::path& path);

}  // namespace d2t
