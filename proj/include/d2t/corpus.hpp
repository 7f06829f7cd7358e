#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "d2t/types.hpp"

namespace d2t {

inline constexpr const char* kTripleOpen = "<TRIPLE>";
inline constexpr const char* kTripleClose = "</TRIPLE>";
inline constexpr const char* kSentenceOpen = "<SNT>";
inline constexpr const char* kSentenceClose = "</SNT>";

enum class CorpusFormat { Xml, Jsonl };

struct ImportStats {
  int entries = 0;
  int lexes = 0;
  int lexes_skipped = 0;          // no usable text
  int missing_order = 0;          // annotation layer absent or not a permutation
  int missing_breaks = 0;
  int missing_template = 0;       // absent or unparseable
  int missing_references = 0;
};

// Loads a corpus directory (or single file) in the declared format and
// normalizes it into the internal representation. XML follows the augmented
// WebNLG layout: <split>/<N>triples/*.xml. Domains absent from the train
// split are flagged unseen.
Corpus import_webnlg(const std::filesystem::path& path, CorpusFormat format,
                     ImportStats* stats = nullptr);

// Interchange format: one JSON record per line, field order
// {eid, domain, split, triples, lexes[{text, order, breaks, template, references}]}.
void write_interchange(const Corpus& c, std::ostream& os);
void write_interchange(const Corpus& c, const std::filesystem::path& path);
Corpus read_interchange(std::istream& is, const std::string& name = "<stream>",
                        ImportStats* stats = nullptr);

// --- Linearization -----------------------------------------------------------

// Sorts by (predicate, subject, object), raw byte order, then renders each
// triple as `<TRIPLE> s p o </TRIPLE>`.
std::vector<std::string> canonical_linearize(const TripleSet& ts);
std::vector<Triple> canonical_order(const std::vector<Triple>& triples);

// Renders triples in the given order; no reordering.
std::vector<std::string> linearize_ordered(const std::vector<Triple>& ordered);

// Wraps each sentence in `<SNT> ... </SNT>`. Breaks must partition the list
// contiguously.
std::vector<std::string> linearize_structured(const std::vector<Triple>& ordered,
                                              const Partition& breaks);

// Companion de-linearizers (roundtrip partners; also used by engines that
// need the triples behind a source token sequence).
std::vector<Triple> parse_linearized(const std::vector<std::string>& tokens);
std::pair<std::vector<Triple>, Partition> parse_structured(
    const std::vector<std::string>& tokens);

void validate_partition(const Partition& breaks, int n);

// --- Task dataset extraction -------------------------------------------------

enum class Task { Ordering, Structuring, Lexicalization, Reg, EndToEnd };

Task parse_task(const std::string& name);
std::string task_name(Task t);

struct SplitCounts {
  int records = 0;         // one per verbalization, duplicates kept
  int distinct_pairs = 0;  // distinct (source, target) pairs
  int sources = 0;         // distinct inputs
  int skipped = 0;         // lexes missing the layer this task needs
};

struct ExtractionStats {
  SplitCounts train, dev, test;
  SplitCounts& for_split(const std::string& split);
};

struct TaskSplits {
  TaskDataset train, dev, test;
  ExtractionStats stats;
};

struct RegSplits {
  RegDataset train, dev, test;
  ExtractionStats stats;
};

// Target token formats shared by extraction and the stage runners.
std::vector<std::string> uncased_template_tokens(const Template& t);
std::vector<std::string> structuring_target(const std::vector<Triple>& ordered,
                                            const Partition& breaks);

// Token-sequence tasks. Train keeps one single-target instance per gold
// verbalization; dev/test group by input with duplicate targets removed.
TaskSplits extract_task_dataset(const Corpus& c, Task task);

// One instance per reference slot. Pre-contexts realize earlier slots with
// their gold referring expressions; post-contexts keep raw entity identifiers.
RegSplits extract_reg_dataset(const Corpus& c);

// Contexts of one slot inside a bound template, lowercased. `realized` maps
// earlier slot positions to their surface tokens.
std::pair<std::vector<std::string>, std::vector<std::string>> slot_contexts(
    const BoundTemplate& bt, int slot,
    const std::vector<std::vector<std::string>>& realized_before);

}  // namespace d2t
