#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "d2t/template.hpp"

namespace d2t {

struct Triple {
  std::string subject;
  std::string predicate;
  std::string object;

  auto operator<=>(const Triple&) const = default;
};

struct TripleSet {
  std::vector<Triple> triples;  // corpus bound: 1..7
  std::string domain;
  bool seen = true;
};

// Half-open [begin, end) over positions of the ordered triple list.
using Interval = std::pair<int, int>;
using Partition = std::vector<Interval>;

// Gold referring expression for one entity slot, in template slot order.
struct ReferenceSlot {
  std::string entity;
  std::vector<std::string> refex;  // cased tokenized
};

struct LexEntry {
  std::string text;                         // raw reference text
  std::vector<int> order;                   // permutation indices into Entry triples; empty = layer missing
  Partition breaks;                         // sentence intervals over ordered triples; empty = layer missing
  std::optional<Template> tmpl;             // delexicalized template; nullopt = missing/unparseable
  std::vector<ReferenceSlot> references;    // empty = layer missing
};

struct Entry {
  std::string eid;
  std::string split;  // train | dev | test
  TripleSet set;
  std::vector<LexEntry> lexes;

  std::vector<Triple> ordered_triples(const LexEntry& lex) const {
    std::vector<Triple> out;
    out.reserve(lex.order.size());
    for (int i : lex.order) out.push_back(set.triples.at(static_cast<size_t>(i)));
    return out;
  }
};

struct Corpus {
  std::vector<Entry> entries;
};

// One (source, gold set) pair for the token-sequence tasks.
struct DatasetInstance {
  std::vector<std::string> source;
  std::vector<std::vector<std::string>> targets;  // >= 1; deduplicated in dev/test
  std::string domain;
  bool seen = true;
  int size = 0;  // triples in the originating set
};

struct TaskDataset {
  std::vector<DatasetInstance> instances;
};

// One reference slot with its surrounding contexts.
struct ReferenceInstance {
  std::string entity;
  std::vector<std::string> refex;         // cased tokenized
  std::vector<std::string> pre_context;   // lowercase tokens
  std::vector<std::string> post_context;  // lowercase tokens
  std::string domain;
  bool seen = true;
  int size = 0;
};

struct RegDataset {
  std::vector<ReferenceInstance> instances;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace d2t
