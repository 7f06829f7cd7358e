#pragma once

#include <cstdint>

#include "d2t/lexicalization.hpp"
#include "d2t/nn/seq2seq.hpp"
#include "d2t/ordering.hpp"
#include "d2t/structuring.hpp"

namespace d2t {

// Neural engines for the first three stages: beam-decode with the stage
// model, then repair the prediction into a valid stage output.

// Decodes a predicate sequence and realizes it against the set; a repair
// event means the decode was not a clean permutation of the input predicates.
std::vector<Triple> order_neural(const nn::Seq2SeqModel& m, const TripleSet& ts,
                                 uint64_t seed, int beam = 5, int max_len = 100,
                                 bool* repaired = nullptr);

// Decodes a tagged predicate sequence; malformed decodes fall back to one
// sentence per triple.
Partition structure_neural(const nn::Seq2SeqModel& m, const std::vector<Triple>& ordered,
                           int beam = 5, int max_len = 100, bool* fell_back = nullptr);

// Decodes subword template tokens, merges them, and validates the parse; on
// failure falls back to the majority template store.
Template lexicalize_neural(const nn::Seq2SeqModel& m, const std::vector<Triple>& ordered,
                           const Partition& breaks, const TemplateStore& store,
                           int beam = 5, int max_len = 100, bool* fell_back = nullptr);

}  // namespace d2t
