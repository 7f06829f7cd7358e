#include "d2t/engines.hpp"

#include "d2t/corpus.hpp"

namespace d2t {

namespace {

std::vector<std::string> best_decode(const nn::Seq2SeqModel& m,
                                     const std::vector<std::string>& source, int beam,
                                     int max_len) {
  auto hyps = nn::beam_decode(m, source, beam, max_len);
  return hyps.front().tokens;
}

}  // namespace

std::vector<Triple> order_neural(const nn::Seq2SeqModel& m, const TripleSet& ts,
                                 uint64_t seed, int beam, int max_len, bool* repaired) {
  std::vector<std::string> predicted =
      best_decode(m, canonical_linearize(ts), beam, max_len);
  if (repaired) {
    std::vector<std::string> want, got = predicted;
    for (const Triple& t : canonical_order(ts.triples)) want.push_back(t.predicate);
    std::sort(got.begin(), got.end());
    *repaired = got != want;
  }
  return order_from_prediction(ts, predicted, seed);
}

Partition structure_neural(const nn::Seq2SeqModel& m, const std::vector<Triple>& ordered,
                           int beam, int max_len, bool* fell_back) {
  std::vector<std::string> decoded =
      best_decode(m, linearize_ordered(ordered), beam, max_len);
  return structure_from_prediction(ordered, decoded, fell_back);
}

Template lexicalize_neural(const nn::Seq2SeqModel& m, const std::vector<Triple>& ordered,
                           const Partition& breaks, const TemplateStore& store, int beam,
                           int max_len, bool* fell_back) {
  std::vector<std::string> decoded =
      best_decode(m, linearize_structured(ordered, breaks), beam, max_len);
  return lexicalize_from_tokens(bpe_decode(m.bpe, decoded), ordered, breaks, store,
                                fell_back);
}

}  // namespace d2t
