#include "d2t/lexicalization.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "d2t/corpus.hpp"
#include "d2t/rng.hpp"
#include "d2t/strings.hpp"

namespace d2t {

std::vector<std::string> structured_key(const std::vector<Triple>& ordered,
                                        const Partition& breaks, size_t first,
                                        size_t last) {
  std::vector<std::string> key;
  for (size_t s = first; s < last; ++s) {
    key.push_back(kSentenceOpen);
    for (int i = breaks[s].first; i < breaks[s].second; ++i)
      key.push_back(ordered[static_cast<size_t>(i)].predicate);
    key.push_back(kSentenceClose);
  }
  return key;
}

TemplateStore template_store_train(const TaskDataset& ds, int* skipped) {
  TemplateStore store;
  int bad = 0;
  for (const DatasetInstance& inst : ds.instances) {
    std::vector<Triple> ordered;
    Partition breaks;
    try {
      std::tie(ordered, breaks) = parse_structured(inst.source);
    } catch (const CorpusError&) {
      ++bad;
      continue;
    }
    auto key = structured_key(ordered, breaks, 0, breaks.size());
    for (const auto& target : inst.targets) {
      try {
        Template t = template_parse(target);
        ++store.table[key][serialize(t)];
      } catch (const TemplateParseError&) {
        ++bad;
      }
    }
  }
  if (skipped) *skipped = bad;
  return store;
}

namespace {

// Renumbers entity tags from window-local first-occurrence ranks to ranks in
// the global distinct-entity list.
Template renumber(const Template& t, const std::vector<std::string>& local,
                  const std::vector<std::string>& global_order) {
  Template out = t;
  for (auto& tok : out.tokens) {
    if (tok.kind != TemplateToken::Kind::Entity) continue;
    const std::string& ident = local.at(static_cast<size_t>(tok.entity_index - 1));
    auto it = std::find(global_order.begin(), global_order.end(), ident);
    tok.entity_index = static_cast<int>(it - global_order.begin()) + 1;
  }
  return out;
}

void append_fallback_clause(Template& out, const Triple& t,
                            const std::vector<std::string>& global_order) {
  auto rank = [&](const std::string& ident) {
    auto it = std::find(global_order.begin(), global_order.end(), ident);
    return static_cast<int>(it - global_order.begin()) + 1;
  };
  out.tokens.push_back(TemplateToken::make_entity(rank(t.subject)));
  for (const std::string& w : camel_case_words(t.predicate))
    out.tokens.push_back(TemplateToken::make_word(w));
  out.tokens.push_back(TemplateToken::make_entity(rank(t.object)));
  out.tokens.push_back(TemplateToken::make_word("."));
}

// Stored templates usable for a window: entity tags must not exceed the
// window's distinct entity count. Returned in map order (lexicographic by
// serialization), so ties and random draws are reproducible.
std::vector<std::pair<const std::string*, int>> fitting_candidates(
    const std::map<std::string, int>& stored, int distinct_count) {
  std::vector<std::pair<const std::string*, int>> out;
  for (const auto& [ser, count] : stored) {
    Template t = template_parse(ser);
    if (t.max_entity_index() <= distinct_count) out.emplace_back(&ser, count);
  }
  return out;
}

}  // namespace

Template lexicalize_lookup(const std::vector<Triple>& ordered, const Partition& breaks,
                           const TemplateStore& store, LexMode mode, uint64_t seed,
                           int* fallback_sentences) {
  validate_partition(breaks, static_cast<int>(ordered.size()));
  Rng rng(seed);
  std::vector<std::string> global_order = distinct_entities(ordered);
  Template out;
  int fallbacks = 0;

  size_t start = 0;
  size_t end = breaks.size();
  while (start < breaks.size()) {
    if (start == end) {
      for (int i = breaks[start].first; i < breaks[start].second; ++i)
        append_fallback_clause(out, ordered[static_cast<size_t>(i)], global_order);
      ++fallbacks;
      ++start;
      end = breaks.size();
      continue;
    }
    std::vector<Triple> window;
    for (size_t s = start; s < end; ++s)
      for (int i = breaks[s].first; i < breaks[s].second; ++i)
        window.push_back(ordered[static_cast<size_t>(i)]);
    std::vector<std::string> local = distinct_entities(window);

    auto it = store.table.find(structured_key(ordered, breaks, start, end));
    if (it != store.table.end()) {
      auto candidates = fitting_candidates(it->second, static_cast<int>(local.size()));
      if (!candidates.empty()) {
        const std::string* chosen = nullptr;
        if (mode == LexMode::Random) {
          chosen = candidates[rng.uniform_int(static_cast<int>(candidates.size()))].first;
        } else {
          int best = 0;
          for (const auto& [ser, count] : candidates) {
            if (count > best) {
              chosen = ser;
              best = count;
            }
          }
        }
        Template t = renumber(template_parse(*chosen), local, global_order);
        for (auto& tok : t.tokens) out.tokens.push_back(std::move(tok));
        start = end;
        end = breaks.size();
        continue;
      }
    }
    --end;
  }
  if (fallback_sentences) *fallback_sentences = fallbacks;
  return out;
}

Template lexicalize_from_tokens(const std::vector<std::string>& decoded,
                                const std::vector<Triple>& ordered,
                                const Partition& breaks, const TemplateStore& store,
                                bool* fell_back) {
  int distinct = static_cast<int>(distinct_entities(ordered).size());
  try {
    Template t = template_parse(decoded);
    std::set<int> indices;
    for (const auto& tok : t.tokens)
      if (tok.kind == TemplateToken::Kind::Entity) indices.insert(tok.entity_index);
    bool covers = static_cast<int>(indices.size()) == distinct &&
                  (indices.empty() || (*indices.begin() == 1 &&
                                       *indices.rbegin() == distinct));
    if (covers && !t.tokens.empty()) {
      if (fell_back) *fell_back = false;
      return t;
    }
  } catch (const TemplateParseError&) {
  }
  if (fell_back) *fell_back = true;
  return lexicalize_lookup(ordered, breaks, store, LexMode::Majority, 0);
}

void save_template_store(const TemplateStore& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  for (const auto& [key, templates] : s.table) {
    nlohmann::ordered_json j;
    j["key"] = key;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [ser, count] : templates) {
      nlohmann::ordered_json t;
      t["t"] = ser;
      t["count"] = count;
      arr.push_back(t);
    }
    j["templates"] = arr;
    os << j.dump() << '\n';
  }
}

TemplateStore load_template_store(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorpusError("cannot open " + path.string());
  TemplateStore s;
  std::string line;
  while (std::getline(is, line)) {
    if (strip(line).empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    auto key = j.at("key").get<std::vector<std::string>>();
    for (const auto& t : j.at("templates"))
      s.table[key][t.at("t").get<std::string>()] = t.at("count").get<int>();
  }
  return s;
}

}  // namespace d2t
