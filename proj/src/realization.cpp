#include "d2t/realization.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "d2t/corpus.hpp"
#include "d2t/reg.hpp"
#include "d2t/strings.hpp"

namespace d2t {

namespace {

const std::set<std::string> kVowelSound = {"hour",  "hourly", "honest", "honor",
                                           "honour", "heir",   "heirloom"};
const std::set<std::string> kConsonantSound = {
    "university", "universal", "unique", "union",    "unit", "united",
    "one",        "once",      "euro",   "european", "ewe",  "usage",
    "user",       "useful"};

bool is_vowel_letter(char c) {
  c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool ends_in(const std::string& s, std::string_view suffix) {
  return ends_with(s, suffix);
}

bool consonant_y(const std::string& s) {
  return s.size() >= 2 && s.back() == 'y' && !is_vowel_letter(s[s.size() - 2]);
}

std::string be_form(const VerbFeatures& f) {
  if (f.tense == "past")
    return (f.number == "plural" || f.person == "2nd") ? "were" : "was";
  if (f.person == "1st" && f.number != "plural") return "am";
  if (f.number == "plural" || f.person == "2nd") return "are";
  return "is";
}

std::string have_form(const VerbFeatures& f) {
  if (f.tense == "past") return "had";
  if (f.number == "plural" || f.person == "1st" || f.person == "2nd") return "have";
  return "has";
}

struct IrregularVerb {
  const char* past;
  const char* part;
};

const std::map<std::string, IrregularVerb> kIrregular = {
    {"be", {"was", "been"}},       {"have", {"had", "had"}},
    {"do", {"did", "done"}},       {"go", {"went", "gone"}},
    {"make", {"made", "made"}},    {"win", {"won", "won"}},
    {"give", {"gave", "given"}},   {"take", {"took", "taken"}},
    {"find", {"found", "found"}},  {"hold", {"held", "held"}},
    {"run", {"ran", "run"}},       {"become", {"became", "become"}},
    {"begin", {"began", "begun"}}, {"know", {"knew", "known"}},
    {"write", {"wrote", "written"}}, {"see", {"saw", "seen"}},
    {"bear", {"bore", "born"}},    {"build", {"built", "built"}},
    {"lead", {"led", "led"}},      {"leave", {"left", "left"}},
    {"fly", {"flew", "flown"}},    {"feed", {"fed", "fed"}}};

}  // namespace

std::string third_singular(const std::string& lemma) {
  if (lemma == "be") return "is";
  if (lemma == "have") return "has";
  if (lemma == "do") return "does";
  if (ends_in(lemma, "s") || ends_in(lemma, "x") || ends_in(lemma, "z") ||
      ends_in(lemma, "ch") || ends_in(lemma, "sh") || ends_in(lemma, "o"))
    return lemma + "es";
  if (consonant_y(lemma)) return lemma.substr(0, lemma.size() - 1) + "ies";
  return lemma + "s";
}

std::string past_form(const std::string& lemma) {
  if (auto it = kIrregular.find(lemma); it != kIrregular.end()) return it->second.past;
  if (ends_in(lemma, "e")) return lemma + "d";
  if (consonant_y(lemma)) return lemma.substr(0, lemma.size() - 1) + "ied";
  return lemma + "ed";
}

std::string participle(const std::string& lemma) {
  if (auto it = kIrregular.find(lemma); it != kIrregular.end()) return it->second.part;
  if (ends_in(lemma, "e")) return lemma + "d";
  if (consonant_y(lemma)) return lemma.substr(0, lemma.size() - 1) + "ied";
  return lemma + "ed";
}

std::string progressive(const std::string& lemma) {
  if (ends_in(lemma, "ie")) return lemma.substr(0, lemma.size() - 2) + "ying";
  if (ends_in(lemma, "e") && !ends_in(lemma, "ee"))
    return lemma.substr(0, lemma.size() - 1) + "ing";
  return lemma + "ing";
}

std::vector<std::string> inflect(const VerbFeatures& f, const std::string& lemma) {
  if (f.voice == "passive") return {be_form(f), participle(lemma)};
  if (f.aspect == "progressive") {
    if (lemma == "be") return {be_form(f), "being"};
    return {be_form(f), progressive(lemma)};
  }
  if (f.aspect == "perfect") {
    if (lemma == "be") return {have_form(f), "been"};
    return {have_form(f), participle(lemma)};
  }
  if (f.tense == "future") return {"will", lemma};
  if (f.tense == "past") {
    if (lemma == "be") return {be_form(f)};
    return {past_form(lemma)};
  }
  if (f.person == "3rd" && f.number != "plural") return {third_singular(lemma)};
  if (lemma == "be") return {be_form(f)};
  return {lemma};
}

std::string letter_class(const std::string& word) {
  std::string w = lower(std::string_view(word));
  if (kVowelSound.count(w) > 0) return "vowel";
  if (kConsonantSound.count(w) > 0) return "consonant";
  if (!w.empty() && is_vowel_letter(w[0])) return "vowel";
  return "consonant";
}

// --- Rule extraction ----------------------------------------------------------

namespace {

struct Aligner {
  const std::vector<TemplateToken>& items;
  const std::vector<std::string>& text;  // lowercased
  std::set<std::pair<size_t, size_t>> failed;
  std::vector<std::tuple<size_t, size_t, size_t>> verb_spans;  // item, begin, end
  std::vector<std::tuple<size_t, size_t, size_t>> det_spans;

  bool match(size_t ti, size_t wi) {
    if (ti == items.size()) return wi == text.size();
    if (failed.count({ti, wi}) > 0) return false;
    const TemplateToken& tok = items[ti];
    bool ok = false;
    if (tok.kind == TemplateToken::Kind::Word) {
      ok = wi < text.size() && lower(std::string_view(tok.word)) == text[wi] &&
           match(ti + 1, wi + 1);
    } else if (tok.kind == TemplateToken::Kind::Verb) {
      if (ti + 1 < items.size() && items[ti + 1].kind == TemplateToken::Kind::Word) {
        for (size_t len = 1; len <= 4 && wi + len <= text.size(); ++len) {
          if (match(ti + 2, wi + len)) {
            verb_spans.emplace_back(ti, wi, wi + len);
            ok = true;
            break;
          }
        }
      }
    } else if (tok.kind == TemplateToken::Kind::Determiner) {
      if (ti + 1 < items.size() && items[ti + 1].kind == TemplateToken::Kind::Word) {
        for (size_t len = 1; len <= 2 && wi + len <= text.size(); ++len) {
          if (match(ti + 2, wi + len)) {
            det_spans.emplace_back(ti, wi, wi + len);
            ok = true;
            break;
          }
        }
      }
    }
    if (!ok) failed.insert({ti, wi});
    return ok;
  }
};

std::vector<TemplateToken> referenced_items(const Template& tmpl,
                                            const std::vector<ReferenceSlot>& refs) {
  std::vector<TemplateToken> items;
  size_t slot = 0;
  for (const auto& tok : tmpl.tokens) {
    if (tok.kind == TemplateToken::Kind::Entity) {
      for (const std::string& w : refs.at(slot).refex)
        items.push_back(TemplateToken::make_word(w));
      ++slot;
    } else {
      items.push_back(tok);
    }
  }
  return items;
}

}  // namespace

RuleTable rules_extract(const Corpus& c) {
  RuleTable rt;
  std::map<std::pair<std::string, std::string>, std::map<std::string, int>> verb_counts;
  for (const Entry& e : c.entries) {
    if (e.split != "train") continue;
    for (const LexEntry& lex : e.lexes) {
      if (!lex.tmpl || lex.references.empty() ||
          lex.tmpl->slot_count() != static_cast<int>(lex.references.size()))
        continue;
      std::vector<TemplateToken> items = referenced_items(*lex.tmpl, lex.references);
      std::vector<std::string> text = lower(tokenize(lex.text));

      Aligner a{items, text, {}, {}, {}};
      if (!a.match(0, 0)) {
        ++rt.skipped;
        continue;
      }
      for (const auto& [ti, b, en] : a.verb_spans) {
        std::string lemma = lower(std::string_view(items[ti + 1].word));
        std::string key;
        {
          const VerbFeatures& f = items[ti].verb;
          key = f.aspect + "," + f.tense + "," + f.voice + "," + f.person + "," +
                f.number;
        }
        std::vector<std::string> surface(text.begin() + static_cast<long>(b),
                                         text.begin() + static_cast<long>(en));
        ++verb_counts[{lemma, key}][join(surface)];
      }
      for (const auto& [ti, b, en] : a.det_spans) {
        std::string following = en < text.size() ? text[en] : "";
        std::vector<std::string> surface(text.begin() + static_cast<long>(b),
                                         text.begin() + static_cast<long>(en));
        ++rt.det[items[ti].det_form + "\x1f" + letter_class(following)][join(surface)];
      }
    }
  }
  for (const auto& [lk, surfaces] : verb_counts) {
    const auto& [lemma, key] = lk;
    auto parts = split_on(key, ',');
    VerbFeatures f{parts[0], parts[1], parts[2], parts[3], parts[4]};
    for (const auto& [surface, count] : surfaces)
      rt.verb[lemma].push_back(VerbRule{f, split_ws(surface), count});
  }
  return rt;
}

// --- Realization ---------------------------------------------------------------

namespace {

bool attrs_compatible(const std::string& a, const std::string& b) {
  return a == "null" || b == "null" || a == b;
}

bool features_equal(const VerbFeatures& a, const VerbFeatures& b) { return a == b; }

bool features_compatible(const VerbFeatures& a, const VerbFeatures& b) {
  return attrs_compatible(a.aspect, b.aspect) && attrs_compatible(a.tense, b.tense) &&
         attrs_compatible(a.voice, b.voice) && attrs_compatible(a.person, b.person) &&
         attrs_compatible(a.number, b.number);
}

const std::vector<std::string>* majority_surface(
    const std::vector<const VerbRule*>& rules) {
  const std::vector<std::string>* best = nullptr;
  int best_count = 0;
  std::map<std::string, int> agg;
  std::map<std::string, const std::vector<std::string>*> token_of;
  for (const VerbRule* r : rules) {
    std::string key = join(r->surface);
    agg[key] += r->count;
    token_of[key] = &r->surface;
  }
  for (const auto& [key, count] : agg) {
    if (count > best_count) {
      best = token_of[key];
      best_count = count;
    }
  }
  return best;
}

std::vector<std::string> lookup_verb(const RuleTable& rt, const VerbFeatures& f,
                                     const std::string& lemma) {
  auto it = rt.verb.find(lower(std::string_view(lemma)));
  if (it != rt.verb.end()) {
    std::vector<const VerbRule*> exact, compat;
    for (const VerbRule& r : it->second) {
      if (features_equal(r.features, f)) exact.push_back(&r);
      if (features_compatible(r.features, f)) compat.push_back(&r);
    }
    if (const auto* s = majority_surface(exact)) return *s;
    if (const auto* s = majority_surface(compat)) return *s;
  }
  return inflect(f, lower(std::string_view(lemma)));
}

std::string lookup_det(const RuleTable& rt, const std::string& form,
                       const std::string& following, const std::string& base) {
  auto it = rt.det.find(form + "\x1f" + letter_class(following));
  if (it != rt.det.end()) {
    const std::string* best = nullptr;
    int best_count = 0;
    for (const auto& [surface, count] : it->second) {
      if (count > best_count) {
        best = &surface;
        best_count = count;
      }
    }
    if (best) return *best;
  }
  if (form == "undefined")
    return letter_class(following) == "vowel" ? "an" : "a";
  if (form == "defined") return "the";
  return base;
}

}  // namespace

std::string realize(const ReferencedTemplate& rt, const RuleTable& rules,
                    int* dropped_tags) {
  std::vector<std::string> out;
  int dropped = 0;
  const auto& toks = rt.tokens;
  for (size_t i = 0; i < toks.size(); ++i) {
    const TemplateToken& tok = toks[i];
    switch (tok.kind) {
      case TemplateToken::Kind::Word:
        out.push_back(tok.word);
        break;
      case TemplateToken::Kind::Entity:
        for (const std::string& w : only_names_tokens(tok.word.empty()
                                                          ? "ENTITY-" + std::to_string(tok.entity_index)
                                                          : tok.word))
          out.push_back(w);
        break;
      case TemplateToken::Kind::Verb: {
        if (i + 1 >= toks.size() || toks[i + 1].kind != TemplateToken::Kind::Word) {
          ++dropped;
          break;
        }
        for (std::string& w : lookup_verb(rules, tok.verb, toks[i + 1].word))
          out.push_back(std::move(w));
        ++i;  // lemma consumed
        break;
      }
      case TemplateToken::Kind::Determiner: {
        if (i + 1 >= toks.size() || toks[i + 1].kind != TemplateToken::Kind::Word) {
          ++dropped;
          break;
        }
        std::string following;
        if (i + 2 < toks.size() && toks[i + 2].kind == TemplateToken::Kind::Word)
          following = toks[i + 2].word;
        out.push_back(lookup_det(rules, tok.det_form, following, toks[i + 1].word));
        ++i;  // base determiner consumed
        break;
      }
    }
  }
  if (dropped_tags) *dropped_tags = dropped;
  return detokenize(out);
}

void save_rule_table(const RuleTable& rt, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  for (const auto& [lemma, rules] : rt.verb) {
    for (const VerbRule& r : rules) {
      nlohmann::ordered_json j;
      j["kind"] = "verb";
      j["lemma"] = lemma;
      j["aspect"] = r.features.aspect;
      j["tense"] = r.features.tense;
      j["voice"] = r.features.voice;
      j["person"] = r.features.person;
      j["number"] = r.features.number;
      j["surface"] = r.surface;
      j["count"] = r.count;
      os << j.dump() << '\n';
    }
  }
  for (const auto& [key, surfaces] : rt.det) {
    auto sep = key.find('\x1f');
    for (const auto& [surface, count] : surfaces) {
      nlohmann::ordered_json j;
      j["kind"] = "det";
      j["form"] = key.substr(0, sep);
      j["class"] = key.substr(sep + 1);
      j["surface"] = surface;
      j["count"] = count;
      os << j.dump() << '\n';
    }
  }
}

RuleTable load_rule_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw CorpusError("cannot open " + path.string());
  RuleTable rt;
  std::string line;
  while (std::getline(is, line)) {
    if (strip(line).empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    if (j.at("kind") == "verb") {
      VerbRule r;
      r.features = VerbFeatures{j.at("aspect"), j.at("tense"), j.at("voice"),
                                j.at("person"), j.at("number")};
      r.surface = j.at("surface").get<std::vector<std::string>>();
      r.count = j.at("count").get<int>();
      rt.verb[j.at("lemma").get<std::string>()].push_back(std::move(r));
    } else {
      rt.det[j.at("form").get<std::string>() + "\x1f" +
             j.at("class").get<std::string>()][j.at("surface").get<std::string>()] =
          j.at("count").get<int>();
    }
  }
  return rt;
}

}  // namespace d2t
