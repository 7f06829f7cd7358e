#include "d2t/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"

#include "d2t/strings.hpp"

namespace d2t {

namespace {

using nlohmann::ordered_json;

// Triple components carry no internal whitespace; runs of spaces collapse to
// a single underscore.
std::string normalize_component(std::string_view raw) {
  std::string s = strip(raw);
  std::string out;
  bool in_ws = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back('_');
    in_ws = false;
    out.push_back(c);
  }
  return out;
}

Triple parse_pipe_triple(const std::string& raw, const std::string& where) {
  auto parts = split_on(raw, '|');
  if (parts.size() != 3)
    throw CorpusError(where + ": triple is not 'subject | predicate | object': " + raw);
  Triple t{normalize_component(parts[0]), normalize_component(parts[1]),
           normalize_component(parts[2])};
  if (t.subject.empty() || t.predicate.empty() || t.object.empty())
    throw CorpusError(where + ": triple has an empty component: " + raw);
  return t;
}

bool is_permutation_of(const std::vector<int>& order, size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> used(n, false);
  for (int i : order) {
    if (i < 0 || static_cast<size_t>(i) >= n || used[static_cast<size_t>(i)]) return false;
    used[static_cast<size_t>(i)] = true;
  }
  return true;
}

bool is_valid_partition(const Partition& breaks, int n) {
  if (breaks.empty()) return n == 0;
  int pos = 0;
  for (const auto& [b, e] : breaks) {
    if (b != pos || e <= b) return false;
    pos = e;
  }
  return pos == n;
}

void flag_unseen_domains(Corpus& c) {
  std::set<std::string> train_domains;
  for (const Entry& e : c.entries)
    if (e.split == "train") train_domains.insert(e.set.domain);
  for (Entry& e : c.entries)
    e.set.seen = e.split == "train" || train_domains.count(e.set.domain) > 0;
}

}  // namespace

// --- Linearization -----------------------------------------------------------

std::vector<Triple> canonical_order(const std::vector<Triple>& triples) {
  std::vector<Triple> out = triples;
  std::sort(out.begin(), out.end(), [](const Triple& a, const Triple& b) {
    return std::tie(a.predicate, a.subject, a.object) <
           std::tie(b.predicate, b.subject, b.object);
  });
  return out;
}

std::vector<std::string> linearize_ordered(const std::vector<Triple>& ordered) {
  if (ordered.empty()) throw CorpusError("cannot linearize an empty triple list");
  std::vector<std::string> out;
  out.reserve(ordered.size() * 5);
  for (const Triple& t : ordered) {
    out.push_back(kTripleOpen);
    out.push_back(t.subject);
    out.push_back(t.predicate);
    out.push_back(t.object);
    out.push_back(kTripleClose);
  }
  return out;
}

std::vector<std::string> canonical_linearize(const TripleSet& ts) {
  return linearize_ordered(canonical_order(ts.triples));
}

void validate_partition(const Partition& breaks, int n) {
  if (!is_valid_partition(breaks, n))
    throw CorpusError("sentence intervals do not form a contiguous disjoint cover");
}

std::vector<std::string> linearize_structured(const std::vector<Triple>& ordered,
                                              const Partition& breaks) {
  validate_partition(breaks, static_cast<int>(ordered.size()));
  std::vector<std::string> out;
  for (const auto& [b, e] : breaks) {
    out.push_back(kSentenceOpen);
    for (int i = b; i < e; ++i) {
      const Triple& t = ordered[static_cast<size_t>(i)];
      out.push_back(kTripleOpen);
      out.push_back(t.subject);
      out.push_back(t.predicate);
      out.push_back(t.object);
      out.push_back(kTripleClose);
    }
    out.push_back(kSentenceClose);
  }
  return out;
}

std::vector<Triple> parse_linearized(const std::vector<std::string>& tokens) {
  std::vector<Triple> out;
  size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i] != kTripleOpen || i + 4 >= tokens.size() ||
        tokens[i + 4] != kTripleClose)
      throw CorpusError("malformed linearization near token " + std::to_string(i));
    out.push_back(Triple{tokens[i + 1], tokens[i + 2], tokens[i + 3]});
    i += 5;
  }
  if (out.empty()) throw CorpusError("empty linearization");
  return out;
}

std::pair<std::vector<Triple>, Partition> parse_structured(
    const std::vector<std::string>& tokens) {
  std::vector<Triple> triples;
  Partition breaks;
  size_t i = 0;
  while (i < tokens.size()) {
    if (tokens[i] != kSentenceOpen)
      throw CorpusError("expected <SNT> at token " + std::to_string(i));
    ++i;
    int begin = static_cast<int>(triples.size());
    while (i < tokens.size() && tokens[i] == kTripleOpen) {
      if (i + 4 >= tokens.size() || tokens[i + 4] != kTripleClose)
        throw CorpusError("malformed triple inside sentence at token " + std::to_string(i));
      triples.push_back(Triple{tokens[i + 1], tokens[i + 2], tokens[i + 3]});
      i += 5;
    }
    if (i >= tokens.size() || tokens[i] != kSentenceClose)
      throw CorpusError("expected </SNT> at token " + std::to_string(i));
    ++i;
    int end = static_cast<int>(triples.size());
    if (end == begin) throw CorpusError("empty sentence in structured sequence");
    breaks.emplace_back(begin, end);
  }
  if (triples.empty()) throw CorpusError("empty structured sequence");
  return {triples, breaks};
}

// --- Interchange -------------------------------------------------------------

namespace {

ordered_json lex_to_json(const LexEntry& lex) {
  ordered_json j;
  j["text"] = lex.text;
  if (!lex.order.empty()) {
    j["order"] = lex.order;
  } else {
    j["order"] = nullptr;
  }
  if (!lex.breaks.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& [b, e] : lex.breaks) arr.push_back(ordered_json::array({b, e}));
    j["breaks"] = arr;
  } else {
    j["breaks"] = nullptr;
  }
  j["template"] = lex.tmpl ? ordered_json(serialize(*lex.tmpl)) : ordered_json(nullptr);
  if (!lex.references.empty()) {
    ordered_json refs = ordered_json::array();
    for (const auto& r : lex.references) {
      ordered_json ref;
      ref["entity"] = r.entity;
      ref["refex"] = r.refex;
      refs.push_back(ref);
    }
    j["references"] = refs;
  } else {
    j["references"] = nullptr;
  }
  return j;
}

LexEntry lex_from_json(const ordered_json& j, size_t n_triples, const std::string& where,
                       ImportStats& stats) {
  LexEntry lex;
  lex.text = j.at("text").get<std::string>();
  if (j.contains("order") && !j.at("order").is_null()) {
    lex.order = j.at("order").get<std::vector<int>>();
    if (!is_permutation_of(lex.order, n_triples))
      throw CorpusError(where + ": order is not a permutation of the triple set");
  } else {
    ++stats.missing_order;
  }
  if (j.contains("breaks") && !j.at("breaks").is_null()) {
    for (const auto& iv : j.at("breaks"))
      lex.breaks.emplace_back(iv.at(0).get<int>(), iv.at(1).get<int>());
    if (!is_valid_partition(lex.breaks, static_cast<int>(n_triples)))
      throw CorpusError(where + ": breaks do not partition the ordered triples");
  } else {
    ++stats.missing_breaks;
  }
  if (j.contains("template") && !j.at("template").is_null()) {
    try {
      lex.tmpl = template_parse(j.at("template").get<std::string>());
    } catch (const TemplateParseError&) {
      ++stats.missing_template;
    }
  } else {
    ++stats.missing_template;
  }
  if (j.contains("references") && !j.at("references").is_null()) {
    for (const auto& r : j.at("references")) {
      ReferenceSlot slot;
      slot.entity = r.at("entity").get<std::string>();
      slot.refex = r.at("refex").get<std::vector<std::string>>();
      lex.references.push_back(std::move(slot));
    }
  } else {
    ++stats.missing_references;
  }
  return lex;
}

}  // namespace

void write_interchange(const Corpus& c, std::ostream& os) {
  for (const Entry& e : c.entries) {
    ordered_json j;
    j["eid"] = e.eid;
    j["domain"] = e.set.domain;
    j["split"] = e.split;
    ordered_json triples = ordered_json::array();
    for (const Triple& t : e.set.triples)
      triples.push_back(ordered_json::array({t.subject, t.predicate, t.object}));
    j["triples"] = triples;
    ordered_json lexes = ordered_json::array();
    for (const LexEntry& lex : e.lexes) lexes.push_back(lex_to_json(lex));
    j["lexes"] = lexes;
    os << j.dump() << '\n';
  }
}

void write_interchange(const Corpus& c, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw CorpusError("cannot open " + path.string() + " for writing");
  write_interchange(c, os);
}

Corpus read_interchange(std::istream& is, const std::string& name, ImportStats* stats) {
  Corpus c;
  ImportStats local;
  ImportStats& st = stats ? *stats : local;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    std::string where = name + ":" + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      throw CorpusError(where + ": " + ex.what());
    }
    try {
      Entry e;
      e.eid = j.at("eid").get<std::string>();
      e.set.domain = j.at("domain").get<std::string>();
      e.split = j.at("split").get<std::string>();
      for (const auto& t : j.at("triples")) {
        Triple tr{t.at(0).get<std::string>(), t.at(1).get<std::string>(),
                  t.at(2).get<std::string>()};
        if (tr.subject.empty() || tr.predicate.empty() || tr.object.empty())
          throw CorpusError(where + ": empty triple component");
        e.set.triples.push_back(std::move(tr));
      }
      if (e.set.triples.empty() || e.set.triples.size() > 7)
        throw CorpusError(where + ": triple set size " +
                          std::to_string(e.set.triples.size()) + " outside 1..7");
      for (const auto& lj : j.at("lexes")) {
        LexEntry lex = lex_from_json(lj, e.set.triples.size(), where, st);
        if (strip(lex.text).empty()) {
          ++st.lexes_skipped;
          continue;
        }
        ++st.lexes;
        e.lexes.push_back(std::move(lex));
      }
      if (e.lexes.empty())
        throw CorpusError(where + ": entry has no usable verbalization");
      ++st.entries;
      c.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw CorpusError(where + ": " + ex.what());
    }
  }
  flag_unseen_domains(c);
  return c;
}

// --- XML import --------------------------------------------------------------

namespace {

namespace pt = boost::property_tree;

// Maps each sorted triple back to an index of the entry's triple list; the
// mapping must consume every triple exactly once to count as an order layer.
void attach_sorted_structure(Entry& e, LexEntry& lex, const pt::ptree& sorted,
                             ImportStats& stats) {
  std::vector<int> order;
  Partition breaks;
  std::vector<bool> used(e.set.triples.size(), false);
  bool ok = true;
  for (const auto& [name, sentence] : sorted) {
    if (name != "sentence") continue;
    int begin = static_cast<int>(order.size());
    for (const auto& [sname, striple] : sentence) {
      if (sname != "striple") continue;
      Triple t = parse_pipe_triple(striple.get_value<std::string>(), e.eid);
      int match = -1;
      for (size_t i = 0; i < e.set.triples.size(); ++i) {
        if (!used[i] && e.set.triples[i] == t) {
          match = static_cast<int>(i);
          break;
        }
      }
      if (match < 0) {
        ok = false;
        break;
      }
      used[static_cast<size_t>(match)] = true;
      order.push_back(match);
    }
    if (!ok) break;
    int end = static_cast<int>(order.size());
    if (end > begin) breaks.emplace_back(begin, end);
  }
  if (ok && is_permutation_of(order, e.set.triples.size()) &&
      is_valid_partition(breaks, static_cast<int>(order.size()))) {
    lex.order = std::move(order);
    lex.breaks = std::move(breaks);
  } else {
    ++stats.missing_order;
    ++stats.missing_breaks;
  }
}

void parse_entry_xml(const pt::ptree& node, const std::string& split,
                     const std::string& file_tag, Corpus& c, ImportStats& stats) {
  Entry e;
  e.split = split;
  e.eid = node.get<std::string>("<xmlattr>.eid", "");
  e.set.domain = node.get<std::string>("<xmlattr>.category", "");
  e.eid = file_tag + "/" + e.set.domain + "/" +
          node.get<std::string>("<xmlattr>.size", "0") + "/" + e.eid;

  if (auto mts = node.get_child_optional("modifiedtripleset")) {
    for (const auto& [name, mt] : *mts) {
      if (name != "mtriple") continue;
      e.set.triples.push_back(parse_pipe_triple(mt.get_value<std::string>(), e.eid));
    }
  }
  if (e.set.triples.empty() || e.set.triples.size() > 7)
    throw CorpusError(e.eid + ": triple set size outside 1..7");

  for (const auto& [name, lexnode] : node) {
    if (name != "lex") continue;
    LexEntry lex;
    lex.text = strip(lexnode.get<std::string>("text", ""));
    if (lex.text.empty()) {
      ++stats.lexes_skipped;
      continue;
    }
    if (auto sorted = lexnode.get_child_optional("sortedtripleset")) {
      attach_sorted_structure(e, lex, *sorted, stats);
    } else {
      ++stats.missing_order;
      ++stats.missing_breaks;
    }
    std::string tmpl_line = strip(lexnode.get<std::string>("lexicalization", ""));
    if (!tmpl_line.empty()) {
      try {
        lex.tmpl = template_parse(tmpl_line);
      } catch (const TemplateParseError&) {
        ++stats.missing_template;
      }
    } else {
      ++stats.missing_template;
    }
    if (auto refs = lexnode.get_child_optional("references")) {
      std::vector<std::pair<int, ReferenceSlot>> numbered;
      for (const auto& [rname, ref] : *refs) {
        if (rname != "reference") continue;
        ReferenceSlot slot;
        slot.entity = normalize_component(ref.get<std::string>("<xmlattr>.entity", ""));
        slot.refex = tokenize(ref.get_value<std::string>());
        int number = ref.get<int>("<xmlattr>.number", 0);
        numbered.emplace_back(number, std::move(slot));
      }
      std::stable_sort(numbered.begin(), numbered.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [n, slot] : numbered) lex.references.push_back(std::move(slot));
    } else {
      ++stats.missing_references;
    }
    ++stats.lexes;
    e.lexes.push_back(std::move(lex));
  }
  if (e.lexes.empty()) return;  // entry without any usable verbalization
  ++stats.entries;
  c.entries.push_back(std::move(e));
}

void import_xml_file(const std::filesystem::path& file, const std::string& split,
                     Corpus& c, ImportStats& stats) {
  pt::ptree tree;
  try {
    pt::read_xml(file.string(), tree);
  } catch (const pt::xml_parser_error& ex) {
    throw CorpusError(file.string() + ":" + std::to_string(ex.line()) + ": " +
                      ex.message());
  }
  auto entries = tree.get_child_optional("benchmark.entries");
  if (!entries) throw CorpusError(file.string() + ": no <benchmark><entries> root");
  std::string file_tag = file.stem().string();
  for (const auto& [name, node] : *entries) {
    if (name != "entry") continue;
    parse_entry_xml(node, split, file_tag, c, stats);
  }
}

}  // namespace

Corpus import_webnlg(const std::filesystem::path& path, CorpusFormat format,
                     ImportStats* stats) {
  ImportStats local;
  ImportStats& st = stats ? *stats : local;
  if (!std::filesystem::exists(path))
    throw CorpusError("corpus path does not exist: " + path.string());

  if (format == CorpusFormat::Jsonl) {
    std::ifstream is(path);
    if (!is) throw CorpusError("cannot open " + path.string());
    return read_interchange(is, path.filename().string(), stats);
  }

  Corpus c;
  bool any = false;
  for (const char* split : {"train", "dev", "test"}) {
    std::filesystem::path split_dir = path / split;
    if (!std::filesystem::exists(split_dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& p : std::filesystem::recursive_directory_iterator(split_dir))
      if (p.is_regular_file() && p.path().extension() == ".xml")
        files.push_back(p.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      import_xml_file(f, split, c, st);
      any = true;
    }
  }
  if (!any) {
    // also accept a flat directory of xml files, all mapped to one split
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path))
      for (const auto& p : std::filesystem::directory_iterator(path))
        if (p.is_regular_file() && p.path().extension() == ".xml")
          files.push_back(p.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      import_xml_file(f, "train", c, st);
      any = true;
    }
  }
  if (!any) throw CorpusError("no corpus files found under " + path.string());
  flag_unseen_domains(c);
  return c;
}

// --- Task dataset extraction -------------------------------------------------

Task parse_task(const std::string& name) {
  if (name == "ordering") return Task::Ordering;
  if (name == "structuring") return Task::Structuring;
  if (name == "lexicalization" || name == "lex") return Task::Lexicalization;
  if (name == "reg") return Task::Reg;
  if (name == "e2e") return Task::EndToEnd;
  throw CorpusError("unknown task '" + name + "'");
}

std::string task_name(Task t) {
  switch (t) {
    case Task::Ordering: return "ordering";
    case Task::Structuring: return "structuring";
    case Task::Lexicalization: return "lexicalization";
    case Task::Reg: return "reg";
    case Task::EndToEnd: return "e2e";
  }
  return "?";
}

SplitCounts& ExtractionStats::for_split(const std::string& split) {
  if (split == "train") return train;
  if (split == "dev") return dev;
  return test;
}

namespace {

struct SplitAccum {
  TaskDataset* ds;
  SplitCounts* counts;
  bool grouped;  // dev/test: one instance per input, deduplicated targets
  std::map<std::string, size_t> group_index;  // group key -> instance position
  std::set<std::pair<std::string, std::string>> pairs;
  std::set<std::string> sources;

  void add(const std::string& group_key, std::vector<std::string> source,
           std::vector<std::string> target, const Entry& e) {
    std::string src_str = join(source);
    std::string tgt_str = join(target);
    ++counts->records;
    if (pairs.emplace(src_str, tgt_str).second) ++counts->distinct_pairs;
    if (sources.insert(src_str).second) ++counts->sources;
    if (!grouped) {
      DatasetInstance inst;
      inst.source = std::move(source);
      inst.targets.push_back(std::move(target));
      inst.domain = e.set.domain;
      inst.seen = e.set.seen;
      inst.size = static_cast<int>(e.set.triples.size());
      ds->instances.push_back(std::move(inst));
      return;
    }
    auto it = group_index.find(group_key);
    if (it == group_index.end()) {
      DatasetInstance inst;
      inst.source = std::move(source);
      inst.targets.push_back(std::move(target));
      inst.domain = e.set.domain;
      inst.seen = e.set.seen;
      inst.size = static_cast<int>(e.set.triples.size());
      group_index.emplace(group_key, ds->instances.size());
      ds->instances.push_back(std::move(inst));
    } else {
      DatasetInstance& inst = ds->instances[it->second];
      if (std::find(inst.targets.begin(), inst.targets.end(), target) ==
          inst.targets.end())
        inst.targets.push_back(std::move(target));
    }
  }
};

}  // namespace

std::vector<std::string> uncased_template_tokens(const Template& t) {
  std::vector<std::string> out;
  out.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) {
    if (tok.kind == TemplateToken::Kind::Word)
      out.push_back(lower(tok.word));
    else
      out.push_back(serialize(tok));
  }
  return out;
}

std::vector<std::string> structuring_target(const std::vector<Triple>& ordered,
                                            const Partition& breaks) {
  std::vector<std::string> target;
  for (const auto& [b, en] : breaks) {
    target.push_back(kSentenceOpen);
    for (int i = b; i < en; ++i)
      target.push_back(ordered[static_cast<size_t>(i)].predicate);
    target.push_back(kSentenceClose);
  }
  return target;
}

TaskSplits extract_task_dataset(const Corpus& c, Task task) {
  if (task == Task::Reg)
    throw CorpusError("reg instances are typed records; use extract_reg_dataset");
  TaskSplits out;
  std::map<std::string, SplitAccum> accums;
  accums.emplace("train", SplitAccum{&out.train, &out.stats.train, false, {}, {}, {}});
  accums.emplace("dev", SplitAccum{&out.dev, &out.stats.dev, true, {}, {}, {}});
  accums.emplace("test", SplitAccum{&out.test, &out.stats.test, true, {}, {}, {}});

  for (size_t ei = 0; ei < c.entries.size(); ++ei) {
    const Entry& e = c.entries[ei];
    auto ait = accums.find(e.split);
    if (ait == accums.end()) continue;
    SplitAccum& acc = ait->second;
    for (const LexEntry& lex : e.lexes) {
      bool needs_order = task != Task::EndToEnd;
      bool needs_breaks = task == Task::Structuring || task == Task::Lexicalization;
      bool needs_template = task == Task::Lexicalization;
      if ((needs_order && lex.order.empty()) ||
          (needs_breaks && lex.breaks.empty()) || (needs_template && !lex.tmpl)) {
        ++acc.counts->skipped;
        continue;
      }
      std::string group = std::to_string(ei);
      switch (task) {
        case Task::Ordering: {
          std::vector<Triple> ordered = e.ordered_triples(lex);
          std::vector<std::string> target;
          for (const Triple& t : ordered) target.push_back(t.predicate);
          acc.add(group, canonical_linearize(e.set), std::move(target), e);
          break;
        }
        case Task::Structuring: {
          std::vector<Triple> ordered = e.ordered_triples(lex);
          std::string order_key;
          for (int i : lex.order) order_key += std::to_string(i) + ",";
          acc.add(group + "#" + order_key, linearize_ordered(ordered),
                  structuring_target(ordered, lex.breaks), e);
          break;
        }
        case Task::Lexicalization: {
          std::vector<Triple> ordered = e.ordered_triples(lex);
          std::string struct_key;
          for (int i : lex.order) struct_key += std::to_string(i) + ",";
          struct_key += "|";
          for (const auto& [b, en] : lex.breaks)
            struct_key += std::to_string(b) + "-" + std::to_string(en) + ",";
          acc.add(group + "#" + struct_key, linearize_structured(ordered, lex.breaks),
                  uncased_template_tokens(*lex.tmpl), e);
          break;
        }
        case Task::EndToEnd: {
          acc.add(group, canonical_linearize(e.set), lower(tokenize(lex.text)), e);
          break;
        }
        case Task::Reg:
          break;
      }
    }
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<std::string>> slot_contexts(
    const BoundTemplate& bt, int slot,
    const std::vector<std::vector<std::string>>& realized_before) {
  std::vector<std::string> pre, post;
  int seen_slots = 0;
  for (const auto& tok : bt.tokens) {
    if (tok.kind == TemplateToken::Kind::Entity) {
      int j = seen_slots++;
      if (j == slot) continue;
      if (j < slot) {
        if (j < static_cast<int>(realized_before.size())) {
          for (const auto& w : realized_before[static_cast<size_t>(j)])
            pre.push_back(lower(w));
        } else {
          pre.push_back(lower(serialize(tok)));
        }
      } else {
        post.push_back(lower(serialize(tok)));
      }
      continue;
    }
    std::string s = lower(serialize(tok));
    if (seen_slots <= slot)
      pre.push_back(std::move(s));
    else
      post.push_back(std::move(s));
  }
  return {pre, post};
}

RegSplits extract_reg_dataset(const Corpus& c) {
  RegSplits out;
  std::map<std::string, std::pair<RegDataset*, SplitCounts*>> sinks{
      {"train", {&out.train, &out.stats.train}},
      {"dev", {&out.dev, &out.stats.dev}},
      {"test", {&out.test, &out.stats.test}}};
  std::map<std::string, std::set<std::string>> pair_sets, source_sets;

  for (const Entry& e : c.entries) {
    auto sit = sinks.find(e.split);
    if (sit == sinks.end()) continue;
    auto [ds, counts] = sit->second;
    for (const LexEntry& lex : e.lexes) {
      if (!lex.tmpl || lex.references.empty() ||
          lex.tmpl->slot_count() != static_cast<int>(lex.references.size())) {
        ++counts->skipped;
        continue;
      }
      BoundTemplate bt = *lex.tmpl;
      {
        int slot = 0;
        for (auto& tok : bt.tokens)
          if (tok.kind == TemplateToken::Kind::Entity)
            tok.word = lex.references[static_cast<size_t>(slot++)].entity;
      }
      std::vector<std::vector<std::string>> realized;
      for (size_t slot = 0; slot < lex.references.size(); ++slot) {
        auto [pre, post] = slot_contexts(bt, static_cast<int>(slot), realized);
        ReferenceInstance inst;
        inst.entity = lex.references[slot].entity;
        inst.refex = lex.references[slot].refex;
        inst.pre_context = std::move(pre);
        inst.post_context = std::move(post);
        inst.domain = e.set.domain;
        inst.seen = e.set.seen;
        inst.size = static_cast<int>(e.set.triples.size());
        realized.push_back(inst.refex);

        ++counts->records;
        std::string src = join(inst.pre_context) + "\x01" + join(inst.post_context) +
                          "\x01" + inst.entity;
        if (pair_sets[e.split].insert(src + "\x01" + join(inst.refex)).second)
          ++counts->distinct_pairs;
        if (source_sets[e.split].insert(src).second) ++counts->sources;
        ds->instances.push_back(std::move(inst));
      }
    }
  }
  return out;
}

}  // namespace d2t
