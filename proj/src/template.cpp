#include "d2t/template.hpp"

#include <algorithm>
#include <cctype>

#include "d2t/strings.hpp"
#include "d2t/types.hpp"

namespace d2t {

TemplateToken TemplateToken::make_word(std::string w) {
  TemplateToken t;
  t.kind = Kind::Word;
  t.word = std::move(w);
  return t;
}

TemplateToken TemplateToken::make_entity(int index) {
  TemplateToken t;
  t.kind = Kind::Entity;
  t.entity_index = index;
  return t;
}

TemplateToken TemplateToken::make_verb(VerbFeatures f) {
  TemplateToken t;
  t.kind = Kind::Verb;
  t.verb = std::move(f);
  return t;
}

TemplateToken TemplateToken::make_det(std::string form) {
  TemplateToken t;
  t.kind = Kind::Determiner;
  t.det_form = std::move(form);
  return t;
}

int Template::max_entity_index() const {
  int m = 0;
  for (const auto& t : tokens)
    if (t.kind == TemplateToken::Kind::Entity) m = std::max(m, t.entity_index);
  return m;
}

int Template::slot_count() const {
  int n = 0;
  for (const auto& t : tokens)
    if (t.kind == TemplateToken::Kind::Entity) ++n;
  return n;
}

std::vector<std::string> template_tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  int bracket_depth = 0;
  for (char c : line) {
    if (c == '[') ++bracket_depth;
    if (c == ']' && bracket_depth > 0) --bracket_depth;
    if ((c == ' ' || c == '\t') && bracket_depth == 0) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else if ((c == ' ' || c == '\t') && bracket_depth > 0) {
      // whitespace inside a tag is dropped so the tag stays one token
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

bool parse_attributes(const std::string& body, int pos,
                      std::vector<std::pair<std::string, std::string>>& out) {
  for (const std::string& piece : split_on(body, ',')) {
    auto eq = piece.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= piece.size()) return false;
    out.emplace_back(piece.substr(0, eq), piece.substr(eq + 1));
  }
  (void)pos;
  return true;
}

TemplateToken parse_tag(const std::string& tok, int pos) {
  auto lb = tok.find('[');
  std::string name = tok.substr(0, lb);
  if (tok.back() != ']')
    throw TemplateParseError("unterminated tag '" + tok + "'", pos);
  std::string body = tok.substr(lb + 1, tok.size() - lb - 2);
  std::vector<std::pair<std::string, std::string>> attrs;
  if (!parse_attributes(body, pos, attrs))
    throw TemplateParseError("malformed attribute list in '" + tok + "'", pos);
  if (name == "VP") {
    VerbFeatures f;
    for (auto& [k, v] : attrs) {
      if (k == "aspect") f.aspect = v;
      else if (k == "tense") f.tense = v;
      else if (k == "voice") f.voice = v;
      else if (k == "person") f.person = v;
      else if (k == "number") f.number = v;
      else throw TemplateParseError("unknown VP attribute '" + k + "'", pos);
    }
    return TemplateToken::make_verb(std::move(f));
  }
  if (name == "DT") {
    std::string form;
    for (auto& [k, v] : attrs) {
      if (k == "form") form = v;
      else throw TemplateParseError("unknown DT attribute '" + k + "'", pos);
    }
    if (form.empty()) throw TemplateParseError("DT tag without form", pos);
    return TemplateToken::make_det(std::move(form));
  }
  throw TemplateParseError("unknown bracketed tag '" + name + "'", pos);
}

}  // namespace

Template template_parse(const std::vector<std::string>& tokens) {
  Template out;
  out.tokens.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    int pos = static_cast<int>(i);
    if (tok.empty()) continue;
    if (starts_with(tok, "ENTITY-")) {
      std::string num = tok.substr(7);
      if (num.empty() || !std::all_of(num.begin(), num.end(), is_ascii_digit))
        throw TemplateParseError("bad entity tag '" + tok + "'", pos);
      int idx = std::stoi(num);
      if (idx < 1) throw TemplateParseError("entity index must be >= 1", pos);
      out.tokens.push_back(TemplateToken::make_entity(idx));
    } else if (tok.find('[') != std::string::npos &&
               std::isupper(static_cast<unsigned char>(tok[0]))) {
      out.tokens.push_back(parse_tag(tok, pos));
    } else {
      out.tokens.push_back(TemplateToken::make_word(tok));
    }
  }
  return out;
}

Template template_parse(const std::string& line) {
  return template_parse(template_tokenize(line));
}

std::string serialize(const TemplateToken& tok) {
  switch (tok.kind) {
    case TemplateToken::Kind::Word:
      return tok.word;
    case TemplateToken::Kind::Entity:
      if (!tok.word.empty()) return tok.word;  // bound slot
      return "ENTITY-" + std::to_string(tok.entity_index);
    case TemplateToken::Kind::Verb: {
      const VerbFeatures& f = tok.verb;
      return "VP[aspect=" + f.aspect + ",tense=" + f.tense + ",voice=" + f.voice +
             ",person=" + f.person + ",number=" + f.number + "]";
    }
    case TemplateToken::Kind::Determiner:
      return "DT[form=" + tok.det_form + "]";
  }
  return {};
}

std::vector<std::string> serialize_tokens(const Template& t) {
  std::vector<std::string> out;
  out.reserve(t.tokens.size());
  for (const auto& tok : t.tokens) out.push_back(serialize(tok));
  return out;
}

std::string serialize(const Template& t) { return join(serialize_tokens(t)); }

std::vector<std::string> distinct_entities(const std::vector<Triple>& ordered) {
  std::vector<std::string> out;
  auto add = [&](const std::string& e) {
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  };
  for (const Triple& t : ordered) {
    add(t.subject);
    add(t.object);
  }
  return out;
}

BoundTemplate bind_entities(const Template& t, const std::vector<Triple>& ordered) {
  std::vector<std::string> entities = distinct_entities(ordered);
  BoundTemplate out = t;
  for (auto& tok : out.tokens) {
    if (tok.kind != TemplateToken::Kind::Entity) continue;
    if (tok.entity_index < 1 || tok.entity_index > static_cast<int>(entities.size()))
      throw BindError("entity tag ENTITY-" + std::to_string(tok.entity_index) +
                      " exceeds the " + std::to_string(entities.size()) +
                      " distinct entities of the ordered set");
    tok.word = entities[static_cast<size_t>(tok.entity_index - 1)];
  }
  return out;
}

}  // namespace d2t
