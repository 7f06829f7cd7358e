#include "d2t/reg.hpp"

#include <array>

#include "d2t/corpus.hpp"
#include "d2t/strings.hpp"

namespace d2t {

namespace {

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

constexpr std::array<const char*, 12> kMonths = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_ascii_digit(c)) return false;
  return true;
}

}  // namespace

std::string only_names(const std::string& entity) {
  std::string s = strip_quotes(entity);
  for (char& c : s)
    if (c == '_') c = ' ';
  return s;
}

std::vector<std::string> only_names_tokens(const std::string& entity) {
  return tokenize(only_names(entity));
}

std::optional<std::string> realize_literal(const std::string& entity) {
  std::string s = strip_quotes(entity);
  if (s.size() == 10 && s[4] == '-' && s[7] == '-' && all_digits(s.substr(0, 4)) &&
      all_digits(s.substr(5, 2)) && all_digits(s.substr(8, 2))) {
    int month = std::stoi(s.substr(5, 2));
    int day = std::stoi(s.substr(8, 2));
    if (month >= 1 && month <= 12 && day >= 1 && day <= 31)
      return std::string(kMonths[static_cast<size_t>(month - 1)]) + " " +
             std::to_string(day) + ", " + s.substr(0, 4);
  }
  std::string_view v = s;
  if (!v.empty() && (v.front() == '+' || v.front() == '-')) v.remove_prefix(1);
  auto dot = v.find('.');
  if (dot == std::string_view::npos ? all_digits(v)
                                    : all_digits(v.substr(0, dot)) &&
                                          all_digits(v.substr(dot + 1)))
    return s;
  return std::nullopt;
}

ReferencedTemplate reg_resolve(const BoundTemplate& bt, const RegGenerator& gen,
                               const std::set<std::string>& seen_entities,
                               std::vector<RegSlotTrace>* trace) {
  std::vector<std::vector<std::string>> realized;
  std::vector<RegSlotTrace> slots;
  int slot = 0;
  for (const auto& tok : bt.tokens) {
    if (tok.kind != TemplateToken::Kind::Entity) continue;
    RegSlotTrace st;
    st.entity = tok.word;
    if (auto lit = realize_literal(tok.word)) {
      st.policy = SlotPolicy::Literal;
      st.tokens = tokenize(*lit);
    } else if (gen && seen_entities.count(tok.word) > 0) {
      auto [pre, post] = slot_contexts(bt, slot, realized);
      try {
        st.tokens = gen(pre, post, tok.word);
        st.policy = SlotPolicy::Neural;
      } catch (const std::exception&) {
        st.tokens.clear();
      }
      if (st.tokens.empty()) {
        st.policy = SlotPolicy::OnlyNames;
        st.tokens = only_names_tokens(tok.word);
      }
    } else {
      st.policy = SlotPolicy::OnlyNames;
      st.tokens = only_names_tokens(tok.word);
    }
    realized.push_back(st.tokens);
    slots.push_back(std::move(st));
    ++slot;
  }

  ReferencedTemplate out;
  size_t next = 0;
  for (const auto& tok : bt.tokens) {
    if (tok.kind != TemplateToken::Kind::Entity) {
      out.tokens.push_back(tok);
      continue;
    }
    for (const std::string& w : slots[next].tokens)
      out.tokens.push_back(TemplateToken::make_word(w));
    ++next;
  }
  if (trace) *trace = std::move(slots);
  return out;
}

std::set<std::string> reference_entities(const RegDataset& train) {
  std::set<std::string> out;
  for (const ReferenceInstance& inst : train.instances) out.insert(inst.entity);
  return out;
}

}  // namespace d2t
