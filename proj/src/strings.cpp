#include "d2t/strings.hpp"

#include <algorithm>
#include <cctype>

namespace d2t {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_open_punct(char c) { return c == '(' || c == '[' || c == '{' || c == '"'; }

bool is_close_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case ')': case ']': case '}': case '"': case '%':
      return true;
    default:
      return false;
  }
}

// "S.S.D." / "U.S." style: alternating letter-dot groups.
bool is_acronym(std::string_view s) {
  if (s.size() < 2 || s.back() != '.') return false;
  bool expect_letter = true;
  for (char c : s) {
    if (expect_letter) {
      if (!std::isalpha(static_cast<unsigned char>(c))) return false;
    } else if (c != '.') {
      return false;
    }
    expect_letter = !expect_letter;
  }
  return true;
}


}  // namespace

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string strip(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& chunk : split_ws(text)) {
    std::string_view v = chunk;
    std::vector<std::string> trailing;
    while (!v.empty() && is_open_punct(v.front()) && v.size() > 1) {
      out.emplace_back(1, v.front());
      v.remove_prefix(1);
    }
    while (!v.empty() && is_close_punct(v.back()) && v.size() > 1) {
      if (v.back() == '.' && is_acronym(v)) break;
      trailing.emplace_back(1, v.back());
      v.remove_suffix(1);
    }
    if (!v.empty()) out.emplace_back(v);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> lower(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lower(std::string_view(t)));
  return out;
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.append(sep);
    out.append(tokens[i]);
  }
  return out;
}

std::vector<std::string> camel_case_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(lower(cur));
      cur.clear();
    }
  };
  for (char c : s) {
    if (c == '_' || c == ' ') {
      flush();
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      flush();
      cur.push_back(c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool capitalize_next = true;
  bool suppress_space = false;
  for (const std::string& raw : tokens) {
    if (raw.empty()) continue;
    std::string tok = raw;
    bool attach_left = tok.size() == 1 && is_close_punct(tok[0]) && tok[0] != '"';
    if (!out.empty() && !attach_left && !suppress_space) out.push_back(' ');
    suppress_space = tok.size() == 1 && (tok[0] == '(' || tok[0] == '[' || tok[0] == '{');
    if (capitalize_next) {
      for (char& c : tok) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
          c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
          capitalize_next = false;
          break;
        }
        if (is_ascii_digit(c)) {
          capitalize_next = false;
          break;
        }
      }
    }
    out += tok;
    if (tok == "." || tok == "!" || tok == "?") capitalize_next = true;
  }
  return out;
}

}  // namespace d2t
