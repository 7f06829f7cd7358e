#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace d2t {

// Whitespace split with light punctuation peeling. Leading brackets/quotes and
// trailing .,;:!?)]}"' become their own tokens; acronyms ("S.S.D.") keep
// their trailing dot and decimals ("1.5") their internal one.
std::vector<std::string> tokenize(std::string_view text);

std::string lower(std::string_view s);
std::vector<std::string> lower(const std::vector<std::string>& tokens);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::vector<std::string> split_ws(std::string_view s);
std::vector<std::string> split_on(std::string_view s, char sep);
std::string strip(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

// "birthPlace" -> {"birth","place"}; also splits on '_' and digits/letters
// boundaries are left alone. Output is lowercased.
std::vector<std::string> camel_case_words(std::string_view s);

// Joins tokens into display text: attaches punctuation, capitalizes sentence
// starts. Inverse-ish of tokenize for the corpus subset.
std::string detokenize(const std::vector<std::string>& tokens);

bool is_ascii_digit(char c);

}  // namespace d2t
