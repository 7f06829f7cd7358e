#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace d2t {

struct Triple;

// Attribute bundle of a VP tag. Missing attributes hold "null".
struct VerbFeatures {
  std::string aspect = "null";
  std::string tense = "null";
  std::string voice = "null";
  std::string person = "null";
  std::string number = "null";

  auto operator<=>(const VerbFeatures&) const = default;
};

struct TemplateToken {
  enum class Kind { Word, Entity, Verb, Determiner };

  Kind kind = Kind::Word;
  std::string word;      // Word: surface form; bound Entity: entity identifier
  int entity_index = 0;  // Entity: 1-based first-occurrence rank
  VerbFeatures verb;     // Verb
  std::string det_form;  // Determiner: "defined" | "undefined" | ...

  bool operator==(const TemplateToken&) const = default;

  static TemplateToken make_word(std::string w);
  static TemplateToken make_entity(int index);
  static TemplateToken make_verb(VerbFeatures f);
  static TemplateToken make_det(std::string form);
};

// Token sequence mixing words with ENTITY-N, VP[...] and DT[...] tags.
struct Template {
  std::vector<TemplateToken> tokens;

  bool operator==(const Template&) const = default;

  int max_entity_index() const;
  int slot_count() const;  // number of Entity tokens
};

// Template whose Entity tokens carry the entity identifier in `word`.
using BoundTemplate = Template;

// Template with every entity slot replaced by plain Word tokens.
using ReferencedTemplate = Template;

class TemplateParseError : public std::runtime_error {
 public:
  TemplateParseError(const std::string& msg, int position)
      : std::runtime_error(msg + " (token " + std::to_string(position) + ")"),
        position(position) {}
  int position;
};

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits a template line into tokens; whitespace inside [...] is dropped so a
// tag always forms a single token.
std::vector<std::string> template_tokenize(const std::string& line);

Template template_parse(const std::vector<std::string>& tokens);
Template template_parse(const std::string& line);

std::string serialize(const TemplateToken& tok);
std::vector<std::string> serialize_tokens(const Template& t);
std::string serialize(const Template& t);

// Distinct entity identifiers over (subject, object) pairs in triple order.
std::vector<std::string> distinct_entities(const std::vector<Triple>& ordered);

// Replaces ENTITY-k with the k-th distinct entity of the ordered set.
// Throws BindError when a tag index exceeds the distinct entity count.
BoundTemplate bind_entities(const Template& t, const std::vector<Triple>& ordered);

}  // namespace d2t
