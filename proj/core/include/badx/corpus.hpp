#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "badx/text.hpp"

namespace badx {

enum class SentenceLabel { IntersectionalBiased, Neutral };
const char* to_string(SentenceLabel label);
SentenceLabel sentence_label_from_string(std::string_view s);

struct SentenceRecord {
  std::string id;
  std::string text;
  SentenceLabel label = SentenceLabel::Neutral;
  std::set<std::string> dimensions;
  std::optional<std::string> class_id;

  bool operator==(const SentenceRecord&) const = default;
};

// One intersectional bias axis: two target term sets and two attribute term
// sets, plus template sentences (single "{term}" slot) used to build
// sentence-level stimuli when a response does not mention a side itself.
struct IdentityClass {
  std::string id;
  std::string name;
  std::vector<std::string> targets_1;
  std::vector<std::string> targets_2;
  std::vector<std::string> attributes_1;
  std::vector<std::string> attributes_2;
  std::vector<std::string> attribute_templates;

  bool operator==(const IdentityClass&) const = default;
};

struct Corpus {
  std::vector<SentenceRecord> records;
  std::vector<IdentityClass> classes;
  std::map<std::string, std::string> source_meta;

  bool operator==(const Corpus&) const = default;

  std::size_t count_label(SentenceLabel label) const;
  const IdentityClass* find_class(const std::string& id) const;
};

struct ValidationFinding {
  std::string id;       // record or class id the finding is about
  std::string rule;     // stable machine-readable rule name
  std::string message;

  bool operator==(const ValidationFinding&) const = default;
};
using ValidationReport = std::vector<ValidationFinding>;

// Strict structural parse + invariant enforcement. Unknown fields, enum
// typos and malformed templates are errors, not warnings.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus_json(std::string_view text, const std::string& origin);

// Structural parse only: semantic invariants are left to validate_corpus,
// so a validator can list every finding instead of stopping at the first.
Corpus load_corpus_unchecked(const std::string& path);
Corpus parse_corpus_json_unchecked(std::string_view text,
                                   const std::string& origin);

// Standalone classes file: {"classes":[...]}.
std::vector<IdentityClass> load_classes(const std::string& path);
std::vector<IdentityClass> parse_classes_json(std::string_view text,
                                              const std::string& origin);

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::string& path);

// Semantic invariants as report entries, ordered by id then rule.
ValidationReport validate_corpus(const Corpus& corpus);

// Fraction of records labeled intersectional-biased. Throws on empty.
double compute_iibs(const Corpus& corpus);

enum class LexiconSide { Targets1, Targets2, Attributes1, Attributes2 };
const char* to_string(LexiconSide side);

struct LexiconMention {
  std::string term;  // lexicon spelling, not the surface form
  LexiconSide side;
  CharSpan span;

  bool operator==(const LexiconMention&) const = default;
};

// Case-insensitive whole-word matches of every lexicon term; multi-word
// terms match contiguous token runs; longest-match-first, left-to-right,
// spans never overlap.
std::vector<LexiconMention> find_lexicon_mentions(std::string_view text,
                                                  const IdentityClass& cls);

}  // namespace badx
