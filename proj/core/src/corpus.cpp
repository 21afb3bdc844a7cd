#include "badx/corpus.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "badx/error.hpp"
#include "json_util.hpp"

namespace badx {

const char* to_string(SentenceLabel label) {
  return label == SentenceLabel::IntersectionalBiased ? "intersectional-biased"
                                                      : "neutral";
}

SentenceLabel sentence_label_from_string(std::string_view s) {
  if (s == "intersectional-biased") return SentenceLabel::IntersectionalBiased;
  if (s == "neutral") return SentenceLabel::Neutral;
  throw Error(ErrorKind::Schema,
              "unknown label \"" + std::string(s) +
                  "\" (expected intersectional-biased or neutral)");
}

const char* to_string(LexiconSide side) {
  switch (side) {
    case LexiconSide::Targets1: return "targets_1";
    case LexiconSide::Targets2: return "targets_2";
    case LexiconSide::Attributes1: return "attributes_1";
    case LexiconSide::Attributes2: return "attributes_2";
  }
  return "unknown";
}

std::size_t Corpus::count_label(SentenceLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [&](const SentenceRecord& r) { return r.label == label; }));
}

const IdentityClass* Corpus::find_class(const std::string& id) const {
  for (const auto& c : classes)
    if (c.id == id) return &c;
  return nullptr;
}

namespace {

using jsonu::json;

std::vector<std::string> string_list(const json& arr, const std::string& ctx) {
  std::vector<std::string> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_string())
      throw Error(ErrorKind::Schema, ctx + " must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

SentenceRecord parse_record(const json& j, std::size_t index) {
  std::string ctx = "records[" + std::to_string(index) + "]";
  jsonu::require_keys(j, ctx, {"id", "text", "label", "dimensions"},
                      {"class_id"});
  SentenceRecord rec;
  rec.id = jsonu::get_string(j, "id", ctx);
  rec.text = jsonu::get_string(j, "text", ctx);
  rec.label = sentence_label_from_string(jsonu::get_string(j, "label", ctx));
  for (auto& d : string_list(jsonu::get_array(j, "dimensions", ctx),
                             ctx + ".dimensions"))
    rec.dimensions.insert(std::move(d));
  if (j.contains("class_id")) {
    if (!j.at("class_id").is_string())
      throw Error(ErrorKind::Schema, ctx + ".class_id must be a string");
    rec.class_id = j.at("class_id").get<std::string>();
  }
  return rec;
}

IdentityClass parse_class(const json& j, std::size_t index) {
  std::string ctx = "classes[" + std::to_string(index) + "]";
  jsonu::require_keys(j, ctx,
                      {"id", "name", "targets_1", "targets_2", "attributes_1",
                       "attributes_2", "attribute_templates"});
  IdentityClass cls;
  cls.id = jsonu::get_string(j, "id", ctx);
  cls.name = jsonu::get_string(j, "name", ctx);
  cls.targets_1 =
      string_list(jsonu::get_array(j, "targets_1", ctx), ctx + ".targets_1");
  cls.targets_2 =
      string_list(jsonu::get_array(j, "targets_2", ctx), ctx + ".targets_2");
  cls.attributes_1 = string_list(jsonu::get_array(j, "attributes_1", ctx),
                                 ctx + ".attributes_1");
  cls.attributes_2 = string_list(jsonu::get_array(j, "attributes_2", ctx),
                                 ctx + ".attributes_2");
  cls.attribute_templates =
      string_list(jsonu::get_array(j, "attribute_templates", ctx),
                  ctx + ".attribute_templates");
  return cls;
}

Corpus parse_corpus_object(const json& root, const std::string& origin,
                           bool records_required) {
  if (records_required)
    jsonu::require_keys(root, origin, {"records"},
                        {"classes", "source_meta"});
  else
    jsonu::require_keys(root, origin, {"classes"}, {"source_meta"});

  Corpus corpus;
  if (root.contains("records")) {
    const auto& records = root.at("records");
    if (!records.is_array())
      throw Error(ErrorKind::Schema, origin + ": records must be an array");
    for (std::size_t i = 0; i < records.size(); ++i)
      corpus.records.push_back(parse_record(records.at(i), i));
  }
  if (root.contains("classes")) {
    const auto& classes = root.at("classes");
    if (!classes.is_array())
      throw Error(ErrorKind::Schema, origin + ": classes must be an array");
    for (std::size_t i = 0; i < classes.size(); ++i)
      corpus.classes.push_back(parse_class(classes.at(i), i));
  }
  if (root.contains("source_meta")) {
    const auto& meta = root.at("source_meta");
    if (!meta.is_object())
      throw Error(ErrorKind::Schema, origin + ": source_meta must be an object");
    for (const auto& [k, v] : meta.items()) {
      if (!v.is_string())
        throw Error(ErrorKind::Schema,
                    origin + ": source_meta values must be strings");
      corpus.source_meta[k] = v.get<std::string>();
    }
  }
  return corpus;
}

// Validation that throws: first finding becomes the error.
void enforce(const Corpus& corpus) {
  ValidationReport report = validate_corpus(corpus);
  if (report.empty()) return;
  const ValidationFinding& f = report.front();
  ErrorKind kind =
      f.rule == "unique-id" ? ErrorKind::DuplicateId : ErrorKind::Schema;
  throw Error(kind, "\"" + f.id + "\": " + f.message);
}

std::size_t count_occurrences(std::string_view haystack,
                              std::string_view needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

Corpus parse_corpus_json(std::string_view text, const std::string& origin) {
  json root = jsonu::parse_text(text, origin);
  Corpus corpus = parse_corpus_object(root, origin, /*records_required=*/true);
  enforce(corpus);
  return corpus;
}

Corpus load_corpus(const std::string& path) {
  return parse_corpus_json(jsonu::read_text_file(path), path);
}

Corpus parse_corpus_json_unchecked(std::string_view text,
                                   const std::string& origin) {
  json root = jsonu::parse_text(text, origin);
  return parse_corpus_object(root, origin, /*records_required=*/true);
}

Corpus load_corpus_unchecked(const std::string& path) {
  return parse_corpus_json_unchecked(jsonu::read_text_file(path), path);
}

std::vector<IdentityClass> load_classes(const std::string& path) {
  return parse_classes_json(jsonu::read_text_file(path), path);
}

std::vector<IdentityClass> parse_classes_json(std::string_view text,
                                              const std::string& origin) {
  json root = jsonu::parse_text(text, origin);
  Corpus holder =
      parse_corpus_object(root, origin, /*records_required=*/false);
  enforce(holder);
  return holder.classes;
}

std::string serialize_corpus(const Corpus& corpus) {
  json root;
  root["records"] = json::array();
  for (const auto& rec : corpus.records) {
    json j;
    j["id"] = rec.id;
    j["text"] = rec.text;
    j["label"] = to_string(rec.label);
    j["dimensions"] = rec.dimensions;  // sets serialize sorted
    if (rec.class_id) j["class_id"] = *rec.class_id;
    root["records"].push_back(std::move(j));
  }
  root["classes"] = json::array();
  for (const auto& cls : corpus.classes) {
    json j;
    j["id"] = cls.id;
    j["name"] = cls.name;
    j["targets_1"] = cls.targets_1;
    j["targets_2"] = cls.targets_2;
    j["attributes_1"] = cls.attributes_1;
    j["attributes_2"] = cls.attributes_2;
    j["attribute_templates"] = cls.attribute_templates;
    root["classes"].push_back(std::move(j));
  }
  root["source_meta"] = corpus.source_meta;
  return root.dump(2) + "\n";
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  jsonu::write_text_file(path, serialize_corpus(corpus));
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  auto add = [&](const std::string& id, const char* rule, std::string msg) {
    report.push_back({id, rule, std::move(msg)});
  };

  std::set<std::string> record_ids;
  for (const auto& rec : corpus.records) {
    if (!record_ids.insert(rec.id).second)
      add(rec.id, "unique-id", "record id appears more than once");
    if (trim_view(rec.text).empty())
      add(rec.id, "text-nonempty", "text is empty after trimming");
    if (rec.label == SentenceLabel::IntersectionalBiased &&
        rec.dimensions.size() < 2)
      add(rec.id, "dimensions-min",
          "intersectional-biased records need at least 2 identity dimensions, "
          "got " +
              std::to_string(rec.dimensions.size()));
    if (rec.class_id && corpus.find_class(*rec.class_id) == nullptr)
      add(rec.id, "class-ref",
          "class_id \"" + *rec.class_id + "\" does not resolve to a class");
  }

  std::set<std::string> class_ids;
  for (const auto& cls : corpus.classes) {
    if (!class_ids.insert(cls.id).second)
      add(cls.id, "unique-id", "class id appears more than once");

    const std::pair<const char*, const std::vector<std::string>*> sides[] = {
        {"targets_1", &cls.targets_1},
        {"targets_2", &cls.targets_2},
        {"attributes_1", &cls.attributes_1},
        {"attributes_2", &cls.attributes_2},
    };
    std::map<std::string, const char*> seen_terms;  // lowercased -> side
    for (const auto& [side_name, terms] : sides) {
      if (terms->empty())
        add(cls.id, "lexicon-nonempty",
            std::string(side_name) + " must not be empty");
      for (const auto& term : *terms) {
        std::string folded = to_lower_ascii(term);
        auto [it, inserted] = seen_terms.emplace(folded, side_name);
        if (!inserted && it->second != std::string_view(side_name))
          add(cls.id, "lexicon-disjoint",
              "term \"" + term + "\" appears in both " + it->second + " and " +
                  side_name);
      }
    }

    for (const auto& tpl : cls.attribute_templates) {
      std::size_t slots = count_occurrences(tpl, "{term}");
      if (slots != 1)
        add(cls.id, "template-slot",
            "template \"" + tpl + "\" has " + std::to_string(slots) +
                " {term} slots, expected exactly 1");
    }
  }

  std::sort(report.begin(), report.end(),
            [](const ValidationFinding& a, const ValidationFinding& b) {
              return std::tie(a.id, a.rule, a.message) <
                     std::tie(b.id, b.rule, b.message);
            });
  return report;
}

double compute_iibs(const Corpus& corpus) {
  if (corpus.records.empty())
    throw Error(ErrorKind::EmptyCorpus,
                "IIBS is undefined on a corpus with no records");
  return static_cast<double>(
             corpus.count_label(SentenceLabel::IntersectionalBiased)) /
         static_cast<double>(corpus.records.size());
}

namespace {

struct TermPattern {
  std::vector<std::string> tokens;  // lowercased token sequence
  std::string term;                 // lexicon spelling
  LexiconSide side;
};

bool gap_is_whitespace(std::string_view text, std::size_t from,
                       std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
  }
  return true;
}

}  // namespace

std::vector<LexiconMention> find_lexicon_mentions(std::string_view text,
                                                  const IdentityClass& cls) {
  std::vector<TermPattern> patterns;
  auto add_side = [&](const std::vector<std::string>& terms,
                      LexiconSide side) {
    for (const auto& term : terms) {
      std::vector<std::string> toks;
      for (const auto& t : word_tokens(term))
        toks.push_back(to_lower_ascii(t.text));
      if (!toks.empty()) patterns.push_back({std::move(toks), term, side});
    }
  };
  add_side(cls.targets_1, LexiconSide::Targets1);
  add_side(cls.targets_2, LexiconSide::Targets2);
  add_side(cls.attributes_1, LexiconSide::Attributes1);
  add_side(cls.attributes_2, LexiconSide::Attributes2);

  // Longest patterns first so the longest candidate wins at each position;
  // side order breaks exact ties deterministically.
  std::stable_sort(patterns.begin(), patterns.end(),
                   [](const TermPattern& a, const TermPattern& b) {
                     return a.tokens.size() > b.tokens.size();
                   });

  std::vector<WordToken> tokens = word_tokens(text);
  std::vector<std::string> folded;
  folded.reserve(tokens.size());
  for (const auto& t : tokens) folded.push_back(to_lower_ascii(t.text));

  std::vector<LexiconMention> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const TermPattern* hit = nullptr;
    for (const auto& pattern : patterns) {
      std::size_t len = pattern.tokens.size();
      if (i + len > tokens.size()) continue;
      bool match = true;
      for (std::size_t k = 0; k < len && match; ++k)
        match = folded[i + k] == pattern.tokens[k];
      // Multi-word terms must be separated by whitespace only, so the
      // reported span reads as the term itself.
      for (std::size_t k = 1; k < len && match; ++k)
        match = gap_is_whitespace(text, tokens[i + k - 1].end,
                                  tokens[i + k].begin);
      if (match) {
        hit = &pattern;
        break;
      }
    }
    if (hit) {
      std::size_t len = hit->tokens.size();
      out.push_back(
          {hit->term, hit->side, {tokens[i].begin, tokens[i + len - 1].end}});
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace badx
