#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "badx/corpus.hpp"
#include "badx/error.hpp"
#include "test_support.hpp"

using namespace badx;
using nlohmann::json;

namespace {

json record_json(const std::string& id, const std::string& text,
                 const std::string& label,
                 std::vector<std::string> dims = {}) {
  json r = {{"id", id}, {"text", text}, {"label", label},
            {"dimensions", dims}};
  return r;
}

json small_class_json() {
  return json{{"id", "c1"},
              {"name", "Demo class"},
              {"targets_1", {"black mother", "immigrant nurse"}},
              {"targets_2", {"young executive"}},
              {"attributes_1", {"unqualified", "struggling"}},
              {"attributes_2", {"brilliant", "innovative"}},
              {"attribute_templates",
               {"Most people see {term} in the workplace.",
                "They called it {term} behaviour."}}};
}

std::string corpus_text(const json& records, const json& classes) {
  json j = {{"records", records}, {"classes", classes},
            {"source_meta", json::object()}};
  return j.dump(2);
}

}  // namespace

TEST_CASE("corpus: paper-scale file loads with correct label counts") {
  json records = json::array();
  for (int i = 0; i < 160; ++i)
    records.push_back(record_json("b" + std::to_string(i),
                                  "Sentence " + std::to_string(i),
                                  "intersectional-biased",
                                  {"race", "gender"}));
  for (int i = 0; i < 100; ++i)
    records.push_back(record_json("n" + std::to_string(i),
                                  "Neutral " + std::to_string(i), "neutral"));
  Corpus c = parse_corpus_json(corpus_text(records, json::array()), "mem");
  CHECK(c.records.size() == 260);
  CHECK(c.count_label(SentenceLabel::IntersectionalBiased) == 160);
  CHECK(c.count_label(SentenceLabel::Neutral) == 100);
  // Record order preserved.
  CHECK(c.records.front().id == "b0");
  CHECK(c.records.back().id == "n99");
}

TEST_CASE("corpus: zero records is a valid corpus") {
  Corpus c = parse_corpus_json(corpus_text(json::array(), json::array()),
                               "mem");
  CHECK(c.records.empty());
  CHECK(validate_corpus(c).empty());
}

TEST_CASE("corpus: single-dimension intersectional record is rejected") {
  json records = json::array(
      {record_json("s7", "Some text", "intersectional-biased", {"race"})});
  try {
    parse_corpus_json(corpus_text(records, json::array()), "mem");
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Schema);
    CHECK(std::string(e.what()).find("s7") != std::string::npos);
  }
}

TEST_CASE("corpus: duplicate record id is rejected on load") {
  json records = json::array(
      {record_json("dup", "One", "neutral"), record_json("dup", "Two",
                                                         "neutral")});
  try {
    parse_corpus_json(corpus_text(records, json::array()), "mem");
    FAIL("expected duplicate-id error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateId);
    CHECK(std::string(e.what()).find("dup") != std::string::npos);
  }
}

TEST_CASE("corpus: unknown fields are errors, not warnings") {
  json records = json::array({record_json("r1", "Text", "neutral")});
  records[0]["extra_field"] = 1;
  try {
    parse_corpus_json(corpus_text(records, json::array()), "mem");
    FAIL("expected unknown-key error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownKey);
    CHECK(std::string(e.what()).find("extra_field") != std::string::npos);
  }
}

TEST_CASE("corpus: bad label enum is a schema error") {
  json records = json::array({record_json("r1", "Text", "netural")});
  CHECK_THROWS_AS(parse_corpus_json(corpus_text(records, json::array()),
                                    "mem"),
                  Error);
}

TEST_CASE("corpus: template without placeholder is rejected") {
  json cls = small_class_json();
  cls["attribute_templates"] = {"no placeholder here"};
  CHECK_THROWS_AS(
      parse_corpus_json(corpus_text(json::array(), json::array({cls})),
                        "mem"),
      Error);
}

TEST_CASE("validate_corpus: clean corpus yields an empty report") {
  json records = json::array({
      record_json("a", "First", "neutral"),
      record_json("b", "Second", "intersectional-biased", {"race", "age"}),
      record_json("c", "Third", "neutral"),
  });
  Corpus c = parse_corpus_json_unchecked(
      corpus_text(records, json::array({small_class_json()})), "mem");
  CHECK(validate_corpus(c).empty());
}

TEST_CASE("validate_corpus: duplicate id reported under rule unique-id") {
  Corpus c;
  c.records.push_back({"s1", "One", SentenceLabel::Neutral, {}, {}});
  c.records.push_back({"s1", "Two", SentenceLabel::Neutral, {}, {}});
  ValidationReport report = validate_corpus(c);
  REQUIRE(report.size() == 1);
  CHECK(report[0].id == "s1");
  CHECK(report[0].rule == "unique-id");
}

TEST_CASE("validate_corpus: two violations on one record, stable order") {
  Corpus c;
  // Empty text AND an unresolvable class reference on the same record.
  c.records.push_back({"s1", "   ", SentenceLabel::Neutral, {},
                       std::string("ghost")});
  ValidationReport report = validate_corpus(c);
  REQUIRE(report.size() == 2);
  // Ordered by id then rule: class-ref < text-nonempty.
  CHECK(report[0].rule == "class-ref");
  CHECK(report[1].rule == "text-nonempty");
  CHECK(validate_corpus(c) == report);  // deterministic
}

TEST_CASE("validate_corpus: lexicon overlap and empty sides are findings") {
  Corpus c;
  IdentityClass cls;
  cls.id = "k";
  cls.name = "K";
  cls.targets_1 = {"shared term"};
  cls.targets_2 = {};  // empty side
  cls.attributes_1 = {"Shared Term"};  // case-insensitive clash with targets_1
  cls.attributes_2 = {"fine"};
  c.classes.push_back(cls);
  ValidationReport report = validate_corpus(c);
  bool saw_disjoint = false, saw_empty = false;
  for (const auto& f : report) {
    if (f.rule == "lexicon-disjoint") saw_disjoint = true;
    if (f.rule == "lexicon-nonempty") saw_empty = true;
  }
  CHECK(saw_disjoint);
  CHECK(saw_empty);
}

TEST_CASE("compute_iibs: label proportion with hand-checked values") {
  Corpus c;
  for (int i = 0; i < 4; ++i)
    c.records.push_back({"r" + std::to_string(i), "T",
                         i < 2 ? SentenceLabel::IntersectionalBiased
                               : SentenceLabel::Neutral,
                         {"a", "b"}, {}});
  CHECK(compute_iibs(c) == doctest::Approx(0.5).epsilon(1e-15));

  Corpus all_neutral;
  all_neutral.records.push_back({"x", "T", SentenceLabel::Neutral, {}, {}});
  CHECK(compute_iibs(all_neutral) == 0.0);

  Corpus big;
  for (int i = 0; i < 260; ++i)
    big.records.push_back({"r" + std::to_string(i), "T",
                           i < 130 ? SentenceLabel::IntersectionalBiased
                                   : SentenceLabel::Neutral,
                           {"a", "b"}, {}});
  CHECK(compute_iibs(big) == doctest::Approx(0.50).epsilon(1e-15));
}

TEST_CASE("compute_iibs: empty corpus is an error") {
  CHECK_THROWS_AS(compute_iibs(Corpus{}), Error);
}

TEST_CASE("compute_iibs: permutation invariance and label-flip complement") {
  std::mt19937 rng(7);
  Corpus c;
  for (int i = 0; i < 40; ++i)
    c.records.push_back({"r" + std::to_string(i), "T",
                         rng() % 3 == 0 ? SentenceLabel::IntersectionalBiased
                                        : SentenceLabel::Neutral,
                         {"a", "b"}, {}});
  double base = compute_iibs(c);

  Corpus shuffled = c;
  std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
  CHECK(compute_iibs(shuffled) == base);

  Corpus flipped = c;
  for (auto& r : flipped.records)
    r.label = r.label == SentenceLabel::Neutral
                  ? SentenceLabel::IntersectionalBiased
                  : SentenceLabel::Neutral;
  CHECK(compute_iibs(flipped) == doctest::Approx(1.0 - base).epsilon(1e-15));
}

TEST_CASE("find_lexicon_mentions: multi-word term matched with span") {
  IdentityClass cls;
  cls.id = "c";
  cls.targets_1 = {"Black woman"};
  cls.targets_2 = {"white man"};
  cls.attributes_1 = {"strong"};
  cls.attributes_2 = {"weak"};

  std::string text = "The Black woman led.";
  auto mentions = find_lexicon_mentions(text, cls);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].term == "Black woman");
  CHECK(mentions[0].side == LexiconSide::Targets1);
  CHECK(text.substr(mentions[0].span.begin, mentions[0].span.size()) ==
        "Black woman");
}

TEST_CASE("find_lexicon_mentions: no terms means empty list") {
  IdentityClass cls;
  cls.targets_1 = {"alpha"};
  cls.targets_2 = {"beta"};
  cls.attributes_1 = {"gamma"};
  cls.attributes_2 = {"delta"};
  CHECK(find_lexicon_mentions("Nothing relevant here.", cls).empty());
}

TEST_CASE("find_lexicon_mentions: longest match wins over substring term") {
  IdentityClass cls;
  cls.targets_1 = {"software engineer"};
  cls.targets_2 = {"engineer"};
  cls.attributes_1 = {"capable"};
  cls.attributes_2 = {"incapable"};
  auto mentions =
      find_lexicon_mentions("A software engineer spoke first.", cls);
  REQUIRE(mentions.size() == 1);
  CHECK(mentions[0].term == "software engineer");
  CHECK(mentions[0].side == LexiconSide::Targets1);
}

TEST_CASE("find_lexicon_mentions: case-insensitive, whole words only") {
  IdentityClass cls;
  cls.targets_1 = {"nurse"};
  cls.targets_2 = {"doctor"};
  cls.attributes_1 = {"kind"};
  cls.attributes_2 = {"harsh"};
  auto mentions = find_lexicon_mentions(
      "The NURSE met a nursery group; the Nurse smiled.", cls);
  // "nursery" must not match; NURSE and Nurse must.
  REQUIRE(mentions.size() == 2);
  CHECK(mentions[0].term == "nurse");
  CHECK(mentions[1].term == "nurse");
}

TEST_CASE("find_lexicon_mentions: spans never overlap, substrings echo terms") {
  IdentityClass cls;
  cls.targets_1 = {"deaf student", "student"};
  cls.targets_2 = {"hearing tutor"};
  cls.attributes_1 = {"diligent"};
  cls.attributes_2 = {"lazy"};
  std::string text =
      "One deaf student and another student met a hearing tutor; both looked "
      "diligent.";
  auto mentions = find_lexicon_mentions(text, cls);
  REQUIRE(mentions.size() >= 3);
  for (std::size_t i = 1; i < mentions.size(); ++i)
    CHECK(mentions[i - 1].span.end <= mentions[i].span.begin);
  for (const auto& m : mentions) {
    std::string got = std::string(text.substr(m.span.begin, m.span.size()));
    CHECK(iequals_ascii(got, m.term));
  }
}

TEST_CASE("corpus: serialize then parse round-trips exactly") {
  json records = json::array({
      record_json("a", "Émigré text with unicode ✓", "neutral"),
      record_json("b", "Second", "intersectional-biased",
                  {"race", "disability", "age"}),
  });
  records[1]["class_id"] = "c1";
  std::string text =
      corpus_text(records, json::array({small_class_json()}));
  Corpus first = parse_corpus_json(text, "mem");
  Corpus second = parse_corpus_json(serialize_corpus(first), "roundtrip");
  CHECK(first == second);
}

TEST_CASE("corpus: save and load from disk") {
  testsup::TempDir tmp;
  json records = json::array({record_json("a", "On disk", "neutral")});
  Corpus c = parse_corpus_json(corpus_text(records, json::array()), "mem");
  save_corpus(c, tmp.sub("c.json"));
  CHECK(load_corpus(tmp.sub("c.json")) == c);
}

TEST_CASE("corpus: missing file is an io error") {
  try {
    load_corpus("/nonexistent/badx-test.json");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("classes: standalone classes file loads") {
  testsup::TempDir tmp;
  json j = {{"classes", json::array({small_class_json()})}};
  testsup::write_file(tmp.sub("classes.json"), j.dump());
  auto classes = load_classes(tmp.sub("classes.json"));
  REQUIRE(classes.size() == 1);
  CHECK(classes[0].id == "c1");
  CHECK(classes[0].targets_1.size() == 2);
}

TEST_CASE("classes: shipped default lexicons are valid and well-formed") {
  auto classes = load_classes(testsup::data_path(
      "classes/default_classes.json"));
  CHECK(classes.size() == 6);
  Corpus holder;
  holder.classes = classes;
  CHECK(validate_corpus(holder).empty());
  for (const auto& cls : classes) {
    CHECK(!cls.attribute_templates.empty());
    CHECK(cls.targets_1.size() >= 3);
    CHECK(cls.targets_2.size() >= 3);
  }
}

TEST_CASE("corpus: shipped sample corpus is valid with IIBS 0.5") {
  Corpus c = load_corpus(testsup::data_path("corpus/sample_corpus.json"));
  CHECK(validate_corpus(c).empty());
  CHECK(compute_iibs(c) == doctest::Approx(0.5).epsilon(1e-15));
}
