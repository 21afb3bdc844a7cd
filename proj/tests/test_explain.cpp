// Token attribution tests: tokenizer, mask generation, the weighted-ridge
// surrogate (against closed forms where the design is small enough), and
// cross-response term aggregation.
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"

#include "badx/error.hpp"
#include "badx/explain.hpp"
#include "test_support.hpp"

using namespace badx;

namespace {

int count_occurrences(const std::string& haystack, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

std::size_t index_of(const std::vector<std::string>& tokens,
                     const std::string& t, std::size_t nth = 0) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == t && seen++ == nth) return i;
  return tokens.size();
}

}  // namespace

TEST_CASE("tokenize: whitespace split with edge punctuation stripped") {
  CHECK(tokenize("Hello, world!") ==
        std::vector<std::string>{"Hello", "world"});
  CHECK(tokenize("  (really?)   maybe...\tnot\n") ==
        std::vector<std::string>{"really", "maybe", "not"});
  // Interior punctuation survives; casing is preserved; bytes >= 0x80 are
  // word bytes, so UTF-8 text is kept whole.
  CHECK(tokenize("Don't stop -- *émigré* 42%") ==
        std::vector<std::string>{"Don't", "stop", "émigré", "42"});
  CHECK(tokenize("--- ... !!!").empty());
  CHECK(tokenize("").empty());
}

TEST_CASE("perturb: first mask is the full text, the rest are seeded draws") {
  auto tokens = tokenize("one two three four five six");
  PerturbConfig cfg;
  cfg.n_samples = 64;
  auto masks = perturb(tokens, cfg);
  REQUIRE(masks.size() == 64);
  CHECK(masks[0] == Mask(tokens.size(), 1));
  for (const auto& m : masks) CHECK(m.size() == tokens.size());

  // Deterministic for a seed, different across seeds.
  CHECK(perturb(tokens, cfg) == masks);
  PerturbConfig other = cfg;
  other.seed = 7;
  CHECK(perturb(tokens, other) != masks);
}

TEST_CASE("perturb: empirical keep rate tracks keep_prob") {
  auto tokens = tokenize("a b c d e f g h i j");
  PerturbConfig cfg;
  cfg.n_samples = 10000;
  cfg.keep_prob = 0.7;
  auto masks = perturb(tokens, cfg);
  double kept = 0.0, total = 0.0;
  for (std::size_t i = 1; i < masks.size(); ++i) {  // skip the all-ones mask
    for (auto bit : masks[i]) kept += bit;
    total += static_cast<double>(masks[i].size());
  }
  double rate = kept / total;
  CHECK(rate > 0.68);
  CHECK(rate < 0.72);
}

TEST_CASE("perturb: invalid inputs are rejected") {
  auto tokens = tokenize("a b");
  PerturbConfig cfg;
  CHECK_THROWS_AS(perturb({}, cfg), Error);
  cfg.n_samples = 0;
  CHECK_THROWS_AS(perturb(tokens, cfg), Error);
  cfg.n_samples = 10;
  cfg.keep_prob = 0.0;
  CHECK_THROWS_AS(perturb(tokens, cfg), Error);
  cfg.keep_prob = 1.5;
  CHECK_THROWS_AS(perturb(tokens, cfg), Error);
}

TEST_CASE("apply_mask: kept tokens joined by single spaces") {
  std::vector<std::string> tokens{"alpha", "beta", "gamma"};
  CHECK(apply_mask(tokens, {1, 1, 1}) == "alpha beta gamma");
  CHECK(apply_mask(tokens, {1, 0, 1}) == "alpha gamma");
  CHECK(apply_mask(tokens, {0, 0, 0}) == "");
  // A short mask only covers its own prefix.
  CHECK(apply_mask(tokens, {0, 1}) == "beta");
}

TEST_CASE("lime_attribute: constant score collapses onto the intercept") {
  // 0.25 is a power of two, so the weighted mean of a constant response is
  // exact and the zero-spread branch is taken deterministically.
  auto att = lime_attribute(
      "nothing here moves the needle at all",
      [](const std::string&) { return 0.25; }, PerturbConfig{});
  CHECK(att.tokens.size() == 7);
  REQUIRE(att.weights.size() == att.tokens.size());
  for (double w : att.weights) CHECK(std::abs(w) < 1e-9);
  CHECK(std::abs(att.intercept - 0.25) < 1e-9);
  CHECK(att.fit_r2 == 1.0);  // zero spread to explain
}

TEST_CASE("lime_attribute: occurrence-counting score ranks the counted word") {
  std::string text = "the elite group and elite members lead here";
  auto att = lime_attribute(
      text,
      [](const std::string& s) {
        return static_cast<double>(count_occurrences(s, "elite"));
      },
      PerturbConfig{});

  std::size_t first = index_of(att.tokens, "elite", 0);
  std::size_t second = index_of(att.tokens, "elite", 1);
  REQUIRE(first < att.tokens.size());
  REQUIRE(second < att.tokens.size());

  // The true function is linear with coefficient 1 on each "elite" slot and
  // 0 elsewhere; the surrogate should land close to that.
  for (std::size_t i = 0; i < att.weights.size(); ++i) {
    if (i == first || i == second) {
      CHECK(att.weights[i] > 0.5);
    } else {
      CHECK(std::abs(att.weights[i]) < 0.1);
      CHECK(std::abs(att.weights[first]) > std::abs(att.weights[i]));
      CHECK(std::abs(att.weights[second]) > std::abs(att.weights[i]));
    }
  }
  CHECK(att.fit_r2 > 0.99);
}

TEST_CASE("lime_attribute: single-token problem matches the closed form") {
  PerturbConfig cfg;
  cfg.n_samples = 100;
  const double f1 = 2.0, f0 = -1.0;
  auto att = lime_attribute(
      "hello", [&](const std::string& s) { return s.empty() ? f0 : f1; },
      cfg);

  // Replicate the design: the same perturb call tells us how many masks kept
  // the token. Kept masks carry weight 1, dropped ones exp(-1/kw^2).
  auto masks = perturb(std::vector<std::string>{"hello"}, cfg);
  double n1 = 0.0, n0 = 0.0;
  for (const auto& m : masks) (m[0] ? n1 : n0) += 1.0;
  const double w0 = std::exp(-1.0 / (cfg.kernel_width * cfg.kernel_width));
  const double S = n1 + n0 * w0;   // total sample weight
  const double S1 = n1;            // weight mass where the token is present
  const double rhs0 = n1 * f1 + n0 * w0 * f0;
  const double rhs1 = n1 * f1;
  const double beta1 = (S * rhs1 - S1 * rhs0) /
                       (S * (S1 + cfg.ridge_lambda) - S1 * S1);
  const double beta0 = (rhs0 - S1 * beta1) / S;

  REQUIRE(att.weights.size() == 1);
  CHECK(att.weights[0] == doctest::Approx(beta1).epsilon(1e-9));
  CHECK(att.intercept == doctest::Approx(beta0).epsilon(1e-9));
  CHECK(att.weights[0] > 0.0);  // presence raises the score
}

TEST_CASE("lime_attribute: tokens the score ignores get near-zero weight") {
  auto att = lime_attribute(
      "alpha beta",
      [](const std::string& s) {
        return s.find("alpha") != std::string::npos ? 1.0 : 0.0;
      },
      PerturbConfig{});
  REQUIRE(att.tokens == std::vector<std::string>{"alpha", "beta"});
  CHECK(att.weights[0] > 0.5);
  CHECK(std::abs(att.weights[1]) < 0.05);
}

TEST_CASE("lime_attribute: heavier ridge shrinks the weights monotonically") {
  auto score = [](const std::string& s) {
    return s.find("alpha") != std::string::npos ? 1.0 : 0.0;
  };
  std::vector<double> magnitudes;
  for (double lambda : {0.0, 0.01, 0.1, 1.0}) {
    PerturbConfig cfg;
    cfg.ridge_lambda = lambda;
    auto att = lime_attribute("alpha beta gamma", score, cfg);
    magnitudes.push_back(std::abs(att.weights[0]));
  }
  for (std::size_t i = 1; i < magnitudes.size(); ++i)
    CHECK(magnitudes[i] <= magnitudes[i - 1] + 1e-12);
  CHECK(magnitudes.back() < magnitudes.front());
}

TEST_CASE("lime_attribute: degenerate designs are reported, not fit") {
  PerturbConfig cfg;
  cfg.keep_prob = 1.0;  // every mask keeps everything
  try {
    lime_attribute("some words here", [](const std::string&) { return 0.0; },
                   cfg);
    FAIL("expected DegenerateDesign");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateDesign);
    CHECK(std::string(e.what()).find("keep_prob") != std::string::npos);
  }
  CHECK_THROWS_AS(lime_attribute("", [](const std::string&) { return 0.0; },
                                 PerturbConfig{}),
                  Error);
}

TEST_CASE("lime_attribute: deterministic for a fixed config") {
  auto score = [](const std::string& s) {
    return static_cast<double>(s.size()) * 0.01;
  };
  auto a = lime_attribute("one two three four", score, PerturbConfig{});
  auto b = lime_attribute("one two three four", score, PerturbConfig{});
  CHECK(a.tokens == b.tokens);
  CHECK(a.weights == b.weights);
  CHECK(a.intercept == b.intercept);
  CHECK(a.fit_r2 == b.fit_r2);
  CHECK(a.fit_r2 >= 0.0);
  CHECK(a.fit_r2 <= 1.0);
}

TEST_CASE("aggregate_terms: lowercased, summed |weight|, ties by name") {
  Attribution a1;
  a1.tokens = {"Alpha", "beta"};
  a1.weights = {0.5, -0.2};
  Attribution a2;
  a2.tokens = {"alpha", "gamma"};
  a2.weights = {-0.25, 0.2};

  auto top = aggregate_terms({a1, a2}, 10);
  REQUIRE(top.size() == 3);
  CHECK(top[0].term == "alpha");  // 0.5 + 0.25, case-merged
  CHECK(top[0].total_weight == doctest::Approx(0.75));
  // beta and gamma tie at 0.2; lexicographic order breaks it.
  CHECK(top[1].term == "beta");
  CHECK(top[2].term == "gamma");
  CHECK(top[1].total_weight == top[2].total_weight);

  // k truncates after ranking.
  auto top2 = aggregate_terms({a1, a2}, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].term == "alpha");
  CHECK(top2[1].term == "beta");

  // Input order cannot matter.
  CHECK(aggregate_terms({a2, a1}, 10) == top);

  CHECK(aggregate_terms({}, 3).empty());
  CHECK_THROWS_AS(aggregate_terms({a1}, 0), Error);
}
