#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"

#include "badx/association.hpp"
#include "badx/corpus.hpp"
#include "badx/embedding.hpp"
#include "badx/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace badx;

namespace {

// The 2-D worked example used throughout: X=(1,0), Y=(0,1), A=X, B=Y.
StimulusSets axis_sets() {
  StimulusSets s;
  s.x = {{1, 0}};
  s.y = {{0, 1}};
  s.a = {{1, 0}};
  s.b = {{0, 1}};
  return s;
}

std::vector<Vector> random_vectors(std::mt19937_64& rng, int count, int dim) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    Vector v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& c : v) {
        c = dist(rng);
        norm2 += c * c;
      }
    } while (norm2 < 1e-3);  // keep away from the zero vector
    out.push_back(v);
  }
  return out;
}

std::vector<oracle::Vec> to_oracle(const std::vector<Vector>& vs) {
  return {vs.begin(), vs.end()};
}

StimulusSets random_sets(std::mt19937_64& rng, int max_targets, int dim) {
  std::uniform_int_distribution<int> n_dist(1, max_targets);
  StimulusSets s;
  s.x = random_vectors(rng, n_dist(rng), dim);
  s.y = random_vectors(rng, n_dist(rng), dim);
  s.a = random_vectors(rng, n_dist(rng), dim);
  s.b = random_vectors(rng, n_dist(rng), dim);
  return s;
}

}  // namespace

TEST_CASE("assoc_s: hand values and antisymmetry") {
  CHECK(assoc_s({1, 0}, {{1, 0}}, {{0, 1}}) == 1.0);
  CHECK(assoc_s({1, 0}, {{0, 1}}, {{0, 1}}) == 0.0);  // A == B cancels
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto w = random_vectors(rng, 1, 4)[0];
    auto a = random_vectors(rng, 3, 4);
    auto b = random_vectors(rng, 2, 4);
    double forward = assoc_s(w, a, b);
    CHECK(std::abs(forward + assoc_s(w, b, a)) < 1e-15);
    CHECK(forward >= -2.0);
    CHECK(forward <= 2.0);
  }
}

TEST_CASE("effect_size: 2-D hand example gives d = 2, var = 3") {
  EffectSize e = effect_size(axis_sets());
  CHECK(std::abs(e.d - 2.0) < 1e-12);
  CHECK(e.n_x == 1);
  CHECK(e.n_y == 1);
  // (1+1)/(1·1) + 2²/(2·2) = 2 + 1
  CHECK(std::abs(e.var - 3.0) < 1e-12);
}

TEST_CASE("effect_size: X == Y collapses the numerator") {
  StimulusSets s;
  s.x = {{1, 0}, {0.5, 0.5}};
  s.y = s.x;
  s.a = {{1, 0}};
  s.b = {{0, 1}};
  CHECK(std::abs(effect_size(s).d) < 1e-15);
}

TEST_CASE("effect_size: swap antisymmetry is exact") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 30; ++i) {
    StimulusSets s = random_sets(rng, 4, 5);
    double d;
    try {
      d = effect_size(s).d;
    } catch (const Error&) {
      continue;  // degenerate draw
    }
    // Swapping A/B negates every association value, so d negates exactly.
    StimulusSets ab = s;
    std::swap(ab.a, ab.b);
    CHECK(effect_size(ab).d == -d);
    // Swapping X/Y reorders the pooled sum, so allow rounding slack.
    StimulusSets xy = s;
    std::swap(xy.x, xy.y);
    CHECK(std::abs(effect_size(xy).d + d) < 1e-12);
  }
}

TEST_CASE("effect_size: invariant under uniform positive rescaling") {
  std::mt19937_64 rng(23);
  StimulusSets s = random_sets(rng, 3, 6);
  double base = effect_size(s).d;
  StimulusSets scaled = s;
  for (auto* side : {&scaled.x, &scaled.y, &scaled.a, &scaled.b})
    for (auto& v : *side)
      for (auto& c : v) c *= 7.5;
  CHECK(std::abs(effect_size(scaled).d - base) < 1e-9);
}

TEST_CASE("effect_size: matches brute-force oracle on 100 random instances") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> dim_dist(2, 8);
  int checked = 0;
  while (checked < 100) {
    StimulusSets s = random_sets(rng, 5, dim_dist(rng));
    double got;
    try {
      got = effect_size(s).d;
    } catch (const Error&) {
      continue;
    }
    double want = oracle::effect_size_d(to_oracle(s.x), to_oracle(s.y),
                                        to_oracle(s.a), to_oracle(s.b));
    CHECK(std::abs(got - want) < 1e-9);
    // |mean_x - mean_y| / sigma_pool is capped by the between-group share of
    // the pooled variance: (n_x + n_y) / sqrt(n_x * n_y), which is 2 only
    // for balanced groups.
    double nx = static_cast<double>(s.x.size());
    double ny = static_cast<double>(s.y.size());
    CHECK(std::abs(got) <= (nx + ny) / std::sqrt(nx * ny) + 1e-9);
    ++checked;
  }
}

TEST_CASE("effect_size: zero spread is an error, not a zero") {
  StimulusSets s;
  s.x = {{1, 0}};
  s.y = {{1, 0}};  // same vector, same s-value
  s.a = {{1, 0}};
  s.b = {{0, 1}};
  try {
    effect_size(s);
    FAIL("expected degenerate spread");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSpread);
  }
}

TEST_CASE("permutation_pvalue: 1v1 split enumerates to exactly 1/2") {
  CHECK(permutation_pvalue(axis_sets(), PermutationMode::exact()) == 0.5);
}

TEST_CASE("permutation_pvalue: exact mode equals enumeration oracle") {
  std::mt19937_64 rng(59);
  for (int nx = 1; nx <= 4; ++nx) {
    for (int trial = 0; trial < 5; ++trial) {
      StimulusSets s;
      s.x = random_vectors(rng, nx, 4);
      s.y = random_vectors(rng, nx, 4);
      s.a = random_vectors(rng, 2, 4);
      s.b = random_vectors(rng, 2, 4);
      double got = permutation_pvalue(s, PermutationMode::exact());
      double want = oracle::perm_pvalue_exact(to_oracle(s.x), to_oracle(s.y),
                                              to_oracle(s.a), to_oracle(s.b));
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("permutation_pvalue: maximal statistic hits 1/#relabelings") {
  // Make the X side unambiguously the most extreme split: s-values widely
  // separated so only the identity relabeling reaches the observed statistic.
  StimulusSets s;
  s.x = {{1, 0}, {0.99, 0.01}};
  s.y = {{0, 1}, {0.01, 0.99}};
  s.a = {{1, 0}};
  s.b = {{0, 1}};
  double p = permutation_pvalue(s, PermutationMode::exact());
  CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));  // C(4,2) = 6
}

TEST_CASE("permutation_pvalue: identically drawn sides give non-tiny p") {
  std::mt19937_64 rng(61);
  StimulusSets s;
  s.x = random_vectors(rng, 6, 4);
  s.y = random_vectors(rng, 6, 4);
  s.a = random_vectors(rng, 3, 4);
  s.b = random_vectors(rng, 3, 4);
  double p = permutation_pvalue(s, PermutationMode::sampled(2000, 99));
  CHECK(p > 0.01);
  CHECK(p <= 1.0);
  // Determinism for a fixed seed.
  CHECK(permutation_pvalue(s, PermutationMode::sampled(2000, 99)) == p);
}

TEST_CASE("permutation_pvalue: exact mode refuses oversized enumerations") {
  std::mt19937_64 rng(67);
  StimulusSets s;
  s.x = random_vectors(rng, 11, 3);
  s.y = random_vectors(rng, 11, 3);
  s.a = random_vectors(rng, 2, 3);
  s.b = random_vectors(rng, 2, 3);
  try {
    permutation_pvalue(s, PermutationMode::exact());
    FAIL("expected combinatorial limit");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CombinatorialLimit);
  }
  // C(20,10) = 184756 is the largest permitted enumeration.
  StimulusSets at_limit;
  at_limit.x = random_vectors(rng, 10, 3);
  at_limit.y = random_vectors(rng, 10, 3);
  at_limit.a = random_vectors(rng, 2, 3);
  at_limit.b = random_vectors(rng, 2, 3);
  double p = permutation_pvalue(at_limit, PermutationMode::exact());
  CHECK(p > 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("sample_contexts: returns all mentions when under the cap") {
  IdentityClass cls;
  cls.id = "c";
  cls.targets_1 = {"nurse"};
  cls.targets_2 = {"engineer"};
  cls.attributes_1 = {"caring"};
  cls.attributes_2 = {"logical"};
  std::string text = "A nurse met an engineer. The nurse seemed caring.";
  auto picked = sample_contexts(text, cls, 10, 42);
  CHECK(picked.size() == 4);
  for (std::size_t i = 1; i < picked.size(); ++i)
    CHECK(picked[i - 1].span.begin < picked[i].span.begin);  // document order
  CHECK(sample_contexts("none here", cls, 5, 42).empty());
}

TEST_CASE("sample_contexts: downsampling is seeded and order-preserving") {
  IdentityClass cls;
  cls.id = "c";
  cls.targets_1 = {"x"};
  cls.targets_2 = {"yy"};
  cls.attributes_1 = {"zz"};
  cls.attributes_2 = {"ww"};
  std::string text;
  for (int i = 0; i < 50; ++i) text += "x ";
  auto first = sample_contexts(text, cls, 10, 7);
  auto second = sample_contexts(text, cls, 10, 7);
  REQUIRE(first.size() == 10);
  CHECK(first == second);
  for (std::size_t i = 1; i < first.size(); ++i)
    CHECK(first[i - 1].span.begin < first[i].span.begin);
  auto other_seed = sample_contexts(text, cls, 10, 8);
  CHECK(other_seed.size() == 10);
}

TEST_CASE("ceat_combine: identical effects collapse exactly") {
  EffectSize e;
  e.d = 0.37;
  e.n_x = 4;
  e.n_y = 4;
  e.var = 0.5;
  CombinedEffect combined = ceat_combine({e, e, e, e, e});
  CHECK(combined.d_combined == 0.37);
  CHECK(combined.tau2 == 0.0);
  CHECK(combined.k == 5);

  CombinedEffect single = ceat_combine({e});
  CHECK(single.d_combined == 0.37);
  CHECK(single.tau2 == 0.0);
}

TEST_CASE("ceat_combine: two-study hand computations") {
  auto mk = [](double d, double var) {
    EffectSize e;
    e.d = d;
    e.n_x = 2;
    e.n_y = 2;
    e.var = var;
    return e;
  };
  // Equal weights, Q below k-1: tau2 clips to 0, plain average, wide CI.
  CombinedEffect low = ceat_combine({mk(0.4, 0.5), mk(0.8, 0.5)});
  CHECK(std::abs(low.d_combined - 0.6) < 1e-9);
  CHECK(low.tau2 == 0.0);
  CHECK(std::abs(low.ci_low - (-0.38)) < 1e-9);
  CHECK(std::abs(low.ci_high - 1.58) < 1e-9);

  // Tight variances force heterogeneity: Q = 1.6, tau2 = 0.03, se = 0.2.
  CombinedEffect high = ceat_combine({mk(0.4, 0.05), mk(0.8, 0.05)});
  CHECK(std::abs(high.d_combined - 0.6) < 1e-9);
  CHECK(std::abs(high.tau2 - 0.03) < 1e-9);
  CHECK(std::abs(high.ci_low - 0.208) < 1e-9);
  CHECK(std::abs(high.ci_high - 0.992) < 1e-9);

  // Against the independent implementation on asymmetric inputs.
  CombinedEffect mixed = ceat_combine({mk(0.1, 0.2), mk(-0.4, 0.05),
                                       mk(0.9, 0.7)});
  auto want = oracle::dl_combine({0.1, -0.4, 0.9}, {0.2, 0.05, 0.7});
  CHECK(std::abs(mixed.d_combined - want.d) < 1e-9);
  CHECK(std::abs(mixed.tau2 - want.tau2) < 1e-9);
  CHECK(std::abs(mixed.ci_low - want.lo) < 1e-9);
  CHECK(std::abs(mixed.ci_high - want.hi) < 1e-9);
}

TEST_CASE("ceat_combine: empty input rejected") {
  try {
    ceat_combine({});
    FAIL("expected empty-input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInput);
  }
}

TEST_CASE("normalize_score: raw is identity, half maps [-2,2] to [-1,1]") {
  CHECK(normalize_score(2.0, NormalizationMode::Half) == 1.0);
  CHECK(normalize_score(-0.9, NormalizationMode::Half) == -0.45);
  CHECK(normalize_score(0.123456, NormalizationMode::Raw) == 0.123456);
}

TEST_CASE("metric and mode enums round-trip through strings") {
  for (MetricKind m : kAllMetrics)
    CHECK(metric_from_string(to_string(m)) == m);
  CHECK(std::string(to_string(MetricKind::IWeat)) == "I-WEAT");
  for (auto mode : {NormalizationMode::Raw, NormalizationMode::Half})
    CHECK(normalization_from_string(to_string(mode)) == mode);
  for (auto b : {ClassBinding::AllClasses, ClassBinding::PerPrompt})
    CHECK(class_binding_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(metric_from_string("bogus"), Error);
}

namespace {

// A tiny static lexicon where side 1 aligns with the (1,0) axis and side 2
// with (0,1): the most stereotypical configuration the kernel can see.
IdentityClass axis_class() {
  IdentityClass cls;
  cls.id = "axis";
  cls.name = "Axis";
  cls.targets_1 = {"alpha", "beta"};
  cls.targets_2 = {"gamma", "delta"};
  cls.attributes_1 = {"strong", "bold"};
  cls.attributes_2 = {"weak", "timid"};
  cls.attribute_templates = {"People call them {term} every day."};
  return cls;
}

std::shared_ptr<EmbeddingProvider> axis_static_provider(
    testsup::TempDir& tmp) {
  // Mild off-axis jitter keeps the pooled s-values from collapsing.
  testsup::write_file(tmp.sub("axis.txt"),
                      "alpha 1 0\n"
                      "beta 0.95 0.05\n"
                      "gamma 0 1\n"
                      "delta 0.05 0.95\n"
                      "strong 1 0\n"
                      "bold 0.9 0.1\n"
                      "weak 0 1\n"
                      "timid 0.1 0.9\n");
  ProviderConfig cfg;
  cfg.kind = ProviderKind::StaticFile;
  cfg.file_path = tmp.sub("axis.txt");
  return make_provider(cfg);
}

}  // namespace

TEST_CASE("score_response: I-WEAT matches a direct kernel call and flips sign") {
  testsup::TempDir tmp;
  ProviderSet providers;
  providers.word = axis_static_provider(tmp);

  // No mentions: the score is the uniform-weight baseline of the lexicons.
  double baseline =
      score_response("Nothing relevant.", axis_class(), MetricKind::IWeat,
                     providers);
  double baseline2 =
      score_response("Still nothing.", axis_class(), MetricKind::IWeat,
                     providers);
  CHECK(baseline == baseline2);  // term-free responses share the baseline

  // The baseline equals -d of the effect size over the full static sets.
  StimulusSets sets;
  for (const char* t : {"alpha", "beta"})
    sets.x.push_back(*providers.word->try_embed_term(t));
  for (const char* t : {"gamma", "delta"})
    sets.y.push_back(*providers.word->try_embed_term(t));
  for (const char* t : {"strong", "bold"})
    sets.a.push_back(*providers.word->try_embed_term(t));
  for (const char* t : {"weak", "timid"})
    sets.b.push_back(*providers.word->try_embed_term(t));
  CHECK(baseline == -effect_size(sets).d);
  CHECK(baseline < 0.0);  // stereotypical geometry reports negative

  // Mentioning a term re-weights it: "alpha alpha" repeats alpha 3x. The
  // copies are consecutive, in lexicon order, so the sums match bit-exactly.
  double weighted = score_response("alpha alpha!", axis_class(),
                                   MetricKind::IWeat, providers);
  StimulusSets reweighted = sets;
  reweighted.x = {sets.x[0], sets.x[0], sets.x[0], sets.x[1]};
  CHECK(weighted == -effect_size(reweighted).d);
}

TEST_CASE("score_response: deterministic under the hash provider") {
  ProviderSet providers;
  ProviderConfig cfg;
  cfg.kind = ProviderKind::Deterministic;
  cfg.dim = 32;
  providers.word = make_provider(cfg);
  providers.contextual = make_provider(cfg);
  providers.sentence = make_provider(cfg);
  std::string response =
      "Alpha voices carried the meeting. Gamma folks stayed weak and timid.";
  for (MetricKind m : kAllMetrics) {
    double a = score_response(response, axis_class(), m, providers);
    double b = score_response(response, axis_class(), m, providers);
    CHECK(a == b);
  }
}
