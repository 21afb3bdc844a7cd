#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "badx/corpus.hpp"
#include "badx/embedding.hpp"

namespace badx {

// The four stimulus sets of a differential-association test. Lists, not
// sets: repeated vectors are meaningful (occurrence re-weighting).
struct StimulusSets {
  std::vector<Vector> x;  // target side 1
  std::vector<Vector> y;  // target side 2
  std::vector<Vector> a;  // attribute side 1 (stereotypical)
  std::vector<Vector> b;  // attribute side 2 (anti-stereotypical)
};

struct EffectSize {
  double d = 0.0;
  int n_x = 0;
  int n_y = 0;
  double var = 0.0;  // Hedges-style: (n_x+n_y)/(n_x*n_y) + d^2/(2(n_x+n_y))
};

struct CombinedEffect {
  double d_combined = 0.0;
  double tau2 = 0.0;  // between-sample variance, clipped at 0
  int k = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

enum class MetricKind { Ceat, IWeat, ISeat };
inline constexpr std::array<MetricKind, 3> kAllMetrics = {
    MetricKind::Ceat, MetricKind::IWeat, MetricKind::ISeat};
const char* to_string(MetricKind metric);
MetricKind metric_from_string(std::string_view s);

// Differential association s(w, A, B) = mean_a cos(w,a) - mean_b cos(w,b).
double assoc_s(const Vector& w, const std::vector<Vector>& a,
               const std::vector<Vector>& b);

// d = [mean_X s - mean_Y s] / sigma, sigma the POPULATION standard
// deviation of s over the pooled X and Y. Throws DegenerateSpread when
// sigma < 1e-12.
EffectSize effect_size(const StimulusSets& sets);

struct PermutationMode {
  static PermutationMode exact() { return {true, 0, 0}; }
  static PermutationMode sampled(int n_samples, std::uint64_t seed) {
    return {false, n_samples, seed};
  }
  bool is_exact = true;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

// One-sided p-value for the X/Y split: fraction of equal-size relabelings
// whose statistic is >= the observed one, identity included (so p > 0).
// Exact mode enumerates every relabeling and requires
// C(|X|+|Y|, |X|) <= 184756.
double permutation_pvalue(const StimulusSets& sets,
                          const PermutationMode& mode);

// All lexicon mentions, downsampled uniformly without replacement to max_n
// (seeded, deterministic), returned in document order.
std::vector<LexiconMention> sample_contexts(std::string_view text,
                                            const IdentityClass& cls,
                                            int max_n, std::uint64_t seed);

// DerSimonian-Laird random-effects combination.
CombinedEffect ceat_combine(const std::vector<EffectSize>& effects);

enum class NormalizationMode { Raw, Half };
const char* to_string(NormalizationMode mode);
NormalizationMode normalization_from_string(std::string_view s);
// raw: unchanged; half: d/2, mapping the effect range [-2,2] onto [-1,1].
double normalize_score(double d, NormalizationMode mode);

// How Task-2 prompts are bound to identity classes for scoring.
enum class ClassBinding { AllClasses, PerPrompt };
const char* to_string(ClassBinding binding);
ClassBinding class_binding_from_string(std::string_view s);

// The three encoder roles behind the three metrics.
struct ProviderSet {
  std::shared_ptr<EmbeddingProvider> word;        // I-WEAT
  std::shared_ptr<EmbeddingProvider> contextual;  // CEAT
  std::shared_ptr<EmbeddingProvider> sentence;    // I-SEAT
};

struct ScoringOptions {
  int ceat_max_windows = 100;
  std::uint64_t seed = 42;
};

// One bias score for one generated response against one identity class.
// Positive = anti-stereotypical: the internal effect size d is positive
// when target side 1 leans toward attribute side 1, and the returned score
// is -d (for CEAT, -d_combined).
double score_response(const std::string& response, const IdentityClass& cls,
                      MetricKind metric, const ProviderSet& providers,
                      const ScoringOptions& options = {});

}  // namespace badx
