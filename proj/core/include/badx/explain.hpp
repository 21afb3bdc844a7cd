#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace badx {

struct PerturbConfig {
  int n_samples = 200;
  double keep_prob = 0.7;      // per-token Bernoulli keep probability
  double kernel_width = 0.25;  // locality kernel width over removed fraction
  double ridge_lambda = 0.01;  // L2 penalty, intercept excluded
  std::uint64_t seed = 42;

  bool operator==(const PerturbConfig&) const = default;
};

struct Attribution {
  std::vector<std::string> tokens;
  std::vector<double> weights;  // one per token
  double intercept = 0.0;
  double fit_r2 = 0.0;
};

// Whitespace split, leading/trailing punctuation stripped per token,
// empties dropped, casing preserved.
std::vector<std::string> tokenize(std::string_view text);

using Mask = std::vector<std::uint8_t>;

// n_samples masks over the token positions; mask 0 is always all-ones, the
// rest are i.i.d. Bernoulli(keep_prob) draws from the seeded generator.
std::vector<Mask> perturb(const std::vector<std::string>& tokens,
                          const PerturbConfig& config);

// Text of one mask: kept tokens joined by single spaces.
std::string apply_mask(const std::vector<std::string>& tokens,
                       const Mask& mask);

// Local surrogate: weighted ridge regression of score_fn over token-presence
// masks. Sample weight = exp(-D^2 / kernel_width^2) with D the fraction of
// tokens removed.
Attribution lime_attribute(const std::string& text,
                           const std::function<double(const std::string&)>&
                               score_fn,
                           const PerturbConfig& config);

struct TermWeight {
  std::string term;
  double total_weight = 0.0;  // sum of |weight| across attributions

  bool operator==(const TermWeight&) const = default;
};

// Lowercased terms ranked by summed |weight|, ties broken lexicographically;
// at most k entries.
std::vector<TermWeight> aggregate_terms(
    const std::vector<Attribution>& attributions, int k);

}  // namespace badx
