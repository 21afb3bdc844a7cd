#include "badx/explain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>

#include "badx/error.hpp"
#include "badx/hash.hpp"
#include "badx/text.hpp"

namespace badx {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_ws = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_ws(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t begin = i;
    while (i < text.size() && !is_ws(static_cast<unsigned char>(text[i]))) ++i;
    if (i == begin) continue;
    std::size_t b = begin, e = i;
    while (b < e && !is_word_byte(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && !is_word_byte(static_cast<unsigned char>(text[e - 1])))
      --e;
    if (e > b) out.emplace_back(text.substr(b, e - b));
  }
  return out;
}

std::vector<Mask> perturb(const std::vector<std::string>& tokens,
                          const PerturbConfig& config) {
  if (tokens.empty())
    throw Error(ErrorKind::EmptyInput, "cannot perturb an empty token list");
  if (config.n_samples < 1)
    throw Error(ErrorKind::Config, "n_samples must be >= 1");
  if (!(config.keep_prob > 0.0) || config.keep_prob > 1.0)
    throw Error(ErrorKind::Config, "keep_prob must be in (0, 1]");

  std::vector<Mask> masks;
  masks.reserve(static_cast<std::size_t>(config.n_samples));
  masks.emplace_back(tokens.size(), std::uint8_t{1});  // original text

  SplitMix64 rng(config.seed);
  for (int s = 1; s < config.n_samples; ++s) {
    Mask mask(tokens.size());
    for (auto& bit : mask)
      bit = rng.next_double() < config.keep_prob ? 1 : 0;
    masks.push_back(std::move(mask));
  }
  return masks;
}

std::string apply_mask(const std::vector<std::string>& tokens,
                       const Mask& mask) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size() && i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

Attribution lime_attribute(const std::string& text,
                           const std::function<double(const std::string&)>&
                               score_fn,
                           const PerturbConfig& config) {
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty())
    throw Error(ErrorKind::EmptyInput,
                "text has no tokens to attribute to");
  std::vector<Mask> masks = perturb(tokens, config);

  bool any_different = false;
  for (const Mask& m : masks)
    if (m != masks.front()) { any_different = true; break; }
  if (!any_different)
    throw Error(ErrorKind::DegenerateDesign,
                "all perturbation masks are identical (keep_prob = " +
                    std::to_string(config.keep_prob) +
                    " leaves nothing to vary)");

  const auto n = static_cast<Eigen::Index>(masks.size());
  const auto t = static_cast<Eigen::Index>(tokens.size());
  Eigen::MatrixXd design(n, t + 1);
  Eigen::VectorXd response(n);
  Eigen::VectorXd weight(n);
  const double tokens_count = static_cast<double>(tokens.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Mask& mask = masks[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    double kept = 0.0;
    for (Eigen::Index j = 0; j < t; ++j) {
      design(i, j + 1) = mask[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      kept += design(i, j + 1);
    }
    double removed_fraction = (tokens_count - kept) / tokens_count;
    weight(i) = std::exp(-(removed_fraction * removed_fraction) /
                         (config.kernel_width * config.kernel_width));
    response(i) =
        score_fn(apply_mask(tokens, mask));
  }

  // (X^T W X + lambda * I_penalized) beta = X^T W y, intercept unpenalized.
  Eigen::MatrixXd xtw = design.transpose() * weight.asDiagonal();
  Eigen::MatrixXd normal = xtw * design;
  for (Eigen::Index j = 1; j <= t; ++j) normal(j, j) += config.ridge_lambda;
  Eigen::VectorXd rhs = xtw * response;
  Eigen::VectorXd beta = normal.ldlt().solve(rhs);
  if (!beta.allFinite())
    throw Error(ErrorKind::DegenerateDesign,
                "ridge system is singular; increase n_samples or "
                "ridge_lambda");

  Attribution out;
  out.tokens = std::move(tokens);
  out.intercept = beta(0);
  out.weights.resize(static_cast<std::size_t>(t));
  for (Eigen::Index j = 0; j < t; ++j)
    out.weights[static_cast<std::size_t>(j)] = beta(j + 1);

  Eigen::VectorXd fitted = design * beta;
  double w_sum = weight.sum();
  double y_bar = weight.dot(response) / w_sum;
  double ss_res = (weight.array() *
                   (response - fitted).array().square())
                      .sum();
  double ss_tot = (weight.array() *
                   (response.array() - y_bar).square())
                      .sum();
  out.fit_r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0)
                            : 1.0;
  return out;
}

std::vector<TermWeight> aggregate_terms(
    const std::vector<Attribution>& attributions, int k) {
  if (k < 1) throw Error(ErrorKind::Config, "top-k must be >= 1");
  std::map<std::string, double> totals;
  for (const auto& a : attributions) {
    for (std::size_t i = 0; i < a.tokens.size() && i < a.weights.size(); ++i)
      totals[to_lower_ascii(a.tokens[i])] += std::abs(a.weights[i]);
  }
  std::vector<TermWeight> ranked;
  ranked.reserve(totals.size());
  for (auto& [term, total] : totals) ranked.push_back({term, total});
  std::sort(ranked.begin(), ranked.end(),
            [](const TermWeight& a, const TermWeight& b) {
              if (a.total_weight != b.total_weight)
                return a.total_weight > b.total_weight;
              return a.term < b.term;
            });
  if (ranked.size() > static_cast<std::size_t>(k))
    ranked.resize(static_cast<std::size_t>(k));
  return ranked;
}

}  // namespace badx
