#include <algorithm>
#include <cmath>

#include "badx/error.hpp"
#include "badx/report.hpp"

namespace badx {

namespace {

// Type-7 quantile (linear interpolation between order statistics).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - std::floor(h);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

DensityCurve kde(std::span<const double> values, int grid_n) {
  if (values.size() < 2)
    throw Error(ErrorKind::InsufficientSamples,
                "density estimation needs at least 2 values, got " +
                    std::to_string(values.size()));
  if (grid_n < 2)
    throw Error(ErrorKind::Config, "grid_n must be >= 2");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  // Identical values leave nothing to estimate. Compare the extremes rather
  // than testing sigma == 0: the mean of identical values need not be exact
  // (e.g. 0.4), so the variance of a flat list can round to a nonzero value.
  if (sorted.front() == sorted.back())
    throw Error(ErrorKind::DegenerateData,
                "all values are identical; no density to estimate (a minimum "
                "bandwidth flag would be needed to render this)");

  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  double sigma = std::sqrt(ss / (n - 1.0));  // sample standard deviation

  if (sigma <= 0.0)  // spread so small the variance underflowed
    throw Error(ErrorKind::DegenerateData,
                "value spread is too small for a positive bandwidth");

  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  // Heavily tied data can have IQR 0 while sigma > 0; fall back to sigma so
  // the bandwidth stays positive.
  double spread = iqr > 0.0 ? std::min(sigma, iqr / 1.34) : sigma;
  double h = 0.9 * spread * std::pow(n, -0.2);

  DensityCurve curve;
  curve.bandwidth = h;
  double lo = sorted.front() - 4.0 * h;
  double hi = sorted.back() + 4.0 * h;
  double step = (hi - lo) / static_cast<double>(grid_n - 1);

  const double inv_sqrt_2pi = 0.3989422804014327;
  curve.grid.resize(static_cast<std::size_t>(grid_n));
  curve.density.resize(static_cast<std::size_t>(grid_n));
  for (int i = 0; i < grid_n; ++i) {
    double x = lo + static_cast<double>(i) * step;
    double acc = 0.0;
    for (double v : sorted) {
      double u = (x - v) / h;
      acc += std::exp(-0.5 * u * u);
    }
    curve.grid[static_cast<std::size_t>(i)] = x;
    curve.density[static_cast<std::size_t>(i)] =
        acc * inv_sqrt_2pi / (n * h);
  }
  return curve;
}

}  // namespace badx
