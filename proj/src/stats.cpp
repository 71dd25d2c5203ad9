#include "kdeint/stats.hpp"

#include "kdeint/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numbers>

namespace kdeint {

double
mean(std::span<const double> x)
{
  if (x.empty())
    throw Error(ErrorCode::size_error, "mean of an empty set");
  double s = 0.0;
  for (double v : x)
    s += v;
  return s / static_cast<double>(x.size());
}

double
variance(std::span<const double> x)
{
  if (x.size() < 2)
    throw Error(ErrorCode::size_error, "variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x)
    ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double
quantile(std::span<const double> x, double p)
{
  if (x.empty())
    throw Error(ErrorCode::size_error, "quantile of an empty set");
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("quantile level {} outside [0, 1]", p));
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double
rmse(std::span<const double> x, double truth)
{
  if (x.empty())
    throw Error(ErrorCode::size_error, "RMSE of an empty set");
  double ss = 0.0;
  for (double v : x)
    ss += (v - truth) * (v - truth);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

double
normal_cdf(double z)
{
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double
kolmogorov_survival(double lambda)
{
  if (lambda <= 0.0)
    return 1.0;
  if (lambda < 1.0) {
    // Jacobi-theta form converges fast for small lambda.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 7; k += 2)
      s += std::exp(-static_cast<double>(k * k) * c);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17)
      break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult
ks_normal(std::span<const double> x, double mu, double sd)
{
  if (x.empty())
    throw Error(ErrorCode::size_error, "KS test of an empty set");
  if (!(sd > 0.0))
    throw Error(ErrorCode::degenerate_variance,
                "KS test against a normal with zero spread");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = normal_cdf((v[i] - mu) / sd);
    dmax = std::max(dmax, static_cast<double>(i + 1) / n - F);
    dmax = std::max(dmax, F - static_cast<double>(i) / n);
  }
  const double sn = std::sqrt(n);
  const double eff = sn + 0.12 + 0.11 / sn;
  KsResult r;
  r.statistic = dmax;
  r.p_value = kolmogorov_survival(eff * dmax);
  r.critical_1pct = 1.6276 / eff;
  r.rejected_1pct = dmax > r.critical_1pct;
  return r;
}

LinearFit
fit_line(std::span<const double> x,
         std::span<const double> y,
         std::optional<std::span<const double>> y_variance)
{
  if (x.size() != y.size())
    throw Error(ErrorCode::dimension_mismatch, "x and y lengths differ");
  if (x.size() < 3)
    throw Error(ErrorCode::size_error, "line fit needs at least three points");
  if (y_variance && y_variance->size() != x.size())
    throw Error(ErrorCode::dimension_mismatch, "variance length differs");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw Error(ErrorCode::degenerate_variance, "all x values coincide");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  f.residual_se = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  if (y_variance) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = (x[i] - mx) / sxx;
      v += w * w * (*y_variance)[i];
    }
    f.slope_se = std::sqrt(v);
  } else {
    f.slope_se = f.residual_se;
  }
  return f;
}

BoxStats
box_stats(std::span<const double> x)
{
  if (x.empty())
    throw Error(ErrorCode::size_error, "box statistics of an empty set");
  BoxStats b;
  b.count = x.size();
  b.min = *std::min_element(x.begin(), x.end());
  b.max = *std::max_element(x.begin(), x.end());
  b.q1 = quantile(x, 0.25);
  b.median = quantile(x, 0.5);
  b.q3 = quantile(x, 0.75);
  b.mean = mean(x);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.max;
  b.whisker_high = b.min;
  for (double v : x) {
    if (v >= lo)
      b.whisker_low = std::min(b.whisker_low, v);
    if (v <= hi)
      b.whisker_high = std::max(b.whisker_high, v);
  }
  return b;
}

} // namespace kdeint
