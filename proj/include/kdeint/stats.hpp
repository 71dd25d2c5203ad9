#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kdeint {

double mean(std::span<const double> x);
//! Unbiased sample variance; needs at least two values.
double variance(std::span<const double> x);
//! Linear-interpolation quantile (R type 7) of the values, p in [0, 1].
double quantile(std::span<const double> x, double p);
double rmse(std::span<const double> x, double truth);

double normal_cdf(double z);

struct KsResult
{
  double statistic = 0.0;
  double p_value = 1.0;
  double critical_1pct = 0.0;
  bool rejected_1pct = false;
};

//! Kolmogorov-Smirnov distance between the empirical distribution of x and
//! N(mu, sd^2). The p-value uses the asymptotic Kolmogorov distribution with
//! Stephens' small-sample correction.
KsResult ks_normal(std::span<const double> x, double mu, double sd);

//! P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct LinearFit
{
  double slope = 0.0;
  double intercept = 0.0;
  //! Standard error of the slope from the supplied per-point variances of y
  //! (or the residual estimate when none are given).
  double slope_se = 0.0;
  //! Classical OLS standard error from the residuals.
  double residual_se = 0.0;
};

//! Ordinary least squares of y on x; needs at least three points.
LinearFit fit_line(std::span<const double> x,
                   std::span<const double> y,
                   std::optional<std::span<const double>> y_variance = {});

struct BoxStats
{
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  //! Most extreme values within 1.5 IQR of the quartiles.
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double mean = 0.0;
};

BoxStats box_stats(std::span<const double> x);

} // namespace kdeint
