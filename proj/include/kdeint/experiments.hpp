#pragma once

#include "kdeint/bandwidth.hpp"
#include "kdeint/estimators.hpp"
#include "kdeint/models.hpp"
#include "kdeint/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kdeint {

inline constexpr std::uint64_t default_seed = 42;

enum class BandwidthPolicy
{
  fixed,
  rule_of_thumb,
  simulation_validation,
};

std::string_view to_string(BandwidthPolicy p);
BandwidthPolicy bandwidth_policy_from_string(std::string_view name);

struct ExperimentConfig
{
  //! gaussian-design (model1), uniform-design (model2), regression-model,
  //! or custom (with `custom_design` set).
  std::string model = "gaussian-design";
  std::size_t d = 1;
  std::size_t n = 1000;
  std::size_t replications = 100;
  std::vector<Variant> variants{ Variant::corrected,
                                 Variant::plain,
                                 Variant::monte_carlo };
  BandwidthPolicy bandwidth = BandwidthPolicy::simulation_validation;
  //! Fixed bandwidth; when absent under the fixed policy, h = c n^{-gamma}.
  std::optional<double> h;
  std::optional<double> gamma;
  double c = 1.0;
  std::uint64_t seed = default_seed;
  std::string kernel = "order3";
  std::string phi = "sinprod";
  //! Exact integral; derived from the integrand when absent.
  std::optional<double> truth;
  //! Defaults to true for the uniform design, false otherwise.
  std::optional<bool> trim_unit_cube;
  TrimReference trim_reference = TrimReference::candidate;
  std::size_t grid_count = 17;
  //! Threshold for the trimmed variants.
  std::optional<double> trim_b;
  //! Noise level of the regression model.
  double sigma = 0.5;
  std::optional<std::filesystem::path> out_dir;
  std::optional<Design> custom_design;
};

//! Reads the JSON form, {"schema": 1, "model": ..., "d": ..., ...}.
ExperimentConfig parse_experiment_config(std::string_view json_text);
void validate(const ExperimentConfig& cfg);

struct ReplicationRow
{
  std::size_t replication = 0;
  std::size_t n = 0;
  Variant variant = Variant::plain;
  //! "ok" or the error code of a failed estimate.
  std::string status = "ok";
  double value = 0.0;
  double h = 0.0;
  std::size_t n_used = 0;
  double min_fhat = 0.0;
  double wall_seconds = 0.0;
};

struct VariantSummary
{
  Variant variant = Variant::plain;
  double truth = 0.0;
  std::size_t ok = 0;
  std::size_t excluded = 0;
  BoxStats box;
  double rmse = 0.0;
  double bias = 0.0;
  double sd = 0.0;
};

struct BenchmarkResult
{
  //! Integral of phi; general-functional rows target P(X in support(phi)).
  double truth = 0.0;
  std::vector<ReplicationRow> rows;
  std::vector<VariantSummary> summaries;
};

//! Runs every replication on its own RNG stream; within a replication all
//! variants see the same sample. Failed estimates are kept as rows with a
//! status and left out of the summaries. Writes rows.csv, timings.csv,
//! summary.csv and boxes.svg when cfg.out_dir is set.
BenchmarkResult run_benchmark(const ExperimentConfig& cfg);

//! Summaries of the ok rows, per variant in first-seen order.
std::vector<VariantSummary> summarize(
  const std::vector<ReplicationRow>& rows,
  const std::function<double(Variant)>& truth_of);

//! Exact integral of an integrand with a bounded support box (d <= 3).
double integrand_oracle(const Integrand& phi, std::size_t d);

// Bandwidth windows. With h = c n^{-gamma}, n h^a diverges when
// 1 - a gamma > 0 and vanishes when 1 - a gamma < 0; the checks compare
// these exponents and never evaluate n.

struct WindowCondition
{
  std::string description;
  double exponent = 0.0;
  //! true: n h^a -> infinity required; false: n h^a -> 0 required.
  bool diverge = true;
  bool satisfied = false;
};

struct WindowCheck
{
  bool ok = true;
  std::vector<WindowCondition> conditions;
};

//! n h^{2d} -> inf, n h^{r+d/2} -> 0, and n h^{2s+d} -> 0 when s is finite.
WindowCheck smooth_window(std::size_t d, int r, double s, double gamma);
//! n h^{(3d+1)/2} -> inf, n h^{2r-1} -> 0.
WindowCheck nonsmooth_window(std::size_t d, int r, double gamma);
//! n^{1/2} h^r -> 0, n^{1/2} h^d -> inf.
WindowCheck regression_window(std::size_t d, int r, double gamma);

struct RateConfig
{
  std::string model = "gaussian-design";
  std::size_t d = 1;
  double gamma = 1.0 / 3.5;
  //! Calibrated from the rule of thumb at the smallest n when absent.
  std::optional<double> c;
  std::vector<std::size_t> n_grid{ 250, 500, 1000, 2000, 4000 };
  std::size_t replications = 100;
  std::vector<Variant> variants{ Variant::corrected, Variant::monte_carlo };
  std::uint64_t seed = default_seed;
  std::string kernel = "order3";
  std::string phi = "sinprod";
  std::optional<double> truth;
  std::optional<double> trim_b;
  std::optional<Design> custom_design;
};

struct RatePoint
{
  Variant variant = Variant::plain;
  std::size_t n = 0;
  double h = 0.0;
  std::size_t ok = 0;
  std::size_t excluded = 0;
  double rmse = 0.0;
  //! Delta-method variance of log RMSE.
  double log_rmse_variance = 0.0;
  //! n * sample variance of the estimates.
  double scaled_variance = 0.0;
};

struct RateFit
{
  Variant variant = Variant::plain;
  LinearFit fit;
};

struct RateResult
{
  double c = 0.0;
  double gamma = 0.0;
  double truth = 0.0;
  std::vector<RatePoint> points;
  std::vector<RateFit> fits;
  std::vector<ReplicationRow> rows;
};

//! OLS of log RMSE on log n with h = c n^{-gamma}.
RateResult run_rate_check(const RateConfig& cfg);

struct CltConfig
{
  std::size_t d = 1;
  std::size_t n = 2000;
  std::size_t replications = 200;
  double gamma = 0.4;
  double c = 1.0;
  std::uint64_t seed = default_seed;
  std::string kernel = "order3";
  //! Design for the smooth and non-smooth runs.
  std::string model = "gaussian-design";
  //! Interval of the non-smooth run.
  double a = 0.2;
  double b = 0.8;
  //! Regression noise level.
  double sigma = 0.5;
  double quadrature_tolerance = 1e-9;
};

struct CltSummary
{
  std::string kind;
  std::size_t n = 0;
  std::size_t replications = 0;
  double h = 0.0;
  double gamma = 0.0;
  double truth = 0.0;
  //! Rate-normalized errors of the estimator, one per ok replication.
  std::vector<double> statistics;
  std::size_t excluded = 0;
  double mean = 0.0;
  double variance = 0.0;
  double theoretical_variance = 0.0;
  //! variance / theoretical_variance and variance / (2 theoretical_variance).
  double ratio = 0.0;
  double ratio_doubled = 0.0;
  //! "1x" or "2x", whichever ratio is closer to 1 on a log scale.
  std::string closer_factor;
  std::string alternative_label;
  double alternative_variance = 0.0;
  double alternative_ratio = 0.0;
  KsResult ks;
  WindowCheck window;
  std::vector<ReplicationRow> rows;
};

//! Smooth integrand (sinprod under the configured design):
//! n h^{d/2} (I_c - I) against V_K int phi^2 / f^2.
CltSummary run_clt_smooth(const CltConfig& cfg);

//! d = 1, phi = 1_[a,b]: (n / h)^{1/2} (I_c - (b - a)) against 2 L.
CltSummary run_clt_nonsmooth(const CltConfig& cfg);

//! Regression test model with psi = sinprod: n^{1/2} (c_hat - c) against
//! E[sigma^2 psi^2 / f^2] (the variance of the noise term).
CltSummary run_regression_experiment(const CltConfig& cfg);

} // namespace kdeint
