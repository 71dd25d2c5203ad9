#include "kdeint/error.hpp"
#include "kdeint/experiments.hpp"
#include "kdeint/models.hpp"
#include "kdeint/numerics.hpp"
#include "kdeint/parallel.hpp"
#include "kdeint/report.hpp"
#include "kdeint/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

using namespace kdeint;

namespace {

std::string
rows_bytes(const std::vector<ReplicationRow>& rows)
{
  std::ostringstream out;
  write_rows_csv(out, rows);
  return out.str();
}

double
type7(std::vector<double> x, double p)
{
  std::sort(x.begin(), x.end());
  const double pos = p * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

} // namespace

TEST(Models, GaussianDesignMoments)
{
  Rng rng = make_stream(1, 0, 0);
  const std::size_t n = 20000;
  const Sample s = sample_model1(n, 2, rng);
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i)
      col[i] = s.coord(i, c);
    EXPECT_NEAR(mean(col), 0.5, 4.0 * 0.5 / std::sqrt(double(n)));
    EXPECT_NEAR(variance(col), 0.25, 0.01);
  }
}

TEST(Models, UniformDesignRange)
{
  Rng rng = make_stream(2, 0, 0);
  const Sample s = sample_model2(5000, 3, rng);
  const auto [lo, hi] = std::minmax_element(s.data().begin(), s.data().end());
  EXPECT_GE(*lo, 0.0);
  EXPECT_LE(*hi, 1.0);
  EXPECT_NEAR(mean(s.data()), 0.5, 0.01);
}

TEST(Models, SamplingIsDeterministic)
{
  Rng a = make_stream(3, 7, 1), b = make_stream(3, 7, 1), c = make_stream(3, 8, 1);
  const Sample x = sample_model1(100, 2, a);
  const Sample y = sample_model1(100, 2, b);
  const Sample z = sample_model1(100, 2, c);
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
  EXPECT_FALSE(std::equal(x.data().begin(), x.data().end(), z.data().begin()));
}

TEST(Models, DensitiesIntegrateToOne)
{
  const double lo[] = { -4.0, -4.0 }, hi[] = { 5.0, 5.0 };
  EXPECT_NEAR(integrate_box(model1_density, lo, hi, 1e-9).value, 1.0, 1e-8);
  const double x[] = { 0.5 };
  // N(1/2, 1/4) peak: 1 / (sqrt(2 pi) / 2).
  EXPECT_DOUBLE_EQ(model1_density(x), 2.0 / std::sqrt(2.0 * std::numbers::pi));
  const double out[] = { 1.5, 0.5 };
  EXPECT_EQ(model2_density(out), 0.0);
}

TEST(Models, SinprodIntegrand)
{
  for (std::size_t d : { 1, 2, 3 }) {
    const Integrand phi = phi_sinprod(d);
    EXPECT_NEAR(integrand_oracle(phi, d), 1.0, 1e-9) << d;
    std::vector<double> x(d, 0.5);
    EXPECT_NEAR(phi(x), std::pow(2.0, double(d)), 1e-14);
    x[0] = 0.0;
    EXPECT_NEAR(phi(x), 0.0, 1e-30);
    x[0] = 1.0;
    EXPECT_NEAR(phi(x), 0.0, 1e-30);
  }
}

TEST(Models, IndicatorIntegrand)
{
  const Integrand phi = phi_indicator(0.2, 0.8);
  EXPECT_NEAR(integrand_oracle(phi, 1), 0.6, 1e-12);
  EXPECT_THROW(phi_indicator(0.5, 0.5), Error);
}

TEST(Stats, BasicSummaries)
{
  const std::vector<double> x{ 3, 1, 4, 1, 5, 9, 2, 6 };
  EXPECT_DOUBLE_EQ(mean(x), 31.0 / 8.0);
  EXPECT_DOUBLE_EQ(variance(x), 7.553571428571429);
  EXPECT_DOUBLE_EQ(quantile(x, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(x, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(x, 0.5), 3.5);
  EXPECT_DOUBLE_EQ(quantile(x, 0.75), 5.25);
  EXPECT_DOUBLE_EQ(quantile(x, 1.0), 9.0);
  const auto b = box_stats(x);
  EXPECT_EQ(b.count, 8u);
  EXPECT_EQ(b.q1, 1.75);
  EXPECT_EQ(b.whisker_high, 9.0);
  EXPECT_DOUBLE_EQ(rmse(std::vector<double>{ 1.0, 3.0 }, 2.0), 1.0);
}

TEST(Stats, KolmogorovSurvival)
{
  // Reference values of the Kolmogorov distribution's survival function.
  EXPECT_NEAR(kolmogorov_survival(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.049485876755377876, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.010001537333060776, 1e-12);
  EXPECT_NEAR(kolmogorov_survival(2.0), 0.0006709252557796953, 1e-14);
}

TEST(Stats, KsDetectsNonNormality)
{
  Rng rng = make_stream(4, 0, 0);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> e;
  std::vector<double> a(500), b(500);
  for (auto& v : a)
    v = z(rng);
  for (auto& v : b)
    v = e(rng);
  const auto ra = ks_normal(a, mean(a), std::sqrt(variance(a)));
  const auto rb = ks_normal(b, mean(b), std::sqrt(variance(b)));
  EXPECT_FALSE(ra.rejected_1pct);
  EXPECT_TRUE(rb.rejected_1pct);
  EXPECT_GT(rb.statistic, rb.critical_1pct);
}

TEST(Stats, LineFit)
{
  const std::vector<double> x{ 1, 2, 3, 4 }, y{ 3, 5, 7, 9 };
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.residual_se, 0.0, 1e-14);
  const std::vector<double> var(4, 0.04);
  const std::vector<double> var4(4, 0.01);
  EXPECT_NEAR(fit_line(x, y, var).slope_se, 2.0 * fit_line(x, y, var4).slope_se,
              1e-14);
  EXPECT_THROW(fit_line(std::vector<double>{ 1, 2 }, std::vector<double>{ 1, 2 }),
               Error);
}

TEST(Windows, SmoothWindowIsSymbolic)
{
  // d = 1, r = 3, s = 2.5: n h^2 -> inf needs gamma < 1/2, n h^3.5 -> 0 needs
  // gamma > 2/7, n h^6 -> 0 needs gamma > 1/6.
  EXPECT_TRUE(smooth_window(1, 3, 2.5, 0.4).ok);
  EXPECT_FALSE(smooth_window(1, 3, 2.5, 0.25).ok);
  EXPECT_FALSE(smooth_window(1, 3, 2.5, 0.55).ok);
  EXPECT_FALSE(smooth_window(1, 3, 2.5, 0.5).ok);
  const auto w = smooth_window(1, 3, 2.5, 0.4);
  ASSERT_EQ(w.conditions.size(), 3u);
  EXPECT_NEAR(w.conditions[0].exponent, 0.2, 1e-15);
  EXPECT_NEAR(w.conditions[1].exponent, 1.0 - 1.4, 1e-15);
  EXPECT_EQ(smooth_window(1, 3, std::numeric_limits<double>::infinity(), 0.4)
              .conditions.size(),
            2u);
}

TEST(Windows, NonSmoothAndRegressionWindows)
{
  EXPECT_TRUE(nonsmooth_window(1, 3, 0.3).ok);
  EXPECT_FALSE(nonsmooth_window(1, 3, 0.1).ok);
  EXPECT_FALSE(nonsmooth_window(1, 3, 0.6).ok);
  EXPECT_TRUE(regression_window(1, 3, 0.25).ok);
  EXPECT_FALSE(regression_window(1, 3, 0.1).ok);
  EXPECT_FALSE(regression_window(1, 3, 0.6).ok);
}

TEST(Experiments, CltRejectsBandwidthOutsideWindow)
{
  CltConfig cfg;
  cfg.n = 200;
  cfg.replications = 3;
  cfg.gamma = 0.1;
  try {
    run_clt_smooth(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::window_violation);
  }
  cfg.gamma = 0.1;
  try {
    run_clt_nonsmooth(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::window_violation);
  }
}

TEST(Experiments, NonSmoothIntervalMustBeInsideSupport)
{
  CltConfig cfg;
  cfg.n = 200;
  cfg.replications = 3;
  cfg.gamma = 0.3;
  cfg.model = "uniform-design";
  cfg.a = 0.0;
  EXPECT_THROW(run_clt_nonsmooth(cfg), Error);
  cfg.model = "gaussian-design";
  cfg.d = 2;
  EXPECT_THROW(run_clt_nonsmooth(cfg), Error);
}

TEST(Experiments, MonteCarloOnUniformDesignIsExact)
{
  ExperimentConfig cfg;
  cfg.model = "uniform-design";
  cfg.d = 2;
  cfg.n = 200;
  cfg.replications = 1;
  cfg.variants = { Variant::monte_carlo };
  cfg.phi = "constant-on-box";
  const auto r = run_benchmark(cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].value, 1.0);
  EXPECT_EQ(r.rows[0].status, "ok");
}

TEST(Experiments, SmallBenchmarkIsThreadIndependent)
{
  ExperimentConfig cfg;
  cfg.n = 150;
  cfg.replications = 6;
  cfg.grid_count = 5;
  set_thread_count(1);
  const auto a = run_benchmark(cfg);
  set_thread_count(8);
  const auto b = run_benchmark(cfg);
  set_thread_count(0);
  EXPECT_EQ(rows_bytes(a.rows), rows_bytes(b.rows));
  ASSERT_EQ(a.rows.size(), 18u);
  // One row per (replication, variant), all variants on the same sample.
  std::map<std::size_t, int> per_rep;
  for (const auto& row : a.rows)
    ++per_rep[row.replication];
  for (const auto& [rep, count] : per_rep)
    EXPECT_EQ(count, 3);
}

TEST(Experiments, RowsCsvCarriesNoWallTime)
{
  ReplicationRow row;
  row.variant = Variant::corrected;
  row.value = 1.25;
  row.wall_seconds = 3.5;
  const std::string csv = rows_bytes({ row });
  EXPECT_EQ(csv, "replication,n,variant,status,value,h,n_used,min_fhat\n"
                 "0,0,corrected,ok,1.25,0,0,0\n");
  std::ostringstream t;
  write_timings_csv(t, { row });
  EXPECT_NE(t.str().find("3.5"), std::string::npos);
}

TEST(Experiments, SummariesExcludeFailedRows)
{
  std::vector<ReplicationRow> rows(4);
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].replication = i;
    rows[i].variant = Variant::plain;
    rows[i].value = 1.0 + 0.1 * double(i);
  }
  rows[3].status = "DEGENERATE_DENSITY";
  rows[3].value = std::numeric_limits<double>::quiet_NaN();
  const auto s = summarize(rows, [](Variant) { return 1.0; });
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].ok, 3u);
  EXPECT_EQ(s[0].excluded, 1u);
  EXPECT_NEAR(s[0].bias, 0.1, 1e-15);
  EXPECT_NEAR(s[0].rmse, std::sqrt((0.0 + 0.01 + 0.04) / 3.0), 1e-15);
}

TEST(Experiments, BoxAnnotationsMatchRowsCsv)
{
  ExperimentConfig cfg;
  cfg.n = 120;
  cfg.replications = 9;
  cfg.grid_count = 5;
  const auto dir = std::filesystem::temp_directory_path() / "kdeint_box_test";
  std::filesystem::remove_all(dir);
  cfg.out_dir = dir;
  run_benchmark(cfg);

  std::map<std::string, std::vector<double>> values;
  std::ifstream rows(dir / "rows.csv");
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
      f.push_back(cell);
    if (f[3] == "ok")
      values[f[2]].push_back(std::stod(f[4]));
  }
  std::ifstream svg_in(dir / "boxes.svg");
  const std::string svg((std::istreambuf_iterator<char>(svg_in)), {});
  ASSERT_EQ(values.size(), 3u);
  for (const auto& [variant, v] : values) {
    for (const auto& [label, p] :
         std::vector<std::pair<std::string, double>>{ { "q1", 0.25 },
                                                       { "median", 0.5 },
                                                       { "q3", 0.75 } }) {
      const std::string expected = format_number(type7(v, p));
      const std::regex attr("data-variant=\"" + variant + "\"[^>]*data-" + label +
                            "=\"([^\"]+)\"");
      std::smatch m;
      ASSERT_TRUE(std::regex_search(svg, m, attr)) << variant << " " << label;
      EXPECT_EQ(m[1].str(), expected) << variant << " " << label;
      EXPECT_NE(svg.find(">" + expected + "<"), std::string::npos);
    }
  }
  for (const char* f : { "rows.csv", "timings.csv", "summary.csv", "boxes.svg" })
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}

TEST(Experiments, ConfigParsing)
{
  const auto cfg = parse_experiment_config(
    R"({"schema": 1, "model": "uniform-design", "d": 2, "n": 300,
        "replications": 5, "variants": ["corrected", "monte-carlo"],
        "bandwidth": "rule-of-thumb", "seed": 7})");
  EXPECT_EQ(cfg.model, "uniform-design");
  EXPECT_EQ(cfg.d, 2u);
  EXPECT_EQ(cfg.n, 300u);
  EXPECT_EQ(cfg.replications, 5u);
  EXPECT_EQ(cfg.variants.size(), 2u);
  EXPECT_EQ(cfg.bandwidth, BandwidthPolicy::rule_of_thumb);
  EXPECT_EQ(cfg.seed, 7u);
  auto code_of = [](const char* text) {
    try {
      validate(parse_experiment_config(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::check_failed;
  };
  EXPECT_EQ(code_of(R"({"schema": 1, "colour": "red"})"), ErrorCode::parse_error);
  EXPECT_EQ(code_of(R"({"n": 10})"), ErrorCode::parse_error);
  EXPECT_EQ(code_of(R"({"schema": 1, "n": )"), ErrorCode::parse_error);
  EXPECT_EQ(code_of(R"({"schema": 1, "replications": 0})"),
            ErrorCode::invalid_parameter);
  EXPECT_EQ(code_of(R"({"schema": 1, "variants": ["trimmed-corrected"]})"),
            ErrorCode::invalid_parameter);
  EXPECT_EQ(code_of(R"({"schema": 1, "gamma": 1.5, "bandwidth": "fixed"})"),
            ErrorCode::invalid_parameter);
  EXPECT_EQ(default_seed, ExperimentConfig{}.seed);
}

TEST(Experiments, RateCheckNeedsThreeSampleSizes)
{
  RateConfig cfg;
  cfg.n_grid = { 100, 200 };
  try {
    run_rate_check(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::size_error);
  }
}

TEST(Experiments, MonteCarloRateAndStandardError)
{
  RateConfig cfg;
  cfg.variants = { Variant::monte_carlo };
  cfg.n_grid = { 200, 400, 800, 1600 };
  cfg.replications = 60;
  const auto small = run_rate_check(cfg);
  cfg.replications = 240;
  const auto big = run_rate_check(cfg);
  ASSERT_EQ(big.fits.size(), 1u);
  EXPECT_NEAR(big.fits[0].fit.slope, -0.5, 0.1);
  EXPECT_NEAR(small.fits[0].fit.slope_se / big.fits[0].fit.slope_se, 2.0, 0.6);
}

TEST(Experiments, RegressionExperimentProducesStatistics)
{
  CltConfig cfg;
  cfg.n = 200;
  cfg.replications = 4;
  cfg.gamma = 0.25;
  const auto s = run_regression_experiment(cfg);
  EXPECT_EQ(s.kind, "regression");
  EXPECT_EQ(s.statistics.size(), 4u);
  EXPECT_GT(s.theoretical_variance, 0.0);
}
