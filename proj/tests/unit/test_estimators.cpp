#include "kdeint/density.hpp"
#include "kdeint/error.hpp"
#include "kdeint/estimators.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/models.hpp"
#include "kdeint/numerics.hpp"
#include "kdeint/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace kdeint;

namespace {

Integrand
make_integrand(std::function<double(std::span<const double>)> f)
{
  Integrand phi;
  phi.evaluate = std::move(f);
  phi.name = "test";
  return phi;
}

const Integrand zero = make_integrand([](auto) { return 0.0; });
const Integrand one = make_integrand([](auto) { return 1.0; });

// f^(i) and v^(i) from their definitions, one row at a time.
void
naive_row(const Sample& s, const Kernel& k, double h, std::size_t i,
          double& f, double& v)
{
  const std::size_t n = s.size();
  std::vector<double> kij;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i)
      continue;
    const double u[] = { (s.coord(i, 0) - s.coord(j, 0)) / h };
    kij.push_back(k(u) / h);
  }
  f = std::accumulate(kij.begin(), kij.end(), 0.0) / static_cast<double>(n - 1);
  v = 0.0;
  for (double x : kij)
    v += (x - f) * (x - f);
  v /= static_cast<double>((n - 1) * (n - 2));
}

} // namespace

TEST(Estimators, ZeroIntegrandGivesZero)
{
  Rng rng = make_stream(1, 0, 0);
  const Sample s = sample_model1(50, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  EXPECT_EQ(estimate_plain(s, zero, k, 0.3).value, 0.0);
  EXPECT_EQ(estimate_corrected(s, zero, k, 0.3).value, 0.0);
  EXPECT_EQ(estimate_mc_baseline(s, zero, model1_density).value, 0.0);
}

TEST(Estimators, TwoPointPlainEstimate)
{
  const double h = 0.6;
  const Sample s(1, { 0.0, h / 2.0 });
  const auto r = estimate_plain(s, one, radial_order3_kernel(1), h);
  EXPECT_DOUBLE_EQ(r.value, 2.0 * h);
  EXPECT_EQ(r.variant, Variant::plain);
  EXPECT_EQ(r.n_used, 2u);
}

TEST(Estimators, ThreePointCorrectedMatchesHandFormula)
{
  const Sample s(1, { 0.2, 0.45, 0.5 });
  const double h = 0.7;
  const Kernel k = radial_order3_kernel(1);
  const Integrand phi = make_integrand([](auto x) { return 1.0 + x[0] * x[0]; });
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double f, v;
    naive_row(s, k, h, i, f, v);
    const double x = s.coord(i, 0);
    expected += (1.0 + x * x) / f * (1.0 - v / (f * f));
  }
  expected /= 3.0;
  EXPECT_NEAR(estimate_corrected(s, phi, k, h).value, expected,
              1e-12 * std::abs(expected));
}

TEST(Estimators, CorrectionIsNotClamped)
{
  LooDensity loo;
  loo.h = 1.0;
  loo.fhat = { 1.0, 2.0 };
  loo.vhat = std::vector<double>{ 3.0, 0.0 };
  loo.min_fhat = 1.0;
  const std::vector<double> num{ 1.0, 2.0 };
  const auto r = corrected_from_terms(num, loo);
  EXPECT_DOUBLE_EQ(r.value, 0.5 * ((1.0 - 3.0) + 1.0));
  ASSERT_TRUE(r.max_correction_ratio.has_value());
  EXPECT_DOUBLE_EQ(*r.max_correction_ratio, 3.0);
}

TEST(Estimators, TrimmingWithZeroThresholdMatchesUntrimmed)
{
  Rng rng = make_stream(2, 0, 0);
  const Sample s = sample_model2(200, 1, rng);
  const Kernel k = epanechnikov_kernel(1);
  const Integrand phi = phi_sinprod(1);
  const double h = 0.5;
  ASSERT_GT(loo_density(s, k, h, false).min_fhat, 0.0);
  const auto plain = estimate_plain(s, phi, k, h);
  const auto tp = estimate_trimmed(s, phi, k, h, 0.0, false);
  const auto corr = estimate_corrected(s, phi, k, h);
  const auto tc = estimate_trimmed(s, phi, k, h, 0.0, true);
  EXPECT_EQ(plain.value, tp.value);
  EXPECT_EQ(corr.value, tc.value);
  EXPECT_EQ(tp.n_used, s.size());
  EXPECT_EQ(tp.variant, Variant::trimmed_plain);
  EXPECT_EQ(tc.variant, Variant::trimmed_corrected);
  EXPECT_EQ(*tp.trim_threshold, 0.0);
}

TEST(Estimators, TrimmingEverythingIsAnEmptySum)
{
  Rng rng = make_stream(3, 0, 0);
  const Sample s = sample_model1(60, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const auto loo = loo_density(s, k, 0.4, false);
  const double top = *std::max_element(loo.fhat.begin(), loo.fhat.end());
  try {
    estimate_trimmed(s, phi_sinprod(1), k, 0.4, top + 1.0, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_sum);
  }
  try {
    estimate_trimmed(s, phi_sinprod(1), k, 0.4, -1.0, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_parameter);
  }
}

TEST(Estimators, TrimmingRescuesIsolatedOutlier)
{
  // A cluster near 0.3 plus one point at 0.9 with no neighbour within h.
  std::vector<double> x{ 0.9 };
  for (int i = 0; i < 20; ++i)
    x.push_back(0.25 + 0.005 * i);
  const Sample s(1, x);
  const Kernel k = radial_order3_kernel(1);
  const double h = 0.2;
  try {
    estimate_plain(s, phi_sinprod(1), k, h);
    FAIL();
  } catch (const DegenerateDensityError& e) {
    EXPECT_EQ(e.index(), 0u);
    EXPECT_EQ(e.value(), 0.0);
    EXPECT_EQ(e.code(), ErrorCode::degenerate_density);
  }
  const auto r = estimate_trimmed(s, phi_sinprod(1), k, h, 1e-12, false);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_EQ(r.n_used, 20u);
}

TEST(Estimators, DegenerateRowOutsideSupportIsSkipped)
{
  const Sample s(1, { 3.0, 0.4, 0.45, 0.5, 0.55 });
  const auto r = estimate_plain(s, phi_sinprod(1), radial_order3_kernel(1), 0.3);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_EQ(r.min_fhat, 0.0);
}

TEST(Estimators, MonteCarloOfTrueDensityIsExactlyOne)
{
  Rng rng = make_stream(4, 0, 0);
  const Sample s1 = sample_model1(500, 2, rng);
  const Integrand f1 = make_integrand(model1_density);
  EXPECT_EQ(estimate_mc_baseline(s1, f1, model1_density).value, 1.0);
  const Sample s2 = sample_model2(500, 3, rng);
  const Integrand f2 = make_integrand(model2_density);
  const auto r = estimate_mc_baseline(s2, f2, model2_density);
  EXPECT_EQ(r.value, 1.0);
  EXPECT_EQ(r.variant, Variant::monte_carlo);
}

TEST(Estimators, GeneralFunctionalReducesToPlain)
{
  Rng rng = make_stream(5, 0, 0);
  const Sample s = sample_model1(300, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const Integrand phi = phi_sinprod(1);
  const auto t = estimate_general_functional(
    s, [&](std::span<const double> x, double) { return phi(x); }, k, 0.3);
  EXPECT_EQ(t.value, estimate_plain(s, phi, k, 0.3).value);
  EXPECT_EQ(t.variant, Variant::general_functional);
}

TEST(Estimators, GeneralFunctionalEstimatesMassOfBox)
{
  Rng rng = make_stream(6, 0, 0);
  const Sample s = sample_model1(3000, 1, rng);
  const auto t = estimate_general_functional(
    s, [](std::span<const double> x, double y) {
      return x[0] >= 0.0 && x[0] <= 1.0 ? y : 0.0;
    },
    radial_order3_kernel(1), 0.2);
  // P(|N(0,1)| <= 1).
  EXPECT_NEAR(t.value, std::erf(1.0 / std::sqrt(2.0)), 0.05);
}

TEST(Estimators, NoiseFreeRegressionEqualsPlain)
{
  Rng rng = make_stream(7, 0, 0);
  const Sample x = sample_model1(400, 1, rng);
  const auto g = [](std::span<const double> p) { return 1.0 + p[0]; };
  const Integrand psi = phi_sinprod(1);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = g(x.point(i));
  const Sample xy(1, std::vector<double>(x.data().begin(), x.data().end()), y);
  const Integrand gpsi = make_integrand([&](auto p) { return g(p) * psi(p); });
  const Kernel k = radial_order3_kernel(1);
  const auto c = estimate_regression_functional(xy, psi, k, 0.25);
  EXPECT_EQ(c.value, estimate_plain(x, gpsi, k, 0.25).value);
  EXPECT_EQ(c.variant, Variant::regression);
}

TEST(Estimators, RegressionWithZeroResponsesIsZero)
{
  Rng rng = make_stream(8, 0, 0);
  const Sample x = sample_model1(50, 1, rng);
  const Sample xy(1, std::vector<double>(x.data().begin(), x.data().end()),
                  std::vector<double>(50, 0.0));
  EXPECT_EQ(
    estimate_regression_functional(xy, phi_sinprod(1), radial_order3_kernel(1), 0.3)
      .value,
    0.0);
  try {
    estimate_regression_functional(x, phi_sinprod(1), radial_order3_kernel(1), 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_responses);
  }
}

TEST(Estimators, PermutationInvariance)
{
  Rng rng = make_stream(9, 0, 0);
  const Sample s = sample_model1(250, 2, rng);
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Sample p = s.permuted(perm);
  const Kernel k = radial_order3_kernel(2);
  const Integrand phi = phi_sinprod(2);
  EXPECT_EQ(estimate_plain(s, phi, k, 0.4).value, estimate_plain(p, phi, k, 0.4).value);
  EXPECT_EQ(estimate_corrected(s, phi, k, 0.4).value,
            estimate_corrected(p, phi, k, 0.4).value);
  EXPECT_EQ(estimate_trimmed(s, phi, k, 0.4, 0.05, true).value,
            estimate_trimmed(p, phi, k, 0.4, 0.05, true).value);
}

TEST(Estimators, DegenerateIndexRefersToCallerRow)
{
  std::vector<double> x;
  for (int i = 0; i < 10; ++i)
    x.push_back(0.4 + 0.01 * i);
  x.insert(x.begin() + 4, 0.95);
  const Sample s(1, x);
  try {
    estimate_corrected(s, phi_sinprod(1), radial_order3_kernel(1), 0.2);
    FAIL();
  } catch (const DegenerateDensityError& e) {
    EXPECT_EQ(e.index(), 4u);
  }
}

TEST(Estimators, AffineEquivariance)
{
  Rng rng = make_stream(10, 0, 0);
  const Sample s = sample_model1(300, 1, rng);
  const double a = 2.5, c = -1.0, h = 0.3;
  std::vector<double> y(s.data().begin(), s.data().end());
  for (double& v : y)
    v = a * v + c;
  const Sample t(1, y);
  const Integrand phi = phi_sinprod(1);
  const Integrand mapped = make_integrand([&](auto p) {
    const double q[] = { (p[0] - c) / a };
    return phi(q);
  });
  const Kernel k = radial_order3_kernel(1);
  const double i1 = estimate_plain(s, phi, k, h).value;
  const double i2 = estimate_plain(t, mapped, k, a * h).value;
  EXPECT_NEAR(i2, a * i1, 1e-12 * std::abs(a * i1));
  const double c1 = estimate_corrected(s, phi, k, h).value;
  const double c2 = estimate_corrected(t, mapped, k, a * h).value;
  EXPECT_NEAR(c2, a * c1, 1e-11 * std::abs(a * c1));
}

TEST(Estimators, EstimatesAreConsistent)
{
  Rng rng = make_stream(11, 0, 0);
  const Sample s = sample_model1(2000, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const Integrand phi = phi_sinprod(1);
  EXPECT_NEAR(estimate_plain(s, phi, k, 0.15).value, 1.0, 0.05);
  EXPECT_NEAR(estimate_corrected(s, phi, k, 0.15).value, 1.0, 0.05);
}

TEST(Estimators, VariantNamesRoundTrip)
{
  for (Variant v : { Variant::plain, Variant::corrected, Variant::trimmed_plain,
                     Variant::trimmed_corrected, Variant::monte_carlo,
                     Variant::general_functional, Variant::regression })
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("bogus"), Error);
}

TEST(Estimators, BoxContainment)
{
  const Box b{ { 0.0, 0.0 }, { 1.0, 2.0 } };
  const double in[] = { 0.5, 1.5 }, edge[] = { 1.0, 0.0 }, out[] = { 0.5, 2.1 };
  EXPECT_TRUE(b.contains(in));
  EXPECT_TRUE(b.contains(edge));
  EXPECT_FALSE(b.contains(out));
}
