#include "kdeint/bandwidth.hpp"
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
#include <numbers>
#include <numeric>

using namespace kdeint;

namespace {

// Sample rescaled to mean 0 and unbiased variance exactly `var` (up to rounding).
Sample
standardized(std::size_t n, double var, std::uint64_t seed)
{
  Rng rng = make_stream(seed, 0, 0);
  const Sample s = sample_model1(n, 1, rng);
  std::vector<double> x(s.data().begin(), s.data().end());
  const double m = mean(x);
  const double sd = std::sqrt(variance(x));
  for (double& v : x)
    v = (v - m) / sd * std::sqrt(var);
  return Sample(1, x);
}

Integrand
zero_integrand()
{
  Integrand phi;
  phi.evaluate = [](auto) { return 0.0; };
  return phi;
}

} // namespace

TEST(Bandwidth, RuleOfThumbValue)
{
  const Sample s = standardized(100, 1.0, 1);
  // Gamma(7/2) = 15 sqrt(pi) / 8.
  const double gamma35 = 15.0 * std::sqrt(std::numbers::pi) / 8.0;
  const double expected = std::pow(64.0 * gamma35 / 300.0, 0.2);
  EXPECT_NEAR(rule_of_thumb_h0(s), expected, 1e-12);
  EXPECT_NEAR(expected, 0.9335, 5e-5);
}

TEST(Bandwidth, RuleOfThumbScalesWithData)
{
  const Sample s = standardized(100, 1.0, 2);
  const Sample t = standardized(100, 9.0, 2);
  EXPECT_NEAR(rule_of_thumb_h0(t), 3.0 * rule_of_thumb_h0(s), 1e-12);
  const Sample big = standardized(1600, 1.0, 3);
  EXPECT_NEAR(rule_of_thumb_h0(s) / rule_of_thumb_h0(big), std::pow(16.0, 0.2),
              1e-12);
}

TEST(Bandwidth, RuleOfThumbErrors)
{
  try {
    rule_of_thumb_h0(Sample(1, { 2.0, 2.0, 2.0 }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_variance);
  }
  try {
    rule_of_thumb_h0(Sample(1, { 2.0 }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::size_error);
  }
}

TEST(Bandwidth, GeometricGrid)
{
  const auto g = BandwidthGrid::geometric(0.8);
  ASSERT_EQ(g.candidates.size(), 17u);
  EXPECT_DOUBLE_EQ(g.candidates.front(), 0.2);
  EXPECT_DOUBLE_EQ(g.candidates[8], 0.8);
  EXPECT_DOUBLE_EQ(g.candidates.back(), 3.2);
  EXPECT_TRUE(std::is_sorted(g.candidates.begin(), g.candidates.end()));
  EXPECT_EQ(g.provenance, BandwidthGrid::Provenance::geometric);
  EXPECT_THROW(BandwidthGrid::from_list({ 0.2, 0.1 }), Error);
  EXPECT_THROW(BandwidthGrid::from_list({ 0.0, 0.1 }), Error);
  EXPECT_THROW(BandwidthGrid::from_list({}), Error);
}

TEST(Bandwidth, ZeroIntegrandTestFunction)
{
  Rng rng = make_stream(4, 0, 0);
  const Sample s = sample_model1(80, 1, rng);
  const auto tf = build_test_function(s, zero_integrand(), radial_order3_kernel(1));
  for (double w : tf.weights)
    EXPECT_EQ(w, 0.0);
  EXPECT_EQ(tf.target_integral, 0.0);
}

TEST(Bandwidth, UntrimmedTargetIsWeightAverage)
{
  Rng rng = make_stream(5, 0, 0);
  const Sample s = sample_model1(150, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const auto tf = build_test_function(s, phi_sinprod(1), k);
  ASSERT_EQ(tf.kept.size(), s.size());
  // Weights recomputed independently from the leave-one-out density at h0.
  const auto loo = loo_density(s, k, tf.h0, false);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double w = phi_sinprod(1)(s.point(i)) == 0.0
                       ? 0.0
                       : phi_sinprod(1)(s.point(i)) / loo.fhat[i];
    EXPECT_DOUBLE_EQ(tf.weights[i], w);
    sum += tf.weights[i];
  }
  EXPECT_EQ(tf.target_integral, sum / static_cast<double>(s.size()));
  EXPECT_EQ(tf.kernel.id(), epanechnikov_kernel(1).id());
  EXPECT_DOUBLE_EQ(tf.h0, rule_of_thumb_h0(s));
}

TEST(Bandwidth, QuadratureOfTestFunctionMatchesTarget)
{
  Rng rng = make_stream(6, 0, 0);
  const Sample s = sample_model1(120, 1, rng);
  const auto tf = build_test_function(s, phi_sinprod(1), radial_order3_kernel(1));
  std::vector<double> cuts;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cuts.push_back(s.coord(i, 0) - tf.h0);
    cuts.push_back(s.coord(i, 0) + tf.h0);
  }
  std::sort(cuts.begin(), cuts.end());
  const double q =
    integrate([&](double x) { const double p[] = { x }; return tf(p); },
              cuts.front(), cuts.back(), 1e-11, cuts)
      .value;
  EXPECT_NEAR(q, tf.target_integral, 1e-8);
}

TEST(Bandwidth, TrimmedIndexSet)
{
  const Sample s(1, { 0.1, 0.5, 0.9 });
  const auto interior = unit_cube_interior(s, 0.3);
  EXPECT_EQ(interior, std::vector<std::size_t>{ 1 });
  TestFunctionOptions opts;
  opts.h_trim = 0.3;
  opts.h0 = 0.5;
  const auto tf = build_test_function(s, phi_sinprod(1), epanechnikov_kernel(1), opts);
  EXPECT_EQ(tf.kept, std::vector<std::size_t>{ 1 });
  EXPECT_EQ(tf.target_integral, tf.weights[1]);
  opts.h_trim = 0.6;
  try {
    build_test_function(s, phi_sinprod(1), epanechnikov_kernel(1), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_sum);
  }
}

TEST(Bandwidth, MixturePathMatchesDirectSum)
{
  Rng rng = make_stream(7, 0, 0);
  const Sample s = sample_model1(90, 2, rng);
  const auto tf = build_test_function(s, phi_sinprod(2), radial_order3_kernel(2));
  const auto fast = tf.at_centers();
  const Kernel kt = epanechnikov_kernel(2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double direct = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double u[] = { (s.coord(i, 0) - s.coord(j, 0)) / tf.h0,
                           (s.coord(i, 1) - s.coord(j, 1)) / tf.h0 };
      const double term = tf.weights[j] * kt(u) / (tf.h0 * tf.h0);
      direct += term;
      scale += std::abs(term);
    }
    direct /= static_cast<double>(s.size());
    scale /= static_cast<double>(s.size());
    EXPECT_LE(std::abs(fast[i] - direct), 1e-12 * scale + 1e-300);
  }
}

TEST(Bandwidth, SingleCandidateIsSelected)
{
  Rng rng = make_stream(8, 0, 0);
  const Sample s = sample_model1(100, 1, rng);
  const auto sel = select_bandwidth(s, phi_sinprod(1), radial_order3_kernel(1),
                                    BandwidthGrid::from_list({ 0.37 }),
                                    Variant::corrected);
  EXPECT_EQ(sel.h_star, 0.37);
  ASSERT_EQ(sel.table.size(), 1u);
  EXPECT_TRUE(sel.table[0].valid);
}

TEST(Bandwidth, TiesGoToSmallerBandwidth)
{
  Rng rng = make_stream(9, 0, 0);
  const Sample s = sample_model1(100, 1, rng);
  const auto sel = select_bandwidth(s, zero_integrand(), radial_order3_kernel(1),
                                    BandwidthGrid::from_list({ 0.2, 0.3, 0.4 }),
                                    Variant::plain);
  EXPECT_EQ(sel.h_star, 0.2);
  for (const auto& row : sel.table)
    EXPECT_EQ(row.criterion, 0.0);
}

TEST(Bandwidth, SelectionAttainsTableMinimumAndIsDeterministic)
{
  Rng rng = make_stream(10, 0, 0);
  const Sample s = sample_model1(300, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const auto grid = BandwidthGrid::geometric(rule_of_thumb_h0(s));
  const auto a = select_bandwidth(s, phi_sinprod(1), k, grid, Variant::corrected);
  const auto b = select_bandwidth(s, phi_sinprod(1), k, grid, Variant::corrected);
  ASSERT_EQ(a.table.size(), 17u);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : a.table)
    if (row.valid)
      best = std::min(best, row.criterion);
  const auto chosen = std::find_if(a.table.begin(), a.table.end(),
                                   [&](const auto& r) { return r.h == a.h_star; });
  ASSERT_NE(chosen, a.table.end());
  EXPECT_EQ(chosen->criterion, best);
  EXPECT_EQ(a.h_star, b.h_star);
  for (std::size_t i = 0; i < a.table.size(); ++i)
    EXPECT_EQ(a.table[i].criterion, b.table[i].criterion);

  const auto both = select_bandwidth_both(s, phi_sinprod(1), k, grid);
  EXPECT_EQ(both.corrected.h_star, a.h_star);
  EXPECT_EQ(both.plain.h_star,
            select_bandwidth(s, phi_sinprod(1), k, grid, Variant::plain).h_star);
}

TEST(Bandwidth, CandidateEstimateMatchesEstimatorOnTestFunction)
{
  Rng rng = make_stream(11, 0, 0);
  const Sample s = sample_model1(150, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const auto sel = select_bandwidth(s, phi_sinprod(1), k,
                                    BandwidthGrid::from_list({ 0.3 }), Variant::plain);
  const auto tf = build_test_function(s, phi_sinprod(1), k);
  Integrand surrogate;
  surrogate.evaluate = [&](std::span<const double> x) { return tf(x); };
  EXPECT_NEAR(sel.table[0].estimate, estimate_plain(s, surrogate, k, 0.3).value,
              1e-12);
  EXPECT_NEAR(sel.table[0].target, tf.target_integral, 1e-14);
}

TEST(Bandwidth, AllInvalidCandidatesIsAnError)
{
  const Sample s(1, { 0.1, 0.3, 0.5, 0.7, 0.9 });
  try {
    select_bandwidth(s, phi_sinprod(1), radial_order3_kernel(1),
                     BandwidthGrid::from_list({ 1e-4, 2e-4 }), Variant::corrected);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::all_candidates_invalid);
  }
}

TEST(Bandwidth, TrimReferenceChangesTrimmedSet)
{
  Rng rng = make_stream(12, 0, 0);
  const Sample s = sample_model2(300, 1, rng);
  const Kernel k = radial_order3_kernel(1);
  const auto grid = BandwidthGrid::from_list({ 0.05, 0.2 });
  SelectionOptions cand;
  cand.trim_unit_cube = true;
  SelectionOptions ref = cand;
  ref.trim_reference = TrimReference::h0;
  const auto a = select_bandwidth(s, phi_sinprod(1), k, grid, Variant::corrected, cand);
  const auto b = select_bandwidth(s, phi_sinprod(1), k, grid, Variant::corrected, ref);
  EXPECT_NE(a.table[0].target, a.table[1].target);
  EXPECT_EQ(b.table[0].target, b.table[1].target);
}

TEST(Bandwidth, SelectedBandwidthBeatsRuleOfThumb)
{
  const Kernel k = radial_order3_kernel(1);
  const Integrand phi = phi_sinprod(1);
  double err_sel = 0.0, err_h0 = 0.0;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    Rng rng = make_stream(2024, rep, 0);
    const Sample s = sample_model1(500, 1, rng);
    const double h0 = rule_of_thumb_h0(s);
    const auto sel = select_bandwidth(s, phi, k, BandwidthGrid::geometric(h0),
                                      Variant::corrected);
    err_sel += std::abs(estimate_corrected(s, phi, k, sel.h_star).value - 1.0);
    err_h0 += std::abs(estimate_corrected(s, phi, k, h0).value - 1.0);
  }
  EXPECT_LT(err_sel, err_h0);
}
