#include "kdeint/bandwidth.hpp"

#include "kdeint/density.hpp"
#include "kdeint/error.hpp"
#include "kdeint/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace kdeint {

double
rule_of_thumb_h0(const Sample& s)
{
  const std::size_t n = s.size(), d = s.dim();
  if (n < 2)
    throw Error(ErrorCode::size_error,
                fmt::format("rule of thumb needs n >= 2, got {}", n));
  double var_sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mean += s.coord(i, k);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = s.coord(i, k) - mean;
      ss += t * t;
    }
    var_sum += ss / static_cast<double>(n - 1);
  }
  const double sigma = std::sqrt(var_sum / static_cast<double>(d));
  if (!(sigma > 0.0))
    throw Error(ErrorCode::degenerate_variance,
                "sample has zero variance in every component");
  const double dd = static_cast<double>(d);
  const double num = dd * std::pow(2.0, dd + 5.0) * std::tgamma(dd / 2.0 + 3.0);
  const double den = (2.0 * dd + 1.0) * static_cast<double>(n);
  return sigma * std::pow(num / den, 1.0 / (4.0 + dd));
}

BandwidthGrid
BandwidthGrid::from_list(std::vector<double> h)
{
  if (h.empty())
    throw Error(ErrorCode::invalid_parameter, "bandwidth grid is empty");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !std::isfinite(h[i]))
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("bandwidth candidate {} is not positive", h[i]));
    if (i > 0 && !(h[i] > h[i - 1]))
      throw Error(ErrorCode::invalid_parameter,
                  "bandwidth candidates must be strictly increasing");
  }
  return { std::move(h), Provenance::explicit_list };
}

BandwidthGrid
BandwidthGrid::geometric(double h0, std::size_t count)
{
  if (!(h0 > 0.0) || !std::isfinite(h0))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("grid centre must be positive, got {}", h0));
  if (count == 0)
    throw Error(ErrorCode::invalid_parameter, "bandwidth grid is empty");
  std::vector<double> h(count);
  const double offset = (static_cast<double>(count) - 1.0) / 2.0;
  for (std::size_t i = 0; i < count; ++i)
    h[i] = h0 * std::exp2((static_cast<double>(i) - offset) / 4.0);
  return { std::move(h), Provenance::geometric };
}

std::vector<double>
TestFunction::mixture_weights() const
{
  std::vector<double> mw(weights.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(kept.size());
  for (std::size_t i : kept)
    mw[i] = weights[i] * inv;
  return mw;
}

double
TestFunction::operator()(std::span<const double> x) const
{
  return mixture_eval(centers, mixture_weights(), kernel, h0, x);
}

namespace {

std::vector<double>
mixture_at_centers(const Sample& centers,
                   std::span<const double> mw,
                   const Kernel& k,
                   double h0)
{
  std::vector<double> out(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) {
    out[i] = mixture_eval(centers, mw, k, h0, centers.point(i));
  });
  return out;
}

} // namespace

std::vector<double>
TestFunction::at_centers() const
{
  return mixture_at_centers(centers, mixture_weights(), kernel, h0);
}

std::vector<std::size_t>
unit_cube_interior(const Sample& s, double h)
{
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool inside = true;
    for (std::size_t k = 0; k < s.dim() && inside; ++k) {
      const double x = s.coord(i, k);
      inside = h < x && x < 1.0 - h;
    }
    if (inside)
      kept.push_back(i);
  }
  return kept;
}

namespace {

struct BaseWeights
{
  double h0;
  std::vector<double> w;
  //! Rows with phi != 0 and fhat at or below the floor; their weight is 0.
  std::vector<std::pair<std::size_t, double>> degenerate;
};

BaseWeights
base_weights(const Sample& s,
             const Integrand& phi,
             const Kernel& k,
             std::optional<double> h0_override)
{
  BaseWeights b;
  b.h0 = h0_override ? *h0_override : rule_of_thumb_h0(s);
  const auto loo = loo_density(s, k, b.h0, false);
  b.w.assign(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = phi(s.point(i));
    if (p == 0.0)
      continue;
    if (!(loo.fhat[i] > density_floor)) {
      b.degenerate.emplace_back(i, loo.fhat[i]);
      continue;
    }
    b.w[i] = p / loo.fhat[i];
  }
  return b;
}

// Builds the test function on the subset `kept`; throws when J is empty or
// contains a degenerate row.
TestFunction
assemble(const Sample& s, const BaseWeights& b, std::vector<std::size_t> kept)
{
  if (kept.empty())
    throw Error(ErrorCode::empty_sum, "test function keeps no sample point");
  for (const auto& [i, f] : b.degenerate)
    if (std::binary_search(kept.begin(), kept.end(), i))
      throw DegenerateDensityError(i, f);
  TestFunction tf{ s, b.w, std::move(kept), b.h0,
                   epanechnikov_kernel(s.dim()), 0.0 };
  double sum = 0.0;
  for (std::size_t i : tf.kept)
    sum += tf.weights[i];
  tf.target_integral = sum / static_cast<double>(tf.kept.size());
  return tf;
}

std::vector<std::size_t>
all_rows(std::size_t n)
{
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = i;
  return v;
}

} // namespace

TestFunction
build_test_function(const Sample& s,
                    const Integrand& phi,
                    const Kernel& k_estimation,
                    const TestFunctionOptions& opts)
{
  if (opts.h0 && !(*opts.h0 > 0.0))
    throw Error(ErrorCode::invalid_parameter, "h0 must be positive");
  const auto b = base_weights(s, phi, k_estimation, opts.h0);
  auto kept = opts.h_trim ? unit_cube_interior(s, *opts.h_trim)
                          : all_rows(s.size());
  return assemble(s, b, std::move(kept));
}

namespace {

struct CandidateEval
{
  CandidateRow plain;
  CandidateRow corrected;
};

std::string
status_of(const Error& e)
{
  return std::string(to_string(e.code()));
}

double
pick(std::vector<CandidateRow>& table)
{
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i].valid)
      continue;
    // Candidates are increasing, so strict < keeps the smaller h on ties.
    if (!best || table[i].criterion < table[*best].criterion)
      best = i;
  }
  if (!best)
    throw Error(ErrorCode::all_candidates_invalid,
                "no bandwidth candidate produced a valid estimate");
  return table[*best].h;
}

SelectionPair
select_impl(const Sample& s,
            const Integrand& phi,
            const Kernel& k,
            const BandwidthGrid& grid,
            const SelectionOptions& opts,
            bool want_plain,
            bool want_corrected)
{
  if (grid.candidates.empty())
    throw Error(ErrorCode::invalid_parameter, "bandwidth grid is empty");
  const Sample c = canonicalize(s);
  const auto base = base_weights(c, phi, k, opts.h0);

  // Test-function values at the sample points, per distinct J.
  std::optional<TestFunction> fixed_tf;
  std::optional<std::vector<double>> fixed_vals;
  if (!opts.trim_unit_cube || opts.trim_reference == TrimReference::h0) {
    auto kept = opts.trim_unit_cube ? unit_cube_interior(c, base.h0)
                                    : all_rows(c.size());
    fixed_tf = assemble(c, base, std::move(kept));
    fixed_vals = fixed_tf->at_centers();
  }

  std::vector<CandidateEval> evals(grid.candidates.size());
  for (std::size_t g = 0; g < grid.candidates.size(); ++g) {
    const double h = grid.candidates[g];
    CandidateEval& ev = evals[g];
    ev.plain.h = ev.corrected.h = h;
    try {
      std::optional<TestFunction> local_tf;
      std::vector<double> local_vals;
      const TestFunction* tf = nullptr;
      const std::vector<double>* vals = nullptr;
      if (fixed_tf) {
        tf = &*fixed_tf;
        vals = &*fixed_vals;
      } else {
        local_tf = assemble(c, base, unit_cube_interior(c, h));
        local_vals = local_tf->at_centers();
        tf = &*local_tf;
        vals = &local_vals;
      }
      ev.plain.target = ev.corrected.target = tf->target_integral;
      const auto loo = loo_density(c, k, h, want_corrected);
      auto fill = [&](CandidateRow& row, auto&& estimate) {
        try {
          const auto r = estimate();
          row.estimate = r.value;
          row.criterion = std::abs(r.value - row.target);
          row.valid = std::isfinite(row.criterion);
          row.status = row.valid ? "ok" : "NON_FINITE";
        } catch (const Error& e) {
          row.status = status_of(e);
        }
      };
      if (want_plain)
        fill(ev.plain, [&] { return plain_from_terms(*vals, loo); });
      if (want_corrected)
        fill(ev.corrected, [&] { return corrected_from_terms(*vals, loo); });
    } catch (const Error& e) {
      ev.plain.status = ev.corrected.status = status_of(e);
    }
  }

  SelectionPair out;
  out.plain.variant = Variant::plain;
  out.corrected.variant = Variant::corrected;
  out.plain.h0 = out.corrected.h0 = base.h0;
  for (const auto& ev : evals) {
    out.plain.table.push_back(ev.plain);
    out.corrected.table.push_back(ev.corrected);
  }
  if (want_plain)
    out.plain.h_star = pick(out.plain.table);
  if (want_corrected)
    out.corrected.h_star = pick(out.corrected.table);
  return out;
}

} // namespace

BandwidthSelection
select_bandwidth(const Sample& s,
                 const Integrand& phi,
                 const Kernel& k,
                 const BandwidthGrid& grid,
                 Variant variant,
                 const SelectionOptions& opts)
{
  if (variant == Variant::plain)
    return select_impl(s, phi, k, grid, opts, true, false).plain;
  if (variant == Variant::corrected)
    return select_impl(s, phi, k, grid, opts, false, true).corrected;
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("bandwidth selection supports plain and corrected, "
                          "not {}",
                          to_string(variant)));
}

SelectionPair
select_bandwidth_both(const Sample& s,
                      const Integrand& phi,
                      const Kernel& k,
                      const BandwidthGrid& grid,
                      const SelectionOptions& opts)
{
  return select_impl(s, phi, k, grid, opts, true, true);
}

} // namespace kdeint
