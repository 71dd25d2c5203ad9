#pragma once

#include "kdeint/density.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/sample.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kdeint {

//! Axis-aligned box [lower, upper] in R^d.
struct Box
{
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> x) const;
};

//! A function phi: R^d -> R to integrate.
struct Integrand
{
  std::function<double(std::span<const double>)> evaluate;
  //! Box outside which phi vanishes, when known.
  std::optional<Box> support;
  //! Declared Nikolski smoothness; informational (used by bandwidth windows).
  double smoothness = std::numeric_limits<double>::quiet_NaN();
  std::string name;

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

//! T(x, y) for functionals int T(x, f(x)) dx.
using FunctionalT = std::function<double(std::span<const double>, double)>;

enum class Variant
{
  plain,
  corrected,
  trimmed_plain,
  trimmed_corrected,
  monte_carlo,
  general_functional,
  regression,
};

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view name);

struct EstimateReport
{
  double value = 0.0;
  Variant variant = Variant::plain;
  double h = 0.0;
  std::size_t n_used = 0;
  double min_fhat = 0.0;
  std::optional<double> trim_threshold;
  //! max_i vhat_i / fhat_i^2 over contributing terms (corrected variants).
  std::optional<double> max_correction_ratio;
};

//! Absolute floor below which a contributing leave-one-out density is treated
//! as degenerate by the untrimmed estimators.
inline constexpr double density_floor = 1e-12;

// Sample-level estimators. The sample is put in canonical row order first,
// so values are independent of the caller's row order.

//! n^{-1} sum phi(X_i) / fhat_i. Terms with phi(X_i) = 0 contribute 0.
EstimateReport estimate_plain(const Sample& s,
                              const Integrand& phi,
                              const Kernel& k,
                              double h);

//! n^{-1} sum phi(X_i) / fhat_i (1 - vhat_i / fhat_i^2); the correction is
//! not clamped.
EstimateReport estimate_corrected(const Sample& s,
                                  const Integrand& phi,
                                  const Kernel& k,
                                  double h);

//! Drops terms with fhat_i <= b; the divisor stays n.
EstimateReport estimate_trimmed(const Sample& s,
                                const Integrand& phi,
                                const Kernel& k,
                                double h,
                                double b,
                                bool corrected);

//! Importance-sampling baseline n^{-1} sum phi(X_i) / f(X_i).
EstimateReport estimate_mc_baseline(
  const Sample& s,
  const Integrand& phi,
  const std::function<double(std::span<const double>)>& f_true);

//! n^{-1} sum T(X_i, fhat_i) / fhat_i.
EstimateReport estimate_general_functional(const Sample& s,
                                           const FunctionalT& t,
                                           const Kernel& k,
                                           double h);

//! n^{-1} sum Y_i psi(X_i) / fhat_i; requires responses.
EstimateReport estimate_regression_functional(const Sample& s,
                                              const Integrand& psi,
                                              const Kernel& k,
                                              double h);

// Term-level forms used when one density pass feeds several estimators.
// `numerators[i]` is phi(X_i) (or T, or Y_i psi(X_i)) for the rows `loo`
// was computed on; no reordering happens here.

EstimateReport plain_from_terms(std::span<const double> numerators,
                                const LooDensity& loo,
                                Variant tag = Variant::plain);
EstimateReport corrected_from_terms(std::span<const double> numerators,
                                    const LooDensity& loo);
EstimateReport trimmed_from_terms(std::span<const double> numerators,
                                  const LooDensity& loo,
                                  double b,
                                  bool corrected);

//! phi evaluated at every row of s.
std::vector<double> evaluate_at(const Integrand& phi, const Sample& s);

} // namespace kdeint
