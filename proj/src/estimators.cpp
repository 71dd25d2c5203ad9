#include "kdeint/estimators.hpp"

#include "kdeint/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace kdeint {

bool
Box::contains(std::span<const double> x) const
{
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < lower[k] || x[k] > upper[k])
      return false;
  return true;
}

std::string_view
to_string(Variant v)
{
  switch (v) {
    case Variant::plain:
      return "plain";
    case Variant::corrected:
      return "corrected";
    case Variant::trimmed_plain:
      return "trimmed-plain";
    case Variant::trimmed_corrected:
      return "trimmed-corrected";
    case Variant::monte_carlo:
      return "monte-carlo";
    case Variant::general_functional:
      return "general-functional";
    case Variant::regression:
      return "regression";
  }
  return "unknown";
}

Variant
variant_from_string(std::string_view name)
{
  for (Variant v : { Variant::plain,
                     Variant::corrected,
                     Variant::trimmed_plain,
                     Variant::trimmed_corrected,
                     Variant::monte_carlo,
                     Variant::general_functional,
                     Variant::regression })
    if (to_string(v) == name)
      return v;
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("unknown estimator variant '{}'", name));
}

std::vector<double>
evaluate_at(const Integrand& phi, const Sample& s)
{
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = phi(s.point(i));
  return out;
}

namespace {

void
check_terms(std::span<const double> numerators, const LooDensity& loo)
{
  if (numerators.size() != loo.fhat.size())
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("{} terms for {} density values",
                            numerators.size(),
                            loo.fhat.size()));
}

} // namespace

EstimateReport
plain_from_terms(std::span<const double> numerators,
                 const LooDensity& loo,
                 Variant tag)
{
  check_terms(numerators, loo);
  double sum = 0.0;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    if (numerators[i] == 0.0)
      continue;
    const double f = loo.fhat[i];
    if (!(f > density_floor))
      throw DegenerateDensityError(i, f);
    sum += numerators[i] / f;
  }
  EstimateReport r;
  r.value = sum / static_cast<double>(numerators.size());
  r.variant = tag;
  r.h = loo.h;
  r.n_used = numerators.size();
  r.min_fhat = loo.min_fhat;
  return r;
}

EstimateReport
corrected_from_terms(std::span<const double> numerators, const LooDensity& loo)
{
  check_terms(numerators, loo);
  if (!loo.vhat)
    throw Error(ErrorCode::invalid_parameter,
                "corrected estimator needs variance values");
  const auto& vhat = *loo.vhat;
  double sum = 0.0;
  double max_ratio = 0.0;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    if (numerators[i] == 0.0)
      continue;
    const double f = loo.fhat[i];
    if (!(f > density_floor))
      throw DegenerateDensityError(i, f);
    const double ratio = vhat[i] / (f * f);
    max_ratio = std::max(max_ratio, ratio);
    sum += numerators[i] / f * (1.0 - ratio);
  }
  EstimateReport r;
  r.value = sum / static_cast<double>(numerators.size());
  r.variant = Variant::corrected;
  r.h = loo.h;
  r.n_used = numerators.size();
  r.min_fhat = loo.min_fhat;
  r.max_correction_ratio = max_ratio;
  return r;
}

EstimateReport
trimmed_from_terms(std::span<const double> numerators,
                   const LooDensity& loo,
                   double b,
                   bool corrected)
{
  check_terms(numerators, loo);
  if (!(b >= 0.0))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("trim threshold must be >= 0, got {}", b));
  if (corrected && !loo.vhat)
    throw Error(ErrorCode::invalid_parameter,
                "corrected estimator needs variance values");
  double sum = 0.0;
  double max_ratio = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < numerators.size(); ++i) {
    const double f = loo.fhat[i];
    if (!(f > b))
      continue;
    ++kept;
    if (numerators[i] == 0.0)
      continue;
    double term = numerators[i] / f;
    if (corrected) {
      const double ratio = (*loo.vhat)[i] / (f * f);
      max_ratio = std::max(max_ratio, ratio);
      term *= 1.0 - ratio;
    }
    sum += term;
  }
  if (kept == 0)
    throw Error(ErrorCode::empty_sum,
                fmt::format("every term trimmed at threshold {}", b));
  EstimateReport r;
  r.value = sum / static_cast<double>(numerators.size());
  r.variant = corrected ? Variant::trimmed_corrected : Variant::trimmed_plain;
  r.h = loo.h;
  r.n_used = kept;
  r.min_fhat = loo.min_fhat;
  r.trim_threshold = b;
  if (corrected)
    r.max_correction_ratio = max_ratio;
  return r;
}

namespace {

// Runs `body` on the canonically ordered sample; degenerate-density errors
// are re-raised with the caller's row index.
template<class Body>
EstimateReport
on_canonical(const Sample& s, Body&& body)
{
  const auto perm = canonical_order(s);
  const Sample c = s.permuted(perm);
  try {
    return body(c);
  } catch (const DegenerateDensityError& e) {
    throw DegenerateDensityError(perm[e.index()], e.value());
  }
}

} // namespace

EstimateReport
estimate_plain(const Sample& s, const Integrand& phi, const Kernel& k, double h)
{
  return on_canonical(s, [&](const Sample& c) {
    const auto loo = loo_density(c, k, h, false);
    return plain_from_terms(evaluate_at(phi, c), loo);
  });
}

EstimateReport
estimate_corrected(const Sample& s,
                   const Integrand& phi,
                   const Kernel& k,
                   double h)
{
  return on_canonical(s, [&](const Sample& c) {
    const auto loo = loo_density(c, k, h, true);
    return corrected_from_terms(evaluate_at(phi, c), loo);
  });
}

EstimateReport
estimate_trimmed(const Sample& s,
                 const Integrand& phi,
                 const Kernel& k,
                 double h,
                 double b,
                 bool corrected)
{
  return on_canonical(s, [&](const Sample& c) {
    const auto loo = loo_density(c, k, h, corrected);
    return trimmed_from_terms(evaluate_at(phi, c), loo, b, corrected);
  });
}

EstimateReport
estimate_mc_baseline(const Sample& s,
                     const Integrand& phi,
                     const std::function<double(std::span<const double>)>& f_true)
{
  return on_canonical(s, [&](const Sample& c) {
    if (c.size() == 0)
      throw Error(ErrorCode::size_error, "Monte Carlo baseline needs n >= 1");
    double sum = 0.0;
    double min_f = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double f = f_true(c.point(i));
      min_f = std::min(min_f, f);
      const double p = phi(c.point(i));
      if (p == 0.0)
        continue;
      if (!(f > 0.0))
        throw DegenerateDensityError(i, f);
      sum += p / f;
    }
    EstimateReport r;
    r.value = sum / static_cast<double>(c.size());
    r.variant = Variant::monte_carlo;
    r.h = 0.0;
    r.n_used = c.size();
    r.min_fhat = min_f;
    return r;
  });
}

EstimateReport
estimate_general_functional(const Sample& s,
                            const FunctionalT& t,
                            const Kernel& k,
                            double h)
{
  return on_canonical(s, [&](const Sample& c) {
    const auto loo = loo_density(c, k, h, false);
    std::vector<double> terms(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      terms[i] = t(c.point(i), loo.fhat[i]);
    return plain_from_terms(terms, loo, Variant::general_functional);
  });
}

EstimateReport
estimate_regression_functional(const Sample& s,
                               const Integrand& psi,
                               const Kernel& k,
                               double h)
{
  if (!s.has_responses())
    throw Error(ErrorCode::missing_responses,
                "regression functional needs a sample with responses");
  return on_canonical(s, [&](const Sample& c) {
    const auto loo = loo_density(c, k, h, false);
    const auto y = c.responses();
    std::vector<double> terms(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double p = psi(c.point(i));
      terms[i] = p == 0.0 ? 0.0 : y[i] * p;
    }
    return plain_from_terms(terms, loo, Variant::regression);
  });
}

} // namespace kdeint
