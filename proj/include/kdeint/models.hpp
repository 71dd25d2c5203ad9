#pragma once

#include "kdeint/estimators.hpp"
#include "kdeint/numerics.hpp"
#include "kdeint/sample.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace kdeint {

using DensityFn = std::function<double(std::span<const double>)>;

//! X ~ N(1/2, I/4) in R^d.
Sample sample_model1(std::size_t n, std::size_t d, Rng& rng);
double model1_density(std::span<const double> x);

//! X ~ U([0,1]^d).
Sample sample_model2(std::size_t n, std::size_t d, Rng& rng);
double model2_density(std::span<const double> x);

//! prod_k 2 sin^2(pi x_k) on [0,1]^d, zero outside; integrates to 1.
Integrand phi_sinprod(std::size_t d);

//! 1 on [a, b]^d, zero outside.
Integrand phi_indicator(double a, double b, std::size_t d = 1);

//! A sampling design with a known density.
struct Design
{
  std::string name;
  std::function<Sample(std::size_t n, std::size_t d, Rng& rng)> draw;
  DensityFn density;
  //! Compact support [0,1]^d (uniform design) or unbounded.
  bool unit_cube_support = false;
};

Design model1_design();
Design model2_design();
//! "model1" / "gaussian-design" or "model2" / "uniform-design".
Design design_by_name(const std::string& name);

//! Y = g(X) + sigma(X) e with e ~ N(0, 1) independent of X.
struct RegressionModel
{
  Design design;
  std::function<double(std::span<const double>)> g;
  std::function<double(std::span<const double>)> sigma;

  Sample draw(std::size_t n, std::size_t d, Rng& rng) const;
};

//! Design N(1/2, 1/4), g(x) = 1 + x, constant noise level `sigma`.
RegressionModel regression_test_model(double sigma);

} // namespace kdeint
