#include "kdeint/models.hpp"

#include "kdeint/error.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <fmt/core.h>
#include <numbers>

namespace kdeint {

Sample
sample_model1(std::size_t n, std::size_t d, Rng& rng)
{
  if (n == 0 || d == 0)
    throw Error(ErrorCode::invalid_parameter, "model 1 needs n, d >= 1");
  boost::random::normal_distribution<double> normal(0.5, 0.5);
  std::vector<double> pts(n * d);
  for (double& x : pts)
    x = normal(rng);
  return Sample(d, std::move(pts));
}

double
model1_density(std::span<const double> x)
{
  // Product of N(1/2, 1/4) marginals: (2/pi)^{1/2} exp(-2 (x - 1/2)^2).
  double log_f = 0.0;
  for (double c : x) {
    const double t = c - 0.5;
    log_f += 0.5 * std::log(2.0 / std::numbers::pi) - 2.0 * t * t;
  }
  return std::exp(log_f);
}

Sample
sample_model2(std::size_t n, std::size_t d, Rng& rng)
{
  if (n == 0 || d == 0)
    throw Error(ErrorCode::invalid_parameter, "model 2 needs n, d >= 1");
  boost::random::uniform_01<double> unif;
  std::vector<double> pts(n * d);
  for (double& x : pts)
    x = unif(rng);
  return Sample(d, std::move(pts));
}

double
model2_density(std::span<const double> x)
{
  for (double c : x)
    if (c < 0.0 || c > 1.0)
      return 0.0;
  return 1.0;
}

Integrand
phi_sinprod(std::size_t d)
{
  Integrand phi;
  phi.evaluate = [](std::span<const double> x) {
    double v = 1.0;
    for (double c : x) {
      if (c < 0.0 || c > 1.0)
        return 0.0;
      const double s = std::sin(std::numbers::pi * c);
      v *= 2.0 * s * s;
    }
    return v;
  };
  phi.support = Box{ std::vector<double>(d, 0.0), std::vector<double>(d, 1.0) };
  // Each factor is C^1 with a jump in the second derivative at 0 and 1.
  phi.smoothness = 2.5;
  phi.name = "sinprod";
  return phi;
}

Integrand
phi_indicator(double a, double b, std::size_t d)
{
  if (!(a < b))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("indicator needs a < b, got [{}, {}]", a, b));
  Integrand phi;
  phi.evaluate = [a, b](std::span<const double> x) {
    for (double c : x)
      if (c < a || c > b)
        return 0.0;
    return 1.0;
  };
  phi.support = Box{ std::vector<double>(d, a), std::vector<double>(d, b) };
  phi.smoothness = 0.5;
  phi.name = fmt::format("indicator:{},{}", a, b);
  return phi;
}

Design
model1_design()
{
  return { "model1", sample_model1, model1_density, false };
}

Design
model2_design()
{
  return { "model2", sample_model2, model2_density, true };
}

Design
design_by_name(const std::string& name)
{
  if (name == "model1" || name == "gaussian-design")
    return model1_design();
  if (name == "model2" || name == "uniform-design")
    return model2_design();
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("unknown design '{}'", name));
}

Sample
RegressionModel::draw(std::size_t n, std::size_t d, Rng& rng) const
{
  const Sample x = design.draw(n, d, rng);
  boost::random::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = x.point(i);
    y[i] = g(p) + sigma(p) * noise(rng);
  }
  return Sample(d, std::vector<double>(x.data().begin(), x.data().end()), y);
}

RegressionModel
regression_test_model(double sigma)
{
  RegressionModel m;
  m.design = model1_design();
  m.g = [](std::span<const double> x) {
    double s = 1.0;
    for (double c : x)
      s += c;
    return s;
  };
  m.sigma = [sigma](std::span<const double>) { return sigma; };
  return m;
}

} // namespace kdeint
