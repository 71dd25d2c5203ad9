#include "kdeint/numerics.hpp"

#include "kdeint/error.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <numbers>

namespace kdeint {

double
unit_ball_volume(std::size_t d)
{
  if (d == 0)
    throw Error(ErrorCode::invalid_parameter, "dimension must be positive");
  const double half = static_cast<double>(d) / 2.0;
  return 2.0 * std::pow(std::numbers::pi, half) /
         (static_cast<double>(d) * std::tgamma(half));
}

namespace {

struct Segment
{
  double a;
  double b;
  double value;
  double error;
};

Segment
gauss_kronrod_segment(const std::function<double(double)>& f, double a, double b)
{
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, a, b, 0, 0.0, &err);
  // Non-adaptive error is reported on the [-1, 1] mapped integrand.
  return { a, b, v, err * (b - a) / 2.0 };
}

// Global adaptive bisection on an absolute tolerance: the worst segment is
// split until the summed error estimate drops below tol.
QuadratureResult
adaptive_finite(const std::function<double(double)>& f,
                double a,
                double b,
                double tol)
{
  constexpr std::size_t max_segments = 4000;
  auto worse = [](const Segment& x, const Segment& y) {
    return x.error < y.error;
  };
  std::vector<Segment> heap{ gauss_kronrod_segment(f, a, b) };
  double err = heap.front().error;
  while (err > tol && heap.size() < max_segments) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    const Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), worse);
      break;
    }
    for (const auto& s : { gauss_kronrod_segment(f, worst.a, mid),
                           gauss_kronrod_segment(f, mid, worst.b) }) {
      heap.push_back(s);
      std::push_heap(heap.begin(), heap.end(), worse);
    }
    err = 0.0;
    for (const auto& s : heap)
      err += s.error;
  }
  // Sum in position order so the result does not depend on heap layout.
  std::sort(heap.begin(), heap.end(), [](const Segment& x, const Segment& y) {
    return x.a < y.a;
  });
  QuadratureResult out{ 0.0, 0.0 };
  for (const auto& s : heap) {
    out.value += s.value;
    out.error += s.error;
  }
  return out;
}

QuadratureResult
adaptive_piece(const std::function<double(double)>& f,
               double a,
               double b,
               double tol)
{
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (!lo_inf && !hi_inf)
    return adaptive_finite(f, a, b, tol);
  if (lo_inf && hi_inf) {
    auto left = adaptive_piece(f, a, 0.0, tol / 2);
    auto right = adaptive_piece(f, 0.0, b, tol / 2);
    return { left.value + right.value, left.error + right.error };
  }
  // x = a + t / (1 - t) maps [0, 1) onto [a, inf); mirrored for (-inf, b].
  const double sign = hi_inf ? 1.0 : -1.0;
  const double origin = hi_inf ? a : b;
  auto mapped = [&](double t) {
    if (t >= 1.0)
      return 0.0;
    const double s = 1.0 - t;
    return f(origin + sign * t / s) / (s * s);
  };
  return adaptive_finite(mapped, 0.0, 1.0, tol);
}

} // namespace

QuadratureResult
integrate(const std::function<double(double)>& f,
          double a,
          double b,
          double tol,
          std::span<const double> breakpoints)
{
  std::vector<double> cuts{ a };
  for (double c : breakpoints) {
    if (c > a && c < b)
      cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  QuadratureResult total{ 0.0, 0.0 };
  const double piece_tol = tol / static_cast<double>(cuts.size() - 1);
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const auto piece = adaptive_piece(f, cuts[p], cuts[p + 1], piece_tol);
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

namespace {

QuadratureResult
integrate_box_rec(const std::function<double(std::span<const double>)>& f,
                  std::span<const double> lower,
                  std::span<const double> upper,
                  double tol,
                  std::vector<double>& x,
                  std::size_t axis)
{
  const std::size_t d = lower.size();
  if (axis + 1 == d) {
    return integrate(
      [&](double t) {
        x[axis] = t;
        return f(x);
      },
      lower[axis],
      upper[axis],
      tol);
  }
  double worst_inner = 0.0;
  const double inner_tol = tol * 1e-2 / std::max(1.0, upper[axis] - lower[axis]);
  auto outer = integrate(
    [&](double t) {
      x[axis] = t;
      auto r = integrate_box_rec(f, lower, upper, inner_tol, x, axis + 1);
      worst_inner = std::max(worst_inner, r.error);
      return r.value;
    },
    lower[axis],
    upper[axis],
    tol / 2);
  outer.error += (upper[axis] - lower[axis]) * worst_inner;
  return outer;
}

} // namespace

QuadratureResult
integrate_box(const std::function<double(std::span<const double>)>& f,
              std::span<const double> lower,
              std::span<const double> upper,
              double tol)
{
  if (lower.size() != upper.size() || lower.empty())
    throw Error(ErrorCode::dimension_mismatch, "box bounds must share a dimension");
  std::vector<double> x(lower.size());
  return integrate_box_rec(f, lower, upper, tol, x, 0);
}

Rng
make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag)
{
  std::seed_seq seq{ static_cast<std::uint32_t>(seed),
                     static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(stream),
                     static_cast<std::uint32_t>(stream >> 32),
                     static_cast<std::uint32_t>(tag),
                     static_cast<std::uint32_t>(tag >> 32) };
  return Rng(seq);
}

void
uniform_in_ball(Rng& rng, double radius, std::span<double> out)
{
  boost::random::normal_distribution<double> normal;
  boost::random::uniform_01<double> unif;
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& c : out) {
      c = normal(rng);
      norm2 += c * c;
    }
  } while (norm2 == 0.0);
  const double d = static_cast<double>(out.size());
  const double r = radius * std::pow(unif(rng), 1.0 / d) / std::sqrt(norm2);
  for (double& c : out)
    c *= r;
}

} // namespace kdeint
