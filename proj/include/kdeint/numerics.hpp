#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace kdeint {

//! Volume of the unit Euclidean ball in dimension d, 2 pi^{d/2} / (d Gamma(d/2)).
double unit_ball_volume(std::size_t d);

struct QuadratureResult
{
  double value;
  double error;
};

//! Adaptive Gauss-Kronrod integration of f over [a, b], split at the given
//! interior breakpoints. Infinite endpoints are allowed.
QuadratureResult integrate(const std::function<double(double)>& f,
                           double a,
                           double b,
                           double tol,
                           std::span<const double> breakpoints = {});

//! Iterated integration of f over the box [lower, upper] (finite bounds).
QuadratureResult integrate_box(
  const std::function<double(std::span<const double>)>& f,
  std::span<const double> lower,
  std::span<const double> upper,
  double tol);

using Rng = std::mt19937_64;

//! Independent generator for replication `stream` of a run seeded with `seed`.
//! `tag` separates unrelated consumers of the same (seed, stream) pair.
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t tag = 0);

//! Draws a point uniformly in the ball of radius `radius` centered at 0.
void uniform_in_ball(Rng& rng, double radius, std::span<double> out);

} // namespace kdeint
