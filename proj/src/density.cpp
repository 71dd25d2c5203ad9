#include "kdeint/density.hpp"

#include "kdeint/error.hpp"
#include "kdeint/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <limits>

namespace kdeint {

namespace {

constexpr std::size_t tile_rows = 128;

struct TilePair
{
  std::size_t a;
  std::size_t b;
};

} // namespace

LooDensity
loo_density(const Sample& s, const Kernel& k, double h, bool with_variance)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("bandwidth must be positive and finite, got {}", h));
  if (k.dim() != s.dim())
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("kernel dimension {} vs sample dimension {}",
                            k.dim(),
                            s.dim()));
  const std::size_t n = s.size();
  const std::size_t need = with_variance ? 3 : 2;
  if (n < need)
    throw Error(ErrorCode::size_error,
                fmt::format("leave-one-out density needs n >= {}, got {}", need, n));

  const std::size_t d = s.dim();
  const std::size_t tiles = (n + tile_rows - 1) / tile_rows;
  std::vector<double> part_k(n * tiles, 0.0);
  std::vector<double> part_k2(with_variance ? n * tiles : 0, 0.0);

  std::vector<TilePair> pairs;
  pairs.reserve(tiles * (tiles + 1) / 2);
  for (std::size_t a = 0; a < tiles; ++a)
    for (std::size_t b = a; b < tiles; ++b)
      pairs.push_back({ a, b });

  const double radius = k.support_radius();
  const double cutoff2 =
    std::isfinite(radius) ? (radius * h) * (radius * h)
                          : std::numeric_limits<double>::infinity();
  const bool radial = k.is_radial();
  const double inv_h = 1.0 / h;
  const auto pts = s.data();

  parallel_for(pairs.size(), [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    const std::size_t a0 = a * tile_rows, a1 = std::min(n, a0 + tile_rows);
    const std::size_t b0 = b * tile_rows, b1 = std::min(n, b0 + tile_rows);
    std::vector<double> col_k(b1 - b0, 0.0);
    std::vector<double> col_k2(b1 - b0, 0.0);
    std::vector<double> diff(d), neg(d);
    for (std::size_t i = a0; i < a1; ++i) {
      double row_k = 0.0, row_k2 = 0.0;
      const double* xi = pts.data() + i * d;
      for (std::size_t j = (a == b ? i + 1 : b0); j < b1; ++j) {
        const double* xj = pts.data() + j * d;
        double d2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          const double t = xi[c] - xj[c];
          d2 += t * t;
        }
        if (d2 >= cutoff2)
          continue;
        double kij = 0.0, kji = 0.0;
        if (radial) {
          kij = kji = k.at_distance(std::sqrt(d2) * inv_h);
        } else {
          for (std::size_t c = 0; c < d; ++c) {
            diff[c] = (xi[c] - xj[c]) * inv_h;
            neg[c] = -diff[c];
          }
          kij = k(diff);
          kji = k(neg);
        }
        row_k += kij;
        col_k[j - b0] += kji;
        if (with_variance) {
          row_k2 += kij * kij;
          col_k2[j - b0] += kji * kji;
        }
      }
      part_k[i * tiles + b] += row_k;
      if (with_variance)
        part_k2[i * tiles + b] += row_k2;
    }
    // For a == b these cells already hold the row sums of this same task.
    for (std::size_t j = b0; j < b1; ++j) {
      part_k[j * tiles + a] += col_k[j - b0];
      if (with_variance)
        part_k2[j * tiles + a] += col_k2[j - b0];
    }
  });

  const double hd = std::pow(inv_h, static_cast<double>(d));
  const double nm1 = static_cast<double>(n - 1);
  LooDensity out;
  out.h = h;
  out.kernel_id = k.id();
  out.fhat.resize(n);
  if (with_variance)
    out.vhat.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sk = 0.0, sk2 = 0.0;
    for (std::size_t t = 0; t < tiles; ++t) {
      sk += part_k[i * tiles + t];
      if (with_variance)
        sk2 += part_k2[i * tiles + t];
    }
    const double f = hd * sk / nm1;
    out.fhat[i] = f;
    if (with_variance) {
      const double ss = hd * hd * sk2 - nm1 * f * f;
      // Mathematically a sum of squares; clip rounding below zero.
      (*out.vhat)[i] = std::max(0.0, ss) / (nm1 * (nm1 - 1.0));
    }
  }
  out.min_fhat = *std::min_element(out.fhat.begin(), out.fhat.end());
  return out;
}

double
mixture_eval(const Sample& centers,
             std::span<const double> weights,
             const Kernel& k,
             double h0,
             std::span<const double> x)
{
  if (!(h0 > 0.0))
    throw Error(ErrorCode::invalid_parameter, "mixture bandwidth must be positive");
  if (weights.size() != centers.size())
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("{} weights for {} centers",
                            weights.size(),
                            centers.size()));
  if (x.size() != centers.dim() || k.dim() != centers.dim())
    throw Error(ErrorCode::dimension_mismatch,
                "mixture point, kernel and centers must share a dimension");
  const std::size_t d = centers.dim();
  const double hd = std::pow(1.0 / h0, static_cast<double>(d));
  std::vector<double> u(d);
  double total = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (weights[i] == 0.0)
      continue;
    auto c = centers.point(i);
    for (std::size_t q = 0; q < d; ++q)
      u[q] = (x[q] - c[q]) / h0;
    total += weights[i] * hd * k(u);
  }
  return total;
}

} // namespace kdeint
