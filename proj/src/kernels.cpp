#include "kdeint/kernels.hpp"

#include "kdeint/error.hpp"
#include "kdeint/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <json.hpp>

namespace kdeint {

Kernel
Kernel::radial(std::string id,
               std::size_t dim,
               int order,
               double support_radius,
               Profile profile)
{
  if (dim == 0 || order < 1 || !(support_radius > 0.0))
    throw Error(ErrorCode::invalid_parameter, "invalid kernel definition");
  Kernel k;
  k.id_ = std::move(id);
  k.dim_ = dim;
  k.order_ = order;
  k.radius_ = support_radius;
  k.profile_ = std::move(profile);
  return k;
}

Kernel
Kernel::general(std::string id,
                std::size_t dim,
                int order,
                double support_radius,
                Evaluator evaluate)
{
  if (dim == 0 || order < 1 || !(support_radius > 0.0))
    throw Error(ErrorCode::invalid_parameter, "invalid kernel definition");
  Kernel k;
  k.id_ = std::move(id);
  k.dim_ = dim;
  k.order_ = order;
  k.radius_ = support_radius;
  k.evaluate_ = std::move(evaluate);
  return k;
}

double
Kernel::operator()(std::span<const double> x) const
{
  if (x.size() != dim_)
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("kernel of dimension {} evaluated at a point of "
                            "dimension {}",
                            dim_,
                            x.size()));
  if (profile_) {
    double r2 = 0.0;
    for (double c : x)
      r2 += c * c;
    return profile_(std::sqrt(r2));
  }
  return evaluate_(x);
}

double
Kernel::at_distance(double r) const
{
  if (!profile_)
    throw Error(ErrorCode::unsupported,
                fmt::format("kernel '{}' is not radial", id_));
  return profile_(r);
}

Kernel
Kernel::reflected() const
{
  Kernel self = *this;
  return general(id_ + "-reflected",
                 dim_,
                 order_,
                 radius_,
                 [self](std::span<const double> x) {
                   std::vector<double> neg(x.begin(), x.end());
                   for (double& c : neg)
                     c = -c;
                   return self(neg);
                 });
}

Kernel
radial_order3_kernel(std::size_t d)
{
  const double dd = static_cast<double>(d);
  const double scale = 0.5 * (dd + 1.0) / unit_ball_volume(d);
  return Kernel::radial(
    fmt::format("order3-d{}", d), d, 3, 1.0, [=](double r) {
      return r < 1.0 ? scale * (dd + 2.0 - (dd + 3.0) * r) : 0.0;
    });
}

Kernel
epanechnikov_kernel(std::size_t d)
{
  const double dd = static_cast<double>(d);
  const double scale = 0.5 * (dd + 2.0) / unit_ball_volume(d);
  return Kernel::radial(
    fmt::format("epanechnikov-d{}", d), d, 2, 1.0, [=](double r) {
      return r < 1.0 ? scale * (1.0 - r * r) : 0.0;
    });
}

Kernel
kernel_by_name(const std::string& name, std::size_t d)
{
  if (name == "order3")
    return radial_order3_kernel(d);
  if (name == "epanechnikov")
    return epanechnikov_kernel(d);
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("unknown kernel '{}'", name));
}

namespace {

std::vector<std::vector<unsigned>>
multi_indices(std::size_t d, int up_to)
{
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> cur(d, 0);
  // Enumerate by total degree so the zeroth moment comes first.
  for (int degree = 0; degree <= up_to; ++degree) {
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
      if (pos + 1 == d) {
        cur[pos] = static_cast<unsigned>(left);
        out.push_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[pos] = static_cast<unsigned>(v);
        rec(pos + 1, left - v);
      }
    };
    rec(0, degree);
  }
  return out;
}

double
monomial(std::span<const double> x, const std::vector<unsigned>& l)
{
  double m = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    for (unsigned p = 0; p < l[k]; ++p)
      m *= x[k];
  return m;
}

// Integral over R^2 of g(x1, x2), restricted to the disc of radius R when R
// is finite. Inner integration runs over the chord at x1.
QuadratureResult
integrate_disc(const std::function<double(double, double)>& g,
               double radius,
               double tol)
{
  const double zero[] = { 0.0 };
  const double inner_tol = tol * 1e-2;
  double worst_inner = 0.0;
  auto outer = [&](double x1) {
    double half = std::numeric_limits<double>::infinity();
    if (std::isfinite(radius))
      half = std::sqrt(std::max(0.0, radius * radius - x1 * x1));
    if (half == 0.0)
      return 0.0;
    auto r = integrate([&](double x2) { return g(x1, x2); },
                       -half,
                       half,
                       inner_tol,
                       zero);
    worst_inner = std::max(worst_inner, r.error);
    return r.value;
  };
  auto res = integrate(outer, -radius, radius, tol / 2, zero);
  const double span = std::isfinite(radius) ? 2.0 * radius : 1.0;
  res.error += span * worst_inner;
  return res;
}

} // namespace

std::vector<MomentResult>
check_moments(const Kernel& k, int up_to, double tol, const MonteCarloOptions& mc)
{
  if (up_to < 0)
    throw Error(ErrorCode::invalid_parameter, "moment degree must be >= 0");
  if (!(tol > 0.0))
    throw Error(ErrorCode::invalid_parameter, "tolerance must be positive");
  const std::size_t d = k.dim();
  const double radius = k.support_radius();
  const auto indices = multi_indices(d, up_to);
  std::vector<MomentResult> out;
  out.reserve(indices.size());

  auto judge = [&](const std::vector<unsigned>& l, double value, double err) {
    unsigned degree = 0;
    for (unsigned p : l)
      degree += p;
    const double target = degree == 0 ? 1.0 : 0.0;
    out.push_back({ l, value, err, std::abs(value - target) < tol });
  };

  if (d <= 2) {
    const double quad_tol = std::min(tol * 1e-3, 1e-10);
    for (const auto& l : indices) {
      QuadratureResult r{};
      if (d == 1) {
        const double zero[] = { 0.0 };
        r = integrate(
          [&](double x) {
            const double p[] = { x };
            return monomial(p, l) * k(p);
          },
          -radius,
          radius,
          quad_tol,
          zero);
      } else {
        r = integrate_disc(
          [&](double x1, double x2) {
            const double p[] = { x1, x2 };
            return monomial(p, l) * k(p);
          },
          radius,
          quad_tol);
      }
      if (!(r.error <= tol))
        throw ToleranceError(r.error,
                             tol,
                             fmt::format("moment quadrature for kernel '{}' did "
                                         "not converge",
                                         k.id()));
      judge(l, r.value, r.error);
    }
    return out;
  }

  if (!std::isfinite(radius))
    throw Error(ErrorCode::unsupported,
                "Monte Carlo moments need a compactly supported kernel");
  Rng rng = make_stream(mc.seed, 0, 1);
  const double volume = unit_ball_volume(d) * std::pow(radius, double(d));
  std::vector<double> sum(indices.size(), 0.0);
  std::vector<double> sum2(indices.size(), 0.0);
  std::vector<double> x(d);
  for (std::size_t t = 0; t < mc.draws; ++t) {
    uniform_in_ball(rng, radius, x);
    const double kx = k(x);
    for (std::size_t m = 0; m < indices.size(); ++m) {
      const double v = volume * monomial(x, indices[m]) * kx;
      sum[m] += v;
      sum2[m] += v * v;
    }
  }
  const double n = static_cast<double>(mc.draws);
  for (std::size_t m = 0; m < indices.size(); ++m) {
    const double mean = sum[m] / n;
    const double var = std::max(0.0, sum2[m] / n - mean * mean);
    judge(indices[m], mean, std::sqrt(var / n));
  }
  return out;
}

namespace {

ConstantEstimate
vk_quadrature_1d(const Kernel& k, double tol)
{
  const double R = k.support_radius();
  const double inner_tol = tol * 1e-3;
  double worst_inner = 0.0;
  double worst_diff = 0.0;
  auto K1 = [&](double x) {
    const double p[] = { x };
    return k(p);
  };
  auto integrand = [&](double v) {
    const double bps[] = { 0.0, -v, -v - R, -v + R, -R, R };
    double lo = -R;
    double hi = R;
    if (std::isfinite(R)) {
      lo = std::max(-R, -v - R);
      hi = std::min(R, -v + R);
    }
    double conv = 0.0;
    if (hi > lo) {
      auto r = integrate([&](double u) { return K1(u + v) * K1(u); },
                         lo,
                         hi,
                         inner_tol,
                         bps);
      worst_inner = std::max(worst_inner, r.error);
      conv = r.value;
    }
    const double diff = conv - K1(v);
    worst_diff = std::max(worst_diff, std::abs(diff));
    return diff * diff;
  };
  const double outer_bps[] = { -R, 0.0, R };
  auto res = integrate(integrand, -2.0 * R, 2.0 * R, tol / 2, outer_bps);
  const double span = std::isfinite(R) ? 4.0 * R : 1.0;
  const double bound =
    res.error + span * (2.0 * worst_diff * worst_inner + worst_inner * worst_inner);
  return { res.value, bound };
}

ConstantEstimate
vk_monte_carlo(const Kernel& k, const MonteCarloOptions& mc)
{
  const std::size_t d = k.dim();
  const double R = k.support_radius();
  if (!std::isfinite(R))
    throw Error(ErrorCode::unsupported,
                "Monte Carlo V_K needs a compactly supported kernel");
  // (int g(u, v) du)^2 = E[g(U1, v) g(U2, v)] * vol(B_R)^2 for independent
  // uniform U1, U2; v ranges over B_{2R}, outside which g vanishes.
  const double vol_u = unit_ball_volume(d) * std::pow(R, double(d));
  const double vol_v = unit_ball_volume(d) * std::pow(2.0 * R, double(d));
  const double scale = vol_v * vol_u * vol_u;
  Rng rng = make_stream(mc.seed, 0, 2);
  std::vector<double> u1(d), u2(d), v(d), a(d), b(d);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < mc.draws; ++t) {
    uniform_in_ball(rng, 2.0 * R, v);
    uniform_in_ball(rng, R, u1);
    uniform_in_ball(rng, R, u2);
    for (std::size_t c = 0; c < d; ++c) {
      a[c] = u1[c] + v[c];
      b[c] = u2[c] + v[c];
    }
    const double kv = k(v);
    const double g1 = (k(a) - kv) * k(u1);
    const double g2 = (k(b) - kv) * k(u2);
    const double val = scale * g1 * g2;
    sum += val;
    sum2 += val * val;
  }
  const double n = static_cast<double>(mc.draws);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return { mean, 3.0 * std::sqrt(var / n) };
}

ConstantEstimate
boundary_quadrature_1d(const Kernel& k, double tol)
{
  // For z, z' > 0, min(z, z') K(z) K(z') integrates to
  // 2 int_0^R z K(z) int_z^R K(z') dz' dz.
  const double R = k.support_radius();
  const double inner_tol = tol * 1e-3;
  double worst_inner = 0.0;
  auto K1 = [&](double x) {
    const double p[] = { x };
    return k(p);
  };
  auto integrand = [&](double z) {
    auto tail = integrate(K1, z, R, inner_tol);
    worst_inner = std::max(worst_inner, tail.error);
    return 2.0 * z * K1(z) * tail.value;
  };
  auto res = integrate(integrand, 0.0, R, tol / 2);
  // |dL| <= 2 int_0^R z |K(z)| dz * inner error.
  auto moment = integrate(
    [&](double z) { return z * std::abs(K1(z)); }, 0.0, R, inner_tol);
  return { res.value, res.error + 2.0 * moment.value * worst_inner };
}

ConstantEstimate
boundary_monte_carlo(const Kernel& k, const MonteCarloOptions& mc)
{
  const std::size_t d = k.dim();
  const double R = k.support_radius();
  if (!std::isfinite(R))
    throw Error(ErrorCode::unsupported,
                "Monte Carlo boundary constant needs a compactly supported "
                "kernel");
  const double vol = unit_ball_volume(d) * std::pow(R, double(d));
  Rng rng = make_stream(mc.seed, 0, 3);
  std::vector<double> z(d), w(d);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t t = 0; t < mc.draws; ++t) {
    uniform_in_ball(rng, R, z);
    uniform_in_ball(rng, R, w);
    const double m = std::min(z[0], w[0]);
    double val = 0.0;
    if (m > 0.0)
      val = vol * vol * m * k(z) * k(w);
    sum += val;
    sum2 += val * val;
  }
  const double n = static_cast<double>(mc.draws);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return { mean, 3.0 * std::sqrt(var / n) };
}

void
require_bound(const ConstantEstimate& e,
              double tol,
              const Kernel& k,
              const char* what)
{
  if (!(e.error_bound <= tol))
    throw ToleranceError(
      e.error_bound,
      tol,
      fmt::format("{} for kernel '{}' did not reach tolerance", what, k.id()));
}

} // namespace

ConstantEstimate
compute_vk(const Kernel& k, double tol, const MonteCarloOptions& mc)
{
  if (!(tol > 0.0))
    throw Error(ErrorCode::invalid_parameter, "tolerance must be positive");
  const auto e = k.dim() == 1 ? vk_quadrature_1d(k, tol) : vk_monte_carlo(k, mc);
  require_bound(e, tol, k, "V_K");
  return e;
}

ConstantEstimate
compute_boundary_constant(const Kernel& k,
                          double tol,
                          const MonteCarloOptions& mc)
{
  if (!(tol > 0.0))
    throw Error(ErrorCode::invalid_parameter, "tolerance must be positive");
  if (k.dim() >= 2 && !k.is_radial())
    throw Error(ErrorCode::unsupported,
                fmt::format("boundary constant for non-radial kernel '{}' in "
                            "dimension {} is not supported",
                            k.id(),
                            k.dim()));
  const auto e = k.dim() == 1 ? boundary_quadrature_1d(k, tol)
                              : boundary_monte_carlo(k, mc);
  require_bound(e, tol, k, "boundary constant");
  return e;
}

KernelConstants
compute_kernel_constants(const Kernel& k, double tol, const MonteCarloOptions& mc)
{
  return { compute_vk(k, tol, mc).value,
           compute_boundary_constant(k, tol, mc).value,
           tol };
}

std::vector<PinnedConstants>
load_pinned_constants(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot open fixture '{}'", path.string()));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error,
                fmt::format("fixture '{}': {}", path.string(), e.what()));
  }
  if (doc.value("schema", 0) != 1)
    throw Error(ErrorCode::fixture_mismatch,
                fmt::format("fixture '{}' has unsupported schema", path.string()));
  std::vector<PinnedConstants> out;
  try {
    for (const auto& e : doc.at("kernels"))
      out.push_back({ e.at("kernel").get<std::string>(),
                      e.at("dim").get<std::size_t>(),
                      e.at("vk").get<double>(),
                      e.at("boundary").get<double>(),
                      e.at("tolerance").get<double>() });
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error,
                fmt::format("fixture '{}': {}", path.string(), e.what()));
  }
  return out;
}

} // namespace kdeint
