#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace kdeint {

//! A d-dimensional smoothing kernel with a declared moment order.
//!
//! The kernel vanishes outside the ball of radius `support_radius()` (which
//! may be infinite). Radial kernels are described by their profile
//! k(|x|) and can be evaluated from a distance alone, which is what the
//! pairwise density code uses.
class Kernel
{
public:
  using Profile = std::function<double(double)>;
  using Evaluator = std::function<double(std::span<const double>)>;

  //! Empty kernel; only assignable.
  Kernel() = default;

  static Kernel radial(std::string id,
                       std::size_t dim,
                       int order,
                       double support_radius,
                       Profile profile);
  static Kernel general(std::string id,
                        std::size_t dim,
                        int order,
                        double support_radius,
                        Evaluator evaluate);

  double operator()(std::span<const double> x) const;
  //! Value at distance r from the origin; radial kernels only.
  double at_distance(double r) const;

  //! x -> K(-x), as a general (non-radial) kernel.
  Kernel reflected() const;

  const std::string& id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  double support_radius() const noexcept { return radius_; }
  bool is_radial() const noexcept { return static_cast<bool>(profile_); }

private:

  std::string id_;
  std::size_t dim_ = 1;
  int order_ = 1;
  double radius_ = std::numeric_limits<double>::infinity();
  Profile profile_;
  Evaluator evaluate_;
};

//! Signed radial kernel of order 3,
//! K(x) = (d+1) (d+2 - (d+3)|x|) / (2 c_d) on |x| < 1, c_d the unit-ball volume.
Kernel radial_order3_kernel(std::size_t d);

//! Epanechnikov kernel (d+2)(1 - |x|^2) / (2 c_d) on |x| < 1, order 2.
Kernel epanechnikov_kernel(std::size_t d);

//! Builds a shipped kernel from its name ("order3" or "epanechnikov").
Kernel kernel_by_name(const std::string& name, std::size_t d);

struct MonteCarloOptions
{
  std::uint64_t seed = 0x6b6465696e74ULL;
  std::size_t draws = 10'000'000;
};

struct MomentResult
{
  std::vector<unsigned> index;
  double value;
  double error;
  bool pass;
};

//! Moments of K for every multi-index of total degree <= up_to.
//!
//! Quadrature in d <= 2, Monte Carlo in d >= 3. The zeroth moment passes when
//! |m - 1| < tol, all others when |m| < tol. Throws ToleranceError when the
//! quadrature cannot resolve the integral to well below tol.
std::vector<MomentResult> check_moments(const Kernel& k,
                                        int up_to,
                                        double tol,
                                        const MonteCarloOptions& mc = {});

struct ConstantEstimate
{
  double value;
  double error_bound;
};

//! V_K = int ( int (K(u+v) - K(v)) K(u) du )^2 dv.
//! Nested quadrature for d = 1, Monte Carlo for d >= 2. Throws ToleranceError
//! carrying the achieved bound when it exceeds tol.
ConstantEstimate compute_vk(const Kernel& k,
                            double tol,
                            const MonteCarloOptions& mc = {});

//! L = int int min(<z,u>, <z',u>)_+ K(z) K(z') dz dz' for a unit vector u.
//! In d = 1, u = +1. In d >= 2 the kernel must be radial and u is taken as
//! the first axis; otherwise throws unsupported.
ConstantEstimate compute_boundary_constant(const Kernel& k,
                                           double tol,
                                           const MonteCarloOptions& mc = {});

struct KernelConstants
{
  double vk;
  double boundary;
  double quadrature_tolerance;
};

KernelConstants compute_kernel_constants(const Kernel& k,
                                         double tol,
                                         const MonteCarloOptions& mc = {});

//! Regression values for kernel constants, read from a JSON fixture of the form
//! {"schema": 1, "kernels": [{"kernel": "order3", "dim": 1, "vk": ..,
//!   "boundary": .., "tolerance": ..}, ...]}.
struct PinnedConstants
{
  std::string kernel;
  std::size_t dim;
  double vk;
  double boundary;
  double tolerance;
};

std::vector<PinnedConstants> load_pinned_constants(
  const std::filesystem::path& path);

} // namespace kdeint
