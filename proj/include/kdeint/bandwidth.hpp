#pragma once

#include "kdeint/estimators.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/sample.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kdeint {

//! h0 = sigma (d 2^{d+5} Gamma(d/2+3) / ((2d+1) n))^{1/(4+d)}, with sigma^2
//! the mean of the unbiased per-component variances.
double rule_of_thumb_h0(const Sample& s);

struct BandwidthGrid
{
  enum class Provenance
  {
    explicit_list,
    geometric,
  };

  std::vector<double> candidates;
  Provenance provenance = Provenance::explicit_list;

  //! Validates that the list is strictly increasing and positive.
  static BandwidthGrid from_list(std::vector<double> h);
  //! h0 2^{k/4} for `count` consecutive k centred on 0 (count = 17 gives
  //! k = -8..8).
  static BandwidthGrid geometric(double h0, std::size_t count = 17);
};

//! phi~(x) = |J|^{-1} sum_{i in J} w_i h0^{-d} Kt((x - X_i) / h0), with
//! w_i = phi(X_i) / fhat_i computed at h0 and Kt the Epanechnikov kernel.
//! Its integral is known exactly: target_integral = |J|^{-1} sum_{i in J} w_i.
struct TestFunction
{
  Sample centers;
  std::vector<double> weights;
  std::vector<std::size_t> kept;
  double h0 = 0.0;
  Kernel kernel;
  double target_integral = 0.0;

  //! w_i / |J| for i in J, 0 elsewhere; the form mixture_eval expects.
  std::vector<double> mixture_weights() const;
  double operator()(std::span<const double> x) const;
  //! phi~ at every center.
  std::vector<double> at_centers() const;
};

//! Indices with h < X_ij < 1 - h in every coordinate.
std::vector<std::size_t> unit_cube_interior(const Sample& s, double h);

struct TestFunctionOptions
{
  //! Keep only centers at distance > h_trim from the faces of [0,1]^d.
  std::optional<double> h_trim;
  //! Replaces the rule-of-thumb h0.
  std::optional<double> h0;
};

TestFunction build_test_function(const Sample& s,
                                 const Integrand& phi,
                                 const Kernel& k_estimation,
                                 const TestFunctionOptions& opts = {});

enum class TrimReference
{
  //! J is rebuilt with h_trim = candidate h.
  candidate,
  //! J is built once with h_trim = h0.
  h0,
};

struct SelectionOptions
{
  bool trim_unit_cube = false;
  TrimReference trim_reference = TrimReference::candidate;
  std::optional<double> h0;
};

struct CandidateRow
{
  double h = 0.0;
  double estimate = 0.0;
  double target = 0.0;
  double criterion = 0.0;
  bool valid = false;
  std::string status;
};

struct BandwidthSelection
{
  Variant variant = Variant::plain;
  double h_star = 0.0;
  double h0 = 0.0;
  std::vector<CandidateRow> table;
};

//! Picks the candidate h whose estimate of I(phi~) is closest to the exact
//! value. Ties go to the smaller h; candidates whose estimator errors are
//! marked invalid. `variant` is plain or corrected.
BandwidthSelection select_bandwidth(const Sample& s,
                                    const Integrand& phi,
                                    const Kernel& k,
                                    const BandwidthGrid& grid,
                                    Variant variant,
                                    const SelectionOptions& opts = {});

//! Plain and corrected selections from one density pass per candidate.
struct SelectionPair
{
  BandwidthSelection plain;
  BandwidthSelection corrected;
};
SelectionPair select_bandwidth_both(const Sample& s,
                                    const Integrand& phi,
                                    const Kernel& k,
                                    const BandwidthGrid& grid,
                                    const SelectionOptions& opts = {});

} // namespace kdeint
