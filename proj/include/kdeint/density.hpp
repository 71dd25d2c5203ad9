#pragma once

#include "kdeint/kernels.hpp"
#include "kdeint/sample.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kdeint {

//! Leave-one-out density (and optionally variance) values at the sample points.
struct LooDensity
{
  double h = 0.0;
  //! fhat[i] = (n-1)^{-1} sum_{j != i} h^{-d} K((X_i - X_j) / h)
  std::vector<double> fhat;
  //! vhat[i] = ((n-1)(n-2))^{-1} sum_{j != i} (h^{-d} K((X_i - X_j) / h) - fhat[i])^2
  std::optional<std::vector<double>> vhat;
  double min_fhat = 0.0;
  std::string kernel_id;
};

//! All pairwise kernel sums in one symmetric O(n^2) pass.
//!
//! The variance uses sum_{j != i} (K_ij - f_i)^2 = sum_j K_ij^2 - (n-1) f_i^2,
//! so only sum K_ij and sum K_ij^2 are accumulated. Rows are processed in
//! fixed tiles; the result is independent of the worker count.
//!
//! Values at or below zero are reported through min_fhat and left as is.
LooDensity loo_density(const Sample& s, const Kernel& k, double h, bool with_variance);

//! sum_i weights[i] h0^{-d} K((x - X_i) / h0).
double mixture_eval(const Sample& centers,
                    std::span<const double> weights,
                    const Kernel& k,
                    double h0,
                    std::span<const double> x);

} // namespace kdeint
