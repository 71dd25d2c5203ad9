#pragma once

#include "kdeint/estimators.hpp"

#include <string>
#include <vector>

namespace kdeint {

//! Resolves an integrand by name:
//!   sinprod                      prod_k 2 sin^2(pi x_k) on [0,1]^d
//!   indicator:a,b                1 on [a,b]^d
//!   constant-on-box[:c[,a,b]]    c on [a,b]^d (defaults c = 1, [0,1]^d)
//!   zero                         0 everywhere
//!   custom-mixture:file.json     sum_i w_i h0^{-d} K((x - c_i) / h0)
//!
//! A custom mixture file holds {"schema": 1, "kernel": "epanechnikov",
//! "h0": 0.2, "centers": [[...], ...], "weights": [...]}.
Integrand integrand_by_name(const std::string& spec, std::size_t d);

std::vector<std::string> integrand_names();

} // namespace kdeint
