#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kdeint {

//! n design points in R^d stored row-major, with optional scalar responses.
class Sample
{
public:
  Sample() = default;

  //! @param points row-major coordinates, size n * dim.
  //! @param responses optional response vector of length n.
  Sample(std::size_t dim,
         std::vector<double> points,
         std::optional<std::vector<double>> responses = std::nullopt);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> point(std::size_t i) const
  {
    return { points_.data() + i * dim_, dim_ };
  }
  double coord(std::size_t i, std::size_t k) const
  {
    return points_[i * dim_ + k];
  }
  std::span<const double> data() const noexcept { return points_; }

  bool has_responses() const noexcept { return responses_.has_value(); }
  //! Throws missing_responses when absent.
  std::span<const double> responses() const;

  //! Rows reordered as rows[perm[0]], rows[perm[1]], ...
  Sample permuted(std::span<const std::size_t> perm) const;

private:
  std::size_t dim_ = 1;
  std::size_t n_ = 0;
  std::vector<double> points_;
  std::optional<std::vector<double>> responses_;
};

//! Permutation sorting rows lexicographically by coordinates, then response.
std::vector<std::size_t> canonical_order(const Sample& s);

//! Copy of s with rows in canonical order. Estimators sum in this order so
//! their values do not depend on how the caller ordered the rows.
Sample canonicalize(const Sample& s);

} // namespace kdeint
