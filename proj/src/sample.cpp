#include "kdeint/sample.hpp"

#include "kdeint/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numeric>

namespace kdeint {

Sample::Sample(std::size_t dim,
               std::vector<double> points,
               std::optional<std::vector<double>> responses)
  : dim_(dim)
  , points_(std::move(points))
  , responses_(std::move(responses))
{
  if (dim_ == 0)
    throw Error(ErrorCode::invalid_parameter, "sample dimension must be >= 1");
  if (points_.size() % dim_ != 0)
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("{} coordinates do not split into rows of {}",
                            points_.size(),
                            dim_));
  n_ = points_.size() / dim_;
  for (std::size_t j = 0; j < points_.size(); ++j) {
    if (!std::isfinite(points_[j]))
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("non-finite coordinate in row {}", j / dim_));
  }
  if (responses_ && responses_->size() != n_)
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("{} responses for {} points", responses_->size(), n_));
}

std::span<const double>
Sample::responses() const
{
  if (!responses_)
    throw Error(ErrorCode::missing_responses, "sample carries no responses");
  return *responses_;
}

Sample
Sample::permuted(std::span<const std::size_t> perm) const
{
  if (perm.size() != n_)
    throw Error(ErrorCode::dimension_mismatch, "permutation length mismatch");
  std::vector<double> pts;
  pts.reserve(points_.size());
  std::optional<std::vector<double>> resp;
  if (responses_)
    resp.emplace().reserve(n_);
  for (std::size_t i : perm) {
    auto row = point(i);
    pts.insert(pts.end(), row.begin(), row.end());
    if (resp)
      resp->push_back((*responses_)[i]);
  }
  return Sample(dim_, std::move(pts), std::move(resp));
}

std::vector<std::size_t>
canonical_order(const Sample& s)
{
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    auto pa = s.point(a);
    auto pb = s.point(b);
    if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end()))
      return true;
    if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end()))
      return false;
    if (s.has_responses())
      return s.responses()[a] < s.responses()[b];
    return false;
  });
  return idx;
}

Sample
canonicalize(const Sample& s)
{
  return s.permuted(canonical_order(s));
}

} // namespace kdeint
