#include "kdeint/integrands.hpp"

#include "kdeint/density.hpp"
#include "kdeint/error.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/models.hpp"

#include <charconv>
#include <fmt/core.h>
#include <fstream>
#include <json.hpp>
#include <memory>

namespace kdeint {

namespace {

std::vector<double>
parse_numbers(const std::string& text, const std::string& spec)
{
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    double v = 0.0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("bad number in integrand '{}'", spec));
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

Integrand
constant_on_box(double c, double a, double b, std::size_t d, std::string name)
{
  if (!(a < b))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("box needs a < b, got [{}, {}]", a, b));
  Integrand phi;
  phi.evaluate = [c, a, b](std::span<const double> x) {
    for (double v : x)
      if (v < a || v > b)
        return 0.0;
    return c;
  };
  phi.support = Box{ std::vector<double>(d, a), std::vector<double>(d, b) };
  phi.smoothness = 0.5;
  phi.name = std::move(name);
  return phi;
}

Integrand
custom_mixture(const std::string& path, std::size_t d, const std::string& spec)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_error,
                fmt::format("cannot open mixture file '{}'", path));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error,
                fmt::format("mixture file '{}': {}", path, e.what()));
  }
  if (doc.value("schema", 0) != 1)
    throw Error(ErrorCode::parse_error,
                fmt::format("mixture file '{}' must declare schema 1", path));
  std::vector<double> pts;
  std::vector<double> weights;
  double h0 = 0.0;
  std::string kernel_name;
  try {
    kernel_name = doc.value("kernel", std::string("epanechnikov"));
    h0 = doc.at("h0").get<double>();
    for (const auto& c : doc.at("centers")) {
      const auto row = c.get<std::vector<double>>();
      if (row.size() != d)
        throw Error(ErrorCode::dimension_mismatch,
                    fmt::format("mixture center of dimension {} for d = {}",
                                row.size(),
                                d));
      pts.insert(pts.end(), row.begin(), row.end());
    }
    weights = doc.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error,
                fmt::format("mixture file '{}': {}", path, e.what()));
  }
  auto centers = std::make_shared<const Sample>(d, std::move(pts));
  if (weights.size() != centers->size())
    throw Error(ErrorCode::dimension_mismatch,
                fmt::format("{} weights for {} centers",
                            weights.size(),
                            centers->size()));
  auto k = std::make_shared<const Kernel>(kernel_by_name(kernel_name, d));
  auto w = std::make_shared<const std::vector<double>>(std::move(weights));
  if (!(h0 > 0.0))
    throw Error(ErrorCode::invalid_parameter, "mixture h0 must be positive");
  Integrand phi;
  phi.evaluate = [centers, k, w, h0](std::span<const double> x) {
    return mixture_eval(*centers, *w, *k, h0, x);
  };
  phi.name = spec;
  return phi;
}

} // namespace

Integrand
integrand_by_name(const std::string& spec, std::size_t d)
{
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string args =
    colon == std::string::npos ? std::string() : spec.substr(colon + 1);

  if (head == "sinprod" && args.empty())
    return phi_sinprod(d);
  if (head == "zero" && args.empty()) {
    Integrand phi;
    phi.evaluate = [](std::span<const double>) { return 0.0; };
    phi.name = "zero";
    return phi;
  }
  if (head == "indicator") {
    const auto v = parse_numbers(args, spec);
    if (v.size() != 2)
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("'{}' should be indicator:a,b", spec));
    auto phi = phi_indicator(v[0], v[1], d);
    phi.name = spec;
    return phi;
  }
  if (head == "constant-on-box") {
    if (args.empty())
      return constant_on_box(1.0, 0.0, 1.0, d, spec);
    const auto v = parse_numbers(args, spec);
    if (v.size() == 1)
      return constant_on_box(v[0], 0.0, 1.0, d, spec);
    if (v.size() == 3)
      return constant_on_box(v[0], v[1], v[2], d, spec);
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("'{}' should be constant-on-box[:c[,a,b]]", spec));
  }
  if (head == "custom-mixture" && !args.empty())
    return custom_mixture(args, d, spec);
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("unknown integrand '{}'", spec));
}

std::vector<std::string>
integrand_names()
{
  return { "sinprod",
           "indicator:a,b",
           "constant-on-box[:c[,a,b]]",
           "zero",
           "custom-mixture:file.json" };
}

} // namespace kdeint
