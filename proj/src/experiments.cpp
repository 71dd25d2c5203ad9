#include "kdeint/experiments.hpp"

#include "kdeint/error.hpp"
#include "kdeint/integrands.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/numerics.hpp"
#include "kdeint/parallel.hpp"
#include "kdeint/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/core.h>
#include <json.hpp>
#include <set>

namespace kdeint {

std::string_view
to_string(BandwidthPolicy p)
{
  switch (p) {
    case BandwidthPolicy::fixed:
      return "fixed";
    case BandwidthPolicy::rule_of_thumb:
      return "rule-of-thumb";
    case BandwidthPolicy::simulation_validation:
      return "simulation-validation";
  }
  return "unknown";
}

BandwidthPolicy
bandwidth_policy_from_string(std::string_view name)
{
  for (auto p : { BandwidthPolicy::fixed,
                  BandwidthPolicy::rule_of_thumb,
                  BandwidthPolicy::simulation_validation })
    if (to_string(p) == name)
      return p;
  throw Error(ErrorCode::invalid_parameter,
              fmt::format("unknown bandwidth policy '{}'", name));
}

ExperimentConfig
parse_experiment_config(std::string_view json_text)
{
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("config: {}", e.what()));
  }
  if (!doc.is_object())
    throw Error(ErrorCode::parse_error, "config must be a JSON object");
  if (!doc.contains("schema") || doc["schema"] != 1)
    throw Error(ErrorCode::parse_error, "config must declare \"schema\": 1");

  static const std::set<std::string> known{
    "schema",  "model",          "d",          "n",           "replications",
    "variants", "bandwidth",     "h",          "gamma",       "c",
    "seed",    "kernel",         "phi",        "truth",       "trim_unit_cube",
    "trim_reference", "grid_count", "trim_b",  "sigma",       "out_dir",
  };
  for (const auto& item : doc.items())
    if (!known.count(item.key()))
      throw Error(ErrorCode::parse_error,
                  fmt::format("config: unknown key '{}'", item.key()));

  ExperimentConfig cfg;
  try {
    cfg.model = doc.value("model", cfg.model);
    cfg.d = doc.value("d", cfg.d);
    cfg.n = doc.value("n", cfg.n);
    cfg.replications = doc.value("replications", cfg.replications);
    if (doc.contains("variants")) {
      cfg.variants.clear();
      for (const auto& v : doc["variants"])
        cfg.variants.push_back(variant_from_string(v.get<std::string>()));
    }
    if (doc.contains("bandwidth"))
      cfg.bandwidth =
        bandwidth_policy_from_string(doc["bandwidth"].get<std::string>());
    if (doc.contains("h"))
      cfg.h = doc["h"].get<double>();
    if (doc.contains("gamma"))
      cfg.gamma = doc["gamma"].get<double>();
    cfg.c = doc.value("c", cfg.c);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.kernel = doc.value("kernel", cfg.kernel);
    cfg.phi = doc.value("phi", cfg.phi);
    if (doc.contains("truth"))
      cfg.truth = doc["truth"].get<double>();
    if (doc.contains("trim_unit_cube"))
      cfg.trim_unit_cube = doc["trim_unit_cube"].get<bool>();
    if (doc.contains("trim_reference")) {
      const auto ref = doc["trim_reference"].get<std::string>();
      if (ref == "candidate")
        cfg.trim_reference = TrimReference::candidate;
      else if (ref == "h0")
        cfg.trim_reference = TrimReference::h0;
      else
        throw Error(ErrorCode::invalid_parameter,
                    fmt::format("unknown trim_reference '{}'", ref));
    }
    cfg.grid_count = doc.value("grid_count", cfg.grid_count);
    if (doc.contains("trim_b"))
      cfg.trim_b = doc["trim_b"].get<double>();
    cfg.sigma = doc.value("sigma", cfg.sigma);
    if (doc.contains("out_dir"))
      cfg.out_dir = doc["out_dir"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("config: {}", e.what()));
  }
  validate(cfg);
  return cfg;
}

namespace {

bool
is_regression_model(const std::string& m)
{
  return m == "regression-model" || m == "regression";
}

bool
uses_kernel(Variant v)
{
  return v != Variant::monte_carlo;
}

} // namespace

void
validate(const ExperimentConfig& cfg)
{
  if (cfg.d == 0)
    throw Error(ErrorCode::invalid_parameter, "d must be >= 1");
  if (cfg.n < 3)
    throw Error(ErrorCode::invalid_parameter, "n must be >= 3");
  if (cfg.replications < 1)
    throw Error(ErrorCode::invalid_parameter, "replications must be >= 1");
  if (cfg.variants.empty())
    throw Error(ErrorCode::invalid_parameter, "no estimator variant requested");
  if (cfg.gamma && !(*cfg.gamma > 0.0 && *cfg.gamma < 1.0))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("gamma must lie in (0, 1), got {}", *cfg.gamma));
  if (cfg.h && !(*cfg.h > 0.0))
    throw Error(ErrorCode::invalid_parameter, "h must be positive");
  if (!(cfg.c > 0.0))
    throw Error(ErrorCode::invalid_parameter, "c must be positive");
  if (cfg.bandwidth == BandwidthPolicy::fixed && !cfg.h && !cfg.gamma)
    throw Error(ErrorCode::invalid_parameter,
                "fixed bandwidth policy needs h or gamma");
  if (cfg.grid_count == 0)
    throw Error(ErrorCode::invalid_parameter, "grid_count must be >= 1");
  if (cfg.trim_b && !(*cfg.trim_b >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "trim_b must be >= 0");
  if (!(cfg.sigma >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "sigma must be >= 0");
  const bool regression = is_regression_model(cfg.model);
  if (!regression && cfg.model != "custom")
    design_by_name(cfg.model);
  if (cfg.model == "custom" && !cfg.custom_design)
    throw Error(ErrorCode::invalid_parameter,
                "custom model needs a programmatic design");
  std::set<Variant> seen;
  for (Variant v : cfg.variants) {
    if (!seen.insert(v).second)
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("variant '{}' listed twice", to_string(v)));
    if (regression && v != Variant::regression && v != Variant::monte_carlo)
      throw Error(ErrorCode::invalid_parameter,
                  fmt::format("regression model supports regression and "
                              "monte-carlo variants, not {}",
                              to_string(v)));
    if (!regression && v == Variant::regression)
      throw Error(ErrorCode::missing_responses,
                  "regression variant needs the regression model");
    if ((v == Variant::trimmed_plain || v == Variant::trimmed_corrected) &&
        !cfg.trim_b)
      throw Error(ErrorCode::invalid_parameter,
                  "trimmed variants need an explicit trim_b");
  }
}

double
integrand_oracle(const Integrand& phi, std::size_t d)
{
  if (!phi.support)
    throw Error(ErrorCode::unsupported,
                fmt::format("integrand '{}' has no support box", phi.name));
  if (d > 3)
    throw Error(ErrorCode::unsupported,
                "quadrature oracle is limited to d <= 3");
  return integrate_box(phi.evaluate, phi.support->lower, phi.support->upper, 1e-10)
    .value;
}

namespace {

double
seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
    .count();
}

ReplicationRow
row_from_report(std::size_t rep, std::size_t n, const EstimateReport& r)
{
  ReplicationRow row;
  row.replication = rep;
  row.n = n;
  row.variant = r.variant;
  row.value = r.value;
  row.h = r.h;
  row.n_used = r.n_used;
  row.min_fhat = r.min_fhat;
  if (!std::isfinite(r.value))
    row.status = "NON_FINITE";
  return row;
}

ReplicationRow
failed_row(std::size_t rep, std::size_t n, Variant v, double h, const Error& e)
{
  ReplicationRow row;
  row.replication = rep;
  row.n = n;
  row.variant = v;
  row.h = h;
  row.status = std::string(to_string(e.code()));
  return row;
}

// Everything one replication needs besides its sample.
struct EstimationContext
{
  Integrand phi;
  Kernel kernel;
  DensityFn density;
  FunctionalT functional;
  std::optional<double> trim_b;
};

// n^{-1} sum Y_i psi(X_i) / f(X_i) with the true design density.
EstimateReport
mc_regression(const Sample& s, const Integrand& psi, const DensityFn& f)
{
  const Sample c = canonicalize(s);
  const auto y = c.responses();
  std::vector<double> yp(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double p = psi(c.point(i));
    yp[i] = p == 0.0 ? 0.0 : y[i] * p;
  }
  double sum = 0.0;
  double min_f = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double fi = f(c.point(i));
    min_f = std::min(min_f, fi);
    if (yp[i] == 0.0)
      continue;
    if (!(fi > 0.0))
      throw DegenerateDensityError(i, fi);
    sum += yp[i] / fi;
  }
  EstimateReport r;
  r.value = sum / static_cast<double>(c.size());
  r.variant = Variant::monte_carlo;
  r.n_used = c.size();
  r.min_fhat = min_f;
  return r;
}

ReplicationRow
estimate_variant(const EstimationContext& ctx,
                 const Sample& s,
                 Variant v,
                 double h,
                 std::size_t rep)
{
  const auto t0 = std::chrono::steady_clock::now();
  ReplicationRow row;
  try {
    EstimateReport r;
    switch (v) {
      case Variant::plain:
        r = estimate_plain(s, ctx.phi, ctx.kernel, h);
        break;
      case Variant::corrected:
        r = estimate_corrected(s, ctx.phi, ctx.kernel, h);
        break;
      case Variant::trimmed_plain:
        r = estimate_trimmed(s, ctx.phi, ctx.kernel, h, *ctx.trim_b, false);
        break;
      case Variant::trimmed_corrected:
        r = estimate_trimmed(s, ctx.phi, ctx.kernel, h, *ctx.trim_b, true);
        break;
      case Variant::monte_carlo:
        if (s.has_responses()) {
          r = mc_regression(s, ctx.phi, ctx.density);
        } else {
          r = estimate_mc_baseline(s, ctx.phi, ctx.density);
        }
        break;
      case Variant::general_functional:
        r = estimate_general_functional(s, ctx.functional, ctx.kernel, h);
        break;
      case Variant::regression:
        r = estimate_regression_functional(s, ctx.phi, ctx.kernel, h);
        break;
    }
    row = row_from_report(rep, s.size(), r);
  } catch (const Error& e) {
    row = failed_row(rep, s.size(), v, uses_kernel(v) ? h : 0.0, e);
  }
  row.wall_seconds = seconds_since(t0);
  return row;
}

Design
resolve_design(const std::string& model,
               const std::optional<Design>& custom,
               double sigma,
               std::optional<RegressionModel>* regression)
{
  if (is_regression_model(model)) {
    auto m = regression_test_model(sigma);
    if (regression)
      *regression = m;
    return m.design;
  }
  if (model == "custom") {
    if (!custom)
      throw Error(ErrorCode::invalid_parameter,
                  "custom model needs a programmatic design");
    return *custom;
  }
  return design_by_name(model);
}

EstimationContext
make_context(const Integrand& phi,
             const std::string& kernel,
             std::size_t d,
             const Design& design,
             std::optional<double> trim_b)
{
  EstimationContext ctx{ phi, kernel_by_name(kernel, d), design.density, {},
                         trim_b };
  if (phi.support) {
    const Box q = *phi.support;
    ctx.functional = [q](std::span<const double> x, double y) {
      return q.contains(x) ? y : 0.0;
    };
  }
  return ctx;
}

double
support_mass(const Integrand& phi, const Design& design, std::size_t d)
{
  if (!phi.support)
    throw Error(ErrorCode::unsupported,
                "general functional needs an integrand with a support box");
  if (d > 3)
    throw Error(ErrorCode::unsupported, "quadrature oracle is limited to d <= 3");
  return integrate_box(design.density,
                       phi.support->lower,
                       phi.support->upper,
                       1e-10)
    .value;
}

double
regression_target(const Integrand& psi, const RegressionModel& m, std::size_t d)
{
  if (!psi.support)
    throw Error(ErrorCode::unsupported, "psi needs a support box");
  if (d > 3)
    throw Error(ErrorCode::unsupported, "quadrature oracle is limited to d <= 3");
  return integrate_box(
           [&](std::span<const double> x) { return m.g(x) * psi(x); },
           psi.support->lower,
           psi.support->upper,
           1e-10)
    .value;
}

Sample
draw_sample(const Design& design,
            const std::optional<RegressionModel>& reg,
            std::size_t n,
            std::size_t d,
            Rng& rng)
{
  return reg ? reg->draw(n, d, rng) : design.draw(n, d, rng);
}

} // namespace

std::vector<VariantSummary>
summarize(const std::vector<ReplicationRow>& rows,
          const std::function<double(Variant)>& truth_of)
{
  std::vector<Variant> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.variant) == order.end())
      order.push_back(r.variant);
  std::vector<VariantSummary> out;
  for (Variant v : order) {
    VariantSummary s;
    s.variant = v;
    s.truth = truth_of(v);
    std::vector<double> values;
    for (const auto& r : rows) {
      if (r.variant != v)
        continue;
      if (r.status == "ok")
        values.push_back(r.value);
      else
        ++s.excluded;
    }
    s.ok = values.size();
    if (!values.empty()) {
      s.box = box_stats(values);
      s.rmse = rmse(values, s.truth);
      s.bias = s.box.mean - s.truth;
      s.sd = values.size() > 1 ? std::sqrt(variance(values)) : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

BenchmarkResult
run_benchmark(const ExperimentConfig& cfg)
{
  validate(cfg);
  std::optional<RegressionModel> reg;
  const Design design = resolve_design(cfg.model, cfg.custom_design, cfg.sigma, &reg);
  const Integrand phi = integrand_by_name(cfg.phi, cfg.d);
  const auto ctx = make_context(phi, cfg.kernel, cfg.d, design, cfg.trim_b);
  const bool trim = cfg.trim_unit_cube.value_or(design.unit_cube_support);

  BenchmarkResult result;
  if (cfg.truth)
    result.truth = *cfg.truth;
  else if (reg)
    result.truth = regression_target(phi, *reg, cfg.d);
  else
    result.truth = integrand_oracle(phi, cfg.d);
  const bool want_functional =
    std::find(cfg.variants.begin(), cfg.variants.end(),
              Variant::general_functional) != cfg.variants.end();
  const double functional_truth =
    want_functional ? support_mass(phi, design, cfg.d) : 0.0;

  bool any_kernel = false;
  for (Variant v : cfg.variants)
    any_kernel = any_kernel || uses_kernel(v);

  std::vector<std::vector<ReplicationRow>> per_rep(cfg.replications);
  parallel_for(cfg.replications, [&](std::size_t rep) {
    Rng rng = make_stream(cfg.seed, rep, 0);
    const Sample s = draw_sample(design, reg, cfg.n, cfg.d, rng);

    double h_plain = 0.0, h_corrected = 0.0;
    std::optional<Error> bandwidth_error;
    double selection_seconds = 0.0;
    if (any_kernel) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        switch (cfg.bandwidth) {
          case BandwidthPolicy::fixed:
            h_plain = cfg.h ? *cfg.h
                            : cfg.c * std::pow(double(cfg.n), -*cfg.gamma);
            h_corrected = h_plain;
            break;
          case BandwidthPolicy::rule_of_thumb:
            h_plain = h_corrected = rule_of_thumb_h0(s);
            break;
          case BandwidthPolicy::simulation_validation: {
            const double h0 = rule_of_thumb_h0(s);
            const auto grid = BandwidthGrid::geometric(h0, cfg.grid_count);
            SelectionOptions opts;
            opts.trim_unit_cube = trim;
            opts.trim_reference = cfg.trim_reference;
            opts.h0 = h0;
            const auto sel = select_bandwidth_both(s, phi, ctx.kernel, grid, opts);
            h_plain = sel.plain.h_star;
            h_corrected = sel.corrected.h_star;
            break;
          }
        }
      } catch (const Error& e) {
        bandwidth_error = e;
      }
      selection_seconds = seconds_since(t0);
    }

    auto& rows = per_rep[rep];
    for (Variant v : cfg.variants) {
      if (uses_kernel(v) && bandwidth_error) {
        rows.push_back(failed_row(rep, cfg.n, v, 0.0, *bandwidth_error));
        continue;
      }
      const bool corrected_h =
        v == Variant::corrected || v == Variant::trimmed_corrected;
      rows.push_back(
        estimate_variant(ctx, s, v, corrected_h ? h_corrected : h_plain, rep));
      if (uses_kernel(v))
        rows.back().wall_seconds += selection_seconds;
    }
  });

  for (auto& rows : per_rep)
    for (auto& r : rows)
      result.rows.push_back(std::move(r));
  result.summaries = summarize(result.rows, [&](Variant v) {
    return v == Variant::general_functional ? functional_truth : result.truth;
  });

  if (cfg.out_dir)
    write_benchmark_outputs(
      *cfg.out_dir,
      result,
      fmt::format("{} d={} n={} reps={}", design.name, cfg.d, cfg.n,
                  cfg.replications));
  return result;
}

namespace {

WindowCondition
condition(std::string what, double a, double gamma, bool diverge, double scale = 1.0)
{
  // scale * log n + a * log h = log n (scale - a gamma) + const.
  WindowCondition c;
  c.description = std::move(what);
  c.exponent = scale - a * gamma;
  c.diverge = diverge;
  c.satisfied = diverge ? c.exponent > 0.0 : c.exponent < 0.0;
  return c;
}

WindowCheck
collect(std::vector<WindowCondition> conds)
{
  WindowCheck w;
  w.conditions = std::move(conds);
  for (const auto& c : w.conditions)
    w.ok = w.ok && c.satisfied;
  return w;
}

void
require_window(const WindowCheck& w, double gamma)
{
  if (w.ok)
    return;
  std::string failed;
  for (const auto& c : w.conditions)
    if (!c.satisfied)
      failed += fmt::format("{}{} (exponent {})",
                            failed.empty() ? "" : "; ",
                            c.description,
                            c.exponent);
  throw Error(ErrorCode::window_violation,
              fmt::format("gamma = {} violates: {}", gamma, failed));
}

} // namespace

WindowCheck
smooth_window(std::size_t d, int r, double s, double gamma)
{
  const double dd = static_cast<double>(d);
  std::vector<WindowCondition> c{
    condition(fmt::format("n h^{} -> inf", 2 * d), 2.0 * dd, gamma, true),
    condition(fmt::format("n h^{} -> 0", r + dd / 2.0), r + dd / 2.0, gamma,
              false),
  };
  if (std::isfinite(s))
    c.push_back(condition(fmt::format("n h^{} -> 0", 2.0 * s + dd),
                          2.0 * s + dd, gamma, false));
  return collect(std::move(c));
}

WindowCheck
nonsmooth_window(std::size_t d, int r, double gamma)
{
  const double dd = static_cast<double>(d);
  return collect({
    condition(fmt::format("n h^{} -> inf", (3.0 * dd + 1.0) / 2.0),
              (3.0 * dd + 1.0) / 2.0, gamma, true),
    condition(fmt::format("n h^{} -> 0", 2 * r - 1), 2.0 * r - 1.0, gamma,
              false),
  });
}

WindowCheck
regression_window(std::size_t d, int r, double gamma)
{
  const double dd = static_cast<double>(d);
  return collect({
    condition(fmt::format("n^1/2 h^{} -> 0", r), double(r), gamma, false, 0.5),
    condition(fmt::format("n^1/2 h^{} -> inf", d), dd, gamma, true, 0.5),
  });
}

RateResult
run_rate_check(const RateConfig& cfg)
{
  if (cfg.n_grid.size() < 3)
    throw Error(ErrorCode::size_error,
                fmt::format("rate check needs at least 3 sample sizes, got {}",
                            cfg.n_grid.size()));
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] < 3 || (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]))
      throw Error(ErrorCode::invalid_parameter,
                  "n grid must be increasing with n >= 3");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error(ErrorCode::invalid_parameter, "gamma must lie in (0, 1)");
  if (cfg.replications < 2)
    throw Error(ErrorCode::invalid_parameter, "rate check needs >= 2 replications");
  if (cfg.variants.empty())
    throw Error(ErrorCode::invalid_parameter, "no estimator variant requested");
  for (Variant v : cfg.variants) {
    if (v == Variant::regression)
      throw Error(ErrorCode::unsupported,
                  "rate check does not run the regression estimator");
    if ((v == Variant::trimmed_plain || v == Variant::trimmed_corrected) &&
        !cfg.trim_b)
      throw Error(ErrorCode::invalid_parameter,
                  "trimmed variants need an explicit trim_b");
  }

  const Design design = resolve_design(cfg.model, cfg.custom_design, 0.0, nullptr);
  const Integrand phi = integrand_by_name(cfg.phi, cfg.d);
  const auto ctx = make_context(phi, cfg.kernel, cfg.d, design, cfg.trim_b);

  RateResult out;
  out.gamma = cfg.gamma;
  out.truth = cfg.truth ? *cfg.truth : integrand_oracle(phi, cfg.d);
  const bool want_functional =
    std::find(cfg.variants.begin(), cfg.variants.end(),
              Variant::general_functional) != cfg.variants.end();
  const double functional_truth =
    want_functional ? support_mass(phi, design, cfg.d) : 0.0;
  auto truth_of = [&](Variant v) {
    return v == Variant::general_functional ? functional_truth : out.truth;
  };

  auto stream_for = [&](std::size_t grid_index, std::size_t rep) {
    return make_stream(cfg.seed, rep, 1000 + grid_index);
  };

  if (cfg.c) {
    out.c = *cfg.c;
  } else {
    const std::size_t n0 = cfg.n_grid.front();
    std::vector<double> h0(cfg.replications);
    parallel_for(cfg.replications, [&](std::size_t rep) {
      Rng rng = stream_for(0, rep);
      h0[rep] = rule_of_thumb_h0(design.draw(n0, cfg.d, rng));
    });
    out.c = mean(h0) * std::pow(static_cast<double>(n0), cfg.gamma);
  }
  if (!(out.c > 0.0))
    throw Error(ErrorCode::invalid_parameter, "bandwidth constant must be positive");

  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const std::size_t n = cfg.n_grid[gi];
    const double h = out.c * std::pow(static_cast<double>(n), -cfg.gamma);
    std::vector<std::vector<ReplicationRow>> per_rep(cfg.replications);
    parallel_for(cfg.replications, [&](std::size_t rep) {
      Rng rng = stream_for(gi, rep);
      const Sample s = design.draw(n, cfg.d, rng);
      for (Variant v : cfg.variants)
        per_rep[rep].push_back(estimate_variant(ctx, s, v, h, rep));
    });
    for (Variant v : cfg.variants) {
      RatePoint p;
      p.variant = v;
      p.n = n;
      p.h = h;
      std::vector<double> values, sq;
      for (const auto& rows : per_rep)
        for (const auto& r : rows) {
          if (r.variant != v)
            continue;
          if (r.status == "ok") {
            values.push_back(r.value);
            sq.push_back((r.value - truth_of(v)) * (r.value - truth_of(v)));
          } else {
            ++p.excluded;
          }
        }
      p.ok = values.size();
      if (!values.empty()) {
        const double mse = mean(sq);
        p.rmse = std::sqrt(mse);
        if (sq.size() > 1 && mse > 0.0)
          p.log_rmse_variance =
            variance(sq) / (static_cast<double>(sq.size()) * 4.0 * mse * mse);
        if (values.size() > 1)
          p.scaled_variance = static_cast<double>(n) * variance(values);
      }
      out.points.push_back(p);
    }
    for (auto& rows : per_rep)
      for (auto& r : rows)
        out.rows.push_back(std::move(r));
  }

  for (Variant v : cfg.variants) {
    std::vector<double> x, y, vy;
    for (const auto& p : out.points)
      if (p.variant == v && p.ok > 1 && p.rmse > 0.0) {
        x.push_back(std::log(static_cast<double>(p.n)));
        y.push_back(std::log(p.rmse));
        vy.push_back(p.log_rmse_variance);
      }
    RateFit f;
    f.variant = v;
    if (x.size() >= 3) {
      f.fit = fit_line(x, y, std::span<const double>(vy));
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      f.fit = { nan, nan, nan, nan };
    }
    out.fits.push_back(f);
  }
  return out;
}

namespace {

void
finish_summary(CltSummary& s, double theoretical, std::size_t replications)
{
  for (const auto& r : s.rows)
    if (r.status != "ok")
      ++s.excluded;
  s.replications = replications;
  s.theoretical_variance = theoretical;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean = s.statistics.empty() ? nan : mean(s.statistics);
  s.variance = s.statistics.size() > 1 ? variance(s.statistics) : nan;
  s.ratio = theoretical > 0.0 ? s.variance / theoretical : nan;
  s.ratio_doubled = theoretical > 0.0 ? s.variance / (2.0 * theoretical) : nan;
  if (std::isfinite(s.ratio) && s.ratio > 0.0)
    s.closer_factor = std::abs(std::log(s.ratio)) <=
                          std::abs(std::log(s.ratio_doubled))
                        ? "1x"
                        : "2x";
  else
    s.closer_factor = "none";
  s.alternative_ratio =
    s.alternative_variance > 0.0 ? s.variance / s.alternative_variance : nan;
  if (s.statistics.size() > 1 && s.variance > 0.0)
    s.ks = ks_normal(s.statistics, s.mean, std::sqrt(s.variance));
}

template<class Estimate>
void
collect_clt(CltSummary& s,
            const CltConfig& cfg,
            Variant variant,
            std::uint64_t tag,
            const std::function<Sample(Rng&)>& draw,
            Estimate&& estimate,
            double scale)
{
  std::vector<ReplicationRow> rows(cfg.replications);
  parallel_for(cfg.replications, [&](std::size_t rep) {
    Rng rng = make_stream(cfg.seed, rep, tag);
    const Sample smp = draw(rng);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      rows[rep] = row_from_report(rep, cfg.n, estimate(smp));
    } catch (const Error& e) {
      rows[rep] = failed_row(rep, cfg.n, variant, s.h, e);
    }
    rows[rep].wall_seconds = seconds_since(t0);
  });
  for (const auto& r : rows)
    if (r.status == "ok")
      s.statistics.push_back(scale * (r.value - s.truth));
  s.rows = std::move(rows);
}

void
check_clt_config(const CltConfig& cfg)
{
  if (cfg.d == 0 || cfg.n < 3 || cfg.replications < 2)
    throw Error(ErrorCode::invalid_parameter,
                "CLT run needs d >= 1, n >= 3 and at least 2 replications");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
    throw Error(ErrorCode::invalid_parameter, "gamma must lie in (0, 1)");
  if (!(cfg.c > 0.0))
    throw Error(ErrorCode::invalid_parameter, "c must be positive");
}

std::vector<double>
unit_lower(std::size_t d)
{
  return std::vector<double>(d, 0.0);
}

std::vector<double>
unit_upper(std::size_t d)
{
  return std::vector<double>(d, 1.0);
}

double
constant_tolerance(const CltConfig& cfg)
{
  // Quadrature in d = 1; Monte Carlo resolves a few parts in 1e3 above.
  return cfg.d == 1 ? cfg.quadrature_tolerance : 5e-3;
}

} // namespace

CltSummary
run_clt_smooth(const CltConfig& cfg)
{
  check_clt_config(cfg);
  const Design design = design_by_name(cfg.model);
  const Integrand phi = phi_sinprod(cfg.d);
  const Kernel k = kernel_by_name(cfg.kernel, cfg.d);

  CltSummary s;
  s.kind = "smooth";
  s.n = cfg.n;
  s.gamma = cfg.gamma;
  s.window = smooth_window(cfg.d, k.order(), phi.smoothness, cfg.gamma);
  require_window(s.window, cfg.gamma);
  s.h = cfg.c * std::pow(static_cast<double>(cfg.n), -cfg.gamma);
  s.truth = 1.0;

  const double vk = compute_vk(k, constant_tolerance(cfg)).value;
  const double lo[1] = { 0.0 }, hi[1] = { 1.0 };
  // phi and f are products over coordinates, so the integral factorizes.
  const double one_dim =
    integrate_box(
      [&](std::span<const double> x) {
        const double p = phi_sinprod(1)(x);
        const double f = design.density(x);
        return p == 0.0 ? 0.0 : p * p / (f * f);
      },
      lo,
      hi,
      cfg.quadrature_tolerance)
      .value;
  const double theoretical = vk * std::pow(one_dim, static_cast<double>(cfg.d));

  const double scale =
    static_cast<double>(cfg.n) * std::pow(s.h, static_cast<double>(cfg.d) / 2.0);
  collect_clt(
    s, cfg, Variant::corrected, 2'000'000 + cfg.n,
    [&](Rng& rng) { return design.draw(cfg.n, cfg.d, rng); },
    [&](const Sample& smp) { return estimate_corrected(smp, phi, k, s.h); },
    scale);
  s.alternative_label = "2 V_K int phi^2 / f^2";
  s.alternative_variance = 2.0 * theoretical;
  finish_summary(s, theoretical, cfg.replications);
  return s;
}

CltSummary
run_clt_nonsmooth(const CltConfig& cfg)
{
  check_clt_config(cfg);
  if (cfg.d != 1)
    throw Error(ErrorCode::unsupported, "non-smooth CLT run is defined for d = 1");
  if (!(cfg.a < cfg.b))
    throw Error(ErrorCode::invalid_parameter, "interval needs a < b");
  const Design design = design_by_name(cfg.model);
  if (design.unit_cube_support && !(cfg.a > 0.0 && cfg.b < 1.0))
    throw Error(ErrorCode::invalid_parameter,
                fmt::format("interval [{}, {}] touches the design support",
                            cfg.a, cfg.b));
  const Integrand phi = phi_indicator(cfg.a, cfg.b, 1);
  const Kernel k = kernel_by_name(cfg.kernel, 1);

  CltSummary s;
  s.kind = "nonsmooth";
  s.n = cfg.n;
  s.gamma = cfg.gamma;
  s.window = nonsmooth_window(1, k.order(), cfg.gamma);
  require_window(s.window, cfg.gamma);
  s.h = cfg.c * std::pow(static_cast<double>(cfg.n), -cfg.gamma);
  s.truth = cfg.b - cfg.a;

  const double L = compute_boundary_constant(k, cfg.quadrature_tolerance).value;
  const double theoretical = 2.0 * L;
  const double pa[1] = { cfg.a }, pb[1] = { cfg.b };
  s.alternative_label = "2 L sum_{x in {a,b}} 1 / f(x)";
  s.alternative_variance =
    2.0 * L * (1.0 / design.density(pa) + 1.0 / design.density(pb));

  collect_clt(
    s, cfg, Variant::corrected, 3'000'000 + cfg.n,
    [&](Rng& rng) { return design.draw(cfg.n, 1, rng); },
    [&](const Sample& smp) { return estimate_corrected(smp, phi, k, s.h); },
    std::sqrt(static_cast<double>(cfg.n) / s.h));
  finish_summary(s, theoretical, cfg.replications);
  return s;
}

CltSummary
run_regression_experiment(const CltConfig& cfg)
{
  check_clt_config(cfg);
  if (!(cfg.sigma >= 0.0))
    throw Error(ErrorCode::invalid_parameter, "sigma must be >= 0");
  if (cfg.d > 3)
    throw Error(ErrorCode::unsupported, "quadrature oracle is limited to d <= 3");
  const RegressionModel m = regression_test_model(cfg.sigma);
  const Integrand psi = phi_sinprod(cfg.d);
  const Kernel k = kernel_by_name(cfg.kernel, cfg.d);

  CltSummary s;
  s.kind = "regression";
  s.n = cfg.n;
  s.gamma = cfg.gamma;
  s.window = regression_window(cfg.d, k.order(), cfg.gamma);
  require_window(s.window, cfg.gamma);
  s.h = cfg.c * std::pow(static_cast<double>(cfg.n), -cfg.gamma);
  s.truth = regression_target(psi, m, cfg.d);

  const auto lo = unit_lower(cfg.d), hi = unit_upper(cfg.d);
  // E[sigma^2 psi^2 / f^2] = int sigma^2 psi^2 / f.
  const double noise_var =
    integrate_box(
      [&](std::span<const double> x) {
        const double p = psi(x);
        const double sg = m.sigma(x);
        return p == 0.0 ? 0.0 : sg * sg * p * p / m.design.density(x);
      },
      lo, hi, cfg.quadrature_tolerance)
      .value;
  const double mean_term =
    integrate_box(
      [&](std::span<const double> x) { return m.sigma(x) * psi(x); },
      lo, hi, cfg.quadrature_tolerance)
      .value;
  s.alternative_label = "var(sigma psi / f)";
  s.alternative_variance = noise_var - mean_term * mean_term;

  collect_clt(
    s, cfg, Variant::regression, 4'000'000 + cfg.n,
    [&](Rng& rng) { return m.draw(cfg.n, cfg.d, rng); },
    [&](const Sample& smp) {
      return estimate_regression_functional(smp, psi, k, s.h);
    },
    std::sqrt(static_cast<double>(cfg.n)));
  finish_summary(s, noise_var, cfg.replications);
  return s;
}

} // namespace kdeint
