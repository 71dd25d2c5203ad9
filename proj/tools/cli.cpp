#include "cli.hpp"

#include "kdeint/bandwidth.hpp"
#include "kdeint/density.hpp"
#include "kdeint/error.hpp"
#include "kdeint/estimators.hpp"
#include "kdeint/experiments.hpp"
#include "kdeint/integrands.hpp"
#include "kdeint/kernels.hpp"
#include "kdeint/models.hpp"
#include "kdeint/numerics.hpp"
#include "kdeint/parallel.hpp"
#include "kdeint/report.hpp"
#include "kdeint/sample_io.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#ifndef KDEINT_DEFAULT_FIXTURE
#define KDEINT_DEFAULT_FIXTURE "tests/fixtures/kernel_constants.json"
#endif

namespace kdeint::cli {

using nlohmann::json;

int
exit_status_for(const std::string& code)
{
  for (int c = 0; c <= static_cast<int>(ErrorCode::check_failed); ++c)
    if (to_string(static_cast<ErrorCode>(c)) == code)
      return 3 + c;
  return 1;
}

namespace {

json
number(double v)
{
  if (std::isfinite(v))
    return v;
  return format_number(v);
}

json
report_json(const EstimateReport& r)
{
  json j;
  j["value"] = number(r.value);
  j["variant"] = std::string(to_string(r.variant));
  j["h"] = number(r.h);
  j["n_used"] = r.n_used;
  j["min_fhat"] = number(r.min_fhat);
  j["trim_threshold"] = r.trim_threshold ? number(*r.trim_threshold) : json();
  j["max_correction_ratio"] =
    r.max_correction_ratio ? number(*r.max_correction_ratio) : json();
  return j;
}

std::vector<double>
parse_list(const std::string& text, const std::string& what)
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
                  fmt::format("bad number in {} '{}'", what, text));
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::string
read_text(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::io_error, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json
read_json_config(const std::string& path)
{
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error,
                fmt::format("config '{}': {}", path, e.what()));
  }
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != 1)
    throw Error(ErrorCode::parse_error,
                fmt::format("config '{}' must declare \"schema\": 1", path));
  return doc;
}

void
write_output(const std::string& path, const std::string& content)
{
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << content))
    throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path));
}

struct InputOptions
{
  std::string path;
  bool header = false;
  bool response = false;
};

Sample
load_sample(const InputOptions& in)
{
  const std::filesystem::path p(in.path);
  if (p.extension() == ".bin")
    return read_sample_binary(p);
  return read_sample_csv(p, CsvOptions{ in.header, in.response });
}

void
add_input_options(CLI::App* cmd, InputOptions& in)
{
  cmd->add_option("--input", in.path, "Sample file (CSV, or .bin)")->required();
  cmd->add_flag("--header", in.header, "CSV has a header row");
  cmd->add_flag("--response", in.response, "Last CSV column is the response");
}

struct GridOptions
{
  std::string grid = "geometric:17";
  bool trim_unit_cube = false;
  std::string trim_reference = "candidate";
  double h0 = 0.0;
};

void
add_grid_options(CLI::App* cmd, GridOptions& g)
{
  cmd->add_option("--grid", g.grid,
                  "geometric:COUNT around h0, or list:h1,h2,...")
    ->capture_default_str();
  cmd->add_flag("--trim-unit-cube", g.trim_unit_cube,
                "Drop test-function centers within h of the faces of [0,1]^d");
  cmd->add_option("--trim-reference", g.trim_reference,
                  "Bandwidth defining the trimmed set: candidate or h0")
    ->check(CLI::IsMember({ "candidate", "h0" }))
    ->capture_default_str();
  cmd->add_option("--h0", g.h0, "Override the rule-of-thumb h0");
}

BandwidthGrid
make_grid(const GridOptions& g, const Sample& s)
{
  const auto colon = g.grid.find(':');
  const std::string kind = g.grid.substr(0, colon);
  const std::string arg =
    colon == std::string::npos ? std::string() : g.grid.substr(colon + 1);
  if (kind == "geometric") {
    std::size_t count = 17;
    if (!arg.empty()) {
      const auto v = parse_list(arg, "grid");
      if (v.size() != 1 || !(v[0] >= 1.0) || v[0] != std::floor(v[0]))
        throw Error(ErrorCode::invalid_parameter,
                    fmt::format("bad grid '{}'", g.grid));
      count = static_cast<std::size_t>(v[0]);
    }
    const double h0 = g.h0 > 0.0 ? g.h0 : rule_of_thumb_h0(s);
    return BandwidthGrid::geometric(h0, count);
  }
  if (kind == "list" && !arg.empty())
    return BandwidthGrid::from_list(parse_list(arg, "grid"));
  throw Error(ErrorCode::invalid_parameter, fmt::format("bad grid '{}'", g.grid));
}

SelectionOptions
selection_options(const GridOptions& g)
{
  SelectionOptions o;
  o.trim_unit_cube = g.trim_unit_cube;
  o.trim_reference =
    g.trim_reference == "h0" ? TrimReference::h0 : TrimReference::candidate;
  if (g.h0 > 0.0)
    o.h0 = g.h0;
  return o;
}

// --- integrate / regress ---------------------------------------------------

struct IntegrateOptions
{
  InputOptions input;
  GridOptions grid;
  std::string phi = "sinprod";
  std::string kernel = "order3";
  std::vector<std::string> variants;
  std::string h = "auto";
  double b = -1.0;
  std::string density;
  std::string output;
};

json
run_integrate(const IntegrateOptions& o, bool regression_only)
{
  const Sample s = load_sample(o.input);
  const std::size_t d = s.dim();
  const Integrand phi = integrand_by_name(o.phi, d);
  const Kernel k = kernel_by_name(o.kernel, d);

  std::vector<Variant> variants;
  for (const auto& v : o.variants)
    variants.push_back(variant_from_string(v));
  if (variants.empty())
    variants.push_back(regression_only ? Variant::regression : Variant::corrected);

  std::optional<SelectionPair> selection;
  std::optional<double> fixed_h;
  auto bandwidth_for = [&](Variant v) -> double {
    if (fixed_h)
      return *fixed_h;
    if (o.h == "rot") {
      fixed_h = rule_of_thumb_h0(s);
      return *fixed_h;
    }
    if (o.h != "auto") {
      const auto parsed = parse_list(o.h, "--h");
      if (parsed.size() != 1)
        throw Error(ErrorCode::invalid_parameter, "--h takes one value");
      fixed_h = parsed[0];
      return *fixed_h;
    }
    if (!selection)
      selection = select_bandwidth_both(
        s, phi, k, make_grid(o.grid, s), selection_options(o.grid));
    const bool corrected =
      v == Variant::corrected || v == Variant::trimmed_corrected;
    return corrected ? selection->corrected.h_star : selection->plain.h_star;
  };

  json results = json::array();
  for (Variant v : variants) {
    EstimateReport r;
    switch (v) {
      case Variant::plain:
        r = estimate_plain(s, phi, k, bandwidth_for(v));
        break;
      case Variant::corrected:
        r = estimate_corrected(s, phi, k, bandwidth_for(v));
        break;
      case Variant::trimmed_plain:
      case Variant::trimmed_corrected:
        if (!(o.b >= 0.0))
          throw Error(ErrorCode::invalid_parameter,
                      "trimmed variants need --b >= 0");
        r = estimate_trimmed(s, phi, k, bandwidth_for(v), o.b,
                             v == Variant::trimmed_corrected);
        break;
      case Variant::monte_carlo: {
        if (o.density.empty())
          throw Error(ErrorCode::invalid_parameter,
                      "monte-carlo needs --density model1|model2");
        r = estimate_mc_baseline(s, phi, design_by_name(o.density).density);
        break;
      }
      case Variant::general_functional: {
        if (!phi.support)
          throw Error(ErrorCode::unsupported,
                      "general-functional needs an integrand with a support box");
        const Box q = *phi.support;
        r = estimate_general_functional(
          s,
          [q](std::span<const double> x, double y) {
            return q.contains(x) ? y : 0.0;
          },
          k, bandwidth_for(v));
        break;
      }
      case Variant::regression:
        r = estimate_regression_functional(s, phi, k, bandwidth_for(v));
        break;
    }
    results.push_back(report_json(r));
  }
  json out = results.size() == 1 ? results[0] : results;
  if (!o.output.empty())
    write_output(o.output, out.dump(2) + "\n");
  return out;
}

// --- select-bandwidth -------------------------------------------------------

struct SelectOptions
{
  InputOptions input;
  GridOptions grid;
  std::string phi = "sinprod";
  std::string kernel = "order3";
  std::string variant = "corrected";
  bool json_out = false;
  std::string output;
};

void
run_select(const SelectOptions& o, std::ostream& out)
{
  const Sample s = load_sample(o.input);
  const Integrand phi = integrand_by_name(o.phi, s.dim());
  const Kernel k = kernel_by_name(o.kernel, s.dim());
  const auto sel = select_bandwidth(s, phi, k, make_grid(o.grid, s),
                                    variant_from_string(o.variant),
                                    selection_options(o.grid));
  std::ostringstream text;
  if (o.json_out) {
    json j;
    j["variant"] = std::string(to_string(sel.variant));
    j["h_star"] = sel.h_star;
    j["h0"] = sel.h0;
    j["table"] = json::array();
    for (const auto& c : sel.table)
      j["table"].push_back({ { "h", c.h },
                             { "estimate", number(c.estimate) },
                             { "target", number(c.target) },
                             { "criterion", number(c.criterion) },
                             { "valid", c.valid },
                             { "status", c.status } });
    text << j.dump(2) << '\n';
  } else {
    write_candidate_table_csv(text, sel.table);
  }
  out << text.str();
  if (!o.output.empty())
    write_output(o.output, text.str());
}

// --- bench ------------------------------------------------------------------

json
summary_json(const std::vector<VariantSummary>& summaries)
{
  json arr = json::array();
  for (const auto& s : summaries)
    arr.push_back({ { "variant", std::string(to_string(s.variant)) },
                    { "truth", number(s.truth) },
                    { "ok", s.ok },
                    { "excluded", s.excluded },
                    { "mean", number(s.box.mean) },
                    { "bias", number(s.bias) },
                    { "sd", number(s.sd) },
                    { "rmse", number(s.rmse) },
                    { "q1", number(s.box.q1) },
                    { "median", number(s.box.median) },
                    { "q3", number(s.box.q3) } });
  return arr;
}

json
window_json(const WindowCheck& w)
{
  json arr = json::array();
  for (const auto& c : w.conditions)
    arr.push_back({ { "condition", c.description },
                    { "exponent", c.exponent },
                    { "satisfied", c.satisfied } });
  return { { "ok", w.ok }, { "conditions", arr } };
}

json
clt_json(const CltSummary& s)
{
  return { { "kind", s.kind },
           { "n", s.n },
           { "replications", s.replications },
           { "excluded", s.excluded },
           { "gamma", s.gamma },
           { "h", s.h },
           { "truth", number(s.truth) },
           { "mean", number(s.mean) },
           { "variance", number(s.variance) },
           { "theoretical_variance", number(s.theoretical_variance) },
           { "ratio", number(s.ratio) },
           { "ratio_doubled", number(s.ratio_doubled) },
           { "closer_factor", s.closer_factor },
           { "alternative", s.alternative_label },
           { "alternative_variance", number(s.alternative_variance) },
           { "alternative_ratio", number(s.alternative_ratio) },
           { "ks",
             { { "statistic", number(s.ks.statistic) },
               { "critical_1pct", number(s.ks.critical_1pct) },
               { "p_value", number(s.ks.p_value) },
               { "rejected_1pct", s.ks.rejected_1pct } } },
           { "window", window_json(s.window) } };
}

json
rate_json(const RateResult& r)
{
  json points = json::array();
  for (const auto& p : r.points)
    points.push_back({ { "variant", std::string(to_string(p.variant)) },
                       { "n", p.n },
                       { "h", p.h },
                       { "ok", p.ok },
                       { "excluded", p.excluded },
                       { "rmse", number(p.rmse) },
                       { "scaled_variance", number(p.scaled_variance) } });
  json fits = json::array();
  for (const auto& f : r.fits)
    fits.push_back({ { "variant", std::string(to_string(f.variant)) },
                     { "slope", number(f.fit.slope) },
                     { "slope_se", number(f.fit.slope_se) },
                     { "residual_se", number(f.fit.residual_se) } });
  return { { "c", r.c },
           { "gamma", r.gamma },
           { "truth", r.truth },
           { "points", points },
           { "fits", fits } };
}

template<class T>
void
take(const json& doc, const char* key, T& dst)
{
  if (doc.contains(key))
    dst = doc.at(key).get<T>();
}

void
reject_unknown(const json& doc, std::initializer_list<const char*> keys)
{
  for (const auto& item : doc.items()) {
    bool found = item.key() == "schema";
    for (const char* k : keys)
      found = found || item.key() == k;
    if (!found)
      throw Error(ErrorCode::parse_error,
                  fmt::format("config: unknown key '{}'", item.key()));
  }
}

std::vector<Variant>
variants_from(const std::vector<std::string>& names)
{
  std::vector<Variant> out;
  for (const auto& n : names)
    out.push_back(variant_from_string(n));
  return out;
}

// --- selftest ---------------------------------------------------------------

struct Check
{
  std::string name;
  bool pass;
  std::string detail;
};

// Direct double loop over j != i, written independently of the tiled pass.
void
naive_density(const Sample& s,
              const Kernel& k,
              double h,
              std::vector<double>& f,
              std::vector<double>& v,
              std::vector<double>& f_scale,
              std::vector<double>& v_scale)
{
  const std::size_t n = s.size(), d = s.dim();
  const double hd = std::pow(h, static_cast<double>(d));
  f.assign(n, 0.0);
  v.assign(n, 0.0);
  f_scale.assign(n, 0.0);
  v_scale.assign(n, 0.0);
  std::vector<double> u(d);
  std::vector<double> kij(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        kij[j] = 0.0;
        continue;
      }
      for (std::size_t c = 0; c < d; ++c)
        u[c] = (s.coord(i, c) - s.coord(j, c)) / h;
      kij[j] = k(u) / hd;
    }
    double sum = 0.0, abs_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        sum += kij[j];
        abs_sum += std::abs(kij[j]);
      }
    f[i] = sum / static_cast<double>(n - 1);
    f_scale[i] = abs_sum / static_cast<double>(n - 1);
    double ss = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) {
        ss += (kij[j] - f[i]) * (kij[j] - f[i]);
        sq += kij[j] * kij[j];
      }
    const double norm = static_cast<double>((n - 1) * (n - 2));
    v[i] = ss / norm;
    v_scale[i] = sq / norm;
  }
}

Check
check_kernel_moments(const std::string& name,
                     std::size_t d,
                     bool quick)
{
  const Kernel k = kernel_by_name(name, d);
  const int up_to = k.order() - 1;
  const double tol = d <= 2 ? 1e-6 : 1e-2;
  MonteCarloOptions mc;
  if (quick)
    mc.draws = 1'000'000;
  const auto moments = check_moments(k, up_to, tol, mc);
  double worst = 0.0;
  bool pass = true;
  for (const auto& m : moments) {
    unsigned degree = 0;
    for (unsigned p : m.index)
      degree += p;
    worst = std::max(worst, std::abs(m.value - (degree == 0 ? 1.0 : 0.0)));
    pass = pass && m.pass;
  }
  return { fmt::format("moments {} d={}", name, d), pass,
           fmt::format("max deviation {:.3g} (tol {:.0e})", worst, tol) };
}

std::vector<Check>
check_pinned(const std::string& fixture)
{
  std::vector<Check> out;
  std::vector<PinnedConstants> pinned;
  try {
    pinned = load_pinned_constants(fixture);
  } catch (const Error& e) {
    out.push_back({ "pinned constants", false, e.what() });
    return out;
  }
  if (pinned.empty())
    out.push_back({ "pinned constants", false, "fixture lists no kernel" });
  for (const auto& p : pinned) {
    const std::string name = fmt::format("pinned {} d={}", p.kernel, p.dim);
    try {
      if (p.dim != 1)
        throw Error(ErrorCode::unsupported,
                    "pinned constants are checked by quadrature in d = 1");
      const Kernel k = kernel_by_name(p.kernel, p.dim);
      const auto c = compute_kernel_constants(k, 1e-10);
      const double dv = std::abs(c.vk - p.vk);
      const double dl = std::abs(c.boundary - p.boundary);
      out.push_back({ name, dv <= p.tolerance && dl <= p.tolerance,
                      fmt::format("V_K {} vs {}, L {} vs {}",
                                  format_number(c.vk), format_number(p.vk),
                                  format_number(c.boundary),
                                  format_number(p.boundary)) });
    } catch (const Error& e) {
      out.push_back({ name, false, e.what() });
    }
  }
  return out;
}

Check
check_oracle(std::size_t samples, std::uint64_t seed)
{
  Rng rng = make_stream(seed, 0, 77);
  std::uniform_int_distribution<std::size_t> n_dist(3, 200), d_dist(1, 3);
  std::uniform_real_distribution<double> h_dist(0.2, 1.2);
  double worst = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    const std::size_t n = n_dist(rng), d = d_dist(rng);
    const Sample s = sample_model1(n, d, rng);
    const double h = h_dist(rng);
    const Kernel k = (t % 2 == 0) ? radial_order3_kernel(d) : epanechnikov_kernel(d);
    const auto fast = loo_density(s, k, h, true);
    std::vector<double> f, v, fs, vs;
    naive_density(s, k, h, f, v, fs, vs);
    for (std::size_t i = 0; i < n; ++i) {
      if (fs[i] > 0.0)
        worst = std::max(worst, std::abs(fast.fhat[i] - f[i]) / fs[i]);
      if (vs[i] > 0.0)
        worst = std::max(worst, std::abs((*fast.vhat)[i] - v[i]) / vs[i]);
    }
  }
  return { "leave-one-out oracle", worst <= 1e-12,
           fmt::format("{} samples, max scaled error {:.3g}", samples, worst) };
}

// Integral of the test function by quadrature between its kinks.
double
integrate_test_function(const TestFunction& tf)
{
  std::vector<double> cuts;
  for (std::size_t i = 0; i < tf.centers.size(); ++i) {
    cuts.push_back(tf.centers.coord(i, 0) - tf.h0);
    cuts.push_back(tf.centers.coord(i, 0) + tf.h0);
  }
  std::sort(cuts.begin(), cuts.end());
  const auto mw = tf.mixture_weights();
  return integrate(
           [&](double x) {
             const double p[] = { x };
             return mixture_eval(tf.centers, mw, tf.kernel, tf.h0, p);
           },
           cuts.front(), cuts.back(), 1e-11, cuts)
    .value;
}

std::vector<Check>
check_test_function(std::uint64_t seed)
{
  std::vector<Check> out;
  Rng rng = make_stream(seed, 0, 78);
  const Sample s1 = sample_model1(200, 1, rng);
  const auto k = radial_order3_kernel(1);
  const auto tf = build_test_function(s1, phi_sinprod(1), k);
  const double q = integrate_test_function(tf);
  out.push_back({ "test-function identity",
                  std::abs(q - tf.target_integral) <= 1e-8,
                  fmt::format("quadrature {} vs target {}", format_number(q),
                              format_number(tf.target_integral)) });

  const Sample s2 = sample_model2(200, 1, rng);
  TestFunctionOptions opts;
  opts.h_trim = 0.1;
  const auto tt = build_test_function(s2, phi_sinprod(1), k, opts);
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < s2.size(); ++i) {
    const double x = s2.coord(i, 0);
    if (x > 0.1 && x < 0.9) {
      sum += tt.weights[i];
      ++kept;
    }
  }
  const double direct = sum / static_cast<double>(kept);
  const double qt = integrate_test_function(tt);
  out.push_back({ "trimmed test-function identity",
                  direct == tt.target_integral &&
                    std::abs(qt - tt.target_integral) <= 1e-8,
                  fmt::format("|J| = {}, target {}, quadrature {}", kept,
                              format_number(tt.target_integral),
                              format_number(qt)) });
  return out;
}

int
run_selftest(bool quick, const std::string& fixture, std::uint64_t seed,
             std::ostream& out, std::ostream& err)
{
  std::vector<Check> checks;
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      checks.push_back({ name, false, e.what() });
    }
  };
  for (std::size_t d : { 1, 2 })
    guarded(fmt::format("moments order3 d={}", d),
            [&] { checks.push_back(check_kernel_moments("order3", d, quick)); });
  for (std::size_t d : { 1, 2, 3 })
    guarded(fmt::format("moments epanechnikov d={}", d), [&] {
      checks.push_back(check_kernel_moments("epanechnikov", d, quick));
    });
  bool fixture_ok = true;
  for (auto& c : check_pinned(fixture)) {
    fixture_ok = fixture_ok && c.pass;
    checks.push_back(std::move(c));
  }
  guarded("leave-one-out oracle",
          [&] { checks.push_back(check_oracle(quick ? 10 : 50, seed)); });
  guarded("test-function identity", [&] {
    for (auto& c : check_test_function(seed))
      checks.push_back(std::move(c));
  });

  std::size_t width = 0;
  for (const auto& c : checks)
    width = std::max(width, c.name.size());
  bool all = true;
  for (const auto& c : checks) {
    out << fmt::format("{:<{}}  {}  {}\n", c.name, width,
                       c.pass ? "PASS" : "FAIL", c.detail);
    all = all && c.pass;
  }
  if (all)
    return 0;
  const ErrorCode code =
    fixture_ok ? ErrorCode::check_failed : ErrorCode::fixture_mismatch;
  err << json{ { "error", std::string(to_string(code)) },
               { "message", "self-test failed" } }
           .dump()
      << '\n';
  return exit_status_for(std::string(to_string(code)));
}

} // namespace

int
run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Integral estimation with leave-one-out kernel density weights",
                "kdeint" };
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::size_t threads = 0;
  bool verbose = false;
  app.add_option("--threads", threads,
                 "Worker threads (0: KDEINT_THREADS or hardware)");
  app.add_flag("-v,--verbose", verbose, "Progress notes on stderr");

  // integrate
  IntegrateOptions io;
  auto* integrate = app.add_subcommand("integrate", "Estimate the integral of phi");
  add_input_options(integrate, io.input);
  add_grid_options(integrate, io.grid);
  integrate->add_option("--phi", io.phi, "Integrand name")->capture_default_str();
  integrate->add_option("--kernel", io.kernel, "order3 or epanechnikov")
    ->capture_default_str();
  integrate->add_option("--variant", io.variants,
                        "plain, corrected, trimmed-plain, trimmed-corrected, "
                        "monte-carlo, general-functional, regression");
  integrate->add_option("--h", io.h, "Bandwidth: a number, auto, or rot")
    ->capture_default_str();
  integrate->add_option("--b", io.b, "Trim threshold for trimmed variants");
  integrate->add_option("--density", io.density,
                        "Known design density for monte-carlo: model1|model2");
  integrate->add_option("--output", io.output, "Also write the JSON here");

  // regress
  IntegrateOptions ro;
  ro.input.response = true;
  auto* regress = app.add_subcommand(
    "regress", "Estimate int g psi from (X, Y) pairs; the last column is Y");
  regress->add_option("--input", ro.input.path, "Sample file")->required();
  regress->add_flag("--header", ro.input.header, "CSV has a header row");
  add_grid_options(regress, ro.grid);
  regress->add_option("--psi", ro.phi, "Weight function name")->capture_default_str();
  regress->add_option("--kernel", ro.kernel)->capture_default_str();
  regress->add_option("--h", ro.h, "Bandwidth: a number, auto, or rot")
    ->capture_default_str();
  regress->add_option("--output", ro.output, "Also write the JSON here");

  // select-bandwidth
  SelectOptions so;
  auto* select = app.add_subcommand("select-bandwidth",
                                    "Simulation-validation bandwidth table");
  add_input_options(select, so.input);
  add_grid_options(select, so.grid);
  select->add_option("--phi", so.phi)->capture_default_str();
  select->add_option("--kernel", so.kernel)->capture_default_str();
  select->add_option("--variant", so.variant, "plain or corrected")
    ->check(CLI::IsMember({ "plain", "corrected" }))
    ->capture_default_str();
  select->add_flag("--json", so.json_out, "JSON with h_star instead of CSV");
  select->add_option("--output", so.output, "Also write the table here");

  // bench
  std::string bench_config;
  ExperimentConfig bc;
  std::vector<std::string> bench_variants;
  std::string bench_bandwidth, bench_out, bench_trim_ref;
  double bench_h = 0, bench_gamma = 0, bench_b = 0;
  bool bench_trim = false, bench_no_trim = false;
  auto* bench = app.add_subcommand("bench", "Replicated benchmark");
  bench->add_option("--config", bench_config, "JSON config (schema 1)");
  bench->add_option("--model", bc.model,
                    "model1, model2, gaussian-design, uniform-design, "
                    "regression-model");
  bench->add_option("--d", bc.d);
  bench->add_option("--n", bc.n);
  bench->add_option("--reps", bc.replications);
  bench->add_option("--seed", bc.seed);
  bench->add_option("--variants", bench_variants)->delimiter(',');
  bench->add_option("--bandwidth", bench_bandwidth,
                    "fixed, rule-of-thumb, simulation-validation");
  bench->add_option("--h", bench_h);
  bench->add_option("--gamma", bench_gamma);
  bench->add_option("--c", bc.c);
  bench->add_option("--kernel", bc.kernel);
  bench->add_option("--phi", bc.phi);
  bench->add_flag("--trim-unit-cube", bench_trim);
  bench->add_flag("--no-trim", bench_no_trim);
  bench->add_option("--trim-reference", bench_trim_ref)
    ->check(CLI::IsMember({ "candidate", "h0" }));
  bench->add_option("--grid-count", bc.grid_count);
  bench->add_option("--b", bench_b);
  bench->add_option("--sigma", bc.sigma);
  bench->add_option("--out", bench_out, "Output directory");

  // rate
  std::string rate_config, rate_out, rate_n;
  RateConfig rc;
  std::vector<std::string> rate_variants;
  double rate_c = 0, rate_truth = 0, rate_b = 0;
  auto* rate = app.add_subcommand("rate", "Log-log RMSE slope across n");
  rate->add_option("--config", rate_config, "JSON config (schema 1)");
  rate->add_option("--model", rc.model);
  rate->add_option("--d", rc.d);
  rate->add_option("--gamma", rc.gamma);
  rate->add_option("--c", rate_c, "Bandwidth constant (default: calibrated)");
  rate->add_option("--n", rate_n, "Comma-separated sample sizes");
  rate->add_option("--reps", rc.replications);
  rate->add_option("--seed", rc.seed);
  rate->add_option("--variants", rate_variants)->delimiter(',');
  rate->add_option("--kernel", rc.kernel);
  rate->add_option("--phi", rc.phi);
  rate->add_option("--truth", rate_truth);
  rate->add_option("--b", rate_b);
  rate->add_option("--out", rate_out, "Output directory");

  // clt
  std::string clt_config, clt_out;
  CltConfig cc;
  auto* clt = app.add_subcommand("clt", "Empirical CLT variance checks");
  clt->require_subcommand(1);
  clt->add_option("--config", clt_config, "JSON config (schema 1)");
  clt->add_option("--d", cc.d);
  clt->add_option("--n", cc.n);
  clt->add_option("--reps", cc.replications);
  clt->add_option("--gamma", cc.gamma);
  clt->add_option("--c", cc.c);
  clt->add_option("--seed", cc.seed);
  clt->add_option("--kernel", cc.kernel);
  clt->add_option("--model", cc.model);
  clt->add_option("--a", cc.a);
  clt->add_option("--b", cc.b);
  clt->add_option("--sigma", cc.sigma);
  clt->add_option("--out", clt_out, "Output directory");
  auto* clt_smooth = clt->add_subcommand("smooth", "Smooth integrand");
  auto* clt_nonsmooth = clt->add_subcommand("nonsmooth", "Indicator of [a, b]");
  auto* clt_regression = clt->add_subcommand("regression", "Regression functional");
  clt->fallthrough();

  // selftest
  bool quick = false;
  std::string fixture = KDEINT_DEFAULT_FIXTURE;
  std::uint64_t selftest_seed = default_seed;
  auto* selftest = app.add_subcommand("selftest", "Built-in consistency checks");
  selftest->add_flag("--quick", quick, "Smaller oracle and Monte Carlo budgets");
  selftest->add_option("--fixture", fixture, "Pinned kernel constants")
    ->capture_default_str();
  selftest->add_option("--seed", selftest_seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    set_thread_count(threads);
    if (verbose)
      err << fmt::format("threads: {}\n", thread_count());

    if (*integrate) {
      out << run_integrate(io, false).dump(2) << '\n';
    } else if (*regress) {
      ro.variants = { "regression" };
      out << run_integrate(ro, true).dump(2) << '\n';
    } else if (*select) {
      run_select(so, out);
    } else if (*bench) {
      ExperimentConfig cfg;
      if (!bench_config.empty())
        cfg = parse_experiment_config(read_text(bench_config));
      auto given = [&](const char* opt) { return bench->count(opt) > 0; };
      if (given("--model")) cfg.model = bc.model;
      if (given("--d")) cfg.d = bc.d;
      if (given("--n")) cfg.n = bc.n;
      if (given("--reps")) cfg.replications = bc.replications;
      if (given("--seed")) cfg.seed = bc.seed;
      if (given("--variants")) cfg.variants = variants_from(bench_variants);
      if (given("--bandwidth"))
        cfg.bandwidth = bandwidth_policy_from_string(bench_bandwidth);
      if (given("--h")) cfg.h = bench_h;
      if (given("--gamma")) cfg.gamma = bench_gamma;
      if (given("--c")) cfg.c = bc.c;
      if (given("--kernel")) cfg.kernel = bc.kernel;
      if (given("--phi")) cfg.phi = bc.phi;
      if (bench_trim) cfg.trim_unit_cube = true;
      if (bench_no_trim) cfg.trim_unit_cube = false;
      if (given("--trim-reference"))
        cfg.trim_reference =
          bench_trim_ref == "h0" ? TrimReference::h0 : TrimReference::candidate;
      if (given("--grid-count")) cfg.grid_count = bc.grid_count;
      if (given("--b")) cfg.trim_b = bench_b;
      if (given("--sigma")) cfg.sigma = bc.sigma;
      if (given("--out")) cfg.out_dir = bench_out;
      const auto r = run_benchmark(cfg);
      out << json{ { "truth", r.truth },
                   { "rows", r.rows.size() },
                   { "summary", summary_json(r.summaries) } }
               .dump(2)
          << '\n';
    } else if (*rate) {
      RateConfig cfg;
      if (!rate_config.empty()) {
        const auto doc = read_json_config(rate_config);
        reject_unknown(doc, { "model", "d", "gamma", "c", "n_grid",
                              "replications", "variants", "seed", "kernel",
                              "phi", "truth", "trim_b", "out_dir" });
        try {
          take(doc, "model", cfg.model);
          take(doc, "d", cfg.d);
          take(doc, "gamma", cfg.gamma);
          if (doc.contains("c")) cfg.c = doc["c"].get<double>();
          take(doc, "n_grid", cfg.n_grid);
          take(doc, "replications", cfg.replications);
          if (doc.contains("variants"))
            cfg.variants =
              variants_from(doc["variants"].get<std::vector<std::string>>());
          take(doc, "seed", cfg.seed);
          take(doc, "kernel", cfg.kernel);
          take(doc, "phi", cfg.phi);
          if (doc.contains("truth")) cfg.truth = doc["truth"].get<double>();
          if (doc.contains("trim_b")) cfg.trim_b = doc["trim_b"].get<double>();
          if (doc.contains("out_dir") && rate_out.empty())
            rate_out = doc["out_dir"].get<std::string>();
        } catch (const json::exception& e) {
          throw Error(ErrorCode::parse_error, fmt::format("config: {}", e.what()));
        }
      }
      auto given = [&](const char* opt) { return rate->count(opt) > 0; };
      if (given("--model")) cfg.model = rc.model;
      if (given("--d")) cfg.d = rc.d;
      if (given("--gamma")) cfg.gamma = rc.gamma;
      if (given("--c")) cfg.c = rate_c;
      if (given("--n")) {
        cfg.n_grid.clear();
        for (double v : parse_list(rate_n, "--n")) {
          if (!(v >= 1.0) || v != std::floor(v))
            throw Error(ErrorCode::invalid_parameter,
                        fmt::format("bad sample size {}", v));
          cfg.n_grid.push_back(static_cast<std::size_t>(v));
        }
      }
      if (given("--reps")) cfg.replications = rc.replications;
      if (given("--seed")) cfg.seed = rc.seed;
      if (given("--variants")) cfg.variants = variants_from(rate_variants);
      if (given("--kernel")) cfg.kernel = rc.kernel;
      if (given("--phi")) cfg.phi = rc.phi;
      if (given("--truth")) cfg.truth = rate_truth;
      if (given("--b")) cfg.trim_b = rate_b;
      const auto r = run_rate_check(cfg);
      if (!rate_out.empty())
        write_rate_outputs(rate_out, r);
      out << rate_json(r).dump(2) << '\n';
    } else if (*clt) {
      CltConfig cfg;
      if (!clt_config.empty()) {
        const auto doc = read_json_config(clt_config);
        reject_unknown(doc, { "d", "n", "replications", "gamma", "c", "seed",
                              "kernel", "model", "a", "b", "sigma",
                              "quadrature_tolerance", "out_dir" });
        try {
          take(doc, "d", cfg.d);
          take(doc, "n", cfg.n);
          take(doc, "replications", cfg.replications);
          take(doc, "gamma", cfg.gamma);
          take(doc, "c", cfg.c);
          take(doc, "seed", cfg.seed);
          take(doc, "kernel", cfg.kernel);
          take(doc, "model", cfg.model);
          take(doc, "a", cfg.a);
          take(doc, "b", cfg.b);
          take(doc, "sigma", cfg.sigma);
          take(doc, "quadrature_tolerance", cfg.quadrature_tolerance);
          if (doc.contains("out_dir") && clt_out.empty())
            clt_out = doc["out_dir"].get<std::string>();
        } catch (const json::exception& e) {
          throw Error(ErrorCode::parse_error, fmt::format("config: {}", e.what()));
        }
      }
      auto given = [&](const char* opt) { return clt->count(opt) > 0; };
      if (given("--d")) cfg.d = cc.d;
      if (given("--n")) cfg.n = cc.n;
      if (given("--reps")) cfg.replications = cc.replications;
      if (given("--gamma")) cfg.gamma = cc.gamma;
      if (given("--c")) cfg.c = cc.c;
      if (given("--seed")) cfg.seed = cc.seed;
      if (given("--kernel")) cfg.kernel = cc.kernel;
      if (given("--model")) cfg.model = cc.model;
      if (given("--a")) cfg.a = cc.a;
      if (given("--b")) cfg.b = cc.b;
      if (given("--sigma")) cfg.sigma = cc.sigma;
      CltSummary s;
      if (*clt_smooth)
        s = run_clt_smooth(cfg);
      else if (*clt_nonsmooth)
        s = run_clt_nonsmooth(cfg);
      else if (*clt_regression)
        s = run_regression_experiment(cfg);
      if (!clt_out.empty())
        write_clt_outputs(clt_out, s);
      out << clt_json(s).dump(2) << '\n';
    } else if (*selftest) {
      return run_selftest(quick, fixture, selftest_seed, out, err);
    }
  } catch (const ParseError& e) {
    err << json{ { "error", "PARSE_ERROR" },
                 { "line", e.line() },
                 { "message", e.what() } }
             .dump()
        << '\n';
    return exit_status_for("PARSE_ERROR");
  } catch (const DegenerateDensityError& e) {
    err << json{ { "error", "DEGENERATE_DENSITY" },
                 { "index", e.index() },
                 { "message", e.what() } }
             .dump()
        << '\n';
    return exit_status_for("DEGENERATE_DENSITY");
  } catch (const Error& e) {
    const std::string code(to_string(e.code()));
    err << json{ { "error", code }, { "message", e.what() } }.dump() << '\n';
    return exit_status_for(code);
  } catch (const std::exception& e) {
    err << json{ { "error", "INTERNAL" }, { "message", e.what() } }.dump() << '\n';
    return 1;
  }
  return 0;
}

} // namespace kdeint::cli
