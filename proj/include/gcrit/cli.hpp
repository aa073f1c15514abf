#pragma once

// Command-line front end: subcommands theory, sample, find, estimate,
// kacrice, scaling, report. Every subcommand yields a CSV table and a JSON
// summary; stdout gets one of them, and with an output directory both are
// written as <subcommand>.csv / <subcommand>.json.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gcrit/gcrit.hpp"

namespace gcrit::cli {

inline constexpr const char* kOutputDirEnv = "GCRIT_OUTPUT_DIR";

/// 17 significant digits; infinities as inf / -inf.
inline std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

struct Options {
  std::string subcommand;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out_dir;
  std::string format;

  std::string model;
  std::optional<double> k, tau, s;
  std::optional<std::string> t;
  std::string left, right;

  std::vector<double> rho, r, window;
  std::optional<double> side;
  int frequencies = kDefaultFrequencies;
  std::string variant = "gaussian-amplitude";
  int nx = 201, ny = 201;

  std::optional<double> grid_step, newton_tol, dedup_radius, seed_radius;
  std::optional<int> max_iters;

  int nreal = 50;
  int ball_grids = 1;
  std::string pair;
  std::string kind;
  long long samples = 100000;
  int gl_nodes = 32, log_nodes = 16;

  std::string input;
  bool with_log = false;
  std::string budget = "small";
};

struct Artifacts {
  std::string csv;
  nlohmann::json json;
};

namespace detail {

inline double parse_double(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(what + ": '" + s + "' is not a number");
  }
}

/// "family:key=value,key=value" into a model.
inline CovarianceModel parse_model_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  nlohmann::json j;
  j["family"] = spec.substr(0, colon);
  j["params"] = nlohmann::json::object();
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw InvalidArgument("model parameter '" + item + "' is not key=value");
      const auto key = item.substr(0, eq);
      const double v = parse_double(item.substr(eq + 1), "model parameter " + key);
      j["params"][key] = std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v);
    }
  }
  if (j["family"] == "interpolation") throw InvalidArgument("interpolation cannot be nested in a model string");
  return model_from_config(j);
}

inline CovarianceModel build_model(const Options& o) {
  if (o.model.empty()) throw InvalidArgument("--model is required");
  if (o.model.find(':') != std::string::npos) {
    if (o.k || o.tau || o.s || o.t) throw InvalidArgument("give model parameters either in the model string or as flags");
    return parse_model_spec(o.model);
  }
  nlohmann::json j;
  j["family"] = o.model;
  auto& p = j["params"] = nlohmann::json::object();
  if (o.k) p["k"] = *o.k;
  if (o.tau) p["tau"] = *o.tau;
  if (o.s) p["s"] = *o.s;
  if (o.t) {
    const double t = parse_double(*o.t, "--t");
    p["t"] = std::isinf(t) ? nlohmann::json("inf") : nlohmann::json(t);
  }
  if (o.model == "interpolation") {
    if (o.left.empty() || o.right.empty()) throw InvalidArgument("interpolation needs --left and --right");
    j["left"] = to_config(parse_model_spec(o.left));
    j["right"] = to_config(parse_model_spec(o.right));
  } else if (!o.left.empty() || !o.right.empty()) {
    throw InvalidArgument("--left/--right only apply to --model interpolation");
  }
  return model_from_config(j);
}

inline std::uint64_t require_seed(const Options& o) {
  if (!o.seed) throw InvalidArgument("--seed is required for " + o.subcommand);
  return *o.seed;
}

inline Window window_for(const Options& o, const CovarianceModel& model) {
  if (!o.window.empty() && o.side) throw InvalidArgument("give either --window or --side");
  Window w;
  if (!o.window.empty()) {
    if (o.window.size() != 4) throw InvalidArgument("--window takes xmin,xmax,ymin,ymax");
    w = {o.window[0], o.window[1], o.window[2], o.window[3]};
  } else if (o.side) {
    w = Window::square(*o.side);
  } else {
    w = EmpiricalConfig::for_model(model).window;
  }
  if (w.empty() || !std::isfinite(w.area())) throw InvalidArgument("window is empty");
  return w;
}

inline SamplerVariant variant_for(const Options& o) {
  if (o.variant == "random-phase") return SamplerVariant::RandomPhase;
  if (o.variant == "gaussian-amplitude") return SamplerVariant::GaussianAmplitude;
  throw InvalidArgument("--variant must be random-phase or gaussian-amplitude");
}

inline SearchConfig search_for(const Options& o, const CovarianceModel& model) {
  SearchConfig cfg = SearchConfig::for_model(model);
  if (o.grid_step) {
    cfg.grid_step = *o.grid_step;
    cfg.dedup_radius = cfg.grid_step / 100.0;
  }
  if (o.dedup_radius) cfg.dedup_radius = *o.dedup_radius;
  if (o.newton_tol) cfg.newton_tol = *o.newton_tol;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  if (o.seed_radius) cfg.seed_radius = *o.seed_radius;
  cfg.validate();
  return cfg;
}

inline void require_positive(const std::vector<double>& v, const char* flag) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(flag) + " values must be positive");
}

inline void forbid(bool given, const char* flag, const std::string& sub) {
  if (given) throw InvalidArgument(std::string(flag) + " does not apply to " + sub);
}

inline nlohmann::json estimate_json(const MomentEstimate& e) {
  return {{"value", num(e.value)}, {"se", num(e.std_error)}, {"nsamples", e.nsamples}};
}

inline nlohmann::json fit_json(const ScalingFit& f) {
  return {{"exponent", num(f.exponent)},
          {"exponent_se", num(f.exponent_se)},
          {"log_coefficient_detected", f.log_coefficient_detected},
          {"r_squared", num(f.r_squared)},
          {"rho_min", num(f.rho_min)},
          {"rho_max", num(f.rho_max)}};
}

/// Exponent fit when there are enough distinct positive points.
inline nlohmann::json try_fit(const std::vector<MomentEstimate>& est, bool with_log) {
  try {
    return fit_json(fit_scaling(est, with_log));
  } catch (const Error&) {
    return nullptr;
  }
}

// ---------------------------------------------------------------------------

inline Artifacts run_theory(const Options& o) {
  const auto model = build_model(o);
  require_positive(o.rho, "--rho");
  const auto rep = make_theory_report(model, o.rho);
  Artifacts a;
  a.json = to_json(rep);
  a.json["config"] = to_config(model);
  std::ostringstream csv;
  csv << "model,rho,lambda_c,R_c,a,count_c,count_e,count_s,count_min,count_max,second_factorial_cc\n";
  auto prefix = [&] { return "\"" + rep.model + "\","; };
  if (rep.rows.empty()) {
    csv << prefix() << "," << fmt(rep.lambda_c) << "," << fmt(rep.repulsion_factor) << "," << fmt(rep.k2_limit_a)
        << ",,,,,,\n";
  }
  for (const auto& row : rep.rows) {
    csv << prefix() << fmt(row.rho) << "," << fmt(rep.lambda_c) << "," << fmt(rep.repulsion_factor) << ","
        << fmt(rep.k2_limit_a);
    for (const char* c : {"c", "e", "s", "min", "max"}) csv << "," << fmt(row.expected_counts.at(c));
    csv << "," << fmt(row.second_factorial_asymptotic) << "\n";
  }
  a.csv = csv.str();
  return a;
}

inline Artifacts run_sample(const Options& o) {
  const auto model = build_model(o);
  const auto seed = require_seed(o);
  const Window w = window_for(o, model);
  const auto variant = variant_for(o);
  if (o.frequencies < 1) throw InvalidArgument("--frequencies must be positive");
  if (o.nx < 2 || o.ny < 2) throw InvalidArgument("--nx and --ny must be at least 2");
  if (static_cast<long long>(o.nx) * o.ny > 25'000'000) throw InvalidArgument("grid has too many points");
  const auto f = sample_field(model, o.frequencies, seed, variant);
  std::vector<double> xs(static_cast<std::size_t>(o.nx)), ys(static_cast<std::size_t>(o.ny));
  for (int i = 0; i < o.nx; ++i) xs[static_cast<std::size_t>(i)] = w.xmin + w.width() * i / (o.nx - 1);
  for (int i = 0; i < o.ny; ++i) ys[static_cast<std::size_t>(i)] = w.ymin + w.height() * i / (o.ny - 1);
  const auto jets = gcrit::detail::grid_jets(f, xs, ys);
  std::ostringstream csv;
  csv << "x,y,psi\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      csv << fmt(xs[i]) << "," << fmt(ys[j]) << "," << fmt(jets[i * ys.size() + j].value) << "\n";
  Artifacts a;
  a.csv = csv.str();
  a.json = {{"model", to_config(model)}, {"seed", seed},      {"frequencies", o.frequencies},
            {"variant", o.variant},      {"nx", o.nx},        {"ny", o.ny},
            {"window", {w.xmin, w.xmax, w.ymin, w.ymax}}};
  return a;
}

inline Artifacts run_find(const Options& o) {
  const auto model = build_model(o);
  const auto seed = require_seed(o);
  const Window w = window_for(o, model);
  const auto variant = variant_for(o);
  const auto cfg = search_for(o, model);
  if (o.frequencies < 1) throw InvalidArgument("--frequencies must be positive");
  const auto f = sample_field(model, o.frequencies, seed, variant);
  const auto res = find_critical_points(f, w, cfg);
  std::ostringstream csv;
  csv << "x,y,kind,det,lambda1,lambda2\n";
  std::map<std::string, int> counts{{"max", 0}, {"min", 0}, {"saddle", 0}};
  for (const auto& p : res.points) {
    csv << fmt(p.location.x) << "," << fmt(p.location.y) << "," << to_string(p.kind) << "," << fmt(p.hessian_det)
        << "," << fmt(p.eigenvalues[0]) << "," << fmt(p.eigenvalues[1]) << "\n";
    ++counts[to_string(p.kind)];
  }
  const auto& d = res.diagnostics;
  Artifacts a;
  a.csv = csv.str();
  a.json = {{"model", to_config(model)},
            {"seed", seed},
            {"window", {w.xmin, w.xmax, w.ymin, w.ymax}},
            {"grid_step", cfg.grid_step},
            {"count", res.points.size()},
            {"counts", counts},
            {"diagnostics",
             {{"seeds", d.seeds},
              {"filtered", d.filtered},
              {"converged", d.converged},
              {"not_converged", d.not_converged},
              {"degenerate", d.degenerate},
              {"duplicates", d.duplicates},
              {"outside_window", d.outside_window}}}};
  return a;
}

inline Artifacts run_estimate(const Options& o) {
  const auto model = build_model(o);
  const auto seed = require_seed(o);
  EmpiricalConfig cfg = EmpiricalConfig::for_model(model);
  cfg.window = window_for(o, model);
  cfg.variant = variant_for(o);
  cfg.search = search_for(o, model);
  cfg.frequencies = o.frequencies;
  cfg.threads = o.threads;
  if (o.frequencies < 1) throw InvalidArgument("--frequencies must be positive");
  if (o.nreal < 2) throw InvalidArgument("--nreal must be at least 2");
  if (o.ball_grids < 1) throw InvalidArgument("--ball-grids must be positive");
  if (!o.pair.empty() && !o.kind.empty()) throw InvalidArgument("give either --pair or --kind");
  forbid(!o.r.empty(), "--r", "estimate");
  const bool intensity = !o.kind.empty();
  std::optional<PairType> pair;
  std::optional<PointClass> kind;
  if (intensity) {
    kind = parse_point_class(o.kind);
    forbid(!o.rho.empty(), "--rho", "an intensity estimate");
  } else {
    pair = parse_pair_type(o.pair.empty() ? "cc" : o.pair);
    if (o.rho.empty()) throw InvalidArgument("--rho is required for a second factorial moment");
    require_positive(o.rho, "--rho");
    for (double rho : o.rho) gcrit::detail::require_rho(cfg.window, rho);
  }

  const auto sets = simulate_point_sets(model, cfg, o.nreal, seed);
  const auto d = sigma_derivatives(model, DivergencePolicy::Saturate);
  Artifacts a;
  a.json = {{"model", to_config(model)},
            {"seed", seed},
            {"nreal", o.nreal},
            {"window", {cfg.window.xmin, cfg.window.xmax, cfg.window.ymin, cfg.window.ymax}},
            {"lambda_c", num(lambda_c(d))}};
  std::ostringstream csv;
  if (intensity) {
    const auto e = estimate_intensity(sets, cfg.window, *kind);
    csv << "kind,value,se,nsamples\n" << to_string(*kind) << "," << fmt(e.value) << "," << fmt(e.std_error) << ","
        << e.nsamples << "\n";
    a.json["kind"] = to_string(*kind);
    a.json["intensity"] = estimate_json(e);
    a.json["theory"] = num(class_fraction(*kind) * lambda_c(d));
  } else {
    const auto est = estimate_second_factorial(sets, cfg.window, o.rho, *pair, interleaved_offsets(o.ball_grids));
    csv << "rho,value,se,nsamples\n";
    a.json["pair"] = to_string(*pair);
    a.json["rows"] = nlohmann::json::array();
    for (const auto& e : est) {
      csv << fmt(e.rho) << "," << fmt(e.value) << "," << fmt(e.std_error) << "," << e.nsamples << "\n";
      auto row = estimate_json(e);
      row["rho"] = e.rho;
      try {
        row["theory"] = num(second_factorial_asymptotic(d, e.rho, *pair));
      } catch (const UnsupportedPair&) {
        row["theory"] = nullptr;
      }
      a.json["rows"].push_back(row);
    }
    const bool log = *pair == PairType::SS;
    a.json["fit"] = try_fit(est, log);
  }
  a.csv = csv.str();
  return a;
}

inline Artifacts run_kacrice(const Options& o) {
  const auto model = build_model(o);
  const auto seed = require_seed(o);
  const int modes = (!o.r.empty()) + (!o.rho.empty()) + (!o.kind.empty());
  if (modes != 1) throw InvalidArgument("kacrice takes exactly one of --r, --rho, --kind");
  if (o.samples < 1) throw InvalidArgument("--samples must be positive");
  const auto d = sigma_derivatives(model);
  Artifacts a;
  a.json = {{"model", to_config(model)}, {"seed", seed}, {"samples", o.samples}};
  std::ostringstream csv;

  if (!o.kind.empty()) {
    forbid(!o.pair.empty(), "--pair", "a one-point estimate");
    const auto c = parse_point_class(o.kind);
    const auto e = one_point_intensity_mc(model, o.samples, seed, c, o.threads);
    csv << "kind,value,se,nsamples\n"
        << to_string(c) << "," << fmt(e.value) << "," << fmt(e.std_error) << "," << e.nsamples << "\n";
    a.json["kind"] = to_string(c);
    a.json["intensity"] = estimate_json(e);
    a.json["theory"] = num(class_fraction(c) * lambda_c(d));
    a.csv = csv.str();
    return a;
  }

  const auto pair = parse_pair_type(o.pair.empty() ? "cc" : o.pair);
  a.json["pair"] = to_string(pair);
  const bool log = pair == PairType::SS;
  std::vector<MomentEstimate> est;
  if (!o.r.empty()) {
    require_positive(o.r, "--r");
    const double floor = distance_floor(model);
    for (double r : o.r)
      if (r < floor) throw InvalidArgument("--r below the numerical rank floor " + fmt(floor));
    csv << "r,K2,se\n";
    a.json["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < o.r.size(); ++i) {
      const auto e = two_point_correlation(model, o.r[i], pair, o.samples, derive_seed(seed, i), o.threads);
      est.push_back(e);
      csv << fmt(o.r[i]) << "," << fmt(e.value) << "," << fmt(e.std_error) << "\n";
      auto row = estimate_json(e);
      row["r"] = o.r[i];
      row["gradient_density"] = num(gradient_pair_density(model, o.r[i]));
      a.json["rows"].push_back(row);
    }
    if (pair == PairType::CC) a.json["limit_a"] = num(k2_limit(d));
  } else {
    require_positive(o.rho, "--rho");
    if (o.gl_nodes < 1 || o.log_nodes < 1) throw InvalidArgument("node counts must be positive");
    QuadratureConfig q;
    q.gl_nodes = o.gl_nodes;
    q.log_nodes = o.log_nodes;
    q.nsamples_per_node = o.samples;
    q.threads = o.threads;
    std::vector<double> probe_x, probe_w;
    gcrit::detail::gauss_legendre_n(q.gl_nodes, 0.0, 1.0, probe_x, probe_w);
    gcrit::detail::gauss_legendre_n(q.log_nodes, 0.0, 1.0, probe_x, probe_w);
    const double floor = distance_floor(model);
    for (double rho : o.rho)
      if (!(0.2 * rho > floor)) throw InvalidArgument("--rho too small for the numerical rank floor");
    csv << "rho,moment,se\n";
    a.json["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < o.rho.size(); ++i) {
      const auto e = second_factorial_by_quadrature(model, o.rho[i], pair, q, derive_seed(seed, i));
      est.push_back(e);
      csv << fmt(o.rho[i]) << "," << fmt(e.value) << "," << fmt(e.std_error) << "\n";
      auto row = estimate_json(e);
      row["rho"] = o.rho[i];
      try {
        row["theory"] = num(second_factorial_asymptotic(d, o.rho[i], pair));
      } catch (const UnsupportedPair&) {
        row["theory"] = nullptr;
      }
      a.json["rows"].push_back(row);
    }
  }
  a.json["fit"] = try_fit(est, log);
  a.csv = csv.str();
  return a;
}

/// Reads rho (or r), value, se columns from an estimate or kacrice CSV.
inline std::vector<MomentEstimate> read_estimates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read --input '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("--input is empty");
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  const auto header = split(line);
  if (header.size() < 3 || (header[0] != "rho" && header[0] != "r"))
    throw InvalidArgument("--input needs columns rho|r, value, se");
  std::vector<MomentEstimate> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() < 3) throw InvalidArgument("malformed row in --input: " + line);
    MomentEstimate e;
    e.rho = parse_double(f[0], "rho");
    e.value = parse_double(f[1], "value");
    e.std_error = parse_double(f[2], "se");
    if (f.size() > 3) e.nsamples = static_cast<long long>(parse_double(f[3], "nsamples"));
    out.push_back(e);
  }
  return out;
}

inline Artifacts run_scaling(const Options& o) {
  if (o.input.empty()) throw InvalidArgument("--input is required for scaling");
  const auto est = read_estimates_csv(o.input);
  const auto fit = fit_scaling(est, o.with_log);
  Artifacts a;
  a.json = fit_json(fit);
  a.json["with_log"] = o.with_log;
  a.json["points"] = est.size();
  std::ostringstream csv;
  csv << "exponent,exponent_se,log_coefficient_detected,r_squared,rho_min,rho_max\n"
      << fmt(fit.exponent) << "," << fmt(fit.exponent_se) << "," << (fit.log_coefficient_detected ? 1 : 0) << ","
      << fmt(fit.r_squared) << "," << fmt(fit.rho_min) << "," << fmt(fit.rho_max) << "\n";
  a.csv = csv.str();
  return a;
}

struct Budget {
  long long one_point;
  long long two_point;
  QuadratureConfig quadrature;
  int nreal;
  double window_scale;  // window side in units of ell / 2 pi
  int poisson_nreal;
};

inline Budget budget_for(const std::string& name) {
  if (name == "small") return {200'000, 200'000, {16, 8, 20'000, 0}, 10, 20.0, 200};
  if (name == "medium") return {1'000'000, 1'000'000, {32, 16, 50'000, 0}, 50, 40.0, 400};
  if (name == "large") return {10'000'000, 4'000'000, {32, 16, 100'000, 0}, 200, 40.0, 1000};
  throw InvalidArgument("--budget must be small, medium or large");
}

/// Theory values against Kac-Rice, simulation and Poisson-control estimates.
inline Artifacts run_report(const Options& o) {
  const auto model = build_model(o);
  const auto seed = require_seed(o);
  Budget b = budget_for(o.budget);
  b.quadrature.threads = o.threads;
  const auto d = sigma_derivatives(model);
  const double ell = correlation_length(model);
  const double scale = ell / (2.0 * std::numbers::pi);
  const double lc = lambda_c(d);

  struct Check {
    std::string name, method;
    double theory, estimate, se, tolerance;
  };
  std::vector<Check> checks;
  // pass when |estimate - theory| <= 3 se + tolerance * |theory|
  const auto one = one_point_intensity_mc(model, b.one_point, derive_seed(seed, 0), PointClass::Critical, o.threads);
  checks.push_back({"lambda_c", "kac-rice one-point", lc, one.value, one.std_error, 0.001});
  const auto det = hessian_determinant_moment_mc(model, b.one_point, derive_seed(seed, 0), PointClass::Critical,
                                                 o.threads);
  checks.push_back({"E|det H|", "kac-rice one-point", expected_abs_hessian_det(d, PointClass::Critical), det.value,
                    det.std_error, 0.001});

  const double u0 = 0.01 * scale;
  checks.push_back({"gradient pair density", "schur complement", gradient_pair_density_asymptotic(d, u0),
                    gradient_pair_density(model, u0), 0.0, 0.01});
  const auto k2 = two_point_correlation(model, u0, PairType::CC, b.two_point, derive_seed(seed, 1), o.threads);
  checks.push_back({"K2 limit a", "kac-rice two-point", k2_limit(d), k2.value, k2.std_error, 0.05});

  const double rho_q = 0.1 * scale;
  const auto bm = second_factorial_by_quadrature(model, rho_q, PairType::CC, b.quadrature, derive_seed(seed, 2));
  const double norm = std::pow(lc * std::numbers::pi * rho_q * rho_q, 2);
  checks.push_back({"R_c", "kac-rice ball moment ratio", repulsion_factor(d), bm.value / norm, bm.std_error / norm,
                    0.05});

  EmpiricalConfig cfg = EmpiricalConfig::for_model(model);
  cfg.window = Window::square(b.window_scale * scale);
  cfg.threads = o.threads;
  const auto sets = simulate_point_sets(model, cfg, b.nreal, derive_seed(seed, 3));
  const auto emp = estimate_intensity(sets, cfg.window, PointClass::Critical);
  checks.push_back({"lambda_c", "simulation", lc, emp.value, emp.std_error, 0.01});
  const auto sad = estimate_intensity(sets, cfg.window, PointClass::Saddle);
  checks.push_back({"saddle intensity", "simulation", 0.5 * lc, sad.value, sad.std_error, 0.01});

  const Window pw = Window::square(b.window_scale * scale);
  const auto pc = poisson_control_ratio(lc, pw, 2.0 * scale, b.poisson_nreal, derive_seed(seed, 4));
  checks.push_back({"poisson ratio", "poisson control", 1.0, pc.value, pc.std_error, 0.0});

  Artifacts a;
  a.json = {{"model", to_config(model)}, {"label", model.label()}, {"seed", seed}, {"budget", o.budget}};
  a.json["checks"] = nlohmann::json::array();
  std::ostringstream csv;
  csv << "check,method,theory,estimate,se,tolerance,pass\n";
  int failed = 0;
  for (const auto& c : checks) {
    const bool pass = std::fabs(c.estimate - c.theory) <= 3.0 * c.se + c.tolerance * std::fabs(c.theory);
    failed += !pass;
    csv << c.name << "," << c.method << "," << fmt(c.theory) << "," << fmt(c.estimate) << "," << fmt(c.se) << ","
        << fmt(c.tolerance) << "," << (pass ? "PASS" : "FAIL") << "\n";
    a.json["checks"].push_back({{"check", c.name},
                                {"method", c.method},
                                {"theory", num(c.theory)},
                                {"estimate", num(c.estimate)},
                                {"se", num(c.se)},
                                {"tolerance", c.tolerance},
                                {"pass", pass}});
  }
  a.json["failed"] = failed;
  a.csv = csv.str();
  return a;
}

/// Writes both artifacts through temporary files so a failure leaves nothing behind.
inline void write_artifacts(const std::filesystem::path& dir, const std::string& name, const Artifacts& a) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::pair<std::string, std::string> files[2] = {{name + ".csv", a.csv}, {name + ".json", a.json.dump(2) + "\n"}};
  std::vector<fs::path> temps;
  for (const auto& [file, body] : files) {
    const fs::path tmp = dir / (file + ".tmp");
    std::ofstream out(tmp, std::ios::binary);
    out << body;
    if (!out) {
      for (const auto& t : temps) fs::remove(t);
      fs::remove(tmp);
      throw std::runtime_error("cannot write " + tmp.string());
    }
    temps.push_back(tmp);
  }
  for (std::size_t i = 0; i < temps.size(); ++i) fs::rename(temps[i], dir / files[i].first);
}

}  // namespace detail

/// Parses argv, runs one subcommand. Exit codes: 0 success, 1 invalid input,
/// 2 numerical degeneracy, 3 I/O failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Critical points of planar Gaussian fields: theory, simulation and Kac-Rice numerics"};
  app.set_config("--config", "", "flat key = value file; command-line flags take precedence");
  app.allow_config_extras(false);

  app.add_option("--seed", o.seed, "master seed (required by every stochastic subcommand)");
  app.add_option("--threads", o.threads, "worker threads, 0 = hardware concurrency")->check(CLI::NonNegativeNumber);
  app.add_option("--out", o.out_dir, std::string("output directory (default: $") + kOutputDirEnv + ")");
  app.add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  app.add_option("--model", o.model, "bargmannfock | randomwave | shiftedrandomwave | powerlaw | interpolation, "
                                     "or family:key=value,...");
  app.add_option("--k", o.k, "wavenumber / scale");
  app.add_option("--tau", o.tau, "shifted random wave: atom weight at the origin");
  app.add_option("--s", o.s, "shifted random wave amplitude, or interpolation weight");
  app.add_option("--t", o.t, "power-law truncation radius (inf allowed)");
  app.add_option("--left", o.left, "interpolation endpoint at s = 0 (family:key=value,...)");
  app.add_option("--right", o.right, "interpolation endpoint at s = 1");

  app.add_option("--rho", o.rho, "ball radii")->delimiter(',');
  app.add_option("--r", o.r, "mutual distances for two-point correlations")->delimiter(',');
  app.add_option("--window", o.window, "xmin,xmax,ymin,ymax")->delimiter(',');
  app.add_option("--side", o.side, "square window [0, side]^2");
  app.add_option("--frequencies", o.frequencies, "number of spectral frequencies M");
  app.add_option("--variant", o.variant, "random-phase | gaussian-amplitude");
  app.add_option("--nx", o.nx, "grid points along x (sample)");
  app.add_option("--ny", o.ny, "grid points along y (sample)");

  app.add_option("--grid-step", o.grid_step, "seed grid spacing");
  app.add_option("--newton-tol", o.newton_tol, "gradient tolerance");
  app.add_option("--max-iters", o.max_iters, "Newton iteration cap");
  app.add_option("--dedup-radius", o.dedup_radius, "duplicate merge radius");
  app.add_option("--seed-radius", o.seed_radius, "seed filter in grid steps, 0 disables");

  app.add_option("--nreal", o.nreal, "number of realizations");
  app.add_option("--ball-grids", o.ball_grids, "interleaved ball-center grids pooled by estimate");
  app.add_option("--pair", o.pair, "cc | ee | ss | es | se");
  app.add_option("--kind", o.kind, "c | e | s | min | max");
  app.add_option("--samples", o.samples, "Monte-Carlo draws per distance or quadrature node");
  app.add_option("--gl-nodes", o.gl_nodes, "Gauss-Legendre nodes on [0.2 rho, 2 rho]");
  app.add_option("--log-nodes", o.log_nodes, "Gauss-Legendre nodes in log u below 0.2 rho");

  app.add_option("--input", o.input, "estimate CSV for scaling");
  app.add_flag("--log", o.with_log, "fit value ~ rho^p |ln rho|");
  app.add_option("--budget", o.budget, "report budget: small | medium | large");

  const std::pair<const char*, const char*> subs[] = {
      {"theory", "closed-form intensities, repulsion factor and asymptotics"},
      {"sample", "field values on a grid"},
      {"find", "critical points of one realization"},
      {"estimate", "simulation estimates of intensities or second factorial moments"},
      {"kacrice", "numeric Kac-Rice: one-point intensity, K2(r) or ball moments"},
      {"scaling", "power-law fit over an estimate CSV"},
      {"report", "theory against every estimator for one model"}};
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  o.subcommand = app.get_subcommands().front()->get_name();
  if (o.format.empty()) o.format = (o.subcommand == "theory" || o.subcommand == "report") ? "json" : "csv";
  if (o.out_dir.empty()) {
    if (const char* env = std::getenv(kOutputDirEnv)) o.out_dir = env;
  }
  if (o.threads > 0) set_default_threads(o.threads);

  try {
    Artifacts a;
    if (o.subcommand == "theory") a = detail::run_theory(o);
    else if (o.subcommand == "sample") a = detail::run_sample(o);
    else if (o.subcommand == "find") a = detail::run_find(o);
    else if (o.subcommand == "estimate") a = detail::run_estimate(o);
    else if (o.subcommand == "kacrice") a = detail::run_kacrice(o);
    else if (o.subcommand == "scaling") a = detail::run_scaling(o);
    else a = detail::run_report(o);
    if (!o.out_dir.empty()) detail::write_artifacts(o.out_dir, o.subcommand, a);
    if (o.format == "json") out << a.json.dump(2) << "\n";
    else out << a.csv;
    return 0;
  } catch (const NumericalDegeneracy& e) {
    err << "numerical degeneracy: " << e.what() << "\n";
    return 2;
  } catch (const NonPositiveEstimate& e) {
    err << "numerical degeneracy: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace gcrit::cli
