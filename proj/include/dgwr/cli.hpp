#pragma once

#include "dataset.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "selection.hpp"
#include "sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dgwr::cli {

inline constexpr const char* kSchemaVersion = "1.0";

using Json = nlohmann::ordered_json;

struct CliConfig
{
  std::string subcommand; // fit | tune | diagnose | simulate
  std::string input;
  std::string fit_file; // diagnose only
  std::vector<std::string> coords;
  std::string response;
  std::vector<std::string> covariates;
  bool standardize = false;
  std::string transform = "none";
  std::string gamma = "auto";
  std::string bandwidth = "auto";
  std::vector<double> gamma_grid;     // empty: default grid
  std::vector<double> bandwidth_grid; // empty: k b*/L
  int bandwidth_levels = 10;
  std::string kernel = "gaussian";
  std::optional<double> threshold; // 0.5 unless set (or taken from a fit file)
  bool include_intercept_cn = false;
  bool warn_geographic = false;
  int max_iter = 200;
  double tol = 1e-8;

  int scenario = 1;
  double phi = 0.4;
  double omega = 0.0;
  int reps = 50;
  int n = 200;
  std::uint64_t seed = 1;

  std::string output; // empty: stdout
  std::string format = "json";
};

//! Shortest round-trip decimal representation.
inline std::string
format_double(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

//! JSON has no infinities; they are written as null.
inline Json
finite_or_null(double v)
{
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

inline Json
to_json(const Eigen::VectorXd& v)
{
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(finite_or_null(v(i)));
  return out;
}

inline Json
to_json(const SelectionResult& sel)
{
  Json h = Json::array();
  for (const auto& [g, v] : sel.hscore_trace)
    h.push_back({ { "gamma", g }, { "h", finite_or_null(v) } });
  Json r = Json::array();
  for (const auto& [b, v] : sel.rcv_trace)
    r.push_back({ { "bandwidth", b }, { "rcv", finite_or_null(v) } });
  Json skipped = Json::array();
  for (const auto& s : sel.skipped)
    skipped.push_back({ { "parameter", s.parameter },
                        { "value", s.value },
                        { "code", std::string(error_code_name(s.code)) },
                        { "reason", s.reason } });
  return { { "gamma_opt", sel.gamma_opt },
           { "b_opt", sel.b_opt },
           { "hscore_trace", h },
           { "rcv_trace", r },
           { "skipped", skipped } };
}

namespace detail {

inline bool
is_auto(const std::string& v)
{
  return v == "auto";
}

inline double
parse_number(const std::string& v, const char* what)
{
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(ErrorCode::Config,
         std::string(what) + " must be 'auto' or a number, got '" + v + "'");
  return out;
}

inline io::Bindings
bindings(const CliConfig& c)
{
  if (c.coords.size() != 2)
    fail(ErrorCode::Config, "--coords needs exactly two column names");
  if (c.response.empty())
    fail(ErrorCode::Config, "--response is required");
  return { c.coords[0], c.coords[1], c.response, c.covariates };
}

inline FitConfig
base_fit_config(const CliConfig& c)
{
  FitConfig f;
  f.kernel.family = parse_kernel_family(c.kernel);
  f.max_iter = c.max_iter;
  f.tol = c.tol;
  return f;
}

inline void
write_text(const CliConfig& c, const std::string& text, std::ostream& out,
           const std::string& suffix = "")
{
  if (c.output.empty() || c.output == "-") {
    out << text;
    return;
  }
  const std::string path = c.output + suffix;
  std::ofstream f(path, std::ios::binary);
  if (!f)
    fail(ErrorCode::Io, "cannot write '" + path + "'");
  f << text;
}

//! JSON goes to the output; CSV goes to the output with the metadata
//! written alongside as <output>.meta.json (or after the CSV on stdout).
inline void
emit(const CliConfig& c, const Json& doc, const std::string& csv,
     std::ostream& out)
{
  if (c.format == "json") {
    write_text(c, doc.dump(2) + "\n", out);
    return;
  }
  write_text(c, csv, out);
  Json meta{ { "meta", doc["meta"] } };
  if (doc.contains("selection"))
    meta["selection"] = doc["selection"];
  if (c.output.empty() || c.output == "-")
    out << "# " << meta.dump() << "\n";
  else
    write_text(c, meta.dump(2) + "\n", out, ".meta.json");
}

inline Json
base_meta(const CliConfig& c)
{
  return { { "schema_version", kSchemaVersion },
           { "tool", "dgwr" },
           { "subcommand", c.subcommand } };
}

inline Json
data_config(const CliConfig& c, const io::Ingested& in)
{
  Json scaling = Json::array();
  for (const auto& s : in.scaling)
    scaling.push_back({ { "column", s.column }, { "mean", s.mean }, { "sd", s.sd } });
  return { { "input", c.input },
           { "coords", c.coords },
           { "response", c.response },
           { "covariates", c.covariates },
           { "standardize", c.standardize },
           { "standardization", scaling },
           { "transform", io::Transform::parse(c.transform).describe() },
           { "design_columns", in.design_columns },
           { "n", in.dataset.size() },
           { "p", in.dataset.num_covariates() } };
}

struct Tuned
{
  double gamma = 0.0;
  double bandwidth = 0.0;
  std::optional<SelectionResult> selection;
  std::vector<double> gamma_grid;
  std::vector<double> bandwidth_grid;
};

//! Resolves --gamma/--bandwidth: numeric values are used as given, "auto"
//! runs the corresponding selection step.
inline Tuned
tune(const CliConfig& c, const SpatialDataset& data, const FitConfig& base)
{
  Tuned t;
  t.gamma_grid = c.gamma_grid.empty() ? default_gamma_grid() : c.gamma_grid;
  t.bandwidth_grid = c.bandwidth_grid.empty()
                       ? bandwidth_grid(data.coords(), c.bandwidth_levels)
                       : c.bandwidth_grid;
  TuningGrid grid{ t.gamma_grid, t.bandwidth_grid };
  grid.validate();

  const bool auto_g = is_auto(c.gamma);
  const bool auto_b = is_auto(c.bandwidth);
  if (!auto_g) {
    t.gamma = parse_number(c.gamma, "--gamma");
    if (!(t.gamma >= 0.0))
      fail(ErrorCode::Config, "--gamma must be >= 0");
  }
  if (!auto_b) {
    t.bandwidth = parse_number(c.bandwidth, "--bandwidth");
    if (!(t.bandwidth > 0.0))
      fail(ErrorCode::Config, "--bandwidth must be positive");
  }

  if (auto_g && auto_b) {
    t.selection = select(data, grid, base);
  } else if (auto_g) {
    SelectionResult sel;
    select_gamma(data, grid.gammas, t.bandwidth, base, sel);
    sel.b_opt = t.bandwidth;
    t.selection = sel;
  } else if (auto_b) {
    SelectionResult sel;
    sel.gamma_opt = t.gamma;
    select_bandwidth(data, grid.bandwidths, t.gamma, base, sel);
    t.selection = sel;
  }
  if (t.selection) {
    t.gamma = t.selection->gamma_opt;
    t.bandwidth = t.selection->b_opt;
  }
  return t;
}

inline Json
fit_config_json(const CliConfig& c, const Tuned& t, const FitConfig& f,
                const SpatialDataset& data, double threshold)
{
  return { { "gamma", t.gamma },
           { "gamma_mode", is_auto(c.gamma) ? "auto" : "fixed" },
           { "bandwidth", t.bandwidth },
           { "bandwidth_mode", is_auto(c.bandwidth) ? "auto" : "fixed" },
           { "kernel", std::string(kernel_family_name(f.kernel.family)) },
           { "gamma_grid", t.gamma_grid },
           { "bandwidth_grid", t.bandwidth_grid },
           { "bandwidth_levels", c.bandwidth_levels },
           { "max_iter", f.max_iter },
           { "tol", f.tol },
           { "sigma2_floor", f.resolved_sigma2_floor(data) },
           { "min_ess", f.resolved_min_ess(data) },
           { "threshold", threshold },
           { "include_intercept_cn", c.include_intercept_cn },
           { "format", c.format } };
}

inline Json
warnings_json(const CliConfig& c, const SpatialDataset& data)
{
  Json w = Json::array();
  if (c.warn_geographic && io::looks_geographic(data.coords()))
    w.push_back("coordinates look like raw longitude/latitude over a large "
                "extent; distances are planar");
  return w;
}

inline std::string
diagnostics_csv_row(std::size_t i, const DiagnosticsResult& d)
{
  const auto k = static_cast<Eigen::Index>(i);
  return format_double(d.U(k)) + "," + (d.outlier_flags[i] ? "1" : "0") + "," +
         format_double(d.condition_numbers(k));
}

inline int
run_fit(const CliConfig& c, std::ostream& out, std::ostream& err)
{
  const auto in = io::ingest_csv(c.input, bindings(c),
                                 io::Transform::parse(c.transform), c.standardize);
  const SpatialDataset& data = in.dataset;
  FitConfig cfg = base_fit_config(c);
  const Tuned t = tune(c, data, cfg);
  cfg.gamma = t.gamma;
  cfg.kernel.bandwidth = t.bandwidth;
  const double threshold = c.threshold.value_or(0.5);

  const auto fits = fit_all(data, cfg);
  const auto cov = sandwich_covariance(data, fits, cfg);
  const auto diag = diagnose(data, fits, cfg.gamma, cfg.kernel, threshold,
                             c.include_intercept_cn);

  Json meta = base_meta(c);
  Json config = data_config(c, in);
  config.update(fit_config_json(c, t, cfg, data, threshold));
  meta["config"] = config;
  meta["warnings"] = warnings_json(c, data);
  for (const auto& w : meta["warnings"])
    err << "warning: " << w.get<std::string>() << "\n";

  Json locations = Json::array();
  const Eigen::Index p = data.num_covariates();
  std::ostringstream csv;
  csv << "index,s1,s2";
  for (Eigen::Index k = 0; k < p; ++k)
    csv << ",beta_" << k;
  for (Eigen::Index k = 0; k < p; ++k)
    csv << ",se_" << k;
  csv << ",sigma2,U,outlier,cn,converged\n";

  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& e = fits[i];
    const auto k = static_cast<Eigen::Index>(i);
    Json loc{ { "index", i },
              { "s", { data.coords()(k, 0), data.coords()(k, 1) } },
              { "beta", to_json(e.beta) },
              { "sigma2", e.sigma2 } };
    const auto& lc = cov.locations[i];
    loc["se"] = lc ? to_json(lc->standard_errors) : Json(nullptr);
    loc["U"] = diag.U(k);
    loc["outlier"] = static_cast<bool>(diag.outlier_flags[i]);
    loc["cn"] = finite_or_null(diag.condition_numbers(k));
    loc["converged"] = e.converged;
    loc["perfect_fit"] = e.perfect_fit;
    loc["iterations"] = e.iterations;
    loc["objective"] = finite_or_null(e.final_objective);
    if (!lc)
      for (const auto& f : cov.failures)
        if (f.location == i)
          loc["se_error"] = std::string(error_code_name(f.code));
    locations.push_back(std::move(loc));

    csv << i << "," << format_double(data.coords()(k, 0)) << ","
        << format_double(data.coords()(k, 1));
    for (Eigen::Index j = 0; j < p; ++j)
      csv << "," << format_double(e.beta(j));
    for (Eigen::Index j = 0; j < p; ++j)
      csv << "," << (lc ? format_double(lc->standard_errors(j)) : "");
    csv << "," << format_double(e.sigma2) << "," << diagnostics_csv_row(i, diag)
        << "," << (e.converged ? 1 : 0) << "\n";
  }

  Json doc{ { "meta", meta } };
  if (t.selection)
    doc["selection"] = to_json(*t.selection);
  doc["locations"] = locations;
  emit(c, doc, csv.str(), out);
  return 0;
}

inline int
run_tune(const CliConfig& c, std::ostream& out, std::ostream& err)
{
  const auto in = io::ingest_csv(c.input, bindings(c),
                                 io::Transform::parse(c.transform), c.standardize);
  const SpatialDataset& data = in.dataset;
  const FitConfig cfg = base_fit_config(c);
  Tuned t = tune(c, data, cfg);
  if (!t.selection) {
    SelectionResult trivial;
    trivial.gamma_opt = t.gamma;
    trivial.b_opt = t.bandwidth;
    t.selection = trivial;
  }

  Json meta = base_meta(c);
  Json config = data_config(c, in);
  config.update(fit_config_json(c, t, cfg, data, c.threshold.value_or(0.5)));
  meta["config"] = config;
  meta["warnings"] = warnings_json(c, data);
  for (const auto& w : meta["warnings"])
    err << "warning: " << w.get<std::string>() << "\n";

  std::ostringstream csv;
  csv << "criterion,parameter,value,score\n";
  for (const auto& [g, h] : t.selection->hscore_trace)
    csv << "hscore,gamma," << format_double(g) << "," << format_double(h) << "\n";
  for (const auto& [b, r] : t.selection->rcv_trace)
    csv << "rcv,bandwidth," << format_double(b) << "," << format_double(r) << "\n";

  Json doc{ { "meta", meta },
            { "selection", to_json(*t.selection) },
            { "locations", Json::array() } };
  emit(c, doc, csv.str(), out);
  return 0;
}

inline Json
read_json_file(const std::string& path)
{
  std::ifstream f(path);
  if (!f)
    fail(ErrorCode::Io, "cannot open '" + path + "'");
  try {
    return Json::parse(f);
  } catch (const std::exception& e) {
    fail(ErrorCode::Input, "cannot parse '" + path + "': " + e.what());
  }
}

//! Recomputes U, flags and condition numbers from a previous `fit` output.
//! Data bindings come from the fit file; --input overrides its path.
inline int
run_diagnose(const CliConfig& c, std::ostream& out, std::ostream&)
{
  if (c.fit_file.empty())
    fail(ErrorCode::Config, "diagnose needs --fit-file");
  const Json fit = read_json_file(c.fit_file);
  try {
    const Json& fc = fit.at("meta").at("config");
    CliConfig data_cfg = c;
    data_cfg.input = c.input.empty() ? fc.at("input").get<std::string>() : c.input;
    data_cfg.coords = fc.at("coords").get<std::vector<std::string>>();
    data_cfg.response = fc.at("response").get<std::string>();
    data_cfg.covariates = fc.at("covariates").get<std::vector<std::string>>();
    data_cfg.standardize = fc.at("standardize").get<bool>();
    data_cfg.transform = fc.at("transform").get<std::string>();

    const auto in = io::ingest_csv(data_cfg.input, bindings(data_cfg),
                                   io::Transform::parse(data_cfg.transform),
                                   data_cfg.standardize);
    const SpatialDataset& data = in.dataset;
    const double gamma = fc.at("gamma").get<double>();
    KernelSpec kernel{ parse_kernel_family(fc.at("kernel").get<std::string>()),
                       fc.at("bandwidth").get<double>() };
    const double threshold =
      c.threshold.value_or(fc.at("threshold").get<double>());
    const bool with_intercept = fc.at("include_intercept_cn").get<bool>();

    const Json& locs = fit.at("locations");
    if (static_cast<Eigen::Index>(locs.size()) != data.size())
      fail(ErrorCode::Input, "fit file has " + std::to_string(locs.size()) +
                               " locations but the input has " +
                               std::to_string(data.size()));
    std::vector<LocalEstimate> estimates(locs.size());
    for (std::size_t i = 0; i < locs.size(); ++i) {
      const auto beta = locs[i].at("beta").get<std::vector<double>>();
      estimates[i].beta = Eigen::Map<const Eigen::VectorXd>(
        beta.data(), static_cast<Eigen::Index>(beta.size()));
      estimates[i].sigma2 = locs[i].at("sigma2").get<double>();
      if (estimates[i].beta.size() != data.num_covariates())
        fail(ErrorCode::Input, "fit file beta length does not match the input");
    }
    const auto diag =
      diagnose(data, estimates, gamma, kernel, threshold, with_intercept);

    Json meta = base_meta(c);
    Json config = data_config(data_cfg, in);
    config["fit_file"] = c.fit_file;
    config["gamma"] = gamma;
    config["bandwidth"] = kernel.bandwidth;
    config["kernel"] = std::string(kernel_family_name(kernel.family));
    config["threshold"] = threshold;
    config["include_intercept_cn"] = with_intercept;
    config["format"] = c.format;
    meta["config"] = config;
    meta["warnings"] = Json::array();

    Json locations = Json::array();
    std::ostringstream csv;
    csv << "index,U,outlier,cn\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      locations.push_back({ { "index", i },
                            { "U", diag.U(k) },
                            { "outlier", static_cast<bool>(diag.outlier_flags[i]) },
                            { "cn", finite_or_null(diag.condition_numbers(k)) } });
      csv << i << "," << diagnostics_csv_row(i, diag) << "\n";
    }
    Json doc{ { "meta", meta }, { "locations", locations } };
    emit(c, doc, csv.str(), out);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Input, std::string("malformed fit file: ") + e.what());
  }
  return 0;
}

inline Json
summary_json(const sim::Summary& s)
{
  return { { "count", s.count },
           { "mean", s.mean },
           { "median", s.median },
           { "q1", s.q1 },
           { "q3", s.q3 } };
}

inline Json
to_json(const sim::SimReport& r)
{
  Json reps = Json::array();
  for (const auto& rep : r.replications) {
    Json j{ { "index", rep.index },
            { "seed", rep.seed },
            { "outlier_fraction", rep.outlier_fraction } };
    j["gwr"] = rep.mse_gwr ? Json{ { "mse", *rep.mse_gwr },
                                   { "bandwidth", *rep.bandwidth_gwr } }
                           : Json(nullptr);
    j["dgwr"] = rep.mse_dgwr ? Json{ { "mse", *rep.mse_dgwr },
                                     { "bandwidth", *rep.bandwidth_dgwr },
                                     { "gamma", *rep.gamma_dgwr } }
                             : Json(nullptr);
    j["errors"] = rep.errors;
    reps.push_back(std::move(j));
  }
  Json summary = Json::object();
  if (r.methods.gwr)
    summary["gwr"] = { { "mse", summary_json(r.gwr.mse) },
                       { "bandwidth", summary_json(r.gwr.bandwidth) },
                       { "failures", r.gwr.failures } };
  if (r.methods.dgwr)
    summary["dgwr"] = { { "mse", summary_json(r.dgwr.mse) },
                        { "bandwidth", summary_json(r.dgwr.bandwidth) },
                        { "gamma", summary_json(r.dgwr.gamma) },
                        { "failures", r.dgwr.failures } };
  return { { "reps", r.reps }, { "replications", reps }, { "summary", summary } };
}

inline int
run_simulate(const CliConfig& c, std::ostream& out, std::ostream&)
{
  sim::ScenarioConfig sc;
  sc.n = c.n;
  if (c.scenario != 1 && c.scenario != 2)
    fail(ErrorCode::Config, "--scenario must be 1 or 2");
  sc.scenario = static_cast<sim::Scenario>(c.scenario);
  sc.omega = c.omega;
  sc.phi = c.phi;
  sc.seed = c.seed;
  sc.validate();

  sim::ReplicationOptions opts;
  opts.gammas = c.gamma_grid;
  opts.bandwidths = c.bandwidth_grid;
  opts.bandwidth_levels = c.bandwidth_levels;
  opts.base = base_fit_config(c);
  const sim::SimReport report =
    sim::run_replications(sc, c.reps, sim::Methods{}, opts);

  Json meta = base_meta(c);
  meta["config"] = {
    { "scenario", c.scenario },
    { "scenario_name", std::string(sim::scenario_name(sc.scenario)) },
    { "n", sc.n },
    { "omega", sc.omega },
    { "a", sc.a },
    { "sigma2", sc.sigma2 },
    { "phi", sc.phi },
    { "r", sc.r },
    { "tau2", sc.tau2 },
    { "psi", sc.psi },
    { "seed", sc.seed },
    { "reps", c.reps },
    { "methods", { "gwr", "dgwr" } },
    { "kernel", std::string(kernel_family_name(opts.base.kernel.family)) },
    { "gamma_grid", report.grid.gammas },
    { "bandwidth_grid",
      c.bandwidth_grid.empty() ? Json("per-replication") : Json(c.bandwidth_grid) },
    { "bandwidth_levels", c.bandwidth_levels },
    { "max_iter", opts.base.max_iter },
    { "tol", opts.base.tol },
    { "format", c.format },
  };
  meta["warnings"] = Json::array();

  std::ostringstream csv;
  csv << "index,seed,outlier_fraction,mse_gwr,bandwidth_gwr,mse_dgwr,"
         "bandwidth_dgwr,gamma_dgwr,errors\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& rep : report.replications) {
    std::string errors;
    for (const auto& e : rep.errors)
      errors += (errors.empty() ? "" : "; ") + e;
    for (auto& ch : errors)
      if (ch == ',' || ch == '"' || ch == '\n')
        ch = ' ';
    csv << rep.index << "," << rep.seed << "," << format_double(rep.outlier_fraction)
        << "," << opt(rep.mse_gwr) << "," << opt(rep.bandwidth_gwr) << ","
        << opt(rep.mse_dgwr) << "," << opt(rep.bandwidth_dgwr) << ","
        << opt(rep.gamma_dgwr) << "," << errors << "\n";
  }

  Json doc{ { "meta", meta }, { "locations", Json::array() }, { "report", to_json(report) } };
  emit(c, doc, csv.str(), out);
  return 0;
}

//! Writes one synthetic dataset as CSV (s1,s2,y,x1,x2,outlier,beta_0..2).
inline int
run_generate(const CliConfig& c, std::ostream& out, std::ostream&)
{
  sim::ScenarioConfig sc;
  sc.n = c.n;
  if (c.scenario != 1 && c.scenario != 2)
    fail(ErrorCode::Config, "--scenario must be 1 or 2");
  sc.scenario = static_cast<sim::Scenario>(c.scenario);
  sc.omega = c.omega;
  sc.phi = c.phi;
  sc.seed = c.seed;
  sim::Rng rng(sim::stream_seed(sc.seed, 0));
  const auto syn = sim::generate(sc, rng);
  const auto& d = syn.dataset;
  std::ostringstream csv;
  csv << "s1,s2,y,x1,x2,outlier,beta_0,beta_1,beta_2\n";
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    csv << format_double(d.coords()(i, 0)) << "," << format_double(d.coords()(i, 1))
        << "," << format_double(d.response()(i)) << ","
        << format_double(d.design()(i, 1)) << "," << format_double(d.design()(i, 2))
        << "," << (syn.outlier_mask[static_cast<std::size_t>(i)] ? 1 : 0);
    for (Eigen::Index k = 0; k < 3; ++k)
      csv << "," << format_double(syn.true_betas(i, k));
    csv << "\n";
  }
  write_text(c, csv.str(), out);
  return 0;
}

} // namespace detail

inline Json
error_record(const Error& e)
{
  return { { "error",
             { { "code", std::string(e.name()) },
               { "exit_status", static_cast<int>(e.code()) },
               { "message", e.what() } } } };
}

//! Executes one subcommand. Returns the process exit status; failures are
//! reported on `err` as a one-line JSON error record.
inline int
run(const CliConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
  try {
    if (c.format != "json" && c.format != "csv")
      fail(ErrorCode::Config, "--format must be json or csv");
    if (c.subcommand == "fit")
      return detail::run_fit(c, out, err);
    if (c.subcommand == "tune")
      return detail::run_tune(c, out, err);
    if (c.subcommand == "diagnose")
      return detail::run_diagnose(c, out, err);
    if (c.subcommand == "simulate")
      return detail::run_simulate(c, out, err);
    if (c.subcommand == "generate")
      return detail::run_generate(c, out, err);
    fail(ErrorCode::Config, "unknown subcommand '" + c.subcommand + "'");
  } catch (const Error& e) {
    err << error_record(e).dump() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    const Error wrapped(ErrorCode::Numerical, e.what());
    err << error_record(wrapped).dump() << "\n";
    return static_cast<int>(wrapped.code());
  }
}

} // namespace dgwr::cli
