#include "dgwr/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using dgwr::cli::CliConfig;

void
add_data_options(CLI::App& cmd, CliConfig& c, bool required = true)
{
  auto* input =
    cmd.add_option("--input", c.input, "CSV file with a header row");
  if (!required)
    return;
  input->required();
  cmd.add_option("--coords", c.coords, "two coordinate columns, e.g. lon,lat")
    ->delimiter(',')
    ->expected(2)
    ->required();
  cmd.add_option("--response", c.response, "response column")->required();
  cmd.add_option("--covariates", c.covariates, "covariate columns")
    ->delimiter(',');
  cmd.add_flag("--standardize", c.standardize,
               "center and scale covariates to mean 0, sd 1");
  cmd.add_option("--transform", c.transform,
                 "none | log1p_per_area:<area column>")
    ->capture_default_str();
  cmd.add_flag("--warn-geographic", c.warn_geographic,
               "warn when coordinates look like raw lon/lat");
}

void
add_grid_options(CLI::App& cmd, CliConfig& c)
{
  cmd.add_option("--gamma-grid", c.gamma_grid,
                 "gamma candidates (default 0,0.01,0.03,0.05,0.1,...,0.5)")
    ->delimiter(',');
  cmd.add_option("--bandwidth-grid", c.bandwidth_grid,
                 "bandwidth candidates (default k*b/L, k=1..L, b = median "
                 "pairwise distance)")
    ->delimiter(',');
  cmd.add_option("--bandwidth-levels", c.bandwidth_levels,
                 "L for the default bandwidth grid")
    ->capture_default_str();
  cmd.add_option("--kernel", c.kernel, "gaussian | bisquare")
    ->capture_default_str();
  cmd.add_option("--max-iter", c.max_iter, "MM iteration cap")
    ->capture_default_str();
  cmd.add_option("--tol", c.tol, "MM relative-change tolerance")
    ->capture_default_str();
}

void
add_tuning_options(CLI::App& cmd, CliConfig& c)
{
  cmd.add_option("--gamma", c.gamma, "robustness parameter or 'auto'")
    ->capture_default_str();
  cmd.add_option("--bandwidth", c.bandwidth, "kernel bandwidth or 'auto'")
    ->capture_default_str();
  add_grid_options(cmd, c);
}

void
add_output_options(CLI::App& cmd, CliConfig& c)
{
  cmd.add_option("--output", c.output, "output path (default stdout)");
  cmd.add_option("--format", c.format, "json | csv")->capture_default_str();
}

void
add_scenario_options(CLI::App& cmd, CliConfig& c)
{
  cmd.add_option("--scenario", c.scenario,
                 "1 = variance mixture, 2 = mean shift")
    ->capture_default_str();
  cmd.add_option("--phi", c.phi, "covariate GP range")->capture_default_str();
  cmd.add_option("--omega", c.omega, "outlier ratio")->capture_default_str();
  cmd.add_option("--n", c.n, "locations per dataset")->capture_default_str();
  cmd.add_option("--seed", c.seed, "base RNG seed")->capture_default_str();
}

} // namespace

int
main(int argc, char** argv)
{
  CliConfig c;
  CLI::App app{ "Robust geographically weighted regression (gamma-divergence)" };
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit local coefficients, SEs and outlier weights");
  add_data_options(*fit, c);
  add_tuning_options(*fit, c);
  fit->add_option("--threshold", c.threshold, "outlier threshold on U (default 0.5)");
  fit->add_flag("--cn-intercept", c.include_intercept_cn,
                "include the intercept column in condition numbers");
  add_output_options(*fit, c);

  auto* tune = app.add_subcommand("tune", "select gamma and bandwidth");
  add_data_options(*tune, c);
  add_tuning_options(*tune, c);
  add_output_options(*tune, c);

  auto* diagnose =
    app.add_subcommand("diagnose", "recompute U, flags and condition numbers from a fit file");
  add_data_options(*diagnose, c, false);
  diagnose->add_option("--fit-file", c.fit_file, "JSON output of `fit`")->required();
  diagnose->add_option("--threshold", c.threshold, "outlier threshold on U");
  add_output_options(*diagnose, c);

  auto* simulate = app.add_subcommand("simulate", "run the synthetic replication study");
  add_scenario_options(*simulate, c);
  simulate->add_option("--reps", c.reps, "replications")->capture_default_str();
  add_grid_options(*simulate, c);
  add_output_options(*simulate, c);

  auto* generate = app.add_subcommand("generate", "write one synthetic dataset as CSV");
  add_scenario_options(*generate, c);
  generate->add_option("--output", c.output, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const dgwr::Error err(dgwr::ErrorCode::Config, e.what());
    std::cerr << dgwr::cli::error_record(err).dump() << "\n";
    return static_cast<int>(err.code());
  }

  for (auto* sub : { fit, tune, diagnose, simulate, generate })
    if (sub->parsed())
      c.subcommand = sub->get_name();
  return dgwr::cli::run(c, std::cout, std::cerr);
}
