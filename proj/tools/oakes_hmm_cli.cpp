// Command-line front end.
//
//   oakes-hmm --data FILE.csv --states K [--out report.json] [--bootstrap B] ...
//   oakes-hmm --simulate --params model.json --n N --T T [--seed S] [--out FILE.csv]

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oakes_hmm/bootstrap.hpp"
#include "oakes_hmm/io.hpp"
#include "oakes_hmm/report.hpp"

namespace {

int run_simulate(const std::string& params_path, int n, int T, std::uint64_t seed,
                 const std::string& out_path) {
  using namespace oakes_hmm;
  try {
    const ProbParams p = read_params(params_path);
    const Dataset d = simulate(p, n, T, seed);
    if (out_path.empty()) {
      write_csv(d, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << "error: cannot write '" << out_path << "'\n";
        return exit_failure;
      }
      write_csv(d, out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace oakes_hmm;
  CLI::App app{"Maximum-likelihood fitting of categorical hidden Markov models with exact "
               "observed-information standard errors"};
  app.name("oakes-hmm");

  RunConfig cfg;
  bool simulate_mode = false;
  std::string params_path;
  int sim_n = 0;
  int sim_T = 0;
  std::optional<int> categories;

  app.add_option("--data", cfg.data_path, "CSV file, one row per unit, one column per occasion");
  app.add_option("--states", cfg.states, "number of latent states k")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", cfg.max_iter, "maximum EM iterations per start")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--tol", cfg.tol, "relative log-likelihood convergence tolerance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--starts", cfg.starts, "number of EM starts (first one deterministic)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  app.add_option("--bootstrap", cfg.bootstrap, "parametric bootstrap replicates (0 = off)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--categories", categories, "number of response categories c")
      ->check(CLI::Range(2, 1 << 20));
  app.add_flag("--one-based", cfg.one_based, "categories are coded 1..c");
  app.add_option("--out", cfg.out_path,
                 "output file: JSON report when fitting, CSV when simulating");
  app.add_flag("--simulate", simulate_mode, "simulate a dataset instead of fitting");
  app.add_option("--params", params_path, "JSON parameter file for --simulate");
  app.add_option("--n", sim_n, "number of simulated units")->check(CLI::PositiveNumber);
  app.add_option("--T", sim_T, "number of simulated occasions")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (simulate_mode) {
    if (params_path.empty() || sim_n < 1 || sim_T < 1) {
      std::cerr << "error: --simulate requires --params, --n and --T\n";
      return exit_usage;
    }
    return run_simulate(params_path, sim_n, sim_T, cfg.seed, cfg.out_path);
  }
  if (cfg.data_path.empty()) {
    std::cerr << "error: --data is required (or use --simulate)\n" << app.help();
    return exit_usage;
  }
  cfg.categories = categories;

  const RunOutcome outcome = run_fit(cfg);
  if (!outcome.error.empty()) {
    std::cerr << "error: " << outcome.error << "\n";
    return outcome.exit_code;
  }
  std::cout << outcome.table;
  if (!cfg.out_path.empty()) {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write '" << cfg.out_path << "'\n";
      return exit_failure;
    }
    out << dump_report(outcome.report);
  }
  return outcome.exit_code;
}
