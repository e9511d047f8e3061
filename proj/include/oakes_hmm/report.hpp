#pragma once

// Fit workflow behind the command-line tool: ingest, fit, observed
// information, optional bootstrap, and the report in two forms (a text table
// for people, a JSON document for machines). The JSON schema is described in
// README.md.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oakes_hmm/bootstrap.hpp"
#include "oakes_hmm/em.hpp"
#include "oakes_hmm/information.hpp"
#include "oakes_hmm/io.hpp"

namespace oakes_hmm {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_ingest = 2,
  exit_not_converged = 3,
  exit_rank_deficient = 4,
  exit_failure = 5,
};

struct RunConfig {
  std::string data_path;
  int states = 2;
  int max_iter = 5000;
  double tol = 1e-10;
  int starts = 10;
  std::uint64_t seed = 1;
  int bootstrap = 0;
  std::optional<int> categories;
  bool one_based = false;
  std::string out_path;
};

struct RunOutcome {
  int exit_code = exit_ok;
  nlohmann::json report;
  std::string table;
  std::string error;
};

inline constexpr int report_version = 1;

namespace detail {

/// Rounds to 10 significant digits so reports are stable against last-bit
/// noise; non-finite values become null.
inline nlohmann::json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return std::strtod(buf, nullptr);
}

inline nlohmann::json vec_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

inline nlohmann::json mat_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

/// Splits an eta-ordered vector into {"Phi": c x k, "lambda": k, "Pi": k x k}.
inline nlohmann::json eta_json(const ModelDims& d, const Vector& eta) {
  Matrix Phi(d.categories, d.states), Pi(d.states, d.states);
  Vector lambda(d.states);
  for (int u = 0; u < d.states; ++u) {
    for (int y = 0; y < d.categories; ++y) Phi(y, u) = eta[d.phi_index(y, u)];
    lambda[u] = eta[d.lambda_index(u)];
    for (int v = 0; v < d.states; ++v) Pi(u, v) = eta[d.pi_index(u, v)];
  }
  return {{"Phi", mat_json(Phi)}, {"lambda", vec_json(lambda)}, {"Pi", mat_json(Pi)}};
}

inline std::string fmt(double v, int prec = 4) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

/// States ordered by decreasing initial probability (ties by index).
inline std::vector<int> display_order(const ProbParams& p) {
  std::vector<int> order(p.states());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return p.lambda()[a] > p.lambda()[b]; });
  return order;
}

inline std::string render_table(const Dataset& d, const FitResult& fit,
                                const InformationResult& info,
                                const std::optional<BootstrapResult>& boot) {
  const ProbParams& p = fit.probs;
  const ModelDims dims = p.dims();
  const auto order = display_order(p);
  auto se = [&](int i) { return info.se_eta ? fmt((*info.se_eta)[i]) : std::string("-"); };
  auto bse = [&](int i) { return boot ? fmt(boot->se_eta[i]) : std::string(); };
  auto cell = [](const std::string& s) {
    std::ostringstream os;
    os << std::setw(10) << s;
    return os.str();
  };

  std::ostringstream os;
  os << "hidden Markov model fit: n = " << d.units() << ", T = " << d.length()
     << ", c = " << dims.categories << ", k = " << dims.states << "\n";
  os << "log-likelihood " << std::setprecision(10) << fit.loglik << " after " << fit.iterations
     << " iterations (" << (fit.converged ? "converged" : "NOT converged") << ", best start "
     << fit.best_start << ")\n";
  os << "parameters s = " << dims.num_params() << ", rank of J = " << info.rank << " ("
     << (info.identifiable ? "locally identifiable" : "NOT locally identifiable") << ")\n";
  os << "states are listed by decreasing initial probability; labels refer to the raw fit\n";

  auto header = [&](const std::string& row_label) {
    os << "\n" << std::setw(8) << row_label;
    for (int u : order) os << cell("u=" + std::to_string(u + 1));
    os << " |";
    for (int u : order) os << cell("se u=" + std::to_string(u + 1));
    if (boot) {
      os << " |";
      for (int u : order) os << cell("boot u=" + std::to_string(u + 1));
    }
    os << "\n";
  };

  os << "\nconditional response probabilities phi[y|u]";
  header("y");
  for (int y = 0; y < dims.categories; ++y) {
    os << std::setw(8) << y;
    for (int u : order) os << cell(fmt(p.Phi()(y, u)));
    os << " |";
    for (int u : order) os << cell(se(dims.phi_index(y, u)));
    if (boot) {
      os << " |";
      for (int u : order) os << cell(bse(dims.phi_index(y, u)));
    }
    os << "\n";
  }

  os << "\ninitial probabilities lambda[u]\n"
     << std::setw(8) << "u" << cell("est.") << cell("se") << (boot ? cell("boot se") : "")
     << "\n";
  for (int u : order) {
    os << std::setw(8) << u + 1 << cell(fmt(p.lambda()[u])) << cell(se(dims.lambda_index(u)))
       << (boot ? cell(bse(dims.lambda_index(u))) : "") << "\n";
  }

  os << "\ntransition probabilities pi[to|from], rows = from";
  header("from");
  for (int a : order) {
    os << std::setw(8) << a + 1;
    for (int b : order) os << cell(fmt(p.Pi()(a, b)));
    os << " |";
    for (int b : order) os << cell(se(dims.pi_index(a, b)));
    if (boot) {
      os << " |";
      for (int b : order) os << cell(bse(dims.pi_index(a, b)));
    }
    os << "\n";
  }

  for (const auto& nd : info.null_directions)
    os << "\nnull direction of J dominated by " << nd.dominant_name
       << " (singular value " << std::scientific << std::setprecision(3) << nd.singular_value
       << std::defaultfloat << ")\n";
  for (const auto& w : fit.warnings) os << "warning: " << w << "\n";
  for (const auto& w : info.warnings) os << "warning: " << w << "\n";
  return os.str();
}

}  // namespace detail

inline nlohmann::json build_report(const RunConfig& cfg, const Dataset& d, const FitResult& fit,
                                   const InformationResult& info,
                                   const std::optional<BootstrapResult>& boot) {
  using nlohmann::json;
  const ModelDims dims = fit.probs.dims();
  json r;
  r["format"] = "oakes-hmm-report";
  r["version"] = report_version;
  r["input"] = {{"file", std::filesystem::path(cfg.data_path).filename().string()},
                {"units", d.units()},
                {"length", d.length()},
                {"categories", d.categories()},
                {"configurations", d.num_configs()},
                {"one_based", cfg.one_based}};
  r["settings"] = {{"states", cfg.states},   {"max_iter", cfg.max_iter},
                   {"tol", cfg.tol},         {"starts", cfg.starts},
                   {"seed", cfg.seed},       {"bootstrap", cfg.bootstrap}};
  r["model"] = {{"states", dims.states},
                {"categories", dims.categories},
                {"num_params", dims.num_params()}};

  json starts = json::array();
  for (const auto& s : fit.starts) {
    json js = {{"loglik", detail::num(s.loglik)},
               {"iterations", s.iterations},
               {"converged", s.converged},
               {"failed", s.failed}};
    if (s.failed) js["error"] = s.error;
    starts.push_back(std::move(js));
  }
  r["fit"] = {{"loglik", detail::num(fit.loglik)}, {"iterations", fit.iterations},
              {"converged", fit.converged},        {"best_start", fit.best_start},
              {"seed", fit.seed},                  {"starts", std::move(starts)}};

  json names = json::array();
  for (int j = 0; j < dims.num_params(); ++j) names.push_back(dims.param_name(j));
  r["estimates"] = detail::eta_json(dims, fit.probs.pack());
  r["estimates"]["theta_names"] = std::move(names);
  r["estimates"]["theta"] = fit.logits ? detail::vec_json(fit.logits->theta()) : json(nullptr);

  json nulls = json::array();
  for (const auto& nd : info.null_directions)
    nulls.push_back({{"dominant_param", nd.dominant_name},
                     {"singular_value", detail::num(nd.singular_value)},
                     {"direction", detail::vec_json(nd.direction)}});
  r["information"] = {
      {"num_params", dims.num_params()},
      {"rank", info.rank},
      {"identifiable", info.identifiable},
      {"rank_threshold", detail::num(info.rank_threshold)},
      {"singular_values", detail::vec_json(info.singular_values)},
      {"se_theta", info.se_theta ? detail::vec_json(*info.se_theta) : json(nullptr)},
      {"se_eta", info.se_eta ? detail::eta_json(dims, *info.se_eta) : json(nullptr)},
      {"null_directions", std::move(nulls)}};

  if (boot) {
    r["bootstrap"] = {{"replicates", boot->replicates},
                      {"successes", boot->successes},
                      {"failures", boot->failures},
                      {"boundary", boot->boundary},
                      {"seed", boot->seed},
                      {"se_theta", detail::vec_json(boot->se_theta)},
                      {"se_eta", detail::eta_json(dims, boot->se_eta)}};
  } else {
    r["bootstrap"] = nullptr;
  }

  json warnings = json::array();
  for (const auto& w : fit.warnings) warnings.push_back(w);
  for (const auto& w : info.warnings) warnings.push_back(w);
  r["warnings"] = std::move(warnings);
  return r;
}

/// Full fit workflow. Never throws: failures are reported through the exit
/// code and RunOutcome::error.
inline RunOutcome run_fit(const RunConfig& cfg) {
  RunOutcome out;
  std::optional<Dataset> data;
  try {
    data = ingest(cfg.data_path, {cfg.one_based, cfg.categories});
  } catch (const Error& e) {
    out.exit_code = exit_ingest;
    out.error = e.what();
    return out;
  }
  try {
    FitOptions opts;
    opts.max_iter = cfg.max_iter;
    opts.tol = cfg.tol;
    opts.n_starts = cfg.starts;
    opts.seed = cfg.seed;
    FitResult fit = oakes_hmm::fit(*data, cfg.states, opts);
    if (cfg.states == 1)
      fit.warnings.emplace_back("k = 1: independence model, no latent dynamics");
    const InformationResult info = observed_information(*data, fit.probs);
    std::optional<BootstrapResult> boot;
    if (cfg.bootstrap > 0) {
      FitOptions bopts = opts;
      bopts.n_starts = 1;
      boot = bootstrap_se(fit.probs, static_cast<int>(data->units()), data->length(),
                          cfg.bootstrap, cfg.seed, bopts);
    }
    out.report = build_report(cfg, *data, fit, info, boot);
    out.table = detail::render_table(*data, fit, info, boot);
    if (!fit.converged)
      out.exit_code = exit_not_converged;
    else if (!info.identifiable)
      out.exit_code = exit_rank_deficient;
  } catch (const Error& e) {
    out.exit_code = exit_failure;
    out.error = e.what();
  }
  return out;
}

/// Serialized report: two-space indented JSON with a trailing newline.
inline std::string dump_report(const nlohmann::json& report) { return report.dump(2) + "\n"; }

}  // namespace oakes_hmm
