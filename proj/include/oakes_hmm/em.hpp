#pragma once

// EM estimation of the categorical hidden Markov model: E-step expected
// frequencies, closed-form M-step and a multi-start driver.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/param_space.hpp"
#include "oakes_hmm/recursions.hpp"
#include "oakes_hmm/rng.hpp"

namespace oakes_hmm {

/// Expected complete-data frequencies given the data, aggregated over time.
struct ExpectedFrequencies {
  Matrix a_hat;    // k x c: expected (state u, response y) counts
  Vector b_hat1;   // k: expected occupancy at the first occasion
  Vector b_plus;   // k: expected occupancy over occasions 0..T-2
  Matrix c_hat;    // k x k: expected transition counts, rows = origin
  Vector b_total;  // k: expected occupancy over all occasions
  double n = 0.0;  // number of units

  static ExpectedFrequencies zeros(int k, int c) {
    return {Matrix::Zero(k, c), Vector::Zero(k), Vector::Zero(k),
            Matrix::Zero(k, k), Vector::Zero(k), 0.0};
  }
};

struct EStep {
  ExpectedFrequencies freq;
  double loglik = 0.0;
};

namespace detail {

/// Adds weight * (posterior counts of one configuration) to `ef`.
inline void accumulate(ExpectedFrequencies& ef, const ForwardBackward& fb, const ProbParams& p,
                       double weight) {
  const int T = fb.length();
  for (int t = 0; t < T; ++t) {
    const Vector f = posterior_states(fb, t);
    ef.a_hat.col(fb.y[t]) += weight * f;
    ef.b_total += weight * f;
    if (t == 0) ef.b_hat1 += weight * f;
    if (t < T - 1) ef.b_plus += weight * f;
    if (t > 0) ef.c_hat += weight * posterior_pairs(fb, p, t);
  }
  ef.n += weight;
}

}  // namespace detail

/// E-step together with the log-likelihood at `p`.
inline EStep expectation(const ProbParams& p, const Dataset& d) {
  if (d.categories() > p.categories())
    throw InputError("dataset has more categories than the model");
  EStep out{ExpectedFrequencies::zeros(p.states(), p.categories()), 0.0};
  for (std::size_t i = 0; i < d.num_configs(); ++i) {
    const ForwardBackward fb = forward_backward(p, d.configs()[i]);
    const auto w = static_cast<double>(d.counts()[i]);
    detail::accumulate(out.freq, fb, p, w);
    out.loglik += w * fb.log_prob;
  }
  return out;
}

inline ExpectedFrequencies e_step(const ProbParams& p, const Dataset& d) {
  return expectation(p, d).freq;
}

/// sum_y n_y log f_Y(y).
inline double loglik(const ProbParams& p, const Dataset& d) {
  double ll = 0.0;
  for (std::size_t i = 0; i < d.num_configs(); ++i) {
    const ForwardPass f = forward(p, d.configs()[i]);
    if (!std::isfinite(f.log_prob))
      throw DegenerateConfigError("configuration " + std::to_string(i) +
                                  " has zero probability under the model");
    ll += static_cast<double>(d.counts()[i]) * f.log_prob;
  }
  return ll;
}

namespace detail {

inline ProbParams m_step_impl(const ExpectedFrequencies& ef, const Matrix* keep_transitions) {
  const auto k = ef.b_total.size();
  const auto c = ef.a_hat.cols();
  Matrix Phi(c, k);
  for (Eigen::Index u = 0; u < k; ++u) {
    const double denom = ef.a_hat.row(u).sum();
    if (!(denom > 0.0))
      throw EmptyStateError("M-step: latent state " + std::to_string(u) +
                                " has zero expected occupancy",
                            static_cast<int>(u));
    Phi.col(u) = ef.a_hat.row(u).transpose() / denom;
  }
  const double n1 = ef.b_hat1.sum();
  if (!(n1 > 0.0)) throw EmptyStateError("M-step: zero total initial weight", -1);
  Vector lambda = ef.b_hat1 / n1;

  Matrix Pi(k, k);
  if (keep_transitions != nullptr && !(ef.c_hat.sum() > 0.0)) {
    Pi = *keep_transitions;
  } else {
    for (Eigen::Index from = 0; from < k; ++from) {
      const double denom = ef.c_hat.row(from).sum();
      if (!(denom > 0.0))
        throw EmptyStateError("M-step: latent state " + std::to_string(from) +
                                  " has zero expected transitions out",
                              static_cast<int>(from));
      Pi.row(from) = ef.c_hat.row(from) / denom;
    }
  }
  return {lambda, Pi, Phi};
}

}  // namespace detail

/// Closed-form maximizer of Q: each probability vector proportional to its
/// expected counts.
inline ProbParams m_step(const ExpectedFrequencies& ef) { return detail::m_step_impl(ef, nullptr); }

/// As m_step, but when no transitions are observed at all (T = 1) the
/// transition matrix of `previous` is kept instead of failing.
inline ProbParams m_step(const ExpectedFrequencies& ef, const ProbParams& previous) {
  return detail::m_step_impl(ef, &previous.Pi());
}

/// Q(eta | eta-bar) for the frequencies computed at eta-bar. Terms with zero
/// weight contribute nothing; a zero probability with positive weight gives
/// -infinity.
inline double q_value(const ProbParams& p, const ExpectedFrequencies& ef) {
  auto weighted_log = [](double w, double prob) {
    if (w == 0.0) return 0.0;
    return w * std::log(prob);
  };
  double q = 0.0;
  for (int u = 0; u < p.states(); ++u)
    for (int y = 0; y < p.categories(); ++y) q += weighted_log(ef.a_hat(u, y), p.Phi()(y, u));
  for (int u = 0; u < p.states(); ++u) q += weighted_log(ef.b_hat1[u], p.lambda()[u]);
  for (int a = 0; a < p.states(); ++a)
    for (int b = 0; b < p.states(); ++b) q += weighted_log(ef.c_hat(a, b), p.Pi()(a, b));
  return q;
}

inline double q_value(const LogitParams& t, const ExpectedFrequencies& ef) {
  return q_value(logits_to_probs(t), ef);
}

struct FitOptions {
  int max_iter = 5000;
  double tol = 1e-10;
  int n_starts = 10;
  std::uint64_t seed = 1;
};

/// One EM run from a given starting point.
struct EmRun {
  ProbParams estimate;
  std::vector<double> trace;  // log-likelihood at every iterate, starting value first
  int iterations = 0;
  bool converged = false;
  double loglik = -std::numeric_limits<double>::infinity();
};

struct StartSummary {
  bool failed = false;
  std::string error;
  double loglik = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  ProbParams probs;
  std::optional<LogitParams> logits;  // absent when a probability is exactly zero
  double loglik = 0.0;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  int best_start = 0;
  std::uint64_t seed = 0;
  std::vector<StartSummary> starts;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool relative_change_below(double prev, double next, double tol) {
  return std::abs(next - prev) / (std::abs(next) + 1.0) < tol;
}

/// Empirical category margins pooled over units and occasions.
inline Vector category_margins(const Dataset& d, int c) {
  Vector m = Vector::Zero(c);
  for (std::size_t i = 0; i < d.num_configs(); ++i)
    for (int y : d.configs()[i]) m[y] += static_cast<double>(d.counts()[i]);
  return m / m.sum();
}

}  // namespace detail

/// Deterministic starting point: uniform lambda, Pi = 0.8 I + 0.2/(k-1) off
/// the diagonal, and Phi columns that tilt the pooled category margins in
/// opposite directions for low and high states.
inline ProbParams deterministic_start(const Dataset& d, int k, int c) {
  Vector lambda = Vector::Constant(k, 1.0 / k);
  Matrix Pi = Matrix::Identity(k, k);
  if (k > 1) Pi = Pi * 0.8 + (Matrix::Ones(k, k) - Matrix::Identity(k, k)) * (0.2 / (k - 1));
  const Vector margins = detail::category_margins(d, c);
  Matrix Phi(c, k);
  for (int u = 0; u < k; ++u) {
    const double su = k > 1 ? 2.0 * u / (k - 1) - 1.0 : 0.0;
    for (int y = 0; y < c; ++y) {
      const double sy = 2.0 * y / (c - 1) - 1.0;
      Phi(y, u) = (margins[y] + 0.01) * (1.0 + 0.5 * su * sy);
    }
    Phi.col(u) /= Phi.col(u).sum();
  }
  return {lambda, Pi, Phi};
}

/// Random starting point: every probability vector drawn from a flat Dirichlet.
inline ProbParams random_start(int k, int c, Rng& rng) {
  Vector lambda = rng.dirichlet_flat(k);
  Matrix Pi(k, k);
  for (int r = 0; r < k; ++r) Pi.row(r) = rng.dirichlet_flat(k).transpose();
  Matrix Phi(c, k);
  for (int u = 0; u < k; ++u) Phi.col(u) = rng.dirichlet_flat(c);
  return {lambda, Pi, Phi};
}

/// EM iterations from `init` until the relative log-likelihood change drops
/// below opts.tol or opts.max_iter M-steps have been taken.
inline EmRun run_em(const Dataset& d, const ProbParams& init, const FitOptions& opts) {
  if (d.categories() > init.categories())
    throw InputError("dataset has more categories than the model");
  ProbParams p = init;
  EStep e = expectation(p, d);
  if (!std::isfinite(e.loglik))
    throw DegenerateConfigError("starting value gives zero probability to observed data");
  EmRun run{p, {e.loglik}, 0, false, e.loglik};
  while (run.iterations < opts.max_iter) {
    p = m_step(e.freq, p);
    e = expectation(p, d);
    ++run.iterations;
    run.trace.push_back(e.loglik);
    const double prev = run.trace[run.trace.size() - 2];
    if (detail::relative_change_below(prev, e.loglik, opts.tol)) {
      run.converged = true;
      break;
    }
  }
  run.estimate = p;
  run.loglik = e.loglik;
  return run;
}

/// Multi-start EM: start 0 is deterministic_start, the others random. The
/// run with the largest final log-likelihood wins; ties go to the lowest
/// start index.
inline FitResult fit(const Dataset& d, int k, const FitOptions& opts = {}) {
  if (k < 1) throw InputError("number of latent states must be >= 1");
  if (opts.n_starts < 1 || opts.max_iter < 1 || !(opts.tol > 0.0))
    throw InputError("fit options must be positive");
  const int c = d.categories();
  std::vector<std::string> warnings;
  if (d.length() == 1 && k > 1)
    warnings.emplace_back("sequences of length 1: the model with k > 1 is not identifiable");

  std::vector<StartSummary> starts;
  std::optional<EmRun> best;
  int best_index = -1;
  for (int s = 0; s < opts.n_starts; ++s) {
    StartSummary summary;
    try {
      Rng rng(opts.seed, StreamDomain::random_start, static_cast<std::uint64_t>(s));
      const ProbParams init = s == 0 ? deterministic_start(d, k, c) : random_start(k, c, rng);
      EmRun run = run_em(d, init, opts);
      summary.loglik = run.loglik;
      summary.iterations = run.iterations;
      summary.converged = run.converged;
      if (!best || run.loglik > best->loglik) {
        best = std::move(run);
        best_index = s;
      }
    } catch (const Error& e) {
      summary.failed = true;
      summary.error = e.what();
    }
    starts.push_back(std::move(summary));
  }
  if (!best) throw Error("EM failed from every starting point: " + starts.front().error);

  FitResult out{best->estimate, std::nullopt, best->loglik, best->trace, best->iterations,
                best->converged, best_index, opts.seed, std::move(starts), std::move(warnings)};
  if (out.probs.interior()) out.logits = probs_to_logits(out.probs);
  if (!out.converged)
    out.warnings.emplace_back("EM reached the iteration limit without converging");
  return out;
}

}  // namespace oakes_hmm
