#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/em.hpp"
#include "oakes_hmm/param_space.hpp"
#include "oakes_hmm/rng.hpp"

namespace oakes_hmm {

/// n independent sequences of length T drawn from the model. Deterministic
/// in (p, n, T, seed).
inline Dataset simulate(const ProbParams& p, int n, int T, std::uint64_t seed) {
  if (n < 1 || T < 1) throw InputError("simulate: need n >= 1 and T >= 1");
  Rng rng(seed, StreamDomain::simulate, 0);
  std::vector<Sequence> rows(n, Sequence(T));
  for (auto& row : rows) {
    int u = rng.categorical(p.lambda());
    for (int t = 0; t < T; ++t) {
      if (t > 0) u = rng.categorical(p.Pi().row(u).transpose());
      row[t] = rng.categorical(p.Phi().col(u));
    }
  }
  return Dataset::from_sequences(rows, p.categories());
}

struct BootstrapResult {
  int replicates = 0;
  int successes = 0;
  int failures = 0;
  /// Successful replicates with an estimate on the boundary; they enter the
  /// probability-scale SEs but not the logit-scale ones.
  int boundary = 0;
  Vector se_eta;    // ordered as ModelDims::num_probs
  Vector se_theta;  // ordered as theta
  std::uint64_t seed = 0;
};

namespace detail {

/// Column-wise sample standard deviation (denominator m - 1).
inline Vector column_sd(const std::vector<Vector>& draws, Eigen::Index dim) {
  Vector sd = Vector::Zero(dim);
  const auto m = static_cast<double>(draws.size());
  if (draws.size() < 2) return Vector::Constant(dim, std::nan(""));
  Vector mean = Vector::Zero(dim);
  for (const auto& v : draws) mean += v;
  mean /= m;
  for (const auto& v : draws) sd += (v - mean).cwiseAbs2();
  return (sd / (m - 1.0)).cwiseSqrt();
}

}  // namespace detail

/// Parametric bootstrap: B datasets simulated from p_hat and refitted by EM
/// started at p_hat. Replicate r uses its own RNG stream derived from
/// (seed, r), and results are aggregated in replicate order.
inline BootstrapResult bootstrap_se(const ProbParams& p_hat, int n, int T, int B,
                                    std::uint64_t seed, const FitOptions& opts = {}) {
  if (B < 2) throw InputError("bootstrap needs at least 2 replicates");
  const ModelDims dims = p_hat.dims();
  BootstrapResult res;
  res.replicates = B;
  res.seed = seed;
  std::vector<Vector> eta_draws;
  std::vector<Vector> theta_draws;
  for (int r = 0; r < B; ++r) {
    try {
      const Dataset d =
          simulate(p_hat, n, T, stream_seed(seed, StreamDomain::bootstrap, static_cast<std::uint64_t>(r)));
      const EmRun run = run_em(d, p_hat, opts);
      eta_draws.push_back(run.estimate.pack());
      if (run.estimate.interior())
        theta_draws.push_back(probs_to_logits(run.estimate).theta());
      else
        ++res.boundary;
      ++res.successes;
    } catch (const Error&) {
      ++res.failures;
    }
  }
  if (res.failures > 0.2 * B)
    throw BootstrapUnreliableError("bootstrap unreliable: " + std::to_string(res.failures) +
                                   " of " + std::to_string(B) + " replicate fits failed");
  res.se_eta = detail::column_sd(eta_draws, dims.num_probs());
  res.se_theta = detail::column_sd(theta_draws, dims.num_params());
  return res;
}

}  // namespace oakes_hmm
