#pragma once

// Scaled forward-backward recursions.
//
// The forward vectors are normalized to sum to one at every step; the
// normalizer of step t is scale[t], so that
//   q(t)    = alpha.col(t) * prod_{s <= t} scale[s]
//   qbar(t) = beta.col(t)  * prod_{s >  t} scale[s]
//   log f_Y(y) = sum_t log scale[t].
// With this convention the posteriors reconstruct without renormalizing.

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/param_space.hpp"

namespace oakes_hmm {

struct ForwardPass {
  Matrix alpha;  // k x T
  Vector scale;  // T
  double log_prob = 0.0;
};

struct ForwardBackward {
  Sequence y;
  Matrix alpha;  // k x T, scaled forward vectors
  Matrix beta;   // k x T, scaled backward vectors
  Vector scale;  // T
  double log_prob = 0.0;

  int length() const { return static_cast<int>(y.size()); }
  bool degenerate() const { return !std::isfinite(log_prob); }
};

namespace detail {

inline void check_sequence(const ProbParams& p, std::span<const int> y) {
  if (y.empty()) throw InputError("empty response sequence");
  for (int v : y)
    if (v < 0 || v >= p.categories())
      throw InputError("category " + std::to_string(v) + " outside [0, " +
                       std::to_string(p.categories()) + ")");
}

/// m_y: the k-vector (phi_{y|u})_u.
inline auto emission(const ProbParams& p, int y) { return p.Phi().row(y).transpose(); }

}  // namespace detail

/// Forward recursion. A configuration with zero probability yields
/// log_prob = -inf and zero vectors from the step where it vanished.
inline ForwardPass forward(const ProbParams& p, std::span<const int> y) {
  detail::check_sequence(p, y);
  const int k = p.states();
  const int T = static_cast<int>(y.size());
  ForwardPass f{Matrix::Zero(k, T), Vector::Zero(T), 0.0};
  Vector q = detail::emission(p, y[0]).cwiseProduct(p.lambda());
  for (int t = 0; t < T; ++t) {
    if (t > 0) q = detail::emission(p, y[t]).cwiseProduct(p.Pi().transpose() * f.alpha.col(t - 1));
    const double c = q.sum();
    f.scale[t] = c;
    if (!(c > 0.0)) {
      f.log_prob = -std::numeric_limits<double>::infinity();
      return f;
    }
    f.alpha.col(t) = q / c;
    f.log_prob += std::log(c);
  }
  return f;
}

/// Backward recursion scaled by the forward normalizers.
inline Matrix backward(const ProbParams& p, std::span<const int> y, const ForwardPass& f) {
  detail::check_sequence(p, y);
  const int k = p.states();
  const int T = static_cast<int>(y.size());
  Matrix beta = Matrix::Zero(k, T);
  if (!std::isfinite(f.log_prob)) return beta;
  beta.col(T - 1).setOnes();
  for (int t = T - 2; t >= 0; --t)
    beta.col(t) =
        p.Pi() * detail::emission(p, y[t + 1]).cwiseProduct(beta.col(t + 1)) / f.scale[t + 1];
  return beta;
}

inline ForwardBackward forward_backward(const ProbParams& p, std::span<const int> y) {
  ForwardPass f = forward(p, y);
  Matrix b = backward(p, y, f);
  return {Sequence(y.begin(), y.end()), std::move(f.alpha), std::move(b), std::move(f.scale),
          f.log_prob};
}

namespace detail {
inline void require_nondegenerate(const ForwardBackward& fb) {
  if (fb.degenerate())
    throw DegenerateConfigError("response configuration has zero probability under the model");
}
}  // namespace detail

/// f(t)(y): posterior distribution of U(t) given y, t in [0, T).
inline Vector posterior_states(const ForwardBackward& fb, int t) {
  detail::require_nondegenerate(fb);
  if (t < 0 || t >= fb.length()) throw InputError("posterior_states: t out of range");
  return fb.alpha.col(t).cwiseProduct(fb.beta.col(t));
}

/// F(t)(y): joint posterior of (U(t-1), U(t)) given y, rows index U(t-1);
/// t in [1, T).
inline Matrix posterior_pairs(const ForwardBackward& fb, const ProbParams& p, int t) {
  detail::require_nondegenerate(fb);
  if (t < 1 || t >= fb.length()) throw InputError("posterior_pairs: t out of range");
  const Vector right = detail::emission(p, fb.y[t]).cwiseProduct(fb.beta.col(t));
  return fb.alpha.col(t - 1).asDiagonal() * p.Pi() * right.asDiagonal() / fb.scale[t];
}

/// Unscaled forward vector q(t); only meaningful when it is representable.
inline Vector unscaled_forward(const ForwardBackward& fb, int t) {
  double log_c = 0.0;
  for (int s = 0; s <= t; ++s) log_c += std::log(fb.scale[s]);
  return fb.alpha.col(t) * std::exp(log_c);
}

/// Unscaled backward vector qbar(t).
inline Vector unscaled_backward(const ForwardBackward& fb, int t) {
  double log_c = 0.0;
  for (int s = t + 1; s < fb.length(); ++s) log_c += std::log(fb.scale[s]);
  return fb.beta.col(t) * std::exp(log_c);
}

}  // namespace oakes_hmm
