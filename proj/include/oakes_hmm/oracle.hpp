#pragma once

// Slow reference implementations used to verify the recursions and the
// analytic derivatives. Nothing here shares code with recursions.hpp or
// information.hpp: the path sums are written straight from the model
// definition, and the finite differences only see a black-box function.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oakes_hmm/errors.hpp"
#include "oakes_hmm/param_space.hpp"

namespace oakes_hmm::oracle {

inline constexpr double max_table_size = 1e6;

/// Every latent path of length T with its prior probability under (lambda, Pi).
class PathTable {
 public:
  PathTable(const ProbParams& p, int T) : k_(p.states()), T_(T) {
    if (T < 1) throw OracleError("path table needs T >= 1");
    if (std::pow(static_cast<double>(k_), T) > max_table_size)
      throw OracleError("path enumeration would exceed 1e6 latent paths");
    std::vector<int> path(T, 0);
    while (true) {
      double prob = p.lambda()[path[0]];
      for (int t = 1; t < T; ++t) prob *= p.Pi()(path[t - 1], path[t]);
      paths_.push_back(path);
      prior_.push_back(prob);
      int pos = T - 1;
      while (pos >= 0 && ++path[pos] == k_) path[pos--] = 0;
      if (pos < 0) break;
    }
  }

  const std::vector<std::vector<int>>& paths() const { return paths_; }
  const std::vector<double>& prior() const { return prior_; }

  /// Joint probability of path i and the observation sequence y.
  double joint(const ProbParams& p, std::size_t i, std::span<const int> y) const {
    double prob = prior_[i];
    for (int t = 0; t < T_; ++t) prob *= p.Phi()(y[t], paths_[i][t]);
    return prob;
  }

 private:
  int k_;
  int T_;
  std::vector<std::vector<int>> paths_;
  std::vector<double> prior_;
};

inline double enum_likelihood(const ProbParams& p, std::span<const int> y) {
  const PathTable table(p, static_cast<int>(y.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < table.paths().size(); ++i) total += table.joint(p, i, y);
  return total;
}

/// Posterior of U(t) given y by direct summation; t is 0-based.
inline Vector enum_posterior_states(const ProbParams& p, std::span<const int> y, int t) {
  const PathTable table(p, static_cast<int>(y.size()));
  Vector post = Vector::Zero(p.states());
  double total = 0.0;
  for (std::size_t i = 0; i < table.paths().size(); ++i) {
    const double j = table.joint(p, i, y);
    post[table.paths()[i][t]] += j;
    total += j;
  }
  if (!(total > 0.0)) throw OracleError("observation has zero probability");
  return post / total;
}

/// Joint posterior of (U(t-1), U(t)) given y by direct summation; t >= 1.
inline Matrix enum_posterior_pairs(const ProbParams& p, std::span<const int> y, int t) {
  const PathTable table(p, static_cast<int>(y.size()));
  Matrix post = Matrix::Zero(p.states(), p.states());
  double total = 0.0;
  for (std::size_t i = 0; i < table.paths().size(); ++i) {
    const double j = table.joint(p, i, y);
    post(table.paths()[i][t - 1], table.paths()[i][t]) += j;
    total += j;
  }
  if (!(total > 0.0)) throw OracleError("observation has zero probability");
  return post / total;
}

/// All c^T observation sequences, in lexicographic order.
inline std::vector<std::vector<int>> all_sequences(int c, int T) {
  if (std::pow(static_cast<double>(c), T) > max_table_size)
    throw OracleError("sequence enumeration would exceed 1e6 sequences");
  std::vector<std::vector<int>> out;
  std::vector<int> y(T, 0);
  while (true) {
    out.push_back(y);
    int pos = T - 1;
    while (pos >= 0 && ++y[pos] == c) y[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;

enum class Stencil { central3, central5 };

struct FdOptions {
  Stencil stencil = Stencil::central3;
  /// Relative step; the step for coordinate j is rel_step * (1 + |x_j|).
  /// Zero picks epsilon^(1/3) for central3 and epsilon^(1/5) for central5.
  double rel_step = 0.0;
};

namespace detail {

inline double default_step(Stencil s) {
  const double eps = std::numeric_limits<double>::epsilon();
  return s == Stencil::central3 ? std::cbrt(eps) : std::pow(eps, 0.2);
}

inline double step_for(const FdOptions& o, double x) {
  const double rel = o.rel_step > 0.0 ? o.rel_step : default_step(o.stencil);
  return rel * (1.0 + std::abs(x));
}

inline double checked(double v) {
  if (!std::isfinite(v)) throw OracleError("function value is not finite");
  return v;
}

inline Vector checked(Vector v) {
  if (!v.allFinite()) throw OracleError("function value is not finite");
  return v;
}

/// Weighted stencil along coordinate j: returns sum_i w_i g(x + o_i h e_j) / h.
template <typename Eval, typename Result>
Result directional(const Eval& g, const Vector& x, int j, double h, Stencil s, Result zero) {
  Vector xp = x;
  auto at = [&](double offset) {
    xp[j] = x[j] + offset * h;
    return checked(g(xp));
  };
  Result r = zero;
  if (s == Stencil::central3) {
    r = (at(1.0) - at(-1.0)) / (2.0 * h);
  } else {
    r = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
  }
  return r;
}

}  // namespace detail

inline Vector fd_gradient(const ScalarFn& f, const Vector& x, const FdOptions& o = {}) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    g[j] = detail::directional(f, x, static_cast<int>(j), detail::step_for(o, x[j]), o.stencil,
                               0.0);
  return g;
}

/// Jacobian of a vector function; column j is d f / d x_j.
inline Matrix fd_jacobian(const VectorFn& f, const Vector& x, const FdOptions& o = {}) {
  const Vector f0 = detail::checked(f(x));
  Matrix J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j)
    J.col(j) = detail::directional(f, x, static_cast<int>(j), detail::step_for(o, x[j]),
                                   o.stencil, Vector(Vector::Zero(f0.size())));
  return J;
}

/// Hessian from a scalar function alone, by nesting the first-derivative
/// stencil in both coordinates (symmetric by construction).
inline Matrix fd_hessian(const ScalarFn& f, const Vector& x, const FdOptions& o = {}) {
  const auto n = x.size();
  FdOptions inner = o;
  if (inner.rel_step <= 0.0) {
    // Second derivatives need a larger step than first derivatives.
    const double eps = std::numeric_limits<double>::epsilon();
    inner.rel_step = o.stencil == Stencil::central3 ? std::pow(eps, 0.25) : std::pow(eps, 1.0 / 6.0);
  }
  Matrix H(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const double ha = detail::step_for(inner, x[a]);
    auto partial_a = [&](const Vector& z) {
      return detail::directional(f, z, static_cast<int>(a), ha, inner.stencil, 0.0);
    };
    for (Eigen::Index b = a; b < n; ++b) {
      const double hb = detail::step_for(inner, x[b]);
      H(a, b) = detail::directional(partial_a, x, static_cast<int>(b), hb, inner.stencil, 0.0);
      H(b, a) = H(a, b);
    }
  }
  return H;
}

/// Hessian as the symmetrized finite-difference Jacobian of an analytic
/// gradient.
inline Matrix fd_hessian_from_gradient(const VectorFn& grad, const Vector& x,
                                       const FdOptions& o = {}) {
  const Matrix J = fd_jacobian(grad, x, o);
  return 0.5 * (J + J.transpose());
}

}  // namespace oakes_hmm::oracle
