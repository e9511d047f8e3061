#pragma once

// Two parametrizations of a categorical hidden Markov model and the maps
// between them.
//
// Probability scale (ProbParams):
//   lambda  k-vector, initial distribution of the latent chain
//   Pi      k x k, row-stochastic; Pi(from, to)
//   Phi     c x k, column-stochastic; Phi(y, u) = P(Y = y | U = u)
//
// Logit scale (LogitParams), packed as theta = (alpha, beta, gamma):
//   alpha   for u = 0..k-1, y = 1..c-1:  log(Phi(y,u) / Phi(0,u))
//   beta    for u = 1..k-1:              log(lambda(u) / lambda(0))
//   gamma   for from = 0..k-1, to != from ascending:
//                                        log(Pi(from,to) / Pi(from,from))
//
// States and categories are 0-based throughout the API.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oakes_hmm/errors.hpp"

namespace oakes_hmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Block { alpha, beta, gamma };

/// Location of one packed logit parameter. For alpha, `state` is u and
/// `target` the category y; for beta, `state` is u; for gamma, `state` is the
/// origin row and `target` the destination.
struct ParamRef {
  Block block;
  int state;
  int target;
};

/// Numbers of states and categories, and the fixed packing of theta.
struct ModelDims {
  int states = 0;
  int categories = 0;

  int num_alpha() const { return (categories - 1) * states; }
  int num_beta() const { return states - 1; }
  int num_gamma() const { return states * (states - 1); }
  /// s = (c-1)k + (k-1) + k(k-1)
  int num_params() const { return num_alpha() + num_beta() + num_gamma(); }

  int beta_offset() const { return num_alpha(); }
  int gamma_offset() const { return num_alpha() + num_beta(); }

  int alpha_index(int u, int y) const { return u * (categories - 1) + (y - 1); }
  int beta_index(int u) const { return beta_offset() + u - 1; }
  int gamma_index(int from, int to) const {
    return gamma_offset() + from * (states - 1) + (to < from ? to : to - 1);
  }

  ParamRef locate(int j) const {
    if (j < 0 || j >= num_params()) {
      throw InputError("parameter index " + std::to_string(j) +
                       " out of range [0, " + std::to_string(num_params()) + ")");
    }
    if (j < num_alpha()) {
      return {Block::alpha, j / (categories - 1), j % (categories - 1) + 1};
    }
    if (j < gamma_offset()) return {Block::beta, j - beta_offset() + 1, 0};
    const int g = j - gamma_offset();
    const int from = g / (states - 1);
    const int r = g % (states - 1);
    return {Block::gamma, from, r < from ? r : r + 1};
  }

  /// Human-readable name of packed parameter j, with 1-based states.
  std::string param_name(int j) const {
    const ParamRef r = locate(j);
    std::ostringstream os;
    switch (r.block) {
      case Block::alpha:
        os << "alpha[y=" << r.target << "|u=" << r.state + 1 << "]";
        break;
      case Block::beta:
        os << "beta[u=" << r.state + 1 << "]";
        break;
      case Block::gamma:
        os << "gamma[" << r.state + 1 << "->" << r.target + 1 << "]";
        break;
    }
    return os.str();
  }

  // Probability-scale vector eta = (vec Phi by column, lambda, Pi by row).
  int num_probs() const { return categories * states + states + states * states; }
  int phi_index(int y, int u) const { return u * categories + y; }
  int lambda_index(int u) const { return categories * states + u; }
  int pi_index(int from, int to) const {
    return categories * states + states + from * states + to;
  }
  std::string prob_name(int i) const {
    std::ostringstream os;
    if (i < categories * states) {
      os << "phi[y=" << i % categories << "|u=" << i / categories + 1 << "]";
    } else if (i < categories * states + states) {
      os << "lambda[u=" << i - categories * states + 1 << "]";
    } else {
      const int r = i - categories * states - states;
      os << "pi[" << r / states + 1 << "->" << r % states + 1 << "]";
    }
    return os.str();
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

namespace detail {

inline bool sums_to_one(const Eigen::Ref<const Vector>& v) {
  return std::abs(v.sum() - 1.0) <= 1e-12;
}

inline bool in_unit_interval(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite() && (m.array() >= 0.0).all() && (m.array() <= 1.0).all();
}

/// Softmax of `logits` with the leading entry pinned at zero handled by the
/// caller; subtracts the maximum before exponentiating.
inline Vector softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

}  // namespace detail

/// Model parameters on the probability scale.
class ProbParams {
 public:
  ProbParams(Vector lambda, Matrix Pi, Matrix Phi)
      : lambda_(std::move(lambda)), Pi_(std::move(Pi)), Phi_(std::move(Phi)) {
    validate();
  }

  const Vector& lambda() const { return lambda_; }
  const Matrix& Pi() const { return Pi_; }
  const Matrix& Phi() const { return Phi_; }

  int states() const { return static_cast<int>(lambda_.size()); }
  int categories() const { return static_cast<int>(Phi_.rows()); }
  ModelDims dims() const { return {states(), categories()}; }

  /// True when every probability is strictly positive.
  bool interior() const {
    return (lambda_.array() > 0.0).all() && (Pi_.array() > 0.0).all() &&
           (Phi_.array() > 0.0).all();
  }

  /// eta = (vec Phi by column, lambda, Pi by row), see ModelDims::num_probs.
  Vector pack() const {
    const ModelDims d = dims();
    Vector eta(d.num_probs());
    for (int u = 0; u < states(); ++u)
      for (int y = 0; y < categories(); ++y) eta[d.phi_index(y, u)] = Phi_(y, u);
    for (int u = 0; u < states(); ++u) eta[d.lambda_index(u)] = lambda_[u];
    for (int a = 0; a < states(); ++a)
      for (int b = 0; b < states(); ++b) eta[d.pi_index(a, b)] = Pi_(a, b);
    return eta;
  }

  /// The same model with latent states relabelled: new state i is old
  /// state perm[i].
  ProbParams permuted(const std::vector<int>& perm) const {
    const int k = states();
    if (static_cast<int>(perm.size()) != k) throw InputError("permutation size mismatch");
    Vector lam(k);
    Matrix P(k, k), F(categories(), k);
    for (int i = 0; i < k; ++i) {
      lam[i] = lambda_[perm[i]];
      F.col(i) = Phi_.col(perm[i]);
      for (int j = 0; j < k; ++j) P(i, j) = Pi_(perm[i], perm[j]);
    }
    return {lam, P, F};
  }

 private:
  void validate() const {
    const auto k = lambda_.size();
    if (k < 1) throw InputError("ProbParams: need at least one latent state");
    if (Phi_.rows() < 2) throw InputError("ProbParams: need at least two categories");
    if (Pi_.rows() != k || Pi_.cols() != k)
      throw InputError("ProbParams: Pi must be k x k");
    if (Phi_.cols() != k) throw InputError("ProbParams: Phi must be c x k");
    if (!detail::in_unit_interval(lambda_) || !detail::in_unit_interval(Pi_) ||
        !detail::in_unit_interval(Phi_))
      throw InputError("ProbParams: probabilities must lie in [0, 1]");
    if (!detail::sums_to_one(lambda_))
      throw InputError("ProbParams: lambda does not sum to 1");
    for (Eigen::Index r = 0; r < k; ++r)
      if (!detail::sums_to_one(Pi_.row(r).transpose()))
        throw InputError("ProbParams: row " + std::to_string(r) + " of Pi does not sum to 1");
    for (Eigen::Index u = 0; u < k; ++u)
      if (!detail::sums_to_one(Phi_.col(u)))
        throw InputError("ProbParams: column " + std::to_string(u) + " of Phi does not sum to 1");
  }

  Vector lambda_;
  Matrix Pi_;
  Matrix Phi_;
};

/// Unconstrained logit parameters theta in R^s, packed in the fixed order.
class LogitParams {
 public:
  LogitParams(ModelDims dims, Vector theta) : dims_(dims), theta_(std::move(theta)) {
    if (dims_.states < 1 || dims_.categories < 2)
      throw InputError("LogitParams: need k >= 1 and c >= 2");
    if (theta_.size() != dims_.num_params())
      throw InputError("LogitParams: theta has length " + std::to_string(theta_.size()) +
                       ", expected " + std::to_string(dims_.num_params()));
    if (!theta_.allFinite()) throw InputError("LogitParams: theta must be finite");
  }

  const ModelDims& dims() const { return dims_; }
  const Vector& theta() const { return theta_; }
  int size() const { return static_cast<int>(theta_.size()); }

  auto alpha(int u) const {
    return theta_.segment(dims_.alpha_index(u, 1), dims_.categories - 1);
  }
  auto beta() const { return theta_.segment(dims_.beta_offset(), dims_.num_beta()); }
  auto gamma(int from) const {
    return theta_.segment(dims_.gamma_offset() + from * (dims_.states - 1), dims_.states - 1);
  }

 private:
  ModelDims dims_;
  Vector theta_;
};

/// Constant contrast matrices linking log-probabilities and logits.
struct ContrastMatrices {
  Matrix A;                     // (c-1) x c
  Matrix A_tilde;               // c x (c-1)
  Matrix B;                     // (k-1) x k
  Matrix B_tilde;               // k x (k-1)
  std::vector<Matrix> C;        // (k-1) x k, one per origin state
  std::vector<Matrix> C_tilde;  // k x (k-1), one per origin state

  static Matrix baseline(int n) {
    Matrix M = Matrix::Zero(n - 1, n);
    M.col(0).setConstant(-1.0);
    M.rightCols(n - 1).setIdentity();
    return M;
  }
  static Matrix baseline_inverse(int n) {
    Matrix M = Matrix::Zero(n, n - 1);
    M.bottomRows(n - 1).setIdentity();
    return M;
  }
  /// Logits against position `ref`: rows skip `ref`, the -1 column sits at `ref`.
  static Matrix reference(int n, int ref) {
    Matrix M = Matrix::Zero(n - 1, n);
    for (int r = 0; r < n - 1; ++r) {
      M(r, r < ref ? r : r + 1) = 1.0;
      M(r, ref) = -1.0;
    }
    return M;
  }
  static Matrix reference_inverse(int n, int ref) {
    Matrix M = Matrix::Zero(n, n - 1);
    for (int r = 0; r < n - 1; ++r) M(r < ref ? r : r + 1, r) = 1.0;
    return M;
  }

  static ContrastMatrices make(ModelDims d) {
    ContrastMatrices m;
    m.A = baseline(d.categories);
    m.A_tilde = baseline_inverse(d.categories);
    m.B = baseline(d.states);
    m.B_tilde = baseline_inverse(d.states);
    for (int from = 0; from < d.states; ++from) {
      m.C.push_back(reference(d.states, from));
      m.C_tilde.push_back(reference_inverse(d.states, from));
    }
    return m;
  }
};

/// Omega_v = diag(v) - v v'.
inline Matrix omega(const Eigen::Ref<const Vector>& v) {
  Matrix O = -v * v.transpose();
  O.diagonal() += v;
  return O;
}

inline LogitParams probs_to_logits(const ProbParams& p) {
  const ModelDims d = p.dims();
  auto require_positive = [](const auto& m, const char* name) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (!(m(i, j) > 0.0)) {
          std::ostringstream os;
          os << "probability " << name << "(" << i << "," << j << ") = " << m(i, j)
             << " is on the boundary; logits require strictly positive probabilities";
          throw BoundaryError(os.str());
        }
  };
  require_positive(p.Phi(), "Phi");
  require_positive(p.lambda(), "lambda");
  require_positive(p.Pi(), "Pi");

  const ContrastMatrices cm = ContrastMatrices::make(d);
  Vector theta(d.num_params());
  for (int u = 0; u < d.states; ++u)
    theta.segment(d.alpha_index(u, 1), d.categories - 1) =
        cm.A * p.Phi().col(u).array().log().matrix();
  theta.segment(d.beta_offset(), d.num_beta()) = cm.B * p.lambda().array().log().matrix();
  for (int from = 0; from < d.states; ++from)
    theta.segment(d.gamma_offset() + from * (d.states - 1), d.states - 1) =
        cm.C[from] * p.Pi().row(from).transpose().array().log().matrix();
  return {d, theta};
}

inline ProbParams logits_to_probs(const LogitParams& t) {
  const ModelDims d = t.dims();
  const ContrastMatrices cm = ContrastMatrices::make(d);
  Matrix Phi(d.categories, d.states);
  for (int u = 0; u < d.states; ++u) Phi.col(u) = detail::softmax(cm.A_tilde * t.alpha(u));
  Vector lambda = detail::softmax(cm.B_tilde * t.beta());
  Matrix Pi(d.states, d.states);
  for (int from = 0; from < d.states; ++from)
    Pi.row(from) = detail::softmax(cm.C_tilde[from] * t.gamma(from)).transpose();
  return {lambda, Pi, Phi};
}

/// d eta / d theta' (num_probs x s), block diagonal with blocks
/// Omega_{phi_u} A~, Omega_lambda B~, Omega_{pi_from} C~_from. Only needs the
/// probabilities, so boundary points are allowed.
inline Matrix jacobian_probs_wrt_logits(const ProbParams& p) {
  const ModelDims d = p.dims();
  const ContrastMatrices cm = ContrastMatrices::make(d);
  Matrix G = Matrix::Zero(d.num_probs(), d.num_params());
  for (int u = 0; u < d.states; ++u)
    G.block(d.phi_index(0, u), d.alpha_index(u, 1), d.categories, d.categories - 1) =
        omega(p.Phi().col(u)) * cm.A_tilde;
  G.block(d.lambda_index(0), d.beta_offset(), d.states, d.num_beta()) =
      omega(p.lambda()) * cm.B_tilde;
  for (int from = 0; from < d.states; ++from)
    G.block(d.pi_index(from, 0), d.gamma_offset() + from * (d.states - 1), d.states,
            d.states - 1) = omega(p.Pi().row(from).transpose()) * cm.C_tilde[from];
  return G;
}

inline Matrix jacobian_probs_wrt_logits(const LogitParams& t) {
  return jacobian_probs_wrt_logits(logits_to_probs(t));
}

}  // namespace oakes_hmm
