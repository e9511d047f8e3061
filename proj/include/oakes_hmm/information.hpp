#pragma once

// Observed information of the categorical hidden Markov model through the
// Oakes identity
//
//   J(theta) = -{ d2Q(theta|theta-bar)/dtheta dtheta'
//                 + d2Q(theta|theta-bar)/dtheta-bar dtheta' } at theta-bar = theta.
//
// The first term is block diagonal and closed form. The second needs the
// derivatives of the E-step expected frequencies with respect to theta-bar,
// obtained by differentiating the scaled forward-backward recursions once.
//
// All routines work from probability-scale parameters, so an estimate on the
// boundary (some probability exactly zero) is handled: the logit directions
// that move it have zero derivative and show up as a rank deficiency.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oakes_hmm/dataset.hpp"
#include "oakes_hmm/em.hpp"
#include "oakes_hmm/param_space.hpp"
#include "oakes_hmm/recursions.hpp"

namespace oakes_hmm {

/// d lambda, d Pi and d Phi with respect to a single logit theta_j.
struct ElementaryDerivatives {
  Vector lambda;  // k
  Matrix Pi;      // k x k
  Matrix Phi;     // c x k

  /// m_y^(j) = (d phi_{y|u} / d theta_j)_u
  auto emission(int y) const { return Phi.row(y).transpose(); }
};

inline ElementaryDerivatives elementary_derivatives(const ProbParams& p, int j) {
  const ModelDims d = p.dims();
  const ParamRef r = d.locate(j);
  ElementaryDerivatives e{Vector::Zero(d.states), Matrix::Zero(d.states, d.states),
                          Matrix::Zero(d.categories, d.states)};
  // Column `target` of Omega_v: v .* (e_target - v_target).
  auto omega_column = [](const Vector& v, int target) {
    Vector out = -v * v[target];
    out[target] += v[target];
    return out;
  };
  switch (r.block) {
    case Block::alpha:
      e.Phi.col(r.state) = omega_column(p.Phi().col(r.state), r.target);
      break;
    case Block::beta:
      e.lambda = omega_column(p.lambda(), r.state);
      break;
    case Block::gamma:
      e.Pi.row(r.state) = omega_column(p.Pi().row(r.state).transpose(), r.target).transpose();
      break;
  }
  return e;
}

inline ElementaryDerivatives elementary_derivatives(const LogitParams& t, int j) {
  return elementary_derivatives(logits_to_probs(t), j);
}

/// Derivatives of the forward and backward vectors of one configuration with
/// respect to theta_j, carried on the scale of the forward-backward pass:
///   dq(t)/dtheta_j    = dalpha.col(t) * prod_{s <= t} scale[s]
///   dqbar(t)/dtheta_j = dbeta.col(t)  * prod_{s >  t} scale[s]
/// so that d log f_Y / dtheta_j = dalpha.col(T-1).sum().
struct DerivativePass {
  Matrix dalpha;  // k x T
  Matrix dbeta;   // k x T
  double dlog_prob = 0.0;
};

inline Matrix derivative_forward(const ProbParams& p, const ElementaryDerivatives& e,
                                 const ForwardBackward& fb) {
  detail::require_nondegenerate(fb);
  const int T = fb.length();
  Matrix da(p.states(), T);
  const auto& y = fb.y;
  da.col(0) = (e.emission(y[0]).cwiseProduct(p.lambda()) +
               detail::emission(p, y[0]).cwiseProduct(e.lambda)) /
              fb.scale[0];
  for (int t = 1; t < T; ++t) {
    const Vector prev = fb.alpha.col(t - 1);
    da.col(t) = (e.emission(y[t]).cwiseProduct(p.Pi().transpose() * prev) +
                 detail::emission(p, y[t]).cwiseProduct(e.Pi.transpose() * prev +
                                                        p.Pi().transpose() * da.col(t - 1))) /
                fb.scale[t];
  }
  return da;
}

inline Matrix derivative_backward(const ProbParams& p, const ElementaryDerivatives& e,
                                  const ForwardBackward& fb) {
  detail::require_nondegenerate(fb);
  const int T = fb.length();
  Matrix db = Matrix::Zero(p.states(), T);
  const auto& y = fb.y;
  for (int t = T - 2; t >= 0; --t) {
    const Vector mb = detail::emission(p, y[t + 1]).cwiseProduct(fb.beta.col(t + 1));
    db.col(t) = (e.Pi * mb +
                 p.Pi() * (e.emission(y[t + 1]).cwiseProduct(fb.beta.col(t + 1)) +
                           detail::emission(p, y[t + 1]).cwiseProduct(db.col(t + 1)))) /
                fb.scale[t + 1];
  }
  return db;
}

inline DerivativePass derivative_pass(const ProbParams& p, const ElementaryDerivatives& e,
                                      const ForwardBackward& fb) {
  DerivativePass d{derivative_forward(p, e, fb), derivative_backward(p, e, fb), 0.0};
  d.dlog_prob = d.dalpha.col(fb.length() - 1).sum();
  return d;
}

/// d f(t)(y) / dtheta_j.
inline Vector derivative_posterior_states(const ForwardBackward& fb, const DerivativePass& d,
                                          int t) {
  const Vector f = posterior_states(fb, t);
  return d.dalpha.col(t).cwiseProduct(fb.beta.col(t)) +
         fb.alpha.col(t).cwiseProduct(d.dbeta.col(t)) - f * d.dlog_prob;
}

/// d F(t)(y) / dtheta_j, t in [1, T).
inline Matrix derivative_posterior_pairs(const ForwardBackward& fb, const ProbParams& p,
                                         const ElementaryDerivatives& e, const DerivativePass& d,
                                         int t) {
  const Matrix F = posterior_pairs(fb, p, t);
  const int y = fb.y[t];
  const Vector m = detail::emission(p, y);
  const Vector right = m.cwiseProduct(fb.beta.col(t));
  const Vector dright = e.emission(y).cwiseProduct(fb.beta.col(t)) + m.cwiseProduct(d.dbeta.col(t));
  const Matrix dF = d.dalpha.col(t - 1).asDiagonal() * p.Pi() * right.asDiagonal() +
                    fb.alpha.col(t - 1).asDiagonal() * e.Pi * right.asDiagonal() +
                    fb.alpha.col(t - 1).asDiagonal() * p.Pi() * dright.asDiagonal();
  return dF / fb.scale[t] - F * d.dlog_prob;
}

/// Derivatives of the E-step frequencies with respect to theta-bar. Row j
/// holds the derivative with respect to theta-bar_j.
struct FrequencyDerivatives {
  Matrix a_hat;    // s x (k*c), column u*c + y
  Matrix b_hat1;   // s x k
  Matrix b_plus;   // s x k
  Matrix c_hat;    // s x (k*k), column from*k + to
  Matrix b_total;  // s x k
};

inline FrequencyDerivatives expected_frequency_derivatives(const ProbParams& p,
                                                           const Dataset& d) {
  const ModelDims dims = p.dims();
  const int s = dims.num_params();
  const int k = dims.states;
  const int c = dims.categories;
  if (d.categories() > c) throw InputError("dataset has more categories than the model");
  FrequencyDerivatives out{Matrix::Zero(s, k * c), Matrix::Zero(s, k), Matrix::Zero(s, k),
                           Matrix::Zero(s, k * k), Matrix::Zero(s, k)};
  std::vector<ElementaryDerivatives> elem;
  elem.reserve(s);
  for (int j = 0; j < s; ++j) elem.push_back(elementary_derivatives(p, j));

  for (std::size_t i = 0; i < d.num_configs(); ++i) {
    const ForwardBackward fb = forward_backward(p, d.configs()[i]);
    detail::require_nondegenerate(fb);
    const auto w = static_cast<double>(d.counts()[i]);
    const int T = fb.length();
    for (int j = 0; j < s; ++j) {
      const DerivativePass dp = derivative_pass(p, elem[j], fb);
      for (int t = 0; t < T; ++t) {
        const Vector df = w * derivative_posterior_states(fb, dp, t);
        for (int u = 0; u < k; ++u) out.a_hat(j, u * c + fb.y[t]) += df[u];
        out.b_total.row(j) += df.transpose();
        if (t == 0) out.b_hat1.row(j) += df.transpose();
        if (t < T - 1) out.b_plus.row(j) += df.transpose();
        if (t > 0) {
          const Matrix dF = w * derivative_posterior_pairs(fb, p, elem[j], dp, t);
          for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) out.c_hat(j, a * k + b) += dF(a, b);
        }
      }
    }
  }
  return out;
}

/// Gradient of Q(theta | theta-bar) in theta for frequencies `ef` computed
/// at theta-bar; packed in theta order.
inline Vector q_gradient(const ProbParams& p, const ExpectedFrequencies& ef) {
  const ModelDims d = p.dims();
  Vector g(d.num_params());
  for (int u = 0; u < d.states; ++u)
    for (int y = 1; y < d.categories; ++y)
      g[d.alpha_index(u, y)] = ef.a_hat(u, y) - ef.b_total[u] * p.Phi()(y, u);
  for (int u = 1; u < d.states; ++u) g[d.beta_index(u)] = ef.b_hat1[u] - ef.n * p.lambda()[u];
  for (int from = 0; from < d.states; ++from)
    for (int to = 0; to < d.states; ++to)
      if (to != from)
        g[d.gamma_index(from, to)] = ef.c_hat(from, to) - ef.b_plus[from] * p.Pi()(from, to);
  return g;
}

/// Score of the log-likelihood, s(theta) = dQ(theta|theta-bar)/dtheta at
/// theta-bar = theta.
inline Vector score_at(const Dataset& d, const ProbParams& p) {
  return q_gradient(p, e_step(p, d));
}

inline Vector score_at(const Dataset& d, const LogitParams& t) {
  return score_at(d, logits_to_probs(t));
}

/// d2Q/dtheta dtheta' (block diagonal, negative semidefinite).
inline Matrix complete_data_hessian(const ProbParams& p, const ExpectedFrequencies& ef) {
  const ModelDims d = p.dims();
  const ContrastMatrices cm = ContrastMatrices::make(d);
  Matrix H = Matrix::Zero(d.num_params(), d.num_params());
  const int ca = d.categories - 1;
  for (int u = 0; u < d.states; ++u) {
    const int o = d.alpha_index(u, 1);
    H.block(o, o, ca, ca) =
        -ef.b_total[u] * cm.A_tilde.transpose() * omega(p.Phi().col(u)) * cm.A_tilde;
  }
  const int ka = d.states - 1;
  H.block(d.beta_offset(), d.beta_offset(), ka, ka) =
      -ef.n * cm.B_tilde.transpose() * omega(p.lambda()) * cm.B_tilde;
  for (int from = 0; from < d.states; ++from) {
    const int o = d.gamma_offset() + from * ka;
    H.block(o, o, ka, ka) = -ef.b_plus[from] * cm.C_tilde[from].transpose() *
                            omega(p.Pi().row(from).transpose()) * cm.C_tilde[from];
  }
  return H;
}

inline Matrix complete_data_hessian(const LogitParams& t, const ExpectedFrequencies& ef) {
  return complete_data_hessian(logits_to_probs(t), ef);
}

namespace detail {

/// Assembles d2Q/dtheta-bar dtheta' from the frequency derivatives.
inline Matrix assemble_cross_term(const ProbParams& p, const FrequencyDerivatives& fd) {
  const ModelDims d = p.dims();
  const int s = d.num_params();
  const int k = d.states;
  const int c = d.categories;
  Matrix X(s, s);
  for (int u = 0; u < k; ++u)
    for (int y = 1; y < c; ++y)
      X.col(d.alpha_index(u, y)) = fd.a_hat.col(u * c + y) - fd.b_total.col(u) * p.Phi()(y, u);
  for (int u = 1; u < k; ++u) X.col(d.beta_index(u)) = fd.b_hat1.col(u);
  for (int from = 0; from < k; ++from)
    for (int to = 0; to < k; ++to)
      if (to != from)
        X.col(d.gamma_index(from, to)) =
            fd.c_hat.col(from * k + to) - fd.b_plus.col(from) * p.Pi()(from, to);
  return X;
}

inline void require_interior(const ProbParams& p) {
  if (!p.interior())
    throw BoundaryError("parameter estimate lies on the boundary (a probability is zero)");
}

}  // namespace detail

/// d2Q(theta|theta-bar)/dtheta-bar dtheta' at theta-bar = theta; row j is the
/// derivative with respect to theta-bar_j.
inline Matrix cross_term(const Dataset& d, const ProbParams& p) {
  detail::require_interior(p);
  return detail::assemble_cross_term(p, expected_frequency_derivatives(p, d));
}

inline Matrix cross_term(const Dataset& d, const LogitParams& t) {
  return cross_term(d, logits_to_probs(t));
}

/// A right singular vector of J whose singular value fell below the rank
/// threshold.
struct NullDirection {
  Vector direction;  // unit vector in theta coordinates
  double singular_value = 0.0;
  int dominant_param = 0;
  std::string dominant_name;
};

struct InformationResult {
  ModelDims dims;
  Matrix J;               // observed information, symmetrized
  Matrix complete_block;  // -d2Q/dtheta dtheta'
  Matrix cross;           // -d2Q/dtheta-bar dtheta'
  Vector singular_values;
  double rank_threshold = 0.0;
  int rank = 0;
  bool identifiable = false;
  double asymmetry = 0.0;  // max |J - J'| / max |J| before symmetrization
  double min_eigenvalue = 0.0;
  std::optional<Matrix> cov_theta;
  std::optional<Vector> se_theta;
  std::optional<Matrix> cov_eta;
  std::optional<Vector> se_eta;  // ordered as ModelDims::num_probs
  std::vector<NullDirection> null_directions;
  std::vector<std::string> warnings;
};

struct InformationOptions {
  /// Relative SVD cutoff multiplier: singular values below
  /// s * sigma_max * epsilon * rank_factor count as zero.
  double rank_factor = 64.0;
  double asymmetry_tol = 1e-6;
  double psd_tol = 1e-8;
};

inline InformationResult observed_information(const Dataset& d, const ProbParams& p,
                                              const InformationOptions& opts = {}) {
  const ModelDims dims = p.dims();
  const int s = dims.num_params();
  InformationResult r;
  r.dims = dims;

  const ExpectedFrequencies ef = e_step(p, d);
  r.complete_block = -complete_data_hessian(p, ef);
  r.cross = -detail::assemble_cross_term(p, expected_frequency_derivatives(p, d));
  const Matrix raw = r.complete_block + r.cross;
  const double scale = std::max(raw.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  r.asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale;
  if (r.asymmetry > opts.asymmetry_tol)
    r.warnings.push_back("observed information is asymmetric (relative " +
                         std::to_string(r.asymmetry) +
                         "): derivative error or estimate not converged");
  r.J = 0.5 * (raw + raw.transpose());

  Eigen::JacobiSVD<Matrix> svd(r.J, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r.singular_values = svd.singularValues();
  const double sigma_max = s > 0 ? r.singular_values[0] : 0.0;
  r.rank_threshold = s * sigma_max * std::numeric_limits<double>::epsilon() * opts.rank_factor;
  r.rank = 0;
  for (int i = 0; i < s; ++i)
    if (r.singular_values[i] > r.rank_threshold) ++r.rank;
  r.identifiable = r.rank == s;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(r.J, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = s > 0 ? eig.eigenvalues().minCoeff() : 0.0;
  if (s > 0 && r.min_eigenvalue < -opts.psd_tol * eig.eigenvalues().cwiseAbs().maxCoeff())
    r.warnings.emplace_back(
        "observed information is not positive semidefinite: the estimate is not a maximum");

  if (!r.identifiable) {
    for (int i = r.rank; i < s; ++i) {
      NullDirection nd;
      nd.direction = svd.matrixV().col(i);
      nd.singular_value = r.singular_values[i];
      nd.direction.cwiseAbs().maxCoeff(&nd.dominant_param);
      if (nd.direction[nd.dominant_param] < 0.0) nd.direction = -nd.direction;
      nd.dominant_name = dims.param_name(nd.dominant_param);
      r.null_directions.push_back(std::move(nd));
    }
    r.warnings.push_back("observed information is singular (rank " + std::to_string(r.rank) +
                         " < " + std::to_string(s) + "): model not locally identifiable");
    return r;
  }

  const Vector inv_sigma = r.singular_values.cwiseInverse();
  Matrix cov = svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose();
  cov = 0.5 * (cov + cov.transpose());
  r.se_theta = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  const Matrix G = jacobian_probs_wrt_logits(p);
  Matrix cov_eta = G * cov * G.transpose();
  r.se_eta = cov_eta.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.cov_theta = std::move(cov);
  r.cov_eta = std::move(cov_eta);
  return r;
}

inline InformationResult observed_information(const Dataset& d, const LogitParams& t,
                                              const InformationOptions& opts = {}) {
  return observed_information(d, logits_to_probs(t), opts);
}

}  // namespace oakes_hmm
