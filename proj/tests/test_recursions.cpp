#include <cmath>

#include <gtest/gtest.h>

#include "models.hpp"
#include "oakes_hmm/oracle.hpp"
#include "oakes_hmm/recursions.hpp"

using namespace oakes_hmm;
using oakes_hmm::testing::random_params;
using oakes_hmm::testing::random_sequence;

TEST(Forward, SymmetricMixtureSingleObservation) {
  Vector lam = Vector::Constant(2, 0.5);
  Matrix Phi(2, 2);
  Phi << 0.9, 0.1, 0.1, 0.9;
  const ProbParams p(lam, Matrix::Constant(2, 2, 0.5), Phi);
  const std::vector<int> y{0};
  EXPECT_NEAR(std::exp(forward(p, y).log_prob), 0.5, 1e-15);
}

TEST(Forward, SingleStepMarginalization) {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = random_params(3, 4, rng);
    for (int y = 0; y < 4; ++y) {
      const std::vector<int> seq{y};
      const double expected = p.lambda().dot(p.Phi().row(y).transpose());
      EXPECT_NEAR(std::exp(forward(p, seq).log_prob), expected, 1e-15);
    }
  }
}

TEST(Forward, MatchesPathEnumeration) {
  Rng rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = random_params(2, 2, rng);
    for (const auto& y : oracle::all_sequences(2, 4)) {
      const double f = std::exp(forward(p, y).log_prob);
      EXPECT_NEAR(f, oracle::enum_likelihood(p, y), 1e-12 * oracle::enum_likelihood(p, y));
    }
  }
}

TEST(Forward, RejectsOutOfRangeCategory) {
  Rng rng(3);
  const auto p = random_params(2, 3, rng);
  const std::vector<int> y{0, 3, 1};
  EXPECT_THROW(forward(p, y), InputError);
}

TEST(Forward, ScaledMatchesUnscaledProduct) {
  Rng rng(4);
  for (int T = 1; T <= 20; ++T) {
    const auto p = random_params(3, 3, rng);
    const auto y = random_sequence(3, T, rng);
    // Plain recursion without rescaling.
    Vector q = p.Phi().row(y[0]).transpose().cwiseProduct(p.lambda());
    for (int t = 1; t < T; ++t)
      q = p.Phi().row(y[t]).transpose().cwiseProduct(p.Pi().transpose() * q);
    const double plain = std::log(q.sum());
    EXPECT_NEAR(forward(p, y).log_prob, plain, 1e-12 * std::abs(plain));
  }
}

TEST(Forward, LongSequencesDoNotUnderflow) {
  Rng rng(5);
  const auto p = random_params(3, 4, rng);
  const auto y = random_sequence(4, 10000, rng);
  const auto f = forward(p, y);
  EXPECT_TRUE(std::isfinite(f.log_prob));
  EXPECT_LT(f.log_prob, -1000.0);
  // Log-likelihood is additive in chunks only through the recursion, so
  // compare against a compensated log-space recursion instead.
  Vector logq = (p.Phi().row(y[0]).transpose().cwiseProduct(p.lambda())).array().log().matrix();
  for (std::size_t t = 1; t < y.size(); ++t) {
    Vector next(3);
    for (int u = 0; u < 3; ++u) {
      const double mx = logq.maxCoeff();
      double acc = 0.0;
      for (int v = 0; v < 3; ++v) acc += std::exp(logq[v] - mx) * p.Pi()(v, u);
      next[u] = mx + std::log(acc) + std::log(p.Phi()(y[t], u));
    }
    logq = next;
  }
  const double mx = logq.maxCoeff();
  const double expected = mx + std::log((logq.array() - mx).exp().sum());
  EXPECT_NEAR(f.log_prob, expected, 1e-9 * std::abs(expected));
}

TEST(Forward, TotalProbabilityOverAllSequences) {
  Rng rng(6);
  const auto p = random_params(3, 2, rng);
  double total = 0.0;
  for (const auto& y : oracle::all_sequences(2, 5)) total += std::exp(forward(p, y).log_prob);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Backward, BaseCaseAndTotalProbability) {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const auto p = random_params(2 + rep % 3, 3, rng);
    const auto y = random_sequence(3, 6, rng);
    const auto fb = forward_backward(p, y);
    EXPECT_EQ(fb.beta.col(5), Vector::Ones(p.states()));
    const double f = std::exp(fb.log_prob);
    for (int t = 0; t < 6; ++t)
      EXPECT_NEAR(unscaled_forward(fb, t).dot(unscaled_backward(fb, t)), f, 1e-12 * f);
  }
}

TEST(Backward, MatchesFuturePathEnumeration) {
  Rng rng(8);
  const auto p = random_params(2, 3, rng);
  const std::vector<int> y{2, 0, 1};
  const auto fb = forward_backward(p, y);
  const Vector qbar1 = unscaled_backward(fb, 0);
  for (int u = 0; u < 2; ++u) {
    double expected = 0.0;
    for (int u2 = 0; u2 < 2; ++u2)
      for (int u3 = 0; u3 < 2; ++u3)
        expected += p.Pi()(u, u2) * p.Phi()(y[1], u2) * p.Pi()(u2, u3) * p.Phi()(y[2], u3);
    EXPECT_NEAR(qbar1[u], expected, 1e-12 * expected);
  }
}

TEST(Posteriors, SingleObservationBayesRule) {
  Rng rng(9);
  const auto p = random_params(3, 3, rng);
  const std::vector<int> y{1};
  const auto fb = forward_backward(p, y);
  Vector expected = p.lambda().cwiseProduct(p.Phi().row(1).transpose());
  expected /= expected.sum();
  EXPECT_LT((posterior_states(fb, 0) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Posteriors, NormalizationAndMarginalizationProperty) {
  Rng rng(10);
  for (int rep = 0; rep < 150; ++rep) {
    const int k = 1 + rep % 4;
    const int c = 2 + rep % 3;
    const int T = 1 + rep % 7;
    const auto p = random_params(k, c, rng);
    const auto y = random_sequence(c, T, rng);
    const auto fb = forward_backward(p, y);
    for (int t = 0; t < T; ++t) {
      const Vector f = posterior_states(fb, t);
      ASSERT_NEAR(f.sum(), 1.0, 1e-10);
      ASSERT_GE(f.minCoeff(), 0.0);
      if (t == 0) continue;
      const Matrix F = posterior_pairs(fb, p, t);
      ASSERT_NEAR(F.sum(), 1.0, 1e-10);
      ASSERT_LT((F.rowwise().sum() - posterior_states(fb, t - 1)).cwiseAbs().maxCoeff(), 1e-12);
      ASSERT_LT((F.colwise().sum().transpose() - f).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Posteriors, MatchEnumeration) {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const auto p = random_params(2, 2, rng);
    for (const auto& y : oracle::all_sequences(2, 4)) {
      const auto fb = forward_backward(p, y);
      for (int t = 0; t < 4; ++t) {
        const Vector e = oracle::enum_posterior_states(p, y, t);
        const Vector f = posterior_states(fb, t);
        for (int u = 0; u < 2; ++u) EXPECT_NEAR(f[u], e[u], 1e-10 * e[u]);
        if (t == 0) continue;
        const Matrix E = oracle::enum_posterior_pairs(p, y, t);
        const Matrix F = posterior_pairs(fb, p, t);
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) EXPECT_NEAR(F(a, b), E(a, b), 1e-10 * E(a, b));
      }
    }
  }
}

TEST(Posteriors, PairsFactorizeWhenTransitionRowsAreIdentical) {
  Rng rng(12);
  const ProbParams base = random_params(3, 3, rng);
  Matrix Pi(3, 3);
  for (int r = 0; r < 3; ++r) Pi.row(r) = base.lambda().transpose();
  const ProbParams p(base.lambda(), Pi, base.Phi());
  const std::vector<int> y{0, 2, 1, 1};
  const auto fb = forward_backward(p, y);
  for (int t = 1; t < 4; ++t) {
    const Matrix F = posterior_pairs(fb, p, t);
    const Matrix outer = posterior_states(fb, t - 1) * posterior_states(fb, t).transpose();
    EXPECT_LT((F - outer).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Posteriors, DegenerateConfigurationRaises) {
  Vector lam(2);
  lam << 1.0, 0.0;
  Matrix Phi(2, 2);
  Phi << 1.0, 0.5, 0.0, 0.5;
  const ProbParams p(lam, Matrix::Identity(2, 2), Phi);
  const std::vector<int> y{1, 0};
  const auto fb = forward_backward(p, y);
  EXPECT_TRUE(fb.degenerate());
  EXPECT_THROW(posterior_states(fb, 0), DegenerateConfigError);
  EXPECT_THROW(posterior_pairs(fb, p, 1), DegenerateConfigError);
}
