#include <cmath>

#include <gtest/gtest.h>

#include "models.hpp"
#include "oakes_hmm/bootstrap.hpp"

using namespace oakes_hmm;
using oakes_hmm::testing::reference_k2;

TEST(Simulate, MarginalsMatchModel) {
  const auto p = reference_k2();
  const Dataset d = simulate(p, 100000, 2, 11);
  EXPECT_EQ(d.units(), 100000);
  // P(Y_1 = y) = sum_u lambda_u phi_{y|u}; check against the first-occasion frequencies.
  const Vector expected = p.Phi() * p.lambda();
  Vector freq = Vector::Zero(3);
  for (std::size_t i = 0; i < d.num_configs(); ++i)
    freq[d.configs()[i][0]] += static_cast<double>(d.counts()[i]);
  freq /= 100000.0;
  for (int y = 0; y < 3; ++y) {
    const double sd = std::sqrt(expected[y] * (1 - expected[y]) / 100000.0);
    EXPECT_NEAR(freq[y], expected[y], 4 * sd);
  }
}

TEST(Simulate, DeterministicInSeed) {
  const auto p = reference_k2();
  EXPECT_EQ(simulate(p, 50, 4, 3), simulate(p, 50, 4, 3));
  EXPECT_NE(simulate(p, 50, 4, 3), simulate(p, 50, 4, 4));
}

TEST(Bootstrap, ObservedStatesGiveBinomialSe) {
  // Phi = I and Pi = I: states are observed and constant, so lambda-hat is a
  // sample proportion.
  Vector lam(2);
  lam << 0.3, 0.7;
  const ProbParams p(lam, Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const int n = 400;
  const auto res = bootstrap_se(p, n, 3, 400, 5);
  EXPECT_EQ(res.failures, 0);
  EXPECT_EQ(res.boundary, 400);
  const double expected = std::sqrt(0.3 * 0.7 / n);
  EXPECT_NEAR(res.se_eta[p.dims().lambda_index(0)], expected, 0.12 * expected);
  EXPECT_EQ(res.se_eta[p.dims().phi_index(0, 0)], 0.0);
}

TEST(Bootstrap, DeterministicInSeed) {
  const auto p = reference_k2();
  FitOptions o;
  o.n_starts = 1;
  o.max_iter = 200;
  const auto a = bootstrap_se(p, 100, 4, 10, 9, o);
  const auto b = bootstrap_se(p, 100, 4, 10, 9, o);
  EXPECT_EQ(a.se_eta, b.se_eta);
  EXPECT_EQ(a.se_theta, b.se_theta);
  const auto c = bootstrap_se(p, 100, 4, 10, 10, o);
  EXPECT_NE(a.se_eta, c.se_eta);
}

TEST(Bootstrap, RejectsTooFewReplicates) {
  EXPECT_THROW(bootstrap_se(reference_k2(), 10, 3, 1, 1), InputError);
}
