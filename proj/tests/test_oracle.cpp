#include <cmath>

#include <gtest/gtest.h>

#include "models.hpp"
#include "oakes_hmm/oracle.hpp"

using namespace oakes_hmm;
using oakes_hmm::testing::random_params;

TEST(PathTable, JointProbabilitiesSumToOne) {
  Rng rng(1);
  const auto p = random_params(3, 2, rng);
  const int T = 4;
  const oracle::PathTable table(p, T);
  EXPECT_EQ(table.paths().size(), 81u);
  double total = 0.0;
  for (const auto& y : oracle::all_sequences(2, T))
    for (std::size_t i = 0; i < table.paths().size(); ++i) total += table.joint(p, i, y);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(PathTable, SizeGuard) {
  Rng rng(2);
  const auto p = random_params(4, 2, rng);
  EXPECT_THROW(oracle::PathTable(p, 11), OracleError);
}

TEST(Enumeration, SingleOccasion) {
  Rng rng(3);
  const auto p = random_params(3, 3, rng);
  const std::vector<int> y{2};
  EXPECT_NEAR(oracle::enum_likelihood(p, y), p.lambda().dot(p.Phi().row(2).transpose()), 1e-15);
  EXPECT_NEAR(oracle::enum_posterior_states(p, y, 0).sum(), 1.0, 1e-15);
}

TEST(FiniteDifferences, QuadraticHessianIsExact) {
  Matrix Q(3, 3);
  Q << 4.0, 1.0, -2.0, 1.0, 3.0, 0.5, -2.0, 0.5, 5.0;
  Vector b(3);
  b << 1.0, -1.0, 2.0;
  auto f = [&](const Vector& x) { return 0.5 * x.dot(Q * x) + b.dot(x); };
  Vector x(3);
  x << 0.3, -0.7, 1.1;
  for (auto st : {oracle::Stencil::central3, oracle::Stencil::central5}) {
    // No truncation error for a quadratic, so a large step leaves only
    // rounding of order eps / h^2.
    oracle::FdOptions o{st, 1e-2};
    EXPECT_LT((oracle::fd_hessian(f, x, o) - Q).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((oracle::fd_gradient(f, x, o) - (Q * x + b)).cwiseAbs().maxCoeff(), 1e-9);
    // Default steps trade truncation against rounding.
    EXPECT_LT((oracle::fd_hessian(f, x, {st, 0.0}) - Q).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(FiniteDifferences, StepHalvingIsStable) {
  auto f = [](const Vector& x) { return std::exp(0.3 * x[0]) * std::sin(x[1]) + x[0] * x[1] * x[1]; };
  Vector x(2);
  x << 0.4, 1.3;
  oracle::FdOptions o1, o2;
  o1.rel_step = 1e-4;
  o2.rel_step = 5e-5;
  const Vector g1 = oracle::fd_gradient(f, x, o1);
  const Vector g2 = oracle::fd_gradient(f, x, o2);
  EXPECT_LT(((g1 - g2).array() / g2.array()).abs().maxCoeff(), 1e-5);
}

TEST(FiniteDifferences, NonFiniteValuesRaise) {
  auto f = [](const Vector& x) { return std::log(x[0]); };
  Vector x(1);
  x << 0.0;
  EXPECT_THROW(oracle::fd_gradient(f, x), OracleError);
}
