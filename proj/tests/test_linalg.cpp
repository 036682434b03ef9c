#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "skyle/acf.hpp"
#include "skyle/errors.hpp"
#include "skyle/linalg.hpp"

using namespace skyle;

namespace {

// Random positive-definite ACF from a positive mixture of cosines.
AcfSpec random_acf(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(6), om(6);
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = 0.1 + u(rng);
    om[j] = M_PI * u(rng);
  }
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < w.size(); ++j) c[k] += w[j] * std::cos(om[j] * static_cast<double>(k));
  for (std::size_t k = 0; k < n; ++k) c[k] += (k == 0 ? 0.5 : 0.0);
  return AcfSpec::tabulated(c);
}

// E[future | past] through the precision matrix of the joint vector (past oldest-first, then future).
Eigen::MatrixXd brute_force_forecast(const AcfSpec& spec, int np, int nf) {
  const int n = np + nf;
  Eigen::MatrixXd S(n, n);
  auto time = [&](int i) { return i < np ? i - np : i - np; };  // past at -np..-1, future at 0..nf-1
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = spec(static_cast<long>(time(i) - time(j)));
  const Eigen::MatrixXd P = S.fullPivLu().inverse();
  const Eigen::MatrixXd Pff = P.bottomRightCorner(nf, nf);
  const Eigen::MatrixXd Pfp = P.bottomLeftCorner(nf, np);
  return -Pff.fullPivLu().solve(Pfp);
}

}  // namespace

TEST(Forecast, ExponentialIsAr1) {
  const double a = std::exp(-0.1);
  const auto F = forecast_matrix(AcfSpec::exponential(10.0, 3.0), 6, 4);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(F(k, j), j == 5 ? std::pow(a, k + 1) : 0.0, 1e-12);
}

TEST(Forecast, WhiteIsZero) {
  const auto F = forecast_matrix(AcfSpec::white(), 5, 3);
  EXPECT_EQ(F.norm(), 0.0);
}

TEST(Forecast, PowerLawFirstRowSolvesYuleWalker) {
  const auto spec = AcfSpec::power_law(30.0, 3.0);
  const int n = 200;
  const auto F = forecast_matrix(spec, n, 1);
  const Eigen::MatrixXd C = toeplitz(spec, n);
  Eigen::VectorXd rhs(n);
  for (int j = 0; j < n; ++j) rhs(j) = spec(static_cast<long>(n - j));
  const Eigen::VectorXd w = C.ldlt().solve(rhs);
  EXPECT_LT((F.row(0).transpose() - w).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Forecast, LeftApplyMatchesMatrix) {
  const auto spec = AcfSpec::damped_oscillation(40.0, 20.0);
  const GaussianForecaster fc(spec, 30, 20);
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(20, -1.0, 2.0);
  EXPECT_LT((fc.left_apply(u) - fc.matrix().transpose() * u).norm(), 1e-12);
}

TEST(Forecast, RandomInstancesMatchBruteForceConditioning) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> sz(1, 4);
  for (int inst = 0; inst < 200; ++inst) {
    const int np = sz(rng), nf = sz(rng);
    const auto spec = random_acf(rng, static_cast<std::size_t>(np + nf));
    const auto F = forecast_matrix(spec, np, nf);
    const auto ref = brute_force_forecast(spec, np, nf);
    EXPECT_LT((F - ref).lpNorm<Eigen::Infinity>(), 1e-9) << "instance " << inst;
  }
}

TEST(Levinson, MatchesDenseYuleWalker) {
  const auto spec = AcfSpec::power_law(30.0, 3.0);
  const int p = 40;
  const auto acf = spec.values(p + 1);
  const auto lp = levinson_durbin(acf, p);
  Eigen::MatrixXd C = toeplitz(spec, p);
  Eigen::VectorXd r(p);
  for (int k = 0; k < p; ++k) r(k) = acf[static_cast<std::size_t>(k + 1)];
  const Eigen::VectorXd phi = C.ldlt().solve(r);
  EXPECT_LT((lp.coeffs - phi).lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_NEAR(lp.innovation_variance, acf[0] - r.dot(phi), 1e-12);
}

TEST(Levinson, Ar1) {
  const auto lp = levinson_durbin(AcfSpec::exponential(10.0).values(4), 3);
  EXPECT_NEAR(lp.coeffs(0), std::exp(-0.1), 1e-14);
  EXPECT_NEAR(lp.coeffs(1), 0.0, 1e-14);
  EXPECT_NEAR(lp.innovation_variance, 1.0 - std::exp(-0.2), 1e-14);
}

TEST(Tridiagonal, CornerInverseMatchesDenseInverse) {
  const double diag = 3.1, off = -1.2, corner = 2.4;
  const int n = 500;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    M(i, i) = i == 0 ? corner : diag;
    if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = off;
  }
  const Eigen::VectorXd row = M.ldlt().solve(Eigen::VectorXd::Unit(n, 0));
  const auto ci = tridiag_corner_inverse(diag, off, corner);
  for (int k = 0; k <= 50; ++k) EXPECT_NEAR(row(k), ci.amplitude * std::pow(ci.rate, k), 1e-8 * std::abs(row(k)) + 1e-300);
}

TEST(Tridiagonal, WhiteNoiseRowMatchesDenseInverse) {
  const double a = 0.5;
  const int n = 500;
  const auto w = white_noise_inverse_row(a, 1.0);
  // (Xi~)^{-1} for a unit AR(1) plus (R~mu)^2 I.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  const double s = 1.0 / (1.0 - a * a);
  for (int i = 0; i < n; ++i) {
    M(i, i) = (i == 0 || i == n - 1 ? 1.0 : 1.0 + a * a) * s + 1.0;
    if (i + 1 < n) M(i, i + 1) = M(i + 1, i) = -a * s;
  }
  const Eigen::VectorXd row = M.ldlt().solve(Eigen::VectorXd::Unit(n, 0));
  EXPECT_NEAR(w.gamma, w.g * a, 1e-14);
  EXPECT_NEAR(w.b0, a * (1.0 - w.g), 1e-14);
  for (int k = 0; k <= 50; ++k) EXPECT_NEAR(a * row(k), w.b0 * std::pow(w.gamma, k), 1e-8 * a * std::abs(row(k)));
}

TEST(Tridiagonal, UncorrelatedLimitCollapses) {
  const auto w = white_noise_inverse_row(1e-12, 1.0);
  EXPECT_LT(w.gamma, 1e-11);
}

TEST(Cholesky, RejectsIndefinite) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(cholesky_with_jitter(m, 1.0, "test"), ConditioningError);
}
