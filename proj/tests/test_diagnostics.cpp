#include <cmath>

#include <gtest/gtest.h>

#include "skyle/diagnostics.hpp"
#include "skyle/equilibrium.hpp"
#include "skyle/errors.hpp"
#include "skyle/markov.hpp"

using namespace skyle;

TEST(ItReturnAcf, WhiteDividends) {
  for (double v : it_return_acf(AcfSpec::white(), 10, 50)) EXPECT_EQ(v, 0.0);
}

TEST(ItReturnAcf, ExponentialIsScaledAr1ReturnAcf) {
  const double a = std::exp(-0.1);
  const auto r = it_return_acf(AcfSpec::exponential(10.0), 20, 500);
  // p^IT = mu_{t-1} a / (1 - a); an AR(1) has return ACF 2(1-a) / ... at lag 0 and -(1-a)^2 a^{k-1} beyond.
  const double s = std::pow(a / (1.0 - a), 2);
  EXPECT_NEAR(r[0], s * 2.0 * (1.0 - a), 1e-8 * r[0]);
  for (std::size_t k = 1; k <= 20; ++k)
    EXPECT_NEAR(r[k], -s * (1.0 - a) * (1.0 - a) * std::pow(a, static_cast<double>(k) - 1.0), 1e-8 * r[0]);
}

TEST(ItPriceAcf, PowerLawMatchesDenseProjection) {
  const auto spec = AcfSpec::power_law(50.0, 5.0);
  const int n = 800;
  const auto fast = it_price_acf(spec, 30, n);
  // Dense route: weights from one solve, then the quadratic form against shifted covariances.
  const Eigen::MatrixXd C = toeplitz(spec, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) rhs(j) += spec(static_cast<long>(n - j + k));
  const Eigen::VectorXd w = C.ldlt().solve(rhs);
  for (int tau = 0; tau <= 30; tau += 10) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += w(i) * w(j) * spec(static_cast<long>(i - j + tau));
    EXPECT_NEAR(fast[static_cast<std::size_t>(tau)], acc, 1e-6 * std::abs(acc)) << tau;
  }
}

TEST(ItPriceAcf, TailErrorOnShortWindow) {
  EXPECT_THROW(it_price_acf(AcfSpec::power_law(50.0, 1.5), 5, 20), TailError);
}

TEST(ErrorMetrics, IdenticalInputsGiveZero) {
  const std::vector<double> x = {1.0, 0.5, -0.2, 0.1};
  for (double e : efficiency_error(x, x)) EXPECT_EQ(e, 0.0);
  for (double e : camouflage_error(x, x)) EXPECT_EQ(e, 0.0);
}

TEST(ErrorMetrics, SingleLagDefectDecays) {
  const std::vector<double> ref = {1.0, 0.5, 0.25, 0.125, 0.0625};
  std::vector<double> m = ref;
  m[1] = 0.8;
  const auto e = efficiency_error(m, ref);
  EXPECT_EQ(e[0], 0.0);
  EXPECT_GT(e[1], 0.0);
  for (std::size_t k = 2; k < e.size(); ++k) EXPECT_LT(e[k], e[k - 1]);
}

TEST(ErrorMetrics, CamouflageIgnoresLagZeroDefect) {
  const double a = 0.6, an = 0.9, b = 0.3;
  std::vector<double> om(30), nt(30);
  for (std::size_t k = 0; k < 30; ++k) {
    nt[k] = std::pow(an, k);
    om[k] = a * (nt[k] + (k == 0 ? b : 0.0));
  }
  for (double e : camouflage_error(om, nt)) EXPECT_NEAR(e, 0.0, 1e-15);
}

TEST(ErrorMetrics, DegenerateInputs) {
  EXPECT_THROW(efficiency_error(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}), DegenerateInputError);
  EXPECT_THROW(camouflage_error(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 1.0}), DegenerateInputError);
}

TEST(Diagnose, MarkovCollapseAndDefect) {
  const auto xi = AcfSpec::exponential(20.0), nt = AcfSpec::exponential(10.0);
  SolverOptions o;
  o.price_acf_lags = 502;
  const auto sol = solve_equilibrium(xi, nt, 500, o);
  const auto rep = diagnose(sol, xi, nt, 50, 500);
  for (double e : rep.err_xi) EXPECT_LT(e, 1e-6);
  for (double e : rep.err_omega) EXPECT_LT(e, 1e-6);
  const auto eq = solve_markov_ansatz(xi.markov_alpha(), nt.markov_alpha());
  EXPECT_NEAR(rep.lag0_defect, eq.b_tilde, 1e-3 * eq.b_tilde);
}

TEST(Diagnose, PowerLawErrorsLargerThanMarkov) {
  SolverOptions o;
  o.price_acf_lags = 502;
  const auto xe = AcfSpec::exponential(20.0), ne = AcfSpec::exponential(10.0);
  const auto xp = AcfSpec::power_law(50.0, 5.0), np = AcfSpec::power_law(30.0, 3.0);
  const auto re = diagnose(solve_equilibrium(xe, ne, 500, o), xe, ne, 50, 500);
  const auto rp = diagnose(solve_equilibrium(xp, np, 500, o), xp, np, 50, 500);
  EXPECT_LT(re.err_xi[50], rp.err_xi[50]);
  for (double e : rp.err_xi) EXPECT_TRUE(std::isfinite(e) && e >= 0.0);
  for (double e : rp.err_omega) EXPECT_TRUE(std::isfinite(e) && e >= 0.0);
}

TEST(Diagnose, ExpPairVariogramShape) {
  SolverOptions o;
  o.price_acf_lags = 502;
  const auto xi = AcfSpec::exponential(20.0), nt = AcfSpec::exponential(10.0);
  const auto sol = solve_equilibrium(xi, nt, 500, o);
  const auto rep = diagnose(sol, xi, nt, 499, 500);
  const auto& v = rep.variogram;
  const double slope1 = v[1];
  for (std::size_t k = 1; k <= 4; ++k) EXPECT_NEAR(v[k] / static_cast<double>(k), slope1, 0.1 * slope1);
  for (std::size_t k = 200; k <= 499; ++k) EXPECT_NEAR(v[k], 2.0 * sol.sigma[0], 0.05 * 2.0 * sol.sigma[0]);
}
