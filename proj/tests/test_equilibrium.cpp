#include <cmath>

#include <gtest/gtest.h>

#include "skyle/agents.hpp"
#include "skyle/equilibrium.hpp"
#include "skyle/errors.hpp"
#include "skyle/markov.hpp"

using namespace skyle;

TEST(Solver, UncorrelatedNoiseConvergesToClosedForm) {
  const double a = 0.5;
  const auto sol = solve_equilibrium(AcfSpec::exponential(-1.0 / std::log(a)), AcfSpec::white(), 500);
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.G[0], 0.4641016151377546, 1e-7);
  for (std::size_t k = 1; k <= 10; ++k) EXPECT_NEAR(sol.G[k], sol.G[0] * std::pow(a, k), 1e-7);
  EXPECT_EQ(sol.residual_history.size(), sol.iterations_run);
}

TEST(Solver, ExpPairConvergesAndMatchesAnsatz) {
  const auto xi = AcfSpec::exponential(20.0), nt = AcfSpec::exponential(10.0);
  const auto sol = solve_equilibrium(xi, nt, 500);
  ASSERT_TRUE(sol.converged);
  EXPECT_LE(sol.iterations_run, 200u);
  const auto eq = solve_markov_ansatz(xi.markov_alpha(), nt.markov_alpha());
  EXPECT_NEAR(sol.G[0], eq.G0, 1e-6 * eq.G0);
  EXPECT_NEAR(sol.omega_row[0], eq.omega0, 1e-6);
  // Fixed point: one more update leaves G unchanged.
  const auto again = propagator_update(sol.G, xi, nt, 500);
  EXPECT_LT(again.sup_distance(sol.G), 10.0 * sol.tolerance);
}

TEST(Solver, SymmetricPropagatorPositiveDefiniteAtExpPair) {
  const auto sol = solve_equilibrium(AcfSpec::exponential(20.0), AcfSpec::exponential(10.0), 500);
  const Eigen::LLT<Eigen::MatrixXd> llt(symmetric_propagator_block(sol.G, 200));
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(Solver, SeedIndependence) {
  const auto xi = AcfSpec::exponential(10.0), nt = AcfSpec::exponential(5.0);
  SolverOptions a, b;
  a.seed = CausalKernel::delta(300);
  b.seed = solve_markov_ansatz(xi.markov_alpha(), nt.markov_alpha()).propagator(300);
  const auto sa = solve_equilibrium(xi, nt, 300, a);
  const auto sb = solve_equilibrium(xi, nt, 300, b);
  ASSERT_TRUE(sa.converged && sb.converged);
  EXPECT_LT(sa.G.sup_distance(sb.G), 10.0 * sa.tolerance);
}

TEST(Solver, PowerLawPairConverges) {
  SolverOptions o;
  o.price_acf_lags = 1;
  const auto sol = solve_equilibrium(AcfSpec::power_law(50.0, 5.0), AcfSpec::power_law(30.0, 3.0), 500, o);
  EXPECT_TRUE(sol.converged);
  EXPECT_GT(sol.G[0], 0.0);
}

TEST(Solver, RelaxationReachesSameFixedPoint) {
  const auto xi = AcfSpec::exponential(10.0), nt = AcfSpec::exponential(20.0);
  SolverOptions o;
  o.relaxation = 0.5;
  o.max_iterations = 400;
  const auto s1 = solve_equilibrium(xi, nt, 300);
  const auto s2 = solve_equilibrium(xi, nt, 300, o);
  ASSERT_TRUE(s2.converged);
  EXPECT_LT(s1.G.sup_distance(s2.G), 1e-6 * s1.G[0]);
}

TEST(Solver, OvershootingStepIsShortened) {
  const auto sol = solve_equilibrium(AcfSpec::exponential(40.0), AcfSpec::exponential(5.0), 500);
  ASSERT_TRUE(sol.converged);
  EXPECT_GT(sol.step_halvings, 0u);
  const auto eq = solve_markov_ansatz(std::exp(-1.0 / 40.0), std::exp(-1.0 / 5.0));
  EXPECT_NEAR(sol.G[0], eq.G0, 1e-5 * eq.G0);
}

TEST(Solver, BudgetExhaustionReportsNotConverged) {
  SolverOptions o;
  o.max_iterations = 2;
  const auto sol = solve_equilibrium(AcfSpec::exponential(20.0), AcfSpec::exponential(10.0), 200, o);
  EXPECT_FALSE(sol.converged);
  EXPECT_EQ(sol.residual_history.size(), 2u);
}

TEST(Solver, RejectsBadOptions) {
  SolverOptions o;
  o.relaxation = 1.5;
  EXPECT_THROW(solve_equilibrium(AcfSpec::exponential(5.0), AcfSpec::white(), 50, o), DomainError);
}

TEST(PriceAcf, DeltaKernelWhiteFlow) {
  const std::vector<double> om = {2.0, 0.0, 0.0, 0.0, 0.0};
  const auto s = price_acf_from_G(CausalKernel::delta(5, 3.0), om, 3);
  EXPECT_NEAR(s[0], 18.0, 1e-14);
  EXPECT_NEAR(s[1], 0.0, 1e-14);
}

TEST(PriceAcf, GeometricKernelWhiteFlow) {
  const double a = 0.7, g = 1.3, s2 = 0.8;
  std::vector<double> om(400, 0.0);
  om[0] = s2;
  const auto s = price_acf_from_G(CausalKernel::geometric(400, g, a), om, 10);
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_NEAR(s[k], g * g * s2 * std::pow(a, k) / (1.0 - a * a), 1e-12);
}

TEST(Variogram, Regimes) {
  EXPECT_EQ(variogram_from_sigma(std::vector<double>(5, 2.0)), std::vector<double>(5, 0.0));
  const double tau = 50.0;
  std::vector<double> s(2001);
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::exp(-static_cast<double>(k) / tau);
  const auto v = variogram_from_sigma(s);
  EXPECT_NEAR(v[2] / 2.0, 2.0 / tau, 0.05 * 2.0 / tau);
  EXPECT_NEAR(v[2000], 2.0, 1e-6);
}

TEST(PriceAcf, ExpPairDecaysAtDividendTimescale) {
  const auto sol = solve_equilibrium(AcfSpec::exponential(20.0), AcfSpec::exponential(10.0), 500);
  for (std::size_t k = 5; k <= 50; k += 5)
    EXPECT_NEAR(sol.sigma[k] / sol.sigma[0], std::exp(-static_cast<double>(k) / 20.0), 1e-3);
}
