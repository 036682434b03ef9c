#include <cmath>

#include <gtest/gtest.h>

#include "skyle/equilibrium.hpp"
#include "skyle/errors.hpp"
#include "skyle/markov.hpp"
#include "skyle/pricing_filter.hpp"

using namespace skyle;

TEST(ClosedFormUncorrelated, ValueAndScaling) {
  const auto g = closed_form_uncorrelated(0.5, 1.0, 1.0, 10);
  EXPECT_NEAR(g[0], 1.0 - (1.0 - std::sqrt(0.75)) / 0.25, 1e-15);
  EXPECT_NEAR(g[3], g[0] * 0.125, 1e-15);
  EXPECT_NEAR(closed_form_uncorrelated(0.5, 4.0, 1.0, 10)[0], 2.0 * g[0], 1e-15);
  EXPECT_EQ(closed_form_uncorrelated(0.0, 1.0, 1.0, 10).sup_norm(), 0.0);
}

TEST(EqualTimescales, RootSolvesQuartic) {
  for (double a : {0.1, 0.5, 0.9}) {
    const double r = equal_timescales_root(a);
    EXPECT_GT(r, 0.0);
    EXPECT_NEAR(std::pow(r, 4) - 3 * r * r * a * a + r * (2 * a * a * a + 2 * a) - a * a, 0.0, 1e-13);
  }
  EXPECT_LT(equal_timescales_root(1e-6), 1e-5);
}

TEST(EqualTimescales, BundleFormulas) {
  const double a = 0.5;
  const auto eq = closed_form_equal_timescales(a, 1.0, 1.0);
  const double r = equal_timescales_root(a);
  EXPECT_NEAR(eq.rho, r / (1.0 + r * r - r * a), 1e-14);
  EXPECT_NEAR(eq.R_mu, std::sqrt(1.0 + r * r - 2.0 * r * a), 1e-14);
  EXPECT_NEAR(eq.R_nt, -r, 1e-14);
}

TEST(EqualTimescales, IsSolverFixedPoint) {
  const double a = 0.6;
  const auto spec = AcfSpec::exponential(-1.0 / std::log(a));
  const auto G = closed_form_equal_timescales(a, 1.0, 1.0).propagator(500);
  const auto G2 = propagator_update(G, spec, spec, 500);
  EXPECT_LT(G2.sup_distance(G), 1e-5 * G[0]);
}

TEST(Ansatz, DegenerateCaseMatchesClosedForm) {
  for (double a : {0.3, 0.6, 0.9}) {
    const auto an = solve_markov_ansatz(a, a);
    const auto cf = closed_form_equal_timescales(a, 1.0, 1.0);
    EXPECT_NEAR(an.rho, cf.rho, 1e-8);
    EXPECT_NEAR(an.G0, cf.G0, 1e-8 * cf.G0);
  }
}

TEST(Ansatz, InternalConsistency) {
  const auto eq = solve_markov_ansatz(std::exp(-1.0 / 20.0), std::exp(-1.0 / 10.0));
  EXPECT_NEAR(eq.kappa * (1.0 + eq.Gamma1 + eq.Gamma2), 1.0, 1e-10);
  EXPECT_NEAR(eq.omega0, eq.omega0_decomposition, 1e-9);
  EXPECT_NEAR(eq.b_tilde, b_tilde_from_rho(eq.rho, eq.alpha_nt), 1e-12);
  EXPECT_LT(std::abs(eq.root_defect), 1e-10);
  EXPECT_GT(eq.rho, 0.0);
  EXPECT_LT(eq.rho, eq.alpha_nt);
}

TEST(Ansatz, ExcessDemandHasCamouflageForm) {
  const auto eq = solve_markov_ansatz(std::exp(-1.0 / 20.0), std::exp(-1.0 / 10.0));
  const auto om = eq.excess_demand_acf(40);
  EXPECT_NEAR(om[0], eq.a * (1.0 + eq.b_tilde), 1e-10);
  for (std::size_t k = 1; k <= 40; ++k) EXPECT_NEAR(om[k], eq.a * std::pow(eq.alpha_nt, k), 1e-10);
}

TEST(Ansatz, SlowNtGivesSmallDefectAndShortRho) {
  const auto eq = solve_markov_ansatz(std::exp(-1.0 / 10.0), std::exp(-1.0 / 2000.0));
  EXPECT_LT(eq.b_tilde, 0.01);
  EXPECT_LT(eq.tau_rho(), 2.2);
}

TEST(Ansatz, RejectsOutOfRange) {
  EXPECT_THROW(solve_markov_ansatz(1.0, 0.5), DomainError);
  EXPECT_THROW(solve_markov_ansatz(0.5, -0.1), DomainError);
}

TEST(Observables, GridBounds) {
  for (double tm : {1.0, 5.0, 20.0, 60.0})
    for (double tn : {1.0, 5.0, 20.0, 60.0}) {
      const auto eq = solve_markov_ansatz(std::exp(-1.0 / tm), std::exp(-1.0 / tn));
      const auto ob = markov_observables(eq);
      EXPECT_LE(ob.sigma_ratio, 1.0 + 1e-9);
      EXPECT_LT(ob.it_nt_cov_ratio, 0.0);
      EXPECT_GT(ob.omega_ratio, 0.45);
      EXPECT_LT(ob.omega_ratio, 2.05);
    }
}

TEST(Observables, NtLossVanishesForWhiteDividends) {
  const auto small = markov_observables(solve_markov_ansatz(1e-4, std::exp(-0.1)));
  const auto big = markov_observables(solve_markov_ansatz(std::exp(-0.1), std::exp(-0.1)));
  EXPECT_LT(small.nt_loss_per_trade, 1e-2 * big.nt_loss_per_trade);
}

TEST(Continuum, Limits) {
  EXPECT_DOUBLE_EQ(continuum_limit_G(30.0, 30.0).exp_amplitude_ratio, 0.0);
  EXPECT_LT(continuum_limit_G(10.0, 30.0).exp_amplitude_ratio, 0.0);
  EXPECT_GT(continuum_limit_G(200.0, 100.0).exp_amplitude_ratio, 0.0);
}

TEST(Continuum, DiscreteAgreesAtLongTimescales) {
  const double tm = 200.0, tn = 100.0;
  const auto eq = solve_markov_ansatz(std::exp(-1.0 / tm), std::exp(-1.0 / tn));
  const auto cont = continuum_limit_G(tm, tn);
  const auto disc = discrete_delta_decomposition(eq);
  EXPECT_NEAR(disc.exp_amplitude_ratio, cont.exp_amplitude_ratio, 0.05 * cont.exp_amplitude_ratio);
  // Beyond the fast component the propagator is a single slow exponential.
  const auto G = eq.propagator(200);
  for (std::size_t k = 40; k < 100; ++k)
    EXPECT_NEAR(G[k + 1] / G[k], std::exp(-1.0 / tm), 1e-6);
}

TEST(FitRho, RecoversAnsatzRoot) {
  const double am = std::exp(-0.1), an = std::exp(-0.05);
  const auto eq = solve_markov_ansatz(am, an);
  const auto fit = fit_rho(eq.propagator(500), am, an, 50);
  EXPECT_NEAR(fit.rho, eq.rho, 1e-8);
  EXPECT_NEAR(fit.amplitude, eq.G0, 1e-6 * eq.G0);
}
