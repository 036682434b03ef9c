#pragma once

#include <cstddef>
#include <vector>

#include "skyle/kernel.hpp"

namespace skyle {

// Exponential dividends and NT flow: G_tau = G0 (c alpha_mu^tau + (1 - c) rho^tau),
// c = (alpha_mu - alpha_nt) / (alpha_mu - rho).
struct MarkovEquilibrium {
  double alpha_mu = 0.0;
  double alpha_nt = 0.0;
  double xi0 = 1.0;
  double omega0_nt = 1.0;

  double rho = 0.0;
  double b_tilde = 0.0;
  double G0 = 0.0;
  double weight_mu = 0.0;  // c

  // Inverse symmetric-propagator structure: h_k = kappa (delta_k + Gamma1 gamma1^k + Gamma2 gamma2^k).
  double gamma1 = 0.0, gamma2 = 0.0;
  double Gamma1 = 0.0, Gamma2 = 0.0;
  double kappa = 1.0;
  double S_alpha = 0.0, S_rho = 0.0;
  bool single_mode = false;  // alpha_mu == alpha_nt: Gamma2 == 0

  double R_nt = 0.0;  // signed weight of q^NT_{t-1}
  double R_mu = 0.0;  // weight of mu_{t-1}

  double omega0 = 0.0;  // excess-demand variance from break-even
  double a = 0.0;       // camouflage amplitude: Omega_tau = a (alpha_nt^tau + b~ delta_tau)
  double omega0_decomposition = 0.0;
  double omega1_decomposition = 0.0;
  double root_defect = 0.0;
  double max_imag = 0.0;  // largest imaginary part dropped from gamma/Gamma

  double tau_rho() const;
  CausalKernel propagator(std::size_t n) const;
  DemandKernels demand_kernels(std::size_t n) const;
  std::vector<double> excess_demand_acf(std::size_t max_lag) const;
};

CausalKernel closed_form_uncorrelated(double alpha_mu, double xi0, double omega0_nt, std::size_t n);

// Positive real root of r^4 - 3 r^2 a^2 + r (2a^3 + 2a) - a^2.
double equal_timescales_root(double alpha);
MarkovEquilibrium closed_form_equal_timescales(double alpha, double xi0, double omega0_nt);

// Full bundle at a trial rho (no self-consistency imposed); exposed for diagnostics and tests.
MarkovEquilibrium markov_bundle_at(double alpha_mu, double alpha_nt, double rho, double xi0, double omega0_nt);

MarkovEquilibrium solve_markov_ansatz(double alpha_mu, double alpha_nt, double xi0 = 1.0, double omega0_nt = 1.0);

// Lag-0 camouflage defect as a function of rho.
double b_tilde_from_rho(double rho, double alpha_nt);

struct MarkovObservables {
  double sigma0 = 0.0;              // price variance
  double sigma0_it = 0.0;           // variance of p^IT
  double sigma_ratio = 0.0;         // sigma0 / sigma0_it
  double omega_ratio = 0.0;         // Omega0 / Omega0^NT
  double nt_loss_per_trade = 0.0;   // E[q^NT (p - p^F)] / sqrt(Xi0 Omega0^NT)
  double mm_risk_per_trade = 0.0;   // E[q^2] E[(p - p^IT)^2] / (Xi0 Omega0^NT)
  double it_nt_cov_ratio = 0.0;     // E[q^IT q^NT] / Omega0^NT
  double it_mu_cov = 0.0;           // E[q^IT mu] / sqrt(Xi0 Omega0^NT)
  double price_error_var = 0.0;     // E[(p - p^IT)^2]
};
MarkovObservables markov_observables(const MarkovEquilibrium& eq);

struct ContinuumLimit {
  double delta_weight;         // in units of G0
  double exp_amplitude_ratio;  // (tau_mu - tau_nt) / (tau_mu tau_nt)
  double exp_rate;             // e^{-1/tau_mu}
};
ContinuumLimit continuum_limit_G(double tau_mu, double tau_nt);

// The discrete Markov propagator read as "fast part + slow exponential": the fast rho^tau
// component lumped into a delta of weight (1-c) G0 / (1-rho), slow amplitude c G0.
ContinuumLimit discrete_delta_decomposition(const MarkovEquilibrium& eq);

struct RhoFit {
  double rho;
  double amplitude;
  double rms_residual;
};
// Least-squares fit of G_tau = A (c alpha_mu^tau + (1-c) rho^tau) on lags 0..max_lag.
RhoFit fit_rho(const CausalKernel& G, double alpha_mu, double alpha_nt, std::size_t max_lag);

}  // namespace skyle
