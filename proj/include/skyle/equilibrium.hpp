#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "skyle/acf.hpp"
#include "skyle/kernel.hpp"
#include "skyle/pricing_filter.hpp"

namespace skyle {

struct SolverOptions {
  std::size_t max_iterations = 200;   // T_it
  double rel_tol = 1e-8;              // stop when sup|G' - G| < rel_tol * |G_0|
  double relaxation = 1.0;            // theta in G <- theta G' + (1 - theta) G, halved on conditioning failure
  std::optional<CausalKernel> seed;   // default: white-noise closed form at the dividend timescale
  FilterMode mode = FilterMode::Stationary;
  std::size_t price_acf_lags = 0;     // 0 means T_cut
};

struct EquilibriumSolution {
  CausalKernel G;
  std::size_t iterations_run = 0;
  bool converged = false;
  double tolerance = 0.0;
  std::vector<double> residual_history;
  std::vector<double> sigma;      // price ACF, lags 0..L
  std::vector<double> omega_row;  // excess-demand ACF, lags 0..T_cut
  DemandKernels kernels;
  double max_jitter = 0.0;
  std::size_t step_halvings = 0;  // times the step was halved after leaving the positive-definite cone
  double final_relaxation = 1.0;
};

CausalKernel default_seed(const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut);

EquilibriumSolution solve_equilibrium(const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut,
                                      const SolverOptions& options = {});

// Sigma_tau = sum_{i,j} G_i G_j Omega_{|tau - i + j|}, Omega zero beyond its stored lags.
std::vector<double> price_acf_from_G(const CausalKernel& G, std::span<const double> omega, std::size_t max_lag);

// V_tau = 2 (Sigma_0 - Sigma_tau).
std::vector<double> variogram_from_sigma(std::span<const double> sigma);

// Return ACF of a stationary level process: Xi_tau = 2 S_tau - S_{tau+1} - S_{|tau-1|}, lags 0..n-2.
std::vector<double> return_acf_from_level_acf(std::span<const double> sigma);

}  // namespace skyle
