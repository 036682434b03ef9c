#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "skyle/acf.hpp"
#include "skyle/equilibrium.hpp"

namespace skyle {

// ACF of p^IT_t = E[sum_{t'>=t} mu_t' | mu_{t-window..t-1}], lags 0..max_lag.
std::vector<double> it_price_acf(const AcfSpec& xi, std::size_t max_lag, std::size_t window);
// Return ACF of p^IT at lags 0..max_lag.
std::vector<double> it_return_acf(const AcfSpec& xi, std::size_t max_lag, std::size_t window);

// Cumulative relative error from lag 0, both series normalized at lag 0.
std::vector<double> efficiency_error(std::span<const double> xi_model, std::span<const double> xi_ref);
// Same metric normalized at lag 1 and accumulated from lag 1; entry 0 is 0.
std::vector<double> camouflage_error(std::span<const double> omega_model, std::span<const double> omega_nt);

struct DiagnosticsReport {
  std::size_t max_lag = 0;
  std::vector<double> xi_model;     // Xi_tau / Xi_0
  std::vector<double> xi_it;        // Xi^IT_tau / Xi^IT_0
  std::vector<double> err_xi;
  std::vector<double> omega_model;  // Omega_tau / Omega_1
  std::vector<double> omega_nt;     // Omega^NT_tau / Omega^NT_1
  std::vector<double> err_omega;
  std::vector<double> variogram;
  double lag0_defect = 0.0;         // b~ estimate, NaN for white NT flow
  std::string metadata;
};

DiagnosticsReport diagnose(const EquilibriumSolution& sol, const AcfSpec& xi, const AcfSpec& nt, std::size_t max_lag,
                           std::size_t window);

}  // namespace skyle
