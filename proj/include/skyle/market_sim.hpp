#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skyle/acf.hpp"
#include "skyle/kernel.hpp"

namespace skyle {

enum class PathMethod {
  White,
  Ar1,
  CirculantEmbedding,
  // Durbin-Levinson AR(W) recursion started from an exact W-block draw.
  WindowedConditional,
};
const char* path_method_name(PathMethod m);

struct GaussianPath {
  std::vector<double> values;
  PathMethod method = PathMethod::White;
  std::size_t embedding_size = 0;  // circulant length, or AR order for the windowed method
  double clipped_eigen_mass = 0.0;  // negative circulant eigenvalue mass set to zero
};

// fallback_window: AR order of the windowed fallback (0 picks min(T, 512)).
GaussianPath sample_stationary_gaussian(const AcfSpec& spec, std::size_t T, std::uint64_t seed,
                                        std::size_t fallback_window = 0);

struct AgentAccounts {
  std::vector<double> cash;
  std::vector<double> position;
  std::vector<double> wealth;
};

// Largest per-step violations, each relative to the magnitudes entering the identity.
struct ConservationReport {
  double clearing = 0.0;   // |q_it + q_nt + q_mm|
  double position = 0.0;   // |sum_i Q^i| and |Delta Q^i - q^i|
  double cash = 0.0;       // |sum_i Delta C^i - mu sum_i Q^i|
  std::size_t steps = 0;
};

struct MarketPath {
  std::vector<double> mu, q_nt, q_it, q, p;
  AgentAccounts it, nt, mm;
  std::size_t burn_in = 0;
  std::uint64_t rng_seed = 0;
  PathMethod mu_method = PathMethod::White;
  PathMethod nt_method = PathMethod::White;
  ConservationReport conservation;

  std::size_t size() const { return q.size(); }
};

MarketPath simulate_market(const CausalKernel& G, const DemandKernels& kernels, const AcfSpec& xi, const AcfSpec& nt,
                           std::size_t T, std::size_t burn_in, std::uint64_t seed);

// Biased (1/n) autocovariance after mean removal, lags 0..max_lag.
std::vector<double> empirical_acf(std::span<const double> x, std::size_t max_lag);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};
Estimate batch_means(std::span<const double> x, std::size_t batches = 50);

struct PayoffStats {
  // Per-trade P&L measured against p^IT_t (same expectation as against the forward dividend sum).
  Estimate mm_drift, nt_loss, it_gain, mm_risk;
  // The same against the forward dividend sum truncated at `horizon`.
  Estimate mm_drift_fundamental, nt_loss_fundamental, it_gain_fundamental, mm_risk_fundamental;
  Estimate mm_risk_wick;     // E[q^2] E[(p - p^IT)^2]
  Estimate risk_difference;  // mm_risk - mm_risk_wick
  Estimate gain_balance;     // per-step IT gain minus NT loss
  std::size_t samples = 0;
  std::size_t horizon = 0;
  std::size_t batches = 0;
};

// window: length of the dividend history used for p^IT (the solver's T_cut).
PayoffStats payoff_and_risk_stats(const MarketPath& path, const AcfSpec& xi, std::size_t window,
                                  std::size_t batches = 50);

// Mean of q_t^2 - q_t q_{t+1} Omega^NT_0 / Omega^NT_1, i.e. the lag-0 excess of Omega over the NT shape.
Estimate lag0_excess(const MarketPath& path, const AcfSpec& nt, std::size_t batches = 50);

}  // namespace skyle
