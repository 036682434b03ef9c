#include "skyle/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include "skyle/agents.hpp"
#include "skyle/errors.hpp"
#include "skyle/markov.hpp"

namespace skyle {

namespace {
constexpr int kMaxStepHalvings = 6;
}  // namespace

CausalKernel default_seed(const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut) {
  const double scale = std::sqrt(xi.variance() / nt.variance());
  const double tau_eff = xi.effective_timescale();
  if (tau_eff > 0.0) {
    const double alpha = std::exp(-1.0 / tau_eff);
    auto g = closed_form_uncorrelated(alpha, xi.variance(), nt.variance(), t_cut);
    if (g[0] > 0.0) return g;
  }
  return CausalKernel::delta(t_cut, 0.1 * scale);
}

EquilibriumSolution solve_equilibrium(const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut,
                                      const SolverOptions& options) {
  if (!(options.rel_tol > 0.0)) throw DomainError("solve_equilibrium: tolerance must be positive");
  if (!(options.relaxation > 0.0 && options.relaxation <= 1.0))
    throw DomainError("solve_equilibrium: relaxation must lie in (0, 1]");
  const MarketModel model(xi, nt, t_cut, options.mode);

  EquilibriumSolution sol;
  CausalKernel G = options.seed ? options.seed->resized(t_cut) : default_seed(xi, nt, t_cut);
  UpdateResult last = propagator_update_full(G, model);
  double theta = options.relaxation;
  std::size_t growth_streak = 0;
  auto blend = [&](const CausalKernel& from, const CausalKernel& to, double th) {
    std::vector<double> v(t_cut);
    for (std::size_t k = 0; k < t_cut; ++k) v[k] = th * to[k] + (1.0 - th) * from[k];
    return CausalKernel(std::move(v));
  };
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    sol.max_jitter = std::max(sol.max_jitter, last.jitter);
    const double res = last.G.sup_distance(G);
    sol.residual_history.push_back(res);
    sol.iterations_run = it;
    const double scale = std::abs(last.G[0]) > 0.0 ? std::abs(last.G[0]) : 1.0;
    sol.tolerance = options.rel_tol * scale;
    if (res < sol.tolerance || last.G.is_zero()) {
      G = last.G;
      sol.converged = true;
      break;
    }
    const auto& h = sol.residual_history;
    if (h.size() >= 2 && res > h[h.size() - 2] && res > 10.0 * h.front()) {
      if (++growth_streak >= 3) throw DivergenceError("fixed-point iteration diverges", sol.residual_history);
    } else {
      growth_streak = 0;
    }
    if (it == options.max_iterations) {
      G = blend(G, last.G, theta);
      break;
    }
    // An overshooting step can leave the positive-definite cone; shorten it and keep the shorter step.
    for (int halvings = 0;; ++halvings) {
      CausalKernel cand = blend(G, last.G, theta);
      try {
        UpdateResult next = propagator_update_full(cand, model);
        G = std::move(cand);
        last = std::move(next);
        break;
      } catch (const ConditioningError&) {
        if (halvings >= kMaxStepHalvings) throw;
        theta *= 0.5;
        ++sol.step_halvings;
      }
    }
  }
  sol.final_relaxation = theta;

  sol.G = G;
  const std::size_t lags = options.price_acf_lags ? options.price_acf_lags : t_cut;
  if (G.is_zero()) {
    sol.kernels = DemandKernels::passive(t_cut);
    sol.omega_row = excess_demand_acf(sol.kernels, xi, nt, t_cut + lags, model.response_length());
    sol.sigma.assign(lags + 1, 0.0);
    return sol;
  }
  // Kernels and excess-demand ACF consistent with the returned G.
  sol.kernels = demand_kernels(G, model.nt_forecaster(), model.mu_forecaster());
  sol.omega_row = excess_demand_acf(sol.kernels, xi, nt, t_cut + lags, model.response_length());
  sol.sigma = price_acf_from_G(G, sol.omega_row, lags);
  return sol;
}

std::vector<double> price_acf_from_G(const CausalKernel& G, std::span<const double> omega, std::size_t max_lag) {
  const std::size_t n = G.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double acc = 0.0;
    for (std::size_t j = 0; j + d < n; ++j) acc += G[j + d] * G[j];
    r[d] = acc;
  }
  auto om = [&](long k) {
    const auto i = static_cast<std::size_t>(std::labs(k));
    return i < omega.size() ? omega[i] : 0.0;
  };
  std::vector<double> sigma(max_lag + 1, 0.0);
  const long ln = static_cast<long>(n);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) {
    double acc = 0.0;
    for (long d = -(ln - 1); d < ln; ++d) acc += r[static_cast<std::size_t>(std::labs(d))] * om(static_cast<long>(tau) - d);
    sigma[tau] = acc;
  }
  return sigma;
}

std::vector<double> variogram_from_sigma(std::span<const double> sigma) {
  std::vector<double> v(sigma.size(), 0.0);
  for (std::size_t k = 0; k < sigma.size(); ++k) v[k] = 2.0 * (sigma[0] - sigma[k]);
  return v;
}

std::vector<double> return_acf_from_level_acf(std::span<const double> s) {
  if (s.size() < 2) throw SizeError("return ACF needs level ACF at two or more lags");
  std::vector<double> out(s.size() - 1);
  for (std::size_t k = 0; k + 1 < s.size(); ++k) out[k] = 2.0 * s[k] - s[k + 1] - s[k == 0 ? 1 : k - 1];
  return out;
}

}  // namespace skyle
