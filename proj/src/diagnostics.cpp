#include "skyle/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "skyle/errors.hpp"
#include "skyle/linalg.hpp"

namespace skyle {

std::vector<double> it_price_acf(const AcfSpec& xi, std::size_t max_lag, std::size_t window) {
  if (window < 1) throw SizeError("it_price_acf: window must be >= 1");
  if (xi.is_white()) return std::vector<double>(max_lag + 1, 0.0);
  const auto n = static_cast<Eigen::Index>(window);
  const GaussianForecaster fc(xi, n, n);
  const Eigen::VectorXd w = fc.left_apply(Eigen::VectorXd::Ones(n));
  const Eigen::VectorXd far = fc.left_apply(Eigen::VectorXd::Unit(n, n - 1));
  if (far.lpNorm<1>() > 1e-3 * w.lpNorm<1>())
    throw TailError("forecast rows not summable within the window; increase the window");
  // Lag-indexed weights: wl[k] multiplies mu_{t-1-k}.
  std::vector<double> wl(window);
  for (std::size_t k = 0; k < window; ++k) wl[k] = w(n - 1 - static_cast<Eigen::Index>(k));
  std::vector<double> r(window, 0.0);
  for (std::size_t d = 0; d < window; ++d)
    for (std::size_t k = 0; k + d < window; ++k) r[d] += wl[k + d] * wl[k];
  const auto c = xi.values(window + max_lag + 1);
  std::vector<double> out(max_lag + 1, 0.0);
  const long lw = static_cast<long>(window);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) {
    double acc = 0.0;
    for (long d = -(lw - 1); d < lw; ++d)
      acc += r[static_cast<std::size_t>(std::labs(d))] * c[static_cast<std::size_t>(std::labs(static_cast<long>(tau) - d))];
    out[tau] = acc;
  }
  return out;
}

std::vector<double> it_return_acf(const AcfSpec& xi, std::size_t max_lag, std::size_t window) {
  return return_acf_from_level_acf(it_price_acf(xi, max_lag + 1, window));
}

std::vector<double> efficiency_error(std::span<const double> m, std::span<const double> r) {
  const std::size_t n = std::min(m.size(), r.size());
  if (n == 0 || m[0] == 0.0 || r[0] == 0.0) throw DegenerateInputError("efficiency_error: zero lag-0 value");
  std::vector<double> out(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += std::abs(m[i] / m[0] - r[i] / r[0]);
    den += std::abs(m[i] / m[0]);
    out[i] = num / den;
  }
  return out;
}

std::vector<double> camouflage_error(std::span<const double> m, std::span<const double> r) {
  const std::size_t n = std::min(m.size(), r.size());
  if (n < 2 || m[1] == 0.0 || r[1] == 0.0) throw DegenerateInputError("camouflage_error: zero lag-1 value");
  std::vector<double> out(n, 0.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    num += std::abs(m[i] / m[1] - r[i] / r[1]);
    den += std::abs(m[i] / m[1]);
    out[i] = num / den;
  }
  return out;
}

DiagnosticsReport diagnose(const EquilibriumSolution& sol, const AcfSpec& xi, const AcfSpec& nt, std::size_t max_lag,
                           std::size_t window) {
  if (sol.sigma.size() < max_lag + 2) throw SizeError("diagnose: price ACF shorter than max_lag + 2");
  if (sol.omega_row.size() < max_lag + 1) throw SizeError("diagnose: excess-demand ACF shorter than max_lag + 1");
  DiagnosticsReport rep;
  rep.max_lag = max_lag;
  const auto xi_model = return_acf_from_level_acf(std::span<const double>(sol.sigma).first(max_lag + 2));
  const auto xi_ref = it_return_acf(xi, max_lag, window);
  rep.err_xi = efficiency_error(xi_model, xi_ref);
  rep.xi_model.resize(max_lag + 1);
  rep.xi_it.resize(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    rep.xi_model[k] = xi_model[k] / xi_model[0];
    rep.xi_it[k] = xi_ref[k] / xi_ref[0];
  }
  const std::vector<double> om(sol.omega_row.begin(), sol.omega_row.begin() + static_cast<long>(max_lag) + 1);
  const auto om_nt = nt.values(max_lag + 1);
  rep.omega_model.resize(max_lag + 1);
  rep.omega_nt.resize(max_lag + 1);
  if (nt.is_white() || om[1] == 0.0) {
    rep.err_omega.assign(max_lag + 1, std::numeric_limits<double>::quiet_NaN());
    rep.lag0_defect = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k <= max_lag; ++k) {
      rep.omega_model[k] = om[k] / om[0];
      rep.omega_nt[k] = om_nt[k] / om_nt[0];
    }
  } else {
    rep.err_omega = camouflage_error(om, om_nt);
    for (std::size_t k = 0; k <= max_lag; ++k) {
      rep.omega_model[k] = om[k] / om[1];
      rep.omega_nt[k] = om_nt[k] / om_nt[1];
    }
    rep.lag0_defect = om[0] / (om[1] * om_nt[0] / om_nt[1]) - 1.0;
  }
  rep.variogram = variogram_from_sigma(std::span<const double>(sol.sigma).first(max_lag + 1));
  rep.metadata = "dividends=" + xi.describe() + "; nt=" + nt.describe() + "; T_cut=" + std::to_string(sol.G.size()) +
                 "; window=" + std::to_string(window);
  return rep;
}

}  // namespace skyle
