#include "skyle/pricing_filter.hpp"

#include <algorithm>
#include <cmath>

#include "skyle/agents.hpp"
#include "skyle/errors.hpp"

namespace skyle {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Strictly lower Toeplitz block with (i,j) = k[i-j] for i > j.
MatrixXd lag_operator(const CausalKernel& k, Index n) {
  MatrixXd m = MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j + 1; i < n; ++i) m(i, j) = k[static_cast<std::size_t>(i - j)];
  return m;
}

struct FlowResponses {
  std::vector<double> a;  // response of q to q^NT
  std::vector<double> b;  // response of q to mu
};

FlowResponses flow_responses(const DemandKernels& k, std::size_t m) {
  const std::size_t len = std::max({k.R.size(), k.R_nt.size(), k.R_mu.size()});
  std::vector<double> h(m, 0.0);
  FlowResponses out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  h[0] = 1.0;
  for (std::size_t n = 0; n < m; ++n) {
    double hn = n == 0 ? 1.0 : 0.0, an = 0.0, bn = 0.0;
    const std::size_t top = std::min(n, len - 1);
    for (std::size_t lag = 1; lag <= top; ++lag) {
      const double hp = h[n - lag];
      hn += k.R[lag] * hp;
      an += k.R_nt[lag] * hp;
      bn += k.R_mu[lag] * hp;
    }
    if (!std::isfinite(hn) || std::abs(hn) > 1e12)
      throw ConditioningError("insider feedback loop (I - R L)^{-1} is unstable");
    h[n] = hn;
    out.a[n] = hn + an;
    out.b[n] = bn;
  }
  return out;
}

// r(d) = sum_j x_{j+d} x_j, d = 0..n-1.
std::vector<double> autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    double acc = 0.0;
    for (std::size_t j = 0; j + d < n; ++j) acc += x[j + d] * x[j];
    r[d] = acc;
  }
  return r;
}

// sum_d r(|d|) c(tau - d) over d in (-n, n).
double filtered_acf(const std::vector<double>& r, const std::vector<double>& c, long tau) {
  const long n = static_cast<long>(r.size());
  double acc = 0.0;
  for (long d = -(n - 1); d < n; ++d) acc += r[static_cast<std::size_t>(std::labs(d))] * c[static_cast<std::size_t>(std::labs(tau - d))];
  return acc;
}

bool all_zero(const CausalKernel& k) { return k.is_zero(); }

}  // namespace

ExcessDemandOperator excess_demand_operator(const CausalKernel& R, const CausalKernel& R_nt, const CausalKernel& R_mu,
                                            Index n) {
  if (n < 1) throw SizeError("excess_demand_operator: n must be >= 1");
  const MatrixXd lower = MatrixXd::Identity(n, n) - lag_operator(R, n);
  const auto tri = lower.triangularView<Eigen::UnitLower>();
  ExcessDemandOperator op;
  op.A_nt = tri.solve(MatrixXd::Identity(n, n) + lag_operator(R_nt, n));
  op.A_mu = tri.solve(lag_operator(R_mu, n));
  return op;
}

MatrixXd dressed_nt_acf(const MatrixXd& A_nt, const MatrixXd& Omega_nt) {
  if (A_nt.cols() != Omega_nt.rows() || Omega_nt.rows() != Omega_nt.cols())
    throw SizeError("dressed_nt_acf: shape mismatch");
  return A_nt * Omega_nt * A_nt.transpose();
}

KalmanGain kalman_gain(const MatrixXd& Xi_mu, const MatrixXd& J_mu, const MatrixXd& D_nt) {
  if (J_mu.cols() != Xi_mu.rows() || D_nt.rows() != J_mu.rows() || D_nt.cols() != D_nt.rows())
    throw SizeError("kalman_gain: shape mismatch");
  KalmanGain g;
  g.Omega = J_mu * Xi_mu * J_mu.transpose() + D_nt;
  g.Omega = 0.5 * (g.Omega + g.Omega.transpose());
  const double scale = std::max(g.Omega.diagonal().maxCoeff(), 1e-300);
  const auto chol = cholesky_with_jitter(g.Omega, scale, "excess-demand covariance");
  g.jitter = chol.jitter;
  g.K = chol.llt.solve(J_mu * Xi_mu).transpose();
  return g;
}

MatrixXd kalman_gain_information_form(const MatrixXd& Xi_mu, const MatrixXd& J_mu, const MatrixXd& D_nt) {
  const auto dchol = cholesky_with_jitter(D_nt, std::max(D_nt.diagonal().maxCoeff(), 1e-300), "dressed NT covariance");
  const auto xchol = cholesky_with_jitter(Xi_mu, std::max(Xi_mu.diagonal().maxCoeff(), 1e-300), "dividend covariance");
  const MatrixXd dinv_j = dchol.llt.solve(J_mu);
  MatrixXd info = xchol.llt.solve(MatrixXd::Identity(Xi_mu.rows(), Xi_mu.cols())) + J_mu.transpose() * dinv_j;
  info = 0.5 * (info + info.transpose());
  return info.llt().solve(dinv_j.transpose());
}

MarketModel::MarketModel(AcfSpec xi, AcfSpec nt, std::size_t t_cut, FilterMode mode)
    : xi_(std::move(xi)),
      nt_(std::move(nt)),
      t_cut_(t_cut),
      mode_(mode),
      mu_(xi_, static_cast<Index>(std::max<std::size_t>(t_cut, 1)), static_cast<Index>(std::max<std::size_t>(t_cut, 1))),
      nt_fc_(nt_, static_cast<Index>(std::max<std::size_t>(t_cut, 1)), static_cast<Index>(std::max<std::size_t>(t_cut, 1))) {
  if (t_cut < 2) throw SizeError("MarketModel: T_cut must be >= 2");
  w_ = mu_.left_apply(VectorXd::Ones(static_cast<Index>(t_cut)));
}

FilterBundle filter_bundle(const DemandKernels& kernels, const MarketModel& model) {
  const Index n = static_cast<Index>(model.t_cut());
  // One extra step so that the dividend window t-n..t-1 sits one lag behind the flow window.
  const auto op = excess_demand_operator(kernels.R, kernels.R_nt, kernels.R_mu, n + 1);
  FilterBundle fb;
  fb.J_mu = op.A_mu.block(1, 0, n, n);
  fb.D_nt = dressed_nt_acf(op.A_nt, toeplitz(model.nt(), n + 1)).block(1, 1, n, n);
  auto gain = kalman_gain(toeplitz(model.xi(), n), fb.J_mu, fb.D_nt);
  fb.Omega = std::move(gain.Omega);
  fb.K = std::move(gain.K);
  return fb;
}

std::vector<double> excess_demand_acf(const DemandKernels& kernels, const AcfSpec& xi, const AcfSpec& nt,
                                      std::size_t max_lag, std::size_t response_length) {
  const auto resp = flow_responses(kernels, response_length);
  const auto ra = autocorrelation(resp.a);
  const bool informed = std::any_of(resp.b.begin(), resp.b.end(), [](double x) { return x != 0.0; });
  const std::size_t span = response_length + max_lag + 1;
  const auto cnt = nt.values(span);
  std::vector<double> out(max_lag + 1, 0.0);
  if (nt.is_white()) {
    for (std::size_t tau = 0; tau <= max_lag; ++tau) out[tau] = tau < ra.size() ? nt.variance() * ra[tau] : 0.0;
  } else {
    for (std::size_t tau = 0; tau <= max_lag; ++tau) out[tau] = filtered_acf(ra, cnt, static_cast<long>(tau));
  }
  if (informed) {
    const auto rb = autocorrelation(resp.b);
    const auto cxi = xi.values(span);
    for (std::size_t tau = 0; tau <= max_lag; ++tau) out[tau] += filtered_acf(rb, cxi, static_cast<long>(tau));
  }
  return out;
}

UpdateResult propagator_update_full(const CausalKernel& G, const MarketModel& model) {
  const std::size_t N = model.t_cut();
  if (G.size() != N) throw SizeError("propagator_update: G length must equal T_cut");
  const Index n = static_cast<Index>(N);
  UpdateResult out;
  out.kernels = demand_kernels(G, model.nt_forecaster(), model.mu_forecaster());
  out.omega = excess_demand_acf(out.kernels, model.xi(), model.nt(), N, model.response_length());

  const VectorXd& w = model.fundamental_weights();
  if (all_zero(out.kernels.R_mu) || w.isZero(0.0)) {
    out.G = CausalKernel::zeros(N);
    return out;
  }

  VectorXd x;  // Omega^{-1} Cov(q_window, p^IT_t), flow window chronological
  if (model.mode() == FilterMode::Block) {
    const auto fb = filter_bundle(out.kernels, model);
    x = fb.K.transpose() * w;
  } else {
    // Cov(mu_{t-n+i}, q_{t-n+1+j}) = X(i-j-1), X(e) = sum_m b_m Xi(e+m).
    const auto resp = flow_responses(out.kernels, model.response_length());
    const std::size_t m = resp.b.size();
    const auto cxi = model.xi().values(m + N + 1);
    std::vector<double> X(2 * N + 1, 0.0);  // e = -N..N
    for (long e = -static_cast<long>(N); e <= static_cast<long>(N); ++e) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += resp.b[k] * cxi[static_cast<std::size_t>(std::labs(e + static_cast<long>(k)))];
      X[static_cast<std::size_t>(e + static_cast<long>(N))] = acc;
    }
    VectorXd v(n);
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += w(i) * X[static_cast<std::size_t>(i - j - 1 + n)];
      v(j) = acc;
    }
    VectorXd row(n);
    for (Index i = 0; i < n; ++i) row(i) = out.omega[static_cast<std::size_t>(i)];
    const auto chol = cholesky_with_jitter(toeplitz(row), std::max(row(0), 1e-300), "excess-demand covariance");
    out.jitter = chol.jitter;
    x = chol.llt.solve(v);
  }
  std::vector<double> g(N);
  for (std::size_t lag = 0; lag < N; ++lag) g[lag] = x(n - 1 - static_cast<Index>(lag));
  out.G = CausalKernel(std::move(g));
  return out;
}

CausalKernel propagator_update(const CausalKernel& G, const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut) {
  return propagator_update_full(G, MarketModel(xi, nt, t_cut)).G;
}

}  // namespace skyle
