#include "skyle/agents.hpp"

#include <cmath>

#include "skyle/errors.hpp"

namespace skyle {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

Index window(const CausalKernel& G) {
  if (G.size() == 0) throw SizeError("propagator kernel is empty");
  return static_cast<Index>(G.size());
}

// Past-chronological row (most recent last) to a lag-indexed kernel of length n+1.
CausalKernel from_past_row(const VectorXd& row, double sign) {
  const Index n = row.size();
  std::vector<double> v(n + 1, 0.0);
  for (Index lag = 1; lag <= n; ++lag) v[lag] = sign * row(n - lag);
  return CausalKernel(std::move(v));
}

CausalKernel kernel_R_from_row(const CausalKernel& G, const VectorXd& s0) {
  const Index n = s0.size();
  std::vector<double> v(n + 1, 0.0);
  for (Index lag = 1; lag <= n; ++lag) {
    double acc = 0.0;
    for (Index i = 0; i + lag < n; ++i) acc += s0(i) * G[i + lag];
    v[lag] = -acc;
  }
  return CausalKernel(std::move(v));
}

}  // namespace

Eigen::MatrixXd symmetric_propagator_block(const CausalKernel& G, Index n) {
  if (n < 1) throw SizeError("symmetric_propagator_block: n must be >= 1");
  if (n > window(G)) throw SizeError("symmetric_propagator_block: n exceeds T_cut");
  Eigen::MatrixXd s(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) s(i, j) = i == j ? 2.0 * G[0] : G[static_cast<std::size_t>(std::abs(i - j))];
  return s;
}

InsiderRows insider_rows(const CausalKernel& G) {
  const Index n = window(G);
  const auto chol = cholesky_with_jitter(symmetric_propagator_block(G, n), std::max(2.0 * std::abs(G[0]), 1e-300),
                                         "symmetric propagator");
  InsiderRows rows;
  rows.inv_row = chol.llt.solve(VectorXd::Unit(n, 0));
  rows.through_g.resize(n);
  rows.cumulated.resize(n);
  double acc = 0.0;
  for (Index j = 0; j < n; ++j) {
    acc += rows.inv_row(j);
    rows.cumulated(j) = acc;
    double t = 0.0;
    for (Index i = j; i < n; ++i) t += rows.inv_row(i) * G[i - j];
    rows.through_g(j) = t;
  }
  return rows;
}

CausalKernel demand_kernel_R(const CausalKernel& G) { return kernel_R_from_row(G, insider_rows(G).inv_row); }

CausalKernel demand_kernel_RNT(const CausalKernel& G, const Eigen::MatrixXd& F_nt) {
  const auto rows = insider_rows(G);
  if (F_nt.rows() != rows.through_g.size()) throw SizeError("demand_kernel_RNT: forecast rows must equal T_cut");
  return from_past_row(F_nt.transpose() * rows.through_g, -1.0);
}

CausalKernel demand_kernel_Rmu(const CausalKernel& G, const Eigen::MatrixXd& F_mu) {
  const auto rows = insider_rows(G);
  if (F_mu.rows() != rows.cumulated.size()) throw SizeError("demand_kernel_Rmu: forecast rows must equal T_cut");
  return from_past_row(F_mu.transpose() * rows.cumulated, 1.0);
}

DemandKernels demand_kernels(const CausalKernel& G, const GaussianForecaster& nt, const GaussianForecaster& mu) {
  const auto rows = insider_rows(G);
  if (nt.n_future() != rows.inv_row.size() || mu.n_future() != rows.inv_row.size())
    throw SizeError("demand_kernels: forecast windows must equal T_cut");
  DemandKernels k;
  k.R = kernel_R_from_row(G, rows.inv_row);
  k.R_nt = from_past_row(nt.left_apply(rows.through_g), -1.0);
  k.R_mu = from_past_row(mu.left_apply(rows.cumulated), 1.0);
  k.source_G = G;
  return k;
}

}  // namespace skyle
