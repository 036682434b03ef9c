#pragma once

#include <Eigen/Dense>

#include "skyle/kernel.hpp"
#include "skyle/linalg.hpp"

namespace skyle {

// n x n block of G + G^T (G lower-triangular Toeplitz), diagonal 2*G_0.
Eigen::MatrixXd symmetric_propagator_block(const CausalKernel& G, Eigen::Index n);

// Row vectors shared by the three kernels, over a future window of n = G.size() steps:
//   inv_row   = e_0^T [G^sym]^{-1}
//   through_g = inv_row^T G_low         (feeds R^NT)
//   cumulated = inv_row^T U, U_ij = 1 for j >= i   (feeds R^mu)
struct InsiderRows {
  Eigen::VectorXd inv_row;
  Eigen::VectorXd through_g;
  Eigen::VectorXd cumulated;
};
InsiderRows insider_rows(const CausalKernel& G);

// Kernels below are returned with length G.size()+1, indexed by actual lag.
CausalKernel demand_kernel_R(const CausalKernel& G);
CausalKernel demand_kernel_RNT(const CausalKernel& G, const Eigen::MatrixXd& F_nt);
CausalKernel demand_kernel_Rmu(const CausalKernel& G, const Eigen::MatrixXd& F_mu);

DemandKernels demand_kernels(const CausalKernel& G, const GaussianForecaster& nt, const GaussianForecaster& mu);

}  // namespace skyle
