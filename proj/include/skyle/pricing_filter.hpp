#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "skyle/acf.hpp"
#include "skyle/kernel.hpp"
#include "skyle/linalg.hpp"

namespace skyle {

// q = A_nt q^NT + A_mu mu on a common n-step window started from zero history.
// A_mu is (I - R L)^{-1} R_mu L, strictly lower-triangular.
struct ExcessDemandOperator {
  Eigen::MatrixXd A_nt;
  Eigen::MatrixXd A_mu;
};
ExcessDemandOperator excess_demand_operator(const CausalKernel& R, const CausalKernel& R_nt, const CausalKernel& R_mu,
                                            Eigen::Index n);

Eigen::MatrixXd dressed_nt_acf(const Eigen::MatrixXd& A_nt, const Eigen::MatrixXd& Omega_nt);

struct KalmanGain {
  Eigen::MatrixXd K;
  Eigen::MatrixXd Omega;
  double jitter = 0.0;
};
// K = Xi J^T Omega^{-1}, Omega = J Xi J^T + D.
KalmanGain kalman_gain(const Eigen::MatrixXd& Xi_mu, const Eigen::MatrixXd& J_mu, const Eigen::MatrixXd& D_nt);
// Posterior-information form (Xi^{-1} + J^T D^{-1} J)^{-1} J^T D^{-1}; needs Xi and D invertible.
Eigen::MatrixXd kalman_gain_information_form(const Eigen::MatrixXd& Xi_mu, const Eigen::MatrixXd& J_mu,
                                             const Eigen::MatrixXd& D_nt);

struct FilterBundle {
  Eigen::MatrixXd J_mu;
  Eigen::MatrixXd D_nt;
  Eigen::MatrixXd Omega;
  Eigen::MatrixXd K;
};

enum class FilterMode {
  // Stationary covariances of the excess demand (infinite past), exact Toeplitz Omega.
  Stationary,
  // Finite n-step block started from zero history, the literal matrix route.
  Block,
};

// Everything in the update that depends only on the ACFs and the truncation.
class MarketModel {
 public:
  MarketModel(AcfSpec xi, AcfSpec nt, std::size_t t_cut, FilterMode mode = FilterMode::Stationary);

  const AcfSpec& xi() const { return xi_; }
  const AcfSpec& nt() const { return nt_; }
  std::size_t t_cut() const { return t_cut_; }
  FilterMode mode() const { return mode_; }
  const GaussianForecaster& mu_forecaster() const { return mu_; }
  const GaussianForecaster& nt_forecaster() const { return nt_fc_; }
  // Column sums of F^mu: p^IT_t = w . (mu_{t-n}, ..., mu_{t-1}).
  const Eigen::VectorXd& fundamental_weights() const { return w_; }
  std::size_t response_length() const { return 3 * t_cut_; }

 private:
  AcfSpec xi_;
  AcfSpec nt_;
  std::size_t t_cut_;
  FilterMode mode_;
  GaussianForecaster mu_;
  GaussianForecaster nt_fc_;
  Eigen::VectorXd w_;
};

FilterBundle filter_bundle(const DemandKernels& kernels, const MarketModel& model);

// Stationary excess-demand ACF at lags 0..max_lag under the given insider kernels.
std::vector<double> excess_demand_acf(const DemandKernels& kernels, const AcfSpec& xi, const AcfSpec& nt,
                                      std::size_t max_lag, std::size_t response_length);

struct UpdateResult {
  CausalKernel G;
  DemandKernels kernels;
  std::vector<double> omega;  // stationary excess-demand ACF, lags 0..t_cut
  double jitter = 0.0;
};

UpdateResult propagator_update_full(const CausalKernel& G, const MarketModel& model);
CausalKernel propagator_update(const CausalKernel& G, const AcfSpec& xi, const AcfSpec& nt, std::size_t t_cut);

}  // namespace skyle
