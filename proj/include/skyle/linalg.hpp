#pragma once

#include <vector>

#include <Eigen/Dense>

#include "skyle/acf.hpp"

namespace skyle {

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute diagonal shift that was needed
};

// Cholesky with the escalating jitter policy eps*scale*I, eps in {0, 1e-12, ..., 1e-8}.
JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& m, double scale, const char* what);

// Gaussian conditioning of future values on a window of past values.
// Past columns are chronological (most recent observation last); row k is E[x_{t+k} | past].
class GaussianForecaster {
 public:
  GaussianForecaster(const AcfSpec& spec, Eigen::Index n_past, Eigen::Index n_future);

  Eigen::Index n_past() const { return n_past_; }
  Eigen::Index n_future() const { return n_future_; }
  bool is_zero() const { return zero_; }
  double jitter() const { return chol_.jitter; }

  // F^T u without forming F.
  Eigen::VectorXd left_apply(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd matrix() const;

 private:
  Eigen::Index n_past_;
  Eigen::Index n_future_;
  bool zero_ = false;
  Eigen::MatrixXd c_fp_;
  JitteredCholesky chol_;
};

Eigen::MatrixXd forecast_matrix(const AcfSpec& spec, Eigen::Index n_past, Eigen::Index n_future);

// One-step predictor by Durbin-Levinson: coeffs(k) multiplies x_{t-1-k}.
struct LinearPredictor {
  Eigen::VectorXd coeffs;
  double innovation_variance = 0.0;
};
LinearPredictor levinson_durbin(const std::vector<double>& acf, Eigen::Index order);

// First row of the inverse of the semi-infinite symmetric tridiagonal matrix with constant
// diagonal `diag`, off-diagonal `off` and first diagonal entry `corner`: x_k = amplitude * rate^k.
struct CornerInverseRow {
  double amplitude;
  double rate;
};
CornerInverseRow tridiag_corner_inverse(double diag, double off, double corner);

// The same object in the parametrization of (Xi~)^{-1} + (R~mu)^2 I for a unit-variance AR(1).
struct WhiteNoiseRow {
  double beta;
  double g;
  double gamma;  // decay rate of the row
  double b0;     // alpha_mu times the row amplitude
};
WhiteNoiseRow white_noise_inverse_row(double alpha_mu, double r_mu);

}  // namespace skyle
