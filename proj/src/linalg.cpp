#include "skyle/linalg.hpp"

#include <cmath>
#include <string>

#include "skyle/errors.hpp"

namespace skyle {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Size: return "size";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Tail: return "tail";
    case ErrorKind::Bracketing: return "bracketing";
    case ErrorKind::DegenerateInput: return "degenerate_input";
  }
  return "unknown";
}

JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& m, double scale, const char* what) {
  static constexpr double kEps[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  if (!m.allFinite()) throw ConditioningError(std::string(what) + ": non-finite entries");
  JitteredCholesky out;
  for (double eps : kEps) {
    const double shift = eps * scale;
    if (shift == 0.0) {
      out.llt.compute(m);
    } else {
      Eigen::MatrixXd shifted = m;
      shifted.diagonal().array() += shift;
      out.llt.compute(shifted);
    }
    if (out.llt.info() != Eigen::Success) continue;
    // Reject factorizations whose pivots collapsed to rounding level.
    const auto d = out.llt.matrixLLT().diagonal();
    if (d.minCoeff() > 0.0 && d.minCoeff() * d.minCoeff() > 1e-15 * scale) {
      out.jitter = shift;
      return out;
    }
  }
  throw ConditioningError(std::string(what) + ": matrix not positive definite after jitter 1e-8");
}

GaussianForecaster::GaussianForecaster(const AcfSpec& spec, Eigen::Index n_past, Eigen::Index n_future)
    : n_past_(n_past), n_future_(n_future) {
  if (n_past < 1 || n_future < 1) throw SizeError("forecast_matrix: n_past and n_future must be >= 1");
  if (spec.is_white()) {
    zero_ = true;
    return;
  }
  c_fp_.resize(n_future, n_past);
  for (Eigen::Index j = 0; j < n_past; ++j)
    for (Eigen::Index k = 0; k < n_future; ++k) c_fp_(k, j) = spec(static_cast<long>(k + n_past - j));
  chol_ = cholesky_with_jitter(toeplitz(spec, n_past), spec.variance(), "forecast past block");
}

Eigen::VectorXd GaussianForecaster::left_apply(const Eigen::VectorXd& u) const {
  if (u.size() != n_future_) throw SizeError("forecast left_apply: length mismatch");
  if (zero_) return Eigen::VectorXd::Zero(n_past_);
  return chol_.llt.solve(c_fp_.transpose() * u);
}

Eigen::MatrixXd GaussianForecaster::matrix() const {
  if (zero_) return Eigen::MatrixXd::Zero(n_future_, n_past_);
  return chol_.llt.solve(c_fp_.transpose()).transpose();
}

Eigen::MatrixXd forecast_matrix(const AcfSpec& spec, Eigen::Index n_past, Eigen::Index n_future) {
  return GaussianForecaster(spec, n_past, n_future).matrix();
}

LinearPredictor levinson_durbin(const std::vector<double>& acf, Eigen::Index order) {
  if (order < 1 || static_cast<std::size_t>(order) + 1 > acf.size())
    throw SizeError("levinson_durbin: need acf at lags 0..order");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd prev(order);
  double v = acf[0];
  if (!(v > 0.0)) throw ConditioningError("levinson_durbin: non-positive variance");
  for (Eigen::Index m = 0; m < order; ++m) {
    double num = acf[m + 1];
    for (Eigen::Index k = 0; k < m; ++k) num -= phi(k) * acf[m - k];
    const double kappa = num / v;
    prev.head(m) = phi.head(m);
    for (Eigen::Index k = 0; k < m; ++k) phi(k) = prev(k) - kappa * prev(m - 1 - k);
    phi(m) = kappa;
    v *= (1.0 - kappa * kappa);
    if (!(v > 0.0)) throw ConditioningError("levinson_durbin: reflection coefficient reached 1");
  }
  return {phi, v};
}

CornerInverseRow tridiag_corner_inverse(double diag, double off, double corner) {
  if (off == 0.0) {
    if (corner == 0.0) throw DomainError("tridiag_corner_inverse: singular corner");
    return {1.0 / corner, 0.0};
  }
  const double beta = diag / std::abs(off);
  if (beta * beta < 4.0) throw DomainError("tridiag_corner_inverse: beta^2 < 4, no decaying row");
  // o*l^2 + d*l + o = 0; the roots are reciprocal, keep the one inside the unit disk.
  const double root = -2.0 * off / (diag + std::copysign(std::sqrt(diag * diag - 4.0 * off * off), diag));
  const double pivot = corner + off * root;
  if (pivot == 0.0) throw DomainError("tridiag_corner_inverse: singular corner");
  return {1.0 / pivot, root};
}

WhiteNoiseRow white_noise_inverse_row(double alpha_mu, double r_mu) {
  if (!(alpha_mu >= 0.0 && alpha_mu < 1.0)) throw DomainError("alpha_mu must lie in [0,1)");
  if (!(r_mu > 0.0)) throw DomainError("R~mu must be positive");
  const double r2 = r_mu * r_mu;
  WhiteNoiseRow out{};
  if (alpha_mu == 0.0) {
    out.beta = INFINITY;
    out.g = 0.0;
    out.gamma = 0.0;
    out.b0 = 0.0;
    return out;
  }
  const double ir2 = 1.0 / r2;
  out.beta = (ir2 + 1.0 + ir2 * alpha_mu * alpha_mu - alpha_mu * alpha_mu) / (ir2 * alpha_mu);
  if (out.beta * out.beta < 4.0) throw DomainError("white_noise_inverse_row: beta^2 < 4");
  out.g = (out.beta - std::sqrt(out.beta * out.beta - 4.0)) / (2.0 * ir2 * alpha_mu);
  out.gamma = out.g * alpha_mu / r2;
  out.b0 = alpha_mu * (r2 - out.g) / (r2 * r2);
  return out;
}

}  // namespace skyle
