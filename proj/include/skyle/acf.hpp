#pragma once

#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace skyle {

// Shapes are normalized to 1 at lag 0; the variance is carried separately.
struct Exponential {
  double tau;
};
struct PowerLaw {
  double tau0;
  double gamma;
};
struct DampedOscillation {
  double tau1;
  double tau2;
};
struct White {};
// Raw shape at lags 0..n-1, zero beyond. Positive-definiteness is the caller's claim.
struct Tabulated {
  std::vector<double> shape;
};

class AcfSpec {
 public:
  using Family = std::variant<Exponential, PowerLaw, DampedOscillation, White, Tabulated>;

  static AcfSpec exponential(double tau, double variance = 1.0);
  static AcfSpec power_law(double tau0, double gamma, double variance = 1.0);
  static AcfSpec damped_oscillation(double tau1, double tau2, double variance = 1.0);
  static AcfSpec white(double variance = 1.0);
  static AcfSpec tabulated(std::vector<double> values);

  double operator()(long lag) const;
  double variance() const { return variance_; }
  const Family& family() const { return family_; }

  bool is_white() const { return std::holds_alternative<White>(family_); }
  bool is_exponential() const { return std::holds_alternative<Exponential>(family_); }
  // e^{-1/tau} for the exponential family, 0 for white noise; throws otherwise.
  double markov_alpha() const;

  // Values at lags 0..n-1.
  std::vector<double> values(std::size_t n) const;
  AcfSpec with_variance(double variance) const;

  // Lag at which acf/variance first drops to 1/e (linear interpolation between integer lags).
  double effective_timescale() const;
  // Smallest lag beyond which the one-sided |acf| mass is below rel of the total.
  long tail_horizon(double rel) const;

  std::string describe() const;

 private:
  AcfSpec(Family f, double variance);
  Family family_;
  double variance_;
};

inline double acf_eval(const AcfSpec& spec, long lag) { return spec(lag); }

// Dense symmetric Toeplitz block with entry (i,j) = acf(i-j).
Eigen::MatrixXd toeplitz(const AcfSpec& spec, Eigen::Index n);
Eigen::MatrixXd toeplitz(const Eigen::VectorXd& first_row);

}  // namespace skyle
