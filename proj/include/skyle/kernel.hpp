#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace skyle {

// Causal lag kernel; entry tau is the weight at lag tau >= 0, zero past the stored length.
class CausalKernel {
 public:
  CausalKernel() = default;
  explicit CausalKernel(std::vector<double> values);

  static CausalKernel zeros(std::size_t n);
  static CausalKernel delta(std::size_t n, double weight = 1.0, std::size_t lag = 0);
  static CausalKernel geometric(std::size_t n, double amplitude, double rate);

  double operator[](std::size_t lag) const { return lag < v_.size() ? v_[lag] : 0.0; }
  double& at(std::size_t lag) { return v_.at(lag); }
  std::size_t size() const { return v_.size(); }
  std::span<const double> values() const { return v_; }
  const std::vector<double>& vector() const { return v_; }

  CausalKernel scaled(double c) const;
  CausalKernel resized(std::size_t n) const;
  double sup_distance(const CausalKernel& other) const;
  double sup_norm() const;
  bool is_zero() const;

 private:
  std::vector<double> v_;
};

// Insider demand kernels, indexed by actual lag (entry 0 is always zero):
//   q^IT_t = sum_{tau>=1} R[tau] q_{t-tau} + R_nt[tau] q^NT_{t-tau} + R_mu[tau] mu_{t-tau}.
struct DemandKernels {
  CausalKernel R;
  CausalKernel R_nt;
  CausalKernel R_mu;
  CausalKernel source_G;

  static DemandKernels passive(std::size_t n);
};

}  // namespace skyle
