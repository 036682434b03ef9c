#include "skyle/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "skyle/errors.hpp"

namespace skyle {

CausalKernel::CausalKernel(std::vector<double> values) : v_(std::move(values)) {
  for (double x : v_)
    if (!std::isfinite(x)) throw DomainError("CausalKernel: non-finite entry");
}

CausalKernel CausalKernel::zeros(std::size_t n) { return CausalKernel(std::vector<double>(n, 0.0)); }

CausalKernel CausalKernel::delta(std::size_t n, double weight, std::size_t lag) {
  if (lag >= n) throw SizeError("CausalKernel::delta: lag outside kernel");
  std::vector<double> v(n, 0.0);
  v[lag] = weight;
  return CausalKernel(std::move(v));
}

CausalKernel CausalKernel::geometric(std::size_t n, double amplitude, double rate) {
  std::vector<double> v(n);
  double x = amplitude;
  for (auto& e : v) {
    e = x;
    x *= rate;
  }
  return CausalKernel(std::move(v));
}

CausalKernel CausalKernel::scaled(double c) const {
  std::vector<double> v = v_;
  for (auto& x : v) x *= c;
  return CausalKernel(std::move(v));
}

CausalKernel CausalKernel::resized(std::size_t n) const {
  std::vector<double> v(n, 0.0);
  std::copy_n(v_.begin(), std::min(n, v_.size()), v.begin());
  return CausalKernel(std::move(v));
}

double CausalKernel::sup_distance(const CausalKernel& other) const {
  const std::size_t n = std::max(size(), other.size());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs((*this)[i] - other[i]));
  return d;
}

double CausalKernel::sup_norm() const {
  double d = 0.0;
  for (double x : v_) d = std::max(d, std::abs(x));
  return d;
}

bool CausalKernel::is_zero() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return x == 0.0; });
}

DemandKernels DemandKernels::passive(std::size_t n) {
  return {CausalKernel::zeros(n + 1), CausalKernel::zeros(n + 1), CausalKernel::zeros(n + 1),
          CausalKernel::zeros(n)};
}

}  // namespace skyle
