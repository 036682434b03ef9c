#include "skyle/acf.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "skyle/errors.hpp"

namespace skyle {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be a positive finite number");
  }
}

}  // namespace

AcfSpec::AcfSpec(Family f, double variance) : family_(std::move(f)), variance_(variance) {
  require_positive(variance_, "variance");
}

AcfSpec AcfSpec::exponential(double tau, double variance) {
  require_positive(tau, "tau");
  return AcfSpec(Exponential{tau}, variance);
}

AcfSpec AcfSpec::power_law(double tau0, double gamma, double variance) {
  require_positive(tau0, "tau0");
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw DomainError("power-law exponent gamma must exceed 1 (integrable ACF)");
  }
  return AcfSpec(PowerLaw{tau0, gamma}, variance);
}

AcfSpec AcfSpec::damped_oscillation(double tau1, double tau2, double variance) {
  require_positive(tau1, "tau1");
  require_positive(tau2, "tau2");
  return AcfSpec(DampedOscillation{tau1, tau2}, variance);
}

AcfSpec AcfSpec::white(double variance) { return AcfSpec(White{}, variance); }

AcfSpec AcfSpec::tabulated(std::vector<double> values) {
  if (values.empty()) throw DomainError("tabulated ACF needs at least the lag-0 value");
  const double v0 = values[0];
  require_positive(v0, "tabulated lag-0 value");
  for (auto& x : values) {
    if (!std::isfinite(x)) throw DomainError("tabulated ACF has non-finite entries");
    x /= v0;
  }
  return AcfSpec(Tabulated{std::move(values)}, v0);
}

double AcfSpec::operator()(long lag) const {
  const double k = static_cast<double>(std::labs(lag));
  const double shape = std::visit(
      overloaded{
          [&](const Exponential& e) { return std::exp(-k / e.tau); },
          [&](const PowerLaw& p) { return std::pow(1.0 + k / p.tau0, -p.gamma); },
          [&](const DampedOscillation& d) { return std::exp(-k / d.tau1) * std::cos(k / d.tau2); },
          [&](const White&) { return k == 0.0 ? 1.0 : 0.0; },
          [&](const Tabulated& t) {
            const auto i = static_cast<std::size_t>(std::labs(lag));
            return i < t.shape.size() ? t.shape[i] : 0.0;
          },
      },
      family_);
  return variance_ * shape;
}

double AcfSpec::markov_alpha() const {
  if (const auto* e = std::get_if<Exponential>(&family_)) return std::exp(-1.0 / e->tau);
  if (is_white()) return 0.0;
  throw DomainError("Markov coefficient requested for a non-exponential ACF: " + describe());
}

std::vector<double> AcfSpec::values(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (*this)(static_cast<long>(i));
  return out;
}

AcfSpec AcfSpec::with_variance(double variance) const { return AcfSpec(family_, variance); }

double AcfSpec::effective_timescale() const {
  const double target = variance_ * std::exp(-1.0);
  double prev = (*this)(0);
  for (long k = 1; k < 10'000'000; ++k) {
    const double cur = (*this)(k);
    if (cur <= target) return static_cast<double>(k - 1) + (prev - target) / (prev - cur);
    prev = cur;
  }
  throw TailError("ACF does not decay to 1/e within 1e7 lags");
}

long AcfSpec::tail_horizon(double rel) const {
  const double lr = std::log(rel);
  return std::visit(
      overloaded{
          [&](const Exponential& e) { return static_cast<long>(std::ceil(-e.tau * lr)) + 1; },
          [&](const PowerLaw& p) {
            return static_cast<long>(std::ceil(p.tau0 * (std::pow(rel, -1.0 / (p.gamma - 1.0)) - 1.0))) + 1;
          },
          [&](const DampedOscillation& d) { return static_cast<long>(std::ceil(-d.tau1 * lr)) + 1; },
          [&](const White&) { return 1L; },
          [&](const Tabulated& t) {
            double total = 0.0;
            for (double v : t.shape) total += std::abs(v);
            double tail = 0.0;
            long n = static_cast<long>(t.shape.size());
            while (n > 1 && tail + std::abs(t.shape[n - 1]) < rel * total) tail += std::abs(t.shape[--n]);
            return n;
          },
      },
      family_);
}

std::string AcfSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const Exponential& e) { os << "exponential(tau=" << e.tau; },
                 [&](const PowerLaw& p) { os << "power_law(tau0=" << p.tau0 << ", gamma=" << p.gamma; },
                 [&](const DampedOscillation& d) {
                   os << "damped_oscillation(tau1=" << d.tau1 << ", tau2=" << d.tau2;
                 },
                 [&](const White&) { os << "white("; },
                 [&](const Tabulated& t) { os << "tabulated(n=" << t.shape.size(); },
             },
             family_);
  os << (is_white() ? "" : ", ") << "variance=" << variance_ << ")";
  return os.str();
}

Eigen::MatrixXd toeplitz(const Eigen::VectorXd& r) {
  const Eigen::Index n = r.size();
  if (n <= 0) throw SizeError("toeplitz: size must be positive");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = r(i > j ? i - j : j - i);
  return m;
}

Eigen::MatrixXd toeplitz(const AcfSpec& spec, Eigen::Index n) {
  if (n <= 0) throw SizeError("toeplitz: size must be positive");
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = spec(static_cast<long>(i));
  return toeplitz(r);
}

}  // namespace skyle
