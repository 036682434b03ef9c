#include "skyle/markov.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/Polynomials>

#include "skyle/errors.hpp"

namespace skyle {

namespace {

using cd = std::complex<double>;
using Poly = std::vector<double>;  // coefficients, lowest order first

Poly pmul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly padd(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

Poly pscale(Poly a, double s) {
  for (auto& x : a) x *= s;
  return a;
}

cd peval(const Poly& p, cd z) {
  cd acc = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * z + p[i];
  return acc;
}

cd pderiv_eval(const Poly& p, cd z) {
  cd acc = 0.0;
  for (std::size_t i = p.size(); i-- > 1;) acc = acc * z + static_cast<double>(i) * p[i];
  return acc;
}

std::vector<cd> polynomial_roots(const Poly& p) {
  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) coeffs(static_cast<Eigen::Index>(i)) = p[i];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
  solver.compute(coeffs);
  std::vector<cd> roots;
  for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
    cd z = solver.roots()(i);
    for (int k = 0; k < 3; ++k) {  // Newton polish
      const cd d = pderiv_eval(p, z);
      if (std::abs(d) == 0.0) break;
      z -= peval(p, z) / d;
    }
    roots.push_back(z);
  }
  return roots;
}

// y_n = lambda y_{n-1} + x_n
std::vector<double> geometric_filter(const std::vector<double>& x, double lambda) {
  std::vector<double> y(x.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) y[n] = acc = lambda * acc + x[n];
  return y;
}

// sum_{i,j} x_i y_j lambda^{|tau + i - j|}, tau >= 0, in O(n).
double geometric_form(const std::vector<double>& x, const std::vector<double>& y, double lambda, std::size_t tau) {
  const std::size_t n = y.size();
  std::vector<double> fwd = geometric_filter(y, lambda);
  std::vector<double> bwd(n, 0.0);
  for (std::size_t m = n - 1; m-- > 0;) bwd[m] = lambda * (bwd[m + 1] + y[m + 1]);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t m = i + tau;
    const double inner = m < n ? fwd[m] + bwd[m] : fwd[n - 1] * std::pow(lambda, static_cast<double>(m - n + 1));
    acc += x[i] * inner;
  }
  return acc;
}

std::size_t decay_length(double rate) {
  if (rate <= 0.0) return 8;
  if (rate >= 1.0) throw DomainError("Markov bundle: non-decaying mode");
  const double n = std::log(1e-17) / std::log(rate);
  return static_cast<std::size_t>(std::min(n, 2e6)) + 8;
}

void check_alpha(double a, const char* name) {
  if (!(a > 0.0 && a < 1.0)) throw DomainError(std::string(name) + " must lie in (0,1)");
}

struct Sequences {
  std::vector<double> h, a, b;  // (I-RL)^{-1}, response to q^NT, response to mu
};

Sequences flow_sequences(const MarkovEquilibrium& e, std::size_t L) {
  Sequences s{std::vector<double>(L), std::vector<double>(L), std::vector<double>(L, 0.0)};
  double p1 = 1.0, p2 = 1.0;
  for (std::size_t k = 0; k < L; ++k) {
    s.h[k] = e.kappa * ((k == 0 ? 1.0 : 0.0) + e.Gamma1 * p1 + e.Gamma2 * p2);
    p1 *= e.gamma1;
    p2 *= e.gamma2;
  }
  for (std::size_t k = 0; k < L; ++k) {
    s.a[k] = s.h[k] + (k ? e.R_nt * s.h[k - 1] : 0.0);
    if (k) s.b[k] = e.R_mu * s.h[k - 1];
  }
  return s;
}

std::size_t sequence_length(const MarkovEquilibrium& e) {
  const double rate = std::max({std::abs(e.gamma1), e.single_mode ? 0.0 : std::abs(e.gamma2), e.alpha_mu, e.alpha_nt,
                                std::abs(e.rho)});
  return decay_length(rate);
}

}  // namespace

double MarkovEquilibrium::tau_rho() const { return rho > 0.0 ? -1.0 / std::log(rho) : 0.0; }

CausalKernel MarkovEquilibrium::propagator(std::size_t n) const {
  std::vector<double> v(n);
  double pa = 1.0, pr = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = G0 * (weight_mu * pa + (1.0 - weight_mu) * pr);
    pa *= alpha_mu;
    pr *= rho;
  }
  return CausalKernel(std::move(v));
}

DemandKernels MarkovEquilibrium::demand_kernels(std::size_t n) const {
  DemandKernels k;
  std::vector<double> r(n + 1, 0.0);
  double pa = 1.0, pr = 1.0;
  for (std::size_t lag = 1; lag <= n; ++lag) {
    pa *= alpha_mu;
    pr *= rho;
    r[lag] = -weight_mu * pa * S_alpha - (1.0 - weight_mu) * pr * S_rho;
  }
  k.R = CausalKernel(std::move(r));
  k.R_nt = CausalKernel::delta(n + 1, R_nt, 1);
  k.R_mu = CausalKernel::delta(n + 1, R_mu, 1);
  k.source_G = propagator(n);
  return k;
}

std::vector<double> MarkovEquilibrium::excess_demand_acf(std::size_t max_lag) const {
  std::vector<double> v(max_lag + 1);
  double p = 1.0;
  for (std::size_t k = 0; k <= max_lag; ++k) {
    v[k] = a * (p + (k == 0 ? b_tilde : 0.0));
    p *= alpha_nt;
  }
  return v;
}

CausalKernel closed_form_uncorrelated(double alpha_mu, double xi0, double omega0_nt, std::size_t n) {
  if (!(alpha_mu >= 0.0 && alpha_mu < 1.0)) throw DomainError("alpha_mu must lie in [0,1)");
  if (!(xi0 > 0.0 && omega0_nt > 0.0)) throw DomainError("variances must be positive");
  if (alpha_mu == 0.0) return CausalKernel::zeros(n);
  const double a2 = alpha_mu * alpha_mu;
  const double g0 = std::sqrt(xi0 / omega0_nt) * alpha_mu / (1.0 - alpha_mu) *
                    (1.0 - (1.0 - std::sqrt(1.0 - a2)) / a2);
  return CausalKernel::geometric(n, g0, alpha_mu);
}

double b_tilde_from_rho(double rho, double alpha_nt) {
  const double an2 = alpha_nt * alpha_nt;
  return rho * (1.0 - an2) / (alpha_nt * (1.0 + rho * rho) - rho * (1.0 + an2));
}

double equal_timescales_root(double alpha) {
  check_alpha(alpha, "alpha");
  const double a2 = alpha * alpha;
  const auto roots = polynomial_roots({-a2, 2.0 * a2 * alpha + 2.0 * alpha, -3.0 * a2, 0.0, 1.0});
  double best = -1.0;
  for (const cd& z : roots)
    if (std::abs(z.imag()) <= 1e-9 * std::max(1.0, std::abs(z)) && z.real() > 0.0) {
      if (best > 0.0) throw DomainError("equal-timescales quartic has several positive roots");
      best = z.real();
    }
  if (!(best > 0.0)) throw DomainError("equal-timescales quartic has no positive real root");
  return best;
}

MarkovEquilibrium markov_bundle_at(double am, double an, double rho, double xi0, double om0) {
  check_alpha(am, "alpha_mu");
  check_alpha(an, "alpha_nt");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in (0,1)");
  MarkovEquilibrium e;
  e.alpha_mu = am;
  e.alpha_nt = an;
  e.xi0 = xi0;
  e.omega0_nt = om0;
  e.rho = rho;
  e.single_mode = std::abs(am - an) <= 1e-14;
  const double c = e.single_mode ? 0.0 : (am - an) / (am - rho);
  e.weight_mu = c;

  cd g1, g2, G1, G2;
  if (e.single_mode) {
    g1 = (1.0 - std::sqrt(1.0 - rho * rho)) / rho;
    g2 = am;
    G1 = -(rho - g1) / rho;
    G2 = 0.0;
  } else {
    // c (a_mu^2-1) g (1-rho g)(rho-g) + (1-c)(rho^2-1) g (1-a_mu g)(a_mu-g) + (1-a_mu g)(a_mu-g)(1-rho g)(rho-g)
    const Poly pa = pmul({1.0, -am}, {am, -1.0});
    const Poly pr = pmul({1.0, -rho}, {rho, -1.0});
    Poly poly = pscale(pmul({0.0, am * am - 1.0}, pr), c);
    poly = padd(poly, pscale(pmul({0.0, rho * rho - 1.0}, pa), 1.0 - c));
    poly = padd(poly, pmul(pa, pr));
    std::vector<cd> inside;
    for (const cd& z : polynomial_roots(poly))
      if (std::abs(z) < 1.0) inside.push_back(z);
    if (inside.size() != 2) throw DomainError("characteristic equation does not have two roots inside the unit disk");
    std::sort(inside.begin(), inside.end(), [](cd x, cd y) { return std::abs(x) > std::abs(y); });
    g1 = inside[0];
    g2 = inside[1];
    if (std::abs(g1 - g2) < 1e-12) throw DomainError("characteristic roots coalesce");
    // [am/(am-g1) am/(am-g2); rho/(rho-g1) rho/(rho-g2)] [G1; G2] = [-1; -1]
    const cd m11 = am / (am - g1), m12 = am / (am - g2), m21 = rho / (rho - g1), m22 = rho / (rho - g2);
    const cd det = m11 * m22 - m12 * m21;
    G1 = (-m22 + m12) / det;
    G2 = (-m11 + m21) / det;
  }
  const cd kappa = e.single_mode ? cd(rho) / g1 : cd(am * rho) / (g1 * g2);
  const cd sa = G1 / (1.0 - g1 * am) + G2 / (1.0 - g2 * am) + 1.0;
  const cd sr = G1 / (1.0 - g1 * rho) + G2 / (1.0 - g2 * rho) + 1.0;
  const cd rnt_c =
      -an * (c * (G1 / ((1.0 - am * g1) * (1.0 - an * g1)) + G2 / ((1.0 - am * g2) * (1.0 - an * g2))) +
             (1.0 - c) * (G1 / ((1.0 - an * g1) * (1.0 - rho * g1)) + G2 / ((1.0 - an * g2) * (1.0 - rho * g2))) + 1.0);

  e.max_imag = std::max({std::abs(g1.imag()), std::abs(g2.imag()), std::abs(G1.imag()), std::abs(G2.imag())});
  e.gamma1 = g1.real();
  e.gamma2 = g2.real();
  e.Gamma1 = G1.real();
  e.Gamma2 = G2.real();
  e.kappa = kappa.real();
  e.S_alpha = sa.real();
  e.S_rho = sr.real();
  e.R_nt = rnt_c.real();
  const double rr = e.R_nt * e.R_nt + 2.0 * an * e.R_nt + 1.0;
  if (!(rr > 0.0)) throw DomainError("R^mu identity has no real solution at this rho");
  e.R_mu = std::sqrt(om0 / xi0) * std::sqrt(rr);
  e.G0 = am * e.S_alpha / ((1.0 - am) * e.R_mu);
  e.b_tilde = b_tilde_from_rho(rho, an);

  if (e.max_imag > 1e-9) {
    // Complex modes at trial rho: keep the real-arithmetic quantities, flag via max_imag.
    e.root_defect = std::numeric_limits<double>::quiet_NaN();
  }
  const auto seq = flow_sequences(e, sequence_length(e));
  e.omega0_decomposition = om0 * geometric_form(seq.a, seq.a, an, 0) + xi0 * geometric_form(seq.b, seq.b, am, 0);
  e.omega1_decomposition = om0 * geometric_form(seq.a, seq.a, an, 1) + xi0 * geometric_form(seq.b, seq.b, am, 1);
  if (e.max_imag <= 1e-9) e.root_defect = e.omega0_decomposition - (1.0 + e.b_tilde) * e.omega1_decomposition / an;

  const double bracket = e.b_tilde + c / (1.0 - am * an) + (1.0 - c) / (1.0 - an * rho);
  e.a = xi0 * e.R_mu * e.R_mu * e.kappa / bracket;
  e.omega0 = e.a * (1.0 + e.b_tilde);
  return e;
}

MarkovEquilibrium solve_markov_ansatz(double am, double an, double xi0, double om0) {
  check_alpha(am, "alpha_mu");
  check_alpha(an, "alpha_nt");
  if (!(xi0 > 0.0 && om0 > 0.0)) throw DomainError("variances must be positive");
  auto defect = [&](double rho) {
    if (std::abs(rho - am) < 1e-9) rho = am + (rho < am ? -2e-9 : 2e-9);
    try {
      return markov_bundle_at(am, an, rho, xi0, om0).root_defect;
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const double lo0 = 1e-6, hi0 = an - 1e-6;
  constexpr int kScan = 400;
  double prev_x = lo0, prev_d = defect(lo0);
  double lo = 0.0, hi = 0.0, dlo = 0.0;
  bool found = false;
  for (int i = 1; i <= kScan && !found; ++i) {
    const double x = lo0 + (hi0 - lo0) * i / kScan;
    const double d = defect(x);
    if (std::isfinite(prev_d) && std::isfinite(d) && (prev_d > 0.0) != (d > 0.0)) {
      lo = prev_x;
      hi = x;
      dlo = prev_d;
      found = true;
    }
    prev_x = x;
    prev_d = d;
  }
  if (!found) throw BracketingError("no sign change of the rho defect on (1e-6, alpha_NT - 1e-6)");
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double d = defect(mid);
    if (!std::isfinite(d)) throw BracketingError("rho defect undefined inside the bracket");
    if ((d > 0.0) == (dlo > 0.0)) {
      lo = mid;
      dlo = d;
    } else {
      hi = mid;
    }
  }
  double rho = 0.5 * (lo + hi);
  if (std::abs(rho - am) < 1e-9) rho = am + (rho < am ? -2e-9 : 2e-9);
  return markov_bundle_at(am, an, rho, xi0, om0);
}

MarkovEquilibrium closed_form_equal_timescales(double alpha, double xi0, double om0) {
  const double r = equal_timescales_root(alpha);
  const double rho = r / (1.0 + r * r - r * alpha);
  MarkovEquilibrium e = markov_bundle_at(alpha, alpha, rho, xi0, om0);
  e.R_nt = -r;
  e.R_mu = std::sqrt(om0 / xi0) * std::sqrt(1.0 + r * r - 2.0 * r * alpha);
  const double x = r * r - alpha * r + 1.0;
  e.G0 = std::sqrt(xi0 / om0) * alpha * std::sqrt(r * r - 2.0 * alpha * r + 1.0) /
         ((1.0 - alpha) * r * (-3.0 * alpha + r * (2.0 - 1.0 / (x * (std::sqrt(1.0 - r * r / (x * x)) + 1.0))) + 2.0 / r));
  return e;
}

MarkovObservables markov_observables(const MarkovEquilibrium& e) {
  MarkovObservables o;
  const double am = e.alpha_mu, an = e.alpha_nt;
  const auto seq = flow_sequences(e, sequence_length(e));
  const double c = e.weight_mu;
  auto through_g = [&](const std::vector<double>& x) {
    const auto ya = geometric_filter(x, am);
    const auto yr = geometric_filter(x, e.rho);
    std::vector<double> y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = e.G0 * (c * ya[k] + (1.0 - c) * yr[k]);
    return y;
  };
  const auto ga = through_g(seq.a);
  const auto gb = through_g(seq.b);
  o.sigma0 = e.omega0_nt * geometric_form(ga, ga, an, 0) + e.xi0 * geometric_form(gb, gb, am, 0);
  const double lead = am / (1.0 - am);
  o.sigma0_it = e.xi0 * lead * lead;
  o.sigma_ratio = o.sigma0 / o.sigma0_it;

  const double om0 = e.omega0_decomposition;
  o.omega_ratio = om0 / e.omega0_nt;

  // Sums against a geometric ACF of the single series at lag offset.
  auto weighted = [](const std::vector<double>& x, double lambda, long shift) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += x[k] * std::pow(lambda, std::abs(static_cast<long>(k) - shift));
    return acc;
  };
  const double scale = std::sqrt(e.xi0 * e.omega0_nt);
  o.nt_loss_per_trade = e.omega0_nt * weighted(ga, an, 0) / scale;
  const double cov_p_pit = lead * e.xi0 * weighted(gb, am, 1);
  o.price_error_var = o.sigma0 - 2.0 * cov_p_pit + o.sigma0_it;
  o.mm_risk_per_trade = om0 * o.price_error_var / (e.xi0 * e.omega0_nt);
  o.it_nt_cov_ratio = weighted(seq.a, an, 0) - 1.0;
  o.it_mu_cov = e.xi0 * weighted(seq.b, am, 0) / scale;
  return o;
}

ContinuumLimit continuum_limit_G(double tau_mu, double tau_nt) {
  if (!(tau_mu > 0.0 && tau_nt > 0.0)) throw DomainError("timescales must be positive");
  return {1.0, (tau_mu - tau_nt) / (tau_mu * tau_nt), std::exp(-1.0 / tau_mu)};
}

ContinuumLimit discrete_delta_decomposition(const MarkovEquilibrium& e) {
  const double c = e.weight_mu;
  const double delta = (1.0 - c) / (1.0 - e.rho);
  return {delta, c / delta, e.alpha_mu};
}

RhoFit fit_rho(const CausalKernel& G, double am, double an, std::size_t max_lag) {
  check_alpha(am, "alpha_mu");
  check_alpha(an, "alpha_nt");
  const std::size_t n = std::min(max_lag + 1, G.size());
  auto evaluate = [&](double rho) {
    const double c = std::abs(am - an) <= 1e-14 ? 0.0 : (am - an) / (am - rho);
    std::vector<double> f(n);
    double pa = 1.0, pr = 1.0, ff = 0.0, fg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      f[k] = c * pa + (1.0 - c) * pr;
      ff += f[k] * f[k];
      fg += f[k] * G[k];
      pa *= am;
      pr *= rho;
    }
    const double amp = ff > 0.0 ? fg / ff : 0.0;
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) ss += (G[k] - amp * f[k]) * (G[k] - amp * f[k]);
    return RhoFit{rho, amp, std::sqrt(ss / static_cast<double>(n))};
  };
  auto obj = [&](double rho) {
    if (std::abs(rho - am) < 1e-7) rho += 2e-7;
    return evaluate(rho).rms_residual;
  };
  // Coarse scan then golden-section refinement around the best grid point.
  constexpr int kScan = 2000;
  double best_x = 0.5, best_v = std::numeric_limits<double>::infinity();
  for (int i = 1; i < kScan; ++i) {
    const double x = static_cast<double>(i) / kScan;
    const double v = obj(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  double a = std::max(1e-9, best_x - 1.0 / kScan), b = std::min(1.0 - 1e-9, best_x + 1.0 / kScan);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = obj(x1), f2 = obj(x2);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = obj(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = obj(x2);
    }
  }
  return evaluate(0.5 * (a + b));
}

}  // namespace skyle
