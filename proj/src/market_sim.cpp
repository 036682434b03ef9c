#include "skyle/market_sim.hpp"

#include <algorithm>
#include <cmath>

#include "skyle/errors.hpp"
#include "skyle/linalg.hpp"

namespace skyle {

namespace {

// Neumaier compensated running sum.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t effective_length(const CausalKernel& k) {
  std::size_t n = k.size();
  while (n > 0 && k[n - 1] == 0.0) --n;
  return n;
}

struct Agent {
  Accumulator cash, position, wealth;
  double prev_position = 0.0;
};

}  // namespace

MarketPath simulate_market(const CausalKernel& G, const DemandKernels& kernels, const AcfSpec& xi, const AcfSpec& nt,
                           std::size_t T, std::size_t burn_in, std::uint64_t seed) {
  if (T <= burn_in) throw SizeError("simulate_market: T must exceed burn_in");
  if (burn_in < G.size()) throw SizeError("simulate_market: burn_in must be >= T_cut");
  MarketPath path;
  path.burn_in = burn_in;
  path.rng_seed = seed;
  auto mu_path = sample_stationary_gaussian(xi, T, splitmix64(seed ^ 0x6d75ULL));
  auto nt_path = sample_stationary_gaussian(nt, T, splitmix64(seed ^ 0x6e74ULL));
  path.mu = std::move(mu_path.values);
  path.q_nt = std::move(nt_path.values);
  path.mu_method = mu_path.method;
  path.nt_method = nt_path.method;
  path.q_it.assign(T, 0.0);
  path.q.assign(T, 0.0);
  path.p.assign(T, 0.0);
  for (auto* acc : {&path.it, &path.nt, &path.mm}) {
    acc->cash.resize(T);
    acc->position.resize(T);
    acc->wealth.resize(T);
  }

  const std::size_t nR = std::max({effective_length(kernels.R), effective_length(kernels.R_nt),
                                   effective_length(kernels.R_mu)});
  const std::size_t nG = effective_length(G);
  std::vector<double> R(nR), Rn(nR), Rm(nR), g(nG);
  for (std::size_t k = 0; k < nR; ++k) {
    R[k] = kernels.R[k];
    Rn[k] = kernels.R_nt[k];
    Rm[k] = kernels.R_mu[k];
  }
  for (std::size_t k = 0; k < nG; ++k) g[k] = G[k];

  const double* mu = path.mu.data();
  const double* qn = path.q_nt.data();
  double* q = path.q.data();
  Agent agents[3];
  AgentAccounts* books[3] = {&path.it, &path.nt, &path.mm};
  double prev_p = 0.0;
  ConservationReport& rep = path.conservation;

  for (std::size_t t = 0; t < T; ++t) {
    double qit = 0.0;
    const std::size_t top = std::min(t, nR == 0 ? 0 : nR - 1);
    for (std::size_t k = 1; k <= top; ++k) qit += R[k] * q[t - k] + Rn[k] * qn[t - k] + Rm[k] * mu[t - k];
    const double qt = qit + qn[t];
    const double qmm = -qt;
    q[t] = qt;
    path.q_it[t] = qit;
    double pt = 0.0;
    const std::size_t gtop = std::min(t + 1, nG);
    for (std::size_t k = 0; k < gtop; ++k) pt += g[k] * q[t - k];
    path.p[t] = pt;

    const double trades[3] = {qit, qn[t], qmm};
    double dc_sum = 0.0, dc_abs = 0.0, pos_sum = 0.0, pos_abs = 0.0, inc_defect = 0.0;
    for (int i = 0; i < 3; ++i) {
      Agent& a = agents[i];
      a.position.add(trades[i]);
      const double Q = a.position.value();
      const double dC = mu[t] * Q - pt * trades[i];
      a.cash.add(dC);
      a.wealth.add(dC + Q * pt - a.prev_position * prev_p);
      inc_defect = std::max(inc_defect, std::abs((Q - a.prev_position) - trades[i]));
      a.prev_position = Q;
      books[i]->position[t] = Q;
      books[i]->cash[t] = a.cash.value();
      books[i]->wealth[t] = a.wealth.value();
      dc_sum += dC;
      dc_abs += std::abs(dC);
      pos_sum += Q;
      pos_abs += std::abs(Q) + std::abs(trades[i]);
    }
    rep.clearing = std::max(rep.clearing, std::abs(trades[0] + trades[1] + trades[2]));
    const double pscale = pos_abs > 0.0 ? pos_abs : 1.0;
    rep.position = std::max(rep.position, std::max(std::abs(pos_sum), inc_defect) / pscale);
    const double cscale = dc_abs + std::abs(mu[t]) * pos_abs;
    rep.cash = std::max(rep.cash, std::abs(dc_sum - mu[t] * pos_sum) / (cscale > 0.0 ? cscale : 1.0));
    prev_p = pt;
  }
  rep.steps = T;
  return path;
}

std::vector<double> empirical_acf(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  if (max_lag >= n) throw SizeError("empirical_acf: max_lag must be below the series length");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - mean;
  std::vector<double> out(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += d[i] * d[i + k];
    out[k] = acc / static_cast<double>(n);
  }
  return out;
}

Estimate batch_means(std::span<const double> x, std::size_t batches) {
  if (batches < 2) throw SizeError("batch_means: need at least two batches");
  const std::size_t len = x.size() / batches;
  if (len == 0) throw SizeError("batch_means: series shorter than the number of batches");
  std::vector<double> m(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < len; ++i) acc += x[b * len + i];
    m[b] = acc / static_cast<double>(len);
  }
  double mean = 0.0;
  for (double v : m) mean += v;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double v : m) var += (v - mean) * (v - mean);
  var /= static_cast<double>(batches - 1);
  return {mean, std::sqrt(var / static_cast<double>(batches))};
}

PayoffStats payoff_and_risk_stats(const MarketPath& path, const AcfSpec& xi, std::size_t window, std::size_t batches) {
  const std::size_t T = path.size();
  if (window == 0 || window > path.burn_in) throw SizeError("payoff stats: window must lie in [1, burn_in]");
  const long H = xi.tail_horizon(1e-10);
  const std::size_t start = path.burn_in;
  if (H < 1 || static_cast<std::size_t>(H) * 2 >= T - start)
    throw TailError("path too short for the forward dividend sum (horizon " + std::to_string(H) + ")");
  const std::size_t horizon = static_cast<std::size_t>(H);
  const std::size_t end = T - horizon;  // samples whose forward window is complete

  const GaussianForecaster fc(xi, static_cast<Eigen::Index>(window), static_cast<Eigen::Index>(window));
  const Eigen::VectorXd w = fc.left_apply(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(window)));
  std::vector<double> cum(T + 1, 0.0);
  for (std::size_t t = 0; t < T; ++t) cum[t + 1] = cum[t] + path.mu[t];

  const std::size_t n = end - start;
  std::vector<double> mm(n), nt(n), it(n), risk(n), mmf(n), ntf(n), itf(n), riskf(n), q2(n), pe2(n), bal(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = start + s;
    double pit = 0.0;
    for (std::size_t j = 0; j < window; ++j) pit += w(static_cast<Eigen::Index>(j)) * path.mu[t - window + j];
    const double pf = cum[t + horizon] - cum[t];
    const double dev = path.p[t] - pit;
    const double devf = path.p[t] - pf;
    mm[s] = path.q[t] * dev;
    nt[s] = path.q_nt[t] * dev;
    it[s] = -path.q_it[t] * dev;
    risk[s] = mm[s] * mm[s];
    mmf[s] = path.q[t] * devf;
    ntf[s] = path.q_nt[t] * devf;
    itf[s] = -path.q_it[t] * devf;
    riskf[s] = mmf[s] * mmf[s];
    q2[s] = path.q[t] * path.q[t];
    pe2[s] = dev * dev;
    bal[s] = it[s] - nt[s];
  }
  PayoffStats st;
  st.samples = n;
  st.horizon = horizon;
  st.batches = batches;
  st.mm_drift = batch_means(mm, batches);
  st.nt_loss = batch_means(nt, batches);
  st.it_gain = batch_means(it, batches);
  st.mm_risk = batch_means(risk, batches);
  st.mm_drift_fundamental = batch_means(mmf, batches);
  st.nt_loss_fundamental = batch_means(ntf, batches);
  st.it_gain_fundamental = batch_means(itf, batches);
  st.mm_risk_fundamental = batch_means(riskf, batches);
  st.gain_balance = batch_means(bal, batches);

  // Wick product and its difference to the direct estimate, linearized per batch.
  const Estimate mq = batch_means(q2, batches);
  const Estimate me = batch_means(pe2, batches);
  const std::size_t len = n / batches;
  std::vector<double> lin(batches * len), diff(batches * len);
  for (std::size_t s = 0; s < batches * len; ++s) {
    lin[s] = me.mean * q2[s] + mq.mean * pe2[s] - mq.mean * me.mean;
    diff[s] = risk[s] - lin[s];
  }
  st.mm_risk_wick = {mq.mean * me.mean, batch_means(lin, batches).se};
  st.risk_difference = batch_means(diff, batches);
  return st;
}

Estimate lag0_excess(const MarketPath& path, const AcfSpec& nt, std::size_t batches) {
  const double r = nt(1);
  if (r == 0.0) throw DegenerateInputError("lag0_excess: NT ACF vanishes at lag 1");
  const double ratio = nt(0) / r;
  const std::size_t start = path.burn_in, T = path.size();
  std::vector<double> y;
  y.reserve(T - start);
  for (std::size_t t = start; t + 1 < T; ++t) y.push_back(path.q[t] * path.q[t] - ratio * path.q[t] * path.q[t + 1]);
  return batch_means(y, batches);
}

}  // namespace skyle
