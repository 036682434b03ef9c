#include <cmath>
#include <complex>
#include <mutex>
#include <random>

#include <fftw3.h>

#include "skyle/errors.hpp"
#include "skyle/linalg.hpp"
#include "skyle/market_sim.hpp"

namespace skyle {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(buf_); }
  void run() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

bool circulant_embedding(const AcfSpec& spec, std::size_t T, std::mt19937_64& rng, GaussianPath& out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t m = std::max<std::size_t>(2, next_pow2(2 * (T - 1)));
  for (int attempt = 0; attempt < 3; ++attempt, m *= 2) {
    Fft fft(m);
    auto* z = fft.data();
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t lag = k <= m / 2 ? k : m - k;
      z[k] = spec(static_cast<long>(lag));
    }
    fft.run();
    std::vector<double> lambda(m);
    double lmax = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      lambda[k] = z[k].real();
      lmax = std::max(lmax, lambda[k]);
    }
    double neg = 0.0, total = 0.0;
    bool ok = true;
    for (auto& l : lambda) {
      total += std::abs(l);
      if (l < 0.0) {
        if (-l > 1e-8 * lmax) ok = false;
        neg += -l;
        l = 0.0;
      }
    }
    if (!ok) continue;
    for (std::size_t k = 0; k < m; ++k) {
      const double s = std::sqrt(lambda[k] / static_cast<double>(m));
      const double re = normal(rng);
      const double im = normal(rng);
      z[k] = std::complex<double>(s * re, s * im);
    }
    fft.run();
    out.values.resize(T);
    for (std::size_t t = 0; t < T; ++t) out.values[t] = z[t].real();
    out.method = PathMethod::CirculantEmbedding;
    out.embedding_size = m;
    out.clipped_eigen_mass = total > 0.0 ? neg / total : 0.0;
    return true;
  }
  return false;
}

void windowed_conditional(const AcfSpec& spec, std::size_t T, std::size_t W, std::mt19937_64& rng,
                          GaussianPath& out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  W = std::max<std::size_t>(1, std::min(W, T));
  const auto acf = spec.values(W + 1);
  const auto chol = cholesky_with_jitter(toeplitz(spec, static_cast<Eigen::Index>(W)), spec.variance(),
                                         "path generator window");
  Eigen::VectorXd z(static_cast<Eigen::Index>(W));
  for (auto& v : z) v = normal(rng);
  const Eigen::VectorXd head = chol.llt.matrixL() * z;
  out.values.assign(T, 0.0);
  for (std::size_t t = 0; t < W; ++t) out.values[t] = head(static_cast<Eigen::Index>(t));
  if (T > W) {
    const auto pred = levinson_durbin(acf, static_cast<Eigen::Index>(W));
    const double sd = std::sqrt(pred.innovation_variance);
    for (std::size_t t = W; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < W; ++k) acc += pred.coeffs(static_cast<Eigen::Index>(k)) * out.values[t - 1 - k];
      out.values[t] = acc + sd * normal(rng);
    }
  }
  out.method = PathMethod::WindowedConditional;
  out.embedding_size = W;
}

}  // namespace

const char* path_method_name(PathMethod m) {
  switch (m) {
    case PathMethod::White: return "white";
    case PathMethod::Ar1: return "ar1";
    case PathMethod::CirculantEmbedding: return "circulant_embedding";
    case PathMethod::WindowedConditional: return "windowed_conditional";
  }
  return "unknown";
}

GaussianPath sample_stationary_gaussian(const AcfSpec& spec, std::size_t T, std::uint64_t seed,
                                        std::size_t fallback_window) {
  if (T < 1) throw SizeError("sample_stationary_gaussian: T must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianPath out;
  const double sd = std::sqrt(spec.variance());
  if (spec.is_white()) {
    out.values.resize(T);
    for (auto& x : out.values) x = sd * normal(rng);
    out.method = PathMethod::White;
    return out;
  }
  if (spec.is_exponential()) {
    const double a = spec.markov_alpha();
    const double innov = sd * std::sqrt(1.0 - a * a);
    out.values.resize(T);
    double x = sd * normal(rng);
    out.values[0] = x;
    for (std::size_t t = 1; t < T; ++t) out.values[t] = x = a * x + innov * normal(rng);
    out.method = PathMethod::Ar1;
    return out;
  }
  if (T == 1) {
    out.values = {sd * normal(rng)};
    return out;
  }
  if (circulant_embedding(spec, T, rng, out)) return out;
  windowed_conditional(spec, T, fallback_window ? fallback_window : 512, rng, out);
  return out;
}

}  // namespace skyle
