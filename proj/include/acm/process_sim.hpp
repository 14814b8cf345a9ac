#pragma once

// Gaussian process samplers (exact block-Toeplitz and circulant), the two
// routes to the lag-L empirical autocovariance, and sampler sanity checks.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/core.hpp"
#include "acm/rng.hpp"
#include "acm/spectral_model.hpp"

namespace acm {

enum class SamplerKind : std::uint32_t { Exact = 0, Circulant = 1 };

struct SampleBlock {
  CMatrix X;  // N x n, columns x_k (already carrying the 1/sqrt(n) scaling)
  CMatrix Y;  // Y = X F
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  SamplerKind sampler = SamplerKind::Exact;
};

// Hermitian PSD square root; eigenvalues below clamp_tol (quadrature noise)
// are clamped to zero.
inline CMatrix psd_sqrt(const CMatrix& a, double clamp_tol = 1e-12) {
  require_hermitian(a, "psd_sqrt");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  const RVector ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev(ev.size() - 1)), 1.0);
  CVector root(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double v = ev(i);
    if (v < 0.0) {
      if (v < -clamp_tol * scale) throw std::invalid_argument("psd_sqrt: matrix is not PSD");
      v = 0.0;
    }
    root(i) = std::sqrt(v);
  }
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

// vec X = R^{1/2} xi with xi standard circular complex Gaussian and R the
// block-Toeplitz window covariance (which already carries the 1/n factor).
inline SampleBlock sample_exact(const SpectralDensityModel& model, Eigen::Index n,
                                std::uint64_t seed, std::uint64_t stream = 0,
                                Eigen::Index budget = 4096) {
  const Eigen::Index nd = model.dim();
  const CMatrix cov = model.block_toeplitz_cov(n, budget);
  const CMatrix root = psd_sqrt(cov);
  CounterRng rng(seed, stream);
  const CVector xi = rng.complex_normal_vector(nd * n);
  const CVector vx = root * xi;
  SampleBlock b;
  b.X = Eigen::Map<const CMatrix>(vx.data(), nd, n);
  b.Y = b.X * FourierPack(n).F;
  b.seed = seed;
  b.stream = stream;
  b.sampler = SamplerKind::Exact;
  return b;
}

// Independent frequency-domain columns w_k ~ N_C(0, S(e^{2 pi i k/n})/n);
// Y = W, X = Y F*. Exactly stationary under the circular model.
inline SampleBlock sample_circulant(const SpectralDensityModel& model, Eigen::Index n,
                                    std::uint64_t seed, std::uint64_t stream = 0) {
  const Eigen::Index nd = model.dim();
  CounterRng rng(seed, stream);
  SampleBlock b;
  b.Y.resize(nd, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    if (model.has_factor()) {
      // S = C C*, so C xi / sqrt(n) has the right covariance without an eigendecomposition.
      b.Y.col(k) = model.factor(theta) * rng.complex_normal_vector(nd) / std::sqrt(static_cast<double>(n));
    } else {
      const CMatrix root = psd_sqrt(herm_part(model.evaluate(theta)));
      b.Y.col(k) = root * rng.complex_normal_vector(nd) / std::sqrt(static_cast<double>(n));
    }
  }
  b.X = b.Y * FourierPack(n).F.adjoint();
  b.seed = seed;
  b.stream = stream;
  b.sampler = SamplerKind::Circulant;
  return b;
}

// Time-domain route: sum_l x_{(l+L) mod n} x_l^*.
inline CMatrix empirical_autocov_time(const SampleBlock& block, Eigen::Index lag) {
  const Eigen::Index n = block.X.cols();
  if (lag < 0 || lag >= n) throw std::out_of_range("empirical_autocov: lag out of [0, n)");
  CMatrix r = CMatrix::Zero(block.X.rows(), block.X.rows());
  for (Eigen::Index l = 0; l < n; ++l) r += block.X.col((l + lag) % n) * block.X.col(l).adjoint();
  return r;
}

// Frequency-domain route: Y Omega^L Y^*.
inline CMatrix empirical_autocov_freq(const SampleBlock& block, Eigen::Index lag) {
  const Eigen::Index n = block.Y.cols();
  if (lag < 0 || lag >= n) throw std::out_of_range("empirical_autocov: lag out of [0, n)");
  CMatrix scaled = block.Y;
  const Complex omega = std::exp(-2.0 * kPi * kI / static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k) scaled.col(k) *= std::pow(omega, static_cast<double>(k * lag));
  return scaled * block.Y.adjoint();
}

// Default route with an optional dual-path cross-check.
inline CMatrix empirical_autocov(const SampleBlock& block, Eigen::Index lag, bool cross_check = false,
                                 double tol = 1e-10) {
  CMatrix r = empirical_autocov_time(block, lag);
  if (cross_check) {
    const double dev = (r - empirical_autocov_freq(block, lag)).cwiseAbs().maxCoeff();
    const double scale = std::max(r.cwiseAbs().maxCoeff(), 1.0);
    if (dev > tol * scale)
      throw std::runtime_error("empirical_autocov: dual-path mismatch " + std::to_string(dev));
  }
  return r;
}

struct GaussianTailReport {
  double t = 0.0;
  double empirical = 0.0;  // frequency of ||Sigma^{1/2} xi|| >= sqrt(2 N t)
  double bound = 0.0;      // exp(-(t/||Sigma|| - 1) N), upper tail
  double std_error = 0.0;
  int trials = 0;
};

// Upper-tail sanity for Gaussian quadratic norms.
inline std::vector<GaussianTailReport> gaussian_sanity(const CMatrix& sigma,
                                                       const std::vector<double>& t_grid,
                                                       int trials, std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("gaussian_sanity: need >= 100 trials");
  require_hermitian(sigma, "gaussian_sanity");
  const Eigen::Index nd = sigma.rows();
  const CMatrix root = psd_sqrt(sigma);
  const double nrm = hermitian_eigenvalues(sigma)(0);
  std::vector<double> norms(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    norms[static_cast<std::size_t>(i)] = (root * rng.complex_normal_vector(nd)).norm();
  }
  std::vector<GaussianTailReport> out;
  for (double t : t_grid) {
    GaussianTailReport rep;
    rep.t = t;
    rep.trials = trials;
    const double threshold = std::sqrt(2.0 * static_cast<double>(nd) * t);
    int cnt = 0;
    for (double v : norms)
      if (v >= threshold) ++cnt;
    rep.empirical = static_cast<double>(cnt) / trials;
    rep.bound = (nrm > 0.0 && t > nrm) ? std::exp(-(t / nrm - 1.0) * static_cast<double>(nd)) : 1.0;
    rep.std_error = std::sqrt(std::max(rep.empirical * (1.0 - rep.empirical), 1.0 / trials) / trials);
    out.push_back(rep);
  }
  return out;
}

// Binary container: header {N, n, seed, stream, sampler}, then X and Y as
// column-major complex doubles.
inline void write_sample_block(const std::string& path, const SampleBlock& b) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_sample_block: cannot open " + path);
  const std::uint64_t magic = 0x53424c4b31ULL;  // "SBLK1"
  const std::uint64_t nd = static_cast<std::uint64_t>(b.X.rows());
  const std::uint64_t n = static_cast<std::uint64_t>(b.X.cols());
  const std::uint32_t sampler = static_cast<std::uint32_t>(b.sampler);
  f.write(reinterpret_cast<const char*>(&magic), 8);
  f.write(reinterpret_cast<const char*>(&nd), 8);
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(&b.seed), 8);
  f.write(reinterpret_cast<const char*>(&b.stream), 8);
  f.write(reinterpret_cast<const char*>(&sampler), 4);
  f.write(reinterpret_cast<const char*>(b.X.data()), static_cast<std::streamsize>(sizeof(Complex) * nd * n));
  f.write(reinterpret_cast<const char*>(b.Y.data()), static_cast<std::streamsize>(sizeof(Complex) * nd * n));
  if (!f) throw std::runtime_error("write_sample_block: write failed for " + path);
}

inline SampleBlock read_sample_block(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_sample_block: cannot open " + path);
  std::uint64_t magic = 0, nd = 0, n = 0;
  std::uint32_t sampler = 0;
  SampleBlock b;
  f.read(reinterpret_cast<char*>(&magic), 8);
  if (magic != 0x53424c4b31ULL) throw std::runtime_error("read_sample_block: bad header in " + path);
  f.read(reinterpret_cast<char*>(&nd), 8);
  f.read(reinterpret_cast<char*>(&n), 8);
  f.read(reinterpret_cast<char*>(&b.seed), 8);
  f.read(reinterpret_cast<char*>(&b.stream), 8);
  f.read(reinterpret_cast<char*>(&sampler), 4);
  b.sampler = static_cast<SamplerKind>(sampler);
  b.X.resize(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(n));
  b.Y.resize(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(n));
  f.read(reinterpret_cast<char*>(b.X.data()), static_cast<std::streamsize>(sizeof(Complex) * nd * n));
  f.read(reinterpret_cast<char*>(b.Y.data()), static_cast<std::streamsize>(sizeof(Complex) * nd * n));
  if (!f) throw std::runtime_error("read_sample_block: truncated file " + path);
  return b;
}

}  // namespace acm
