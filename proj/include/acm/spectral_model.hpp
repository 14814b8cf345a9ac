#pragma once

// Spectral-density models, their autocovariance coefficients, Fejer smoothing,
// block-Toeplitz covariance assembly and regularity diagnostics.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "acm/core.hpp"

namespace acm {

enum class ModelKind { WhiteNoise, MA, ToeplitzMA1, BlockDiag, Tabulated };

struct AssumptionReport {
  std::vector<std::pair<double, double>> modulus_table;   // (h, estimated modulus of continuity)
  double sup_norm = 0.0;                                  // sup_theta ||S||
  double smin_R0 = 0.0;                                   // smallest eigenvalue of R_0
  std::vector<std::pair<double, double>> lebesgue_small_sv;  // (delta, grid fraction with s_min(S) <= delta)
  double log_integral = 0.0;  // (1/N) mean_theta log s_min(S(theta))
  // ToeplitzMA1 only: distance from e^{i theta} to conv f_N(T), per grid angle.
  std::vector<std::pair<double, double>> symbol_hull_dist;
};

namespace detail {

// Distance from a point to the convex hull of a planar point set
// (monotone-chain hull, then distance to the polygon).
inline std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return a == b; }),
            pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (auto it = pts.rbegin() + 1, t = pts.rend(); it != t; ++it) {
    const auto lower = k + 1;
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

inline double dist_point_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                 const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& poly) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    const double c = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (c < 0) return false;  // hull is counter-clockwise
  }
  return true;
}

inline double dist_to_hull(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& hull) {
  if (hull.empty()) return 0.0;
  if (hull.size() == 1) return (p - hull[0]).norm();
  if (point_in_polygon(p, hull)) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i)
    d = std::min(d, dist_point_segment(p, hull[i], hull[(i + 1) % hull.size()]));
  return d;
}

}  // namespace detail

class SpectralDensityModel {
 public:
  static SpectralDensityModel white_noise(Eigen::Index n_dim) {
    SpectralDensityModel m;
    m.kind_ = ModelKind::WhiteNoise;
    m.dim_ = n_dim;
    m.fourier_ = {CMatrix::Identity(n_dim, n_dim)};
    m.scalar_coeffs_ = {Complex(1.0, 0.0)};
    m.isotropic_ = true;
    return m;
  }

  // MA(q) with matrix taps A_1..A_q, innovations N_C(0, I).
  static SpectralDensityModel ma(Eigen::Index n_dim, std::vector<CMatrix> taps) {
    SpectralDensityModel m;
    m.kind_ = ModelKind::MA;
    m.dim_ = n_dim;
    for (const auto& a : taps) {
      if (a.rows() != n_dim || a.cols() != n_dim) throw std::invalid_argument("ma: tap dimension mismatch");
      require_finite(a, "ma tap");
    }
    m.ma_taps_ = std::move(taps);
    m.fourier_ = fourier_from_taps(n_dim, m.ma_taps_);
    m.detect_isotropy();
    return m;
  }

  // Scalar-symbol MA: A_l = a_l I_N.
  static SpectralDensityModel scalar_ma(Eigen::Index n_dim, const std::vector<Complex>& taps) {
    std::vector<CMatrix> mats;
    mats.reserve(taps.size());
    for (Complex a : taps) mats.push_back(a * CMatrix::Identity(n_dim, n_dim));
    return ma(n_dim, std::move(mats));
  }

  // MA(1) whose single tap is the Toeplitz matrix [a_{k-l}]; symbol
  // coefficients a_{1-N}..a_{N-1} are passed as (a_neg = a_{-1},a_{-2},...;
  // a_nonneg = a_0,a_1,...).
  static SpectralDensityModel toeplitz_ma1(Eigen::Index n_dim, const std::vector<Complex>& a_neg,
                                           const std::vector<Complex>& a_nonneg) {
    CMatrix a1 = CMatrix::Zero(n_dim, n_dim);
    for (Eigen::Index k = 0; k < n_dim; ++k)
      for (Eigen::Index l = 0; l < n_dim; ++l) {
        const long d = static_cast<long>(k) - static_cast<long>(l);
        Complex v = 0.0;
        if (d >= 0 && d < static_cast<long>(a_nonneg.size())) v = a_nonneg[static_cast<std::size_t>(d)];
        if (d < 0 && -d <= static_cast<long>(a_neg.size())) v = a_neg[static_cast<std::size_t>(-d - 1)];
        a1(k, l) = v;
      }
    auto m = ma(n_dim, {a1});
    m.kind_ = ModelKind::ToeplitzMA1;
    m.symbol_neg_ = a_neg;
    m.symbol_nonneg_ = a_nonneg;
    return m;
  }

  // A_l = I_M (x) B_l with B_l in C^{KxK}; N = M K.
  static SpectralDensityModel block_diag(Eigen::Index m_streams, const std::vector<CMatrix>& b_taps) {
    if (m_streams <= 0 || b_taps.empty()) throw std::invalid_argument("block_diag: need M >= 1 and taps");
    const Eigen::Index k_dim = b_taps.front().rows();
    std::vector<CMatrix> taps;
    taps.reserve(b_taps.size());
    for (const auto& b : b_taps) {
      if (b.rows() != k_dim || b.cols() != k_dim) throw std::invalid_argument("block_diag: tap dimension mismatch");
      CMatrix big = CMatrix::Zero(m_streams * k_dim, m_streams * k_dim);
      for (Eigen::Index s = 0; s < m_streams; ++s) big.block(s * k_dim, s * k_dim, k_dim, k_dim) = b;
      taps.push_back(std::move(big));
    }
    auto m = ma(m_streams * k_dim, std::move(taps));
    m.kind_ = ModelKind::BlockDiag;
    m.m_streams_ = m_streams;
    m.k_dim_ = k_dim;
    m.b_taps_ = b_taps;
    return m;
  }

  // Tabulated trig polynomial given by R_0..R_q (R_{-l} = R_l^*). The implied
  // density must be PSD on the diagnostic grid.
  static SpectralDensityModel tabulated(std::vector<CMatrix> coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("tabulated: need at least R_0");
    SpectralDensityModel m;
    m.kind_ = ModelKind::Tabulated;
    m.dim_ = coeffs.front().rows();
    for (const auto& r : coeffs) {
      if (r.rows() != m.dim_ || r.cols() != m.dim_) throw std::invalid_argument("tabulated: coefficient dimension mismatch");
      require_finite(r, "tabulated coefficient");
    }
    if (!is_hermitian(coeffs.front())) throw std::invalid_argument("tabulated: R_0 must be Hermitian");
    m.fourier_ = std::move(coeffs);
    m.detect_isotropy();
    m.verify_psd_on_grid();
    return m;
  }

  ModelKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  int max_lag() const { return static_cast<int>(fourier_.size()) - 1; }
  bool isotropic() const { return isotropic_; }
  Eigen::Index streams() const { return m_streams_; }
  Eigen::Index stream_dim() const { return k_dim_; }
  const std::vector<CMatrix>& ma_taps() const { return ma_taps_; }
  const std::vector<CMatrix>& fourier_coeffs() const { return fourier_; }

  bool has_factor() const { return kind_ != ModelKind::Tabulated; }

  // C(e^{i theta}) = I + sum_l e^{i l theta} A_l.
  CMatrix factor(double theta) const {
    CMatrix c = CMatrix::Identity(dim_, dim_);
    for (std::size_t l = 0; l < ma_taps_.size(); ++l)
      c += std::exp(kI * (static_cast<double>(l + 1) * theta)) * ma_taps_[l];
    return c;
  }

  // S(e^{i theta}), Hermitian PSD.
  CMatrix evaluate(double theta) const {
    if (has_factor()) {
      const CMatrix c = factor(theta);
      return c * c.adjoint();
    }
    CMatrix s = fourier_[0];
    for (std::size_t l = 1; l < fourier_.size(); ++l) {
      const Complex e = std::exp(kI * (static_cast<double>(l) * theta));
      s += e * fourier_[l] + std::conj(e) * fourier_[l].adjoint();
    }
    return herm_part(s);
  }

  // s(theta) with S(theta) = s(theta) I; valid only for isotropic models.
  double scalar_density(double theta) const {
    if (!isotropic_) throw std::logic_error("scalar_density: model is not isotropic");
    Complex s = scalar_coeffs_[0];
    for (std::size_t l = 1; l < scalar_coeffs_.size(); ++l) {
      const Complex e = std::exp(kI * (static_cast<double>(l) * theta));
      s += e * scalar_coeffs_[l] + std::conj(e * scalar_coeffs_[l]);
    }
    return s.real();
  }

  // R_L = (1/2pi) int e^{-i L theta} S(e^{i theta}) d theta, exact for these
  // trig-polynomial models.
  CMatrix autocovariance(long lag) const {
    const long q = static_cast<long>(fourier_.size()) - 1;
    if (lag > q || lag < -q) return CMatrix::Zero(dim_, dim_);
    if (lag >= 0) return fourier_[static_cast<std::size_t>(lag)];
    return fourier_[static_cast<std::size_t>(-lag)].adjoint();
  }

  // Triangular re-weighting of the Fourier coefficients: R_l -> (1 - |l|/(K+1)) R_l.
  SpectralDensityModel fejer_smooth(int order) const {
    if (order < 0) throw std::invalid_argument("fejer_smooth: order must be >= 0");
    if (kind_ == ModelKind::WhiteNoise) return *this;
    std::vector<CMatrix> coeffs;
    const int q = std::min(order, max_lag());
    for (int l = 0; l <= q; ++l) {
      const double w = 1.0 - static_cast<double>(l) / static_cast<double>(order + 1);
      coeffs.push_back(w * fourier_[static_cast<std::size_t>(l)]);
    }
    return tabulated(std::move(coeffs));
  }

  // Block-Toeplitz covariance of the stacked window, block (k,l) = R_{k-l}/n.
  CMatrix block_toeplitz_cov(Eigen::Index n, Eigen::Index budget = 4096) const {
    if (n < 1) throw std::invalid_argument("block_toeplitz_cov: n must be >= 1");
    if (dim_ * n > budget)
      throw std::length_error("block_toeplitz_cov: N*n = " + std::to_string(dim_ * n) +
                              " exceeds budget " + std::to_string(budget));
    CMatrix cov = CMatrix::Zero(dim_ * n, dim_ * n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index l = 0; l < n; ++l)
        cov.block(k * dim_, l * dim_, dim_, dim_) = autocovariance(k - l) / static_cast<double>(n);
    return herm_part(cov);
  }

  // sup_theta ||S|| on a grid; the Assumption bound estimate.
  double sup_norm_estimate(int grid = 1024) const {
    double m = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double th = 2.0 * kPi * i / grid;
      RVector ev = hermitian_eigenvalues(herm_part(evaluate(th)));
      m = std::max(m, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
    }
    return m;
  }

  AssumptionReport assumption_report(const std::vector<double>& h_grid = {0.01, 0.05, 0.1, 0.5},
                                     const std::vector<double>& delta_grid = {1e-4, 1e-3, 1e-2, 1e-1},
                                     int grid = 1024) const {
    AssumptionReport rep;
    std::vector<RVector> spectra(static_cast<std::size_t>(grid));
    std::vector<CMatrix> values(static_cast<std::size_t>(grid));
    for (int i = 0; i < grid; ++i) {
      const double th = 2.0 * kPi * i / grid;
      values[static_cast<std::size_t>(i)] = herm_part(evaluate(th));
      spectra[static_cast<std::size_t>(i)] = hermitian_eigenvalues(values[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < grid; ++i) rep.sup_norm = std::max(rep.sup_norm, spectra[static_cast<std::size_t>(i)](0));

    for (double h : h_grid) {
      const int span = std::max(1, static_cast<int>(std::ceil(h * grid / (2.0 * kPi))));
      double w = 0.0;
      for (int i = 0; i < grid; ++i)
        for (int d = 1; d <= span; ++d) {
          const int j = (i + d) % grid;
          const CMatrix diff = values[static_cast<std::size_t>(i)] - values[static_cast<std::size_t>(j)];
          w = std::max(w, spectral_norm_estimate(diff, 8));
        }
      rep.modulus_table.emplace_back(h, w);
    }

    rep.smin_R0 = hermitian_eigenvalues(herm_part(autocovariance(0)))(dim_ - 1);

    for (double delta : delta_grid) {
      int cnt = 0;
      for (int i = 0; i < grid; ++i)
        if (spectra[static_cast<std::size_t>(i)](dim_ - 1) <= delta) ++cnt;
      rep.lebesgue_small_sv.emplace_back(delta, static_cast<double>(cnt) / grid);
    }

    double acc = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double smin = std::max(spectra[static_cast<std::size_t>(i)](dim_ - 1), 1e-300);
      acc += std::log(smin);
    }
    rep.log_integral = acc / (grid * static_cast<double>(dim_));

    if (kind_ == ModelKind::ToeplitzMA1) {
      std::vector<Eigen::Vector2d> curve;
      for (int i = 0; i < grid; ++i) {
        const double th = 2.0 * kPi * i / grid;
        const Complex f = symbol_value(th);
        curve.emplace_back(f.real(), f.imag());
      }
      const auto hull = detail::convex_hull(curve);
      for (int i = 0; i < grid; ++i) {
        const double th = 2.0 * kPi * i / grid;
        const Eigen::Vector2d p(std::cos(th), std::sin(th));
        rep.symbol_hull_dist.emplace_back(th, detail::dist_to_hull(p, hull));
      }
    }
    return rep;
  }

  // f_N(e^{i theta}) for the ToeplitzMA1 symbol.
  Complex symbol_value(double theta) const {
    if (kind_ != ModelKind::ToeplitzMA1) throw std::logic_error("symbol_value: not a Toeplitz MA(1) model");
    Complex f = 0.0;
    for (std::size_t k = 0; k < symbol_nonneg_.size(); ++k)
      f += symbol_nonneg_[k] * std::exp(kI * (static_cast<double>(k) * theta));
    for (std::size_t k = 0; k < symbol_neg_.size(); ++k)
      f += symbol_neg_[k] * std::exp(-kI * (static_cast<double>(k + 1) * theta));
    return f;
  }

 private:
  SpectralDensityModel() = default;

  static std::vector<CMatrix> fourier_from_taps(Eigen::Index n_dim, const std::vector<CMatrix>& taps) {
    // R_L = sum_m A_{m+L} A_m^* with A_0 = I, for the truncated factor.
    const std::size_t q = taps.size();
    auto tap = [&](std::size_t l) -> CMatrix {
      if (l == 0) return CMatrix::Identity(n_dim, n_dim);
      return taps[l - 1];
    };
    std::vector<CMatrix> coeffs;
    for (std::size_t lag = 0; lag <= q; ++lag) {
      CMatrix r = CMatrix::Zero(n_dim, n_dim);
      for (std::size_t m = 0; m + lag <= q; ++m) r += tap(m + lag) * tap(m).adjoint();
      coeffs.push_back(std::move(r));
    }
    return coeffs;
  }

  void detect_isotropy() {
    isotropic_ = true;
    scalar_coeffs_.clear();
    for (const auto& r : fourier_) {
      const Complex d = r(0, 0);
      if ((r - d * CMatrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, std::abs(d))) {
        isotropic_ = false;
        scalar_coeffs_.clear();
        return;
      }
      scalar_coeffs_.push_back(d);
    }
  }

  void verify_psd_on_grid(int grid = 4096) const {
    for (int i = 0; i < grid; ++i) {
      const double th = 2.0 * kPi * i / grid;
      const RVector ev = hermitian_eigenvalues(herm_part(evaluate(th)));
      const double scale = std::max(std::abs(ev(0)), 1.0);
      if (ev(ev.size() - 1) < -1e-10 * scale)
        throw std::invalid_argument("tabulated: implied density is not PSD (min eigenvalue " +
                                    std::to_string(ev(ev.size() - 1)) + " at theta=" + std::to_string(th) + ")");
    }
  }

  ModelKind kind_ = ModelKind::WhiteNoise;
  Eigen::Index dim_ = 0;
  std::vector<CMatrix> ma_taps_;   // A_1..A_q for factor-based kinds
  std::vector<CMatrix> fourier_;   // R_0..R_q
  std::vector<Complex> symbol_neg_, symbol_nonneg_;
  std::vector<CMatrix> b_taps_;
  Eigen::Index m_streams_ = 0, k_dim_ = 0;
  bool isotropic_ = false;
  std::vector<Complex> scalar_coeffs_;
};

// Fejer kernel F_m(theta) = |sum_{l=0}^{m} e^{i l theta}|^2 / (m+1).
inline double fejer_kernel(int m, double theta) {
  const int n = m + 1;
  const double half = 0.5 * theta;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-12) {
    const double x = n * half;
    // limit value n * (sinc ratio)^2
    if (std::abs(theta) < 1e-12) return static_cast<double>(n);
    return std::sin(x) * std::sin(x) / (static_cast<double>(n) * s * s + 1e-300);
  }
  const double t = std::sin(n * half) / s;
  return t * t / n;
}

}  // namespace acm
