#pragma once

// Dense complex linear algebra substrate: Hermitian eigen, singular values,
// general eigenvalues, hermitization, Fourier/circulant structures and the
// bordered-column distance formula.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace acm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline const Complex kI{0.0, 1.0};

inline bool all_finite(const CMatrix& a) {
  return a.allFinite();
}

inline void require_finite(const CMatrix& a, const char* what) {
  if (!all_finite(a)) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

// max|A - A*| relative to max|A|; zero matrix compares absolutely.
inline bool is_hermitian(const CMatrix& a, double rel_tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  double scale = a.cwiseAbs().maxCoeff();
  double dev = (a - a.adjoint()).cwiseAbs().maxCoeff();
  return dev <= rel_tol * std::max(scale, 1e-300) || (scale == 0.0 && dev == 0.0);
}

inline void require_hermitian(const CMatrix& a, const char* what) {
  if (!is_hermitian(a)) throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
}

inline CMatrix herm_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

// (M - M*)/(2i), Hermitian by construction.
inline CMatrix imag_part(const CMatrix& a) { return (a - a.adjoint()) / (2.0 * kI); }

// Eigenvalues of a Hermitian matrix, sorted nonincreasing.
inline RVector hermitian_eigenvalues(const CMatrix& a) {
  require_finite(a, "hermitian_eigenvalues");
  require_hermitian(a, "hermitian_eigenvalues");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  RVector ev = es.eigenvalues();
  return ev.reverse();
}

// Singular values s_0 >= ... >= s_{m-1}.
inline RVector singular_values(const CMatrix& m) {
  require_finite(m, "singular_values");
  if (m.rows() > 16 || m.cols() > 16) {
    Eigen::BDCSVD<CMatrix> svd(m);
    return svd.singularValues();
  }
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues();
}

inline double smallest_singular_value(const CMatrix& m) {
  RVector s = singular_values(m);
  return s(s.size() - 1);
}

// H(M) = [[0, M], [M*, 0]]; spectrum is {+-s_l(M)}.
inline CMatrix hermitize(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitize: matrix must be square");
  const Eigen::Index d = m.rows();
  CMatrix h = CMatrix::Zero(2 * d, 2 * d);
  h.topRightCorner(d, d) = m;
  h.bottomLeftCorner(d, d) = m.adjoint();
  return h;
}

// Unordered eigenvalues of a general square complex matrix.
inline CVector general_eigenvalues(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("general_eigenvalues: matrix must be square");
  require_finite(m, "general_eigenvalues");
  Eigen::ComplexEigenSolver<CMatrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("general_eigenvalues: QR iteration failed to converge");
  }
  return es.eigenvalues();
}

// n x n DFT machinery: F unitary, Omega = diag(omega^k) with
// omega = exp(-2 pi i / n), and the circulant shift J = F Omega F*.
struct FourierPack {
  Eigen::Index n;
  CMatrix F;
  CMatrix Omega;
  CMatrix J;

  explicit FourierPack(Eigen::Index n_) : n(n_) {
    if (n <= 0) throw std::invalid_argument("FourierPack: n must be positive");
    F.resize(n, n);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index l = 0; l < n; ++l)
        F(k, l) = s * std::exp(kI * (2.0 * kPi * static_cast<double>(k * l) / static_cast<double>(n)));
    Omega = CMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) Omega(k, k) = omega_pow(k);
    J = CMatrix::Zero(n, n);
    for (Eigen::Index l = 0; l < n; ++l) J((l + 1) % n, l) = 1.0;
  }

  Complex omega() const { return std::exp(-2.0 * kPi * kI / static_cast<double>(n)); }

  Complex omega_pow(Eigen::Index k) const {
    return std::exp(-2.0 * kPi * kI * static_cast<double>(k) / static_cast<double>(n));
  }

  CMatrix omega_pow_matrix(Eigen::Index p) const {
    CMatrix d = CMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) d(k, k) = omega_pow((k * p) % n);
    return d;
  }
};

// Distance from column 0 of M to the span of its remaining columns,
// via the bordered formula |m00 - m01 M11^{-1} m10| / sqrt(1 + ||m01 M11^{-1}||^2).
inline double column_distance(const CMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("column_distance: matrix must be square");
  if (m.rows() < 2) throw std::invalid_argument("column_distance: need size >= 2");
  require_finite(m, "column_distance");
  const Eigen::Index d = m.rows();
  const Complex m00 = m(0, 0);
  const Eigen::RowVectorXcd m01 = m.row(0).tail(d - 1);
  const CVector m10 = m.col(0).tail(d - 1);
  const CMatrix m11 = m.bottomRightCorner(d - 1, d - 1);

  RVector s = singular_values(m11);
  if (s(s.size() - 1) <= 1e-10 * s(0)) {
    throw std::invalid_argument("column_distance: trailing block M_11 is numerically singular");
  }
  // v = m01 M11^{-1}, obtained from the transposed system M11^T v^T = m01^T.
  Eigen::PartialPivLU<CMatrix> lu(m11.transpose());
  const Eigen::RowVectorXcd v = lu.solve(m01.transpose()).transpose();
  const Complex num = m00 - (v * m10)(0);
  return std::abs(num) / std::sqrt(1.0 + v.squaredNorm());
}

// 2x2 (x) NxN Kronecker product.
inline CMatrix kron2(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != 2 || a.cols() != 2) throw std::invalid_argument("kron2: left factor must be 2x2");
  const Eigen::Index d = b.rows();
  CMatrix out(2 * d, 2 * b.cols());
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) out.block(u * d, v * b.cols(), d, b.cols()) = a(u, v) * b;
  return out;
}

// N x N block (u,v) of a 2N x 2N matrix.
inline CMatrix block_get(const CMatrix& m, int u, int v) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0) throw std::invalid_argument("block_get: need even square matrix");
  if (u < 0 || u > 1 || v < 0 || v > 1) throw std::invalid_argument("block_get: block index out of range");
  const Eigen::Index d = m.rows() / 2;
  return m.block(u * d, v * d, d, d);
}

// T(M) = [tr M_uv / n]_{u,v}, mapping 2N x 2N to 2 x 2.
inline Eigen::Matrix2cd trace_op_T(const CMatrix& m, Eigen::Index n) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0) throw std::invalid_argument("trace_op_T: need even square matrix");
  if (n <= 0) throw std::invalid_argument("trace_op_T: n must be positive");
  const Eigen::Index d = m.rows() / 2;
  Eigen::Matrix2cd t;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v) t(u, v) = m.block(u * d, v * d, d, d).trace() / static_cast<double>(n);
  return t;
}

// tr(S * M_uv) / n for all four blocks; avoids forming (I_2 (x) S) M.
// tr(S B) = sum_{ij} S_ij B_ji, computed entrywise in O(N^2).
inline Eigen::Matrix2cd trace_op_weighted(const CMatrix& s, const CMatrix& m, Eigen::Index n) {
  const Eigen::Index d = s.rows();
  Eigen::Matrix2cd t;
  for (int u = 0; u < 2; ++u)
    for (int v = 0; v < 2; ++v)
      t(u, v) = s.transpose().cwiseProduct(m.block(u * d, v * d, d, d)).sum() / static_cast<double>(n);
  return t;
}

// Spectral norm estimate by a few power-iteration steps on M*M.
inline double spectral_norm_estimate(const CMatrix& m, int steps = 5) {
  if (m.size() == 0) return 0.0;
  CVector v = CVector::Ones(m.cols());
  v.normalize();
  double nrm = 0.0;
  for (int i = 0; i < steps; ++i) {
    CVector w = m.adjoint() * (m * v);
    nrm = std::sqrt(w.norm());
    if (w.norm() == 0.0) return 0.0;
    v = w / w.norm();
  }
  return nrm;
}

}  // namespace acm
