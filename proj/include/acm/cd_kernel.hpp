#pragma once

// Innovation (conditional) covariance via the block-Toeplitz inverse formula
// and its convergence to the spectral density at the grid frequencies.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/core.hpp"
#include "acm/spectral_model.hpp"

namespace acm {

namespace detail {

// Cholesky of the window covariance with a tiny diagonal jitter retry.
inline Eigen::LLT<CMatrix> toeplitz_llt(const CMatrix& cov) {
  Eigen::LLT<CMatrix> llt(cov);
  if (llt.info() == Eigen::Success) return llt;
  CMatrix jittered = cov;
  jittered.diagonal().array() += 1e-13;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("cd-kernel: window covariance is singular; the density must be non-trivial");
  return llt;
}

// (f_k (x) I) A (f_k^* (x) I) without forming the Kronecker factors:
// contracts the N x N blocks of A against the k-th DFT row.
inline CMatrix dft_row_contract(const CMatrix& a, const FourierPack& fp, Eigen::Index k, Eigen::Index nd) {
  const Eigen::Index n = fp.n;
  CMatrix out = CMatrix::Zero(nd, nd);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Complex fkp = fp.F(k, p);
    CMatrix row_acc = CMatrix::Zero(nd, nd);
    for (Eigen::Index q = 0; q < n; ++q)
      row_acc += std::conj(fp.F(k, q)) * a.block(p * nd, q * nd, nd, nd);
    out += fkp * row_acc;
  }
  return out;
}

}  // namespace detail

// E[y_tilde_k y_tilde_k^*] = ((f_k (x) I) R^{-1} (f_k^* (x) I))^{-1}: the
// covariance of the frequency-k column conditioned on the others.
inline CMatrix conditional_covariance(const SpectralDensityModel& model, Eigen::Index n,
                                      Eigen::Index k, Eigen::Index budget = 4096) {
  const Eigen::Index nd = model.dim();
  const CMatrix cov = model.block_toeplitz_cov(n, budget);
  const Eigen::LLT<CMatrix> llt = detail::toeplitz_llt(cov);
  const CMatrix inv = llt.solve(CMatrix::Identity(nd * n, nd * n));
  const FourierPack fp(n);
  const CMatrix k2 = detail::dft_row_contract(inv, fp, k, nd);
  return herm_part(k2.inverse());
}

// n E[y_k y_k^*] = n (f_k (x) I) R (f_k^* (x) I), the marginal covariance.
inline CMatrix marginal_covariance(const SpectralDensityModel& model, Eigen::Index n,
                                   Eigen::Index k, Eigen::Index budget = 4096) {
  const Eigen::Index nd = model.dim();
  const CMatrix cov = model.block_toeplitz_cov(n, budget);
  const FourierPack fp(n);
  return herm_part(static_cast<double>(n) * detail::dft_row_contract(cov, fp, k, nd));
}

// Independent route to the marginal: the order-(n-1) Fejer smoothing of S
// evaluated at 2 pi k / n, by periodic trapezoid quadrature.
inline CMatrix marginal_covariance_quadrature(const SpectralDensityModel& model, Eigen::Index n,
                                              Eigen::Index k, int nodes = 4096) {
  const double phi = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
  CMatrix acc = CMatrix::Zero(model.dim(), model.dim());
  for (int i = 0; i < nodes; ++i) {
    const double theta = 2.0 * kPi * i / nodes;
    acc += fejer_kernel(static_cast<int>(n) - 1, theta - phi) * model.evaluate(theta);
  }
  return herm_part(acc / static_cast<double>(nodes));
}

struct CDRow {
  Eigen::Index k = 0;
  double theta = 0.0;
  double err_marginal = 0.0;     // ||n E[y y*] - S_k||
  double err_conditional = 0.0;  // ||n E[y~ y~*] - S_k||
  bool good = false;             // s_min(S_k) >= delta
};

struct CDReport {
  Eigen::Index n = 0;
  double delta = 0.0;
  std::vector<CDRow> rows;
  double max_good_err_conditional = 0.0;
  double max_good_err_marginal = 0.0;
};

inline CDReport cd_report(const SpectralDensityModel& model, Eigen::Index n, double delta,
                          Eigen::Index budget = 8192) {
  const Eigen::Index nd = model.dim();
  const CMatrix cov = model.block_toeplitz_cov(n, budget);
  const Eigen::LLT<CMatrix> llt = detail::toeplitz_llt(cov);
  const CMatrix inv = llt.solve(CMatrix::Identity(nd * n, nd * n));
  const FourierPack fp(n);
  CDReport rep;
  rep.n = n;
  rep.delta = delta;
  for (Eigen::Index k = 0; k < n; ++k) {
    CDRow row;
    row.k = k;
    row.theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    const CMatrix target = herm_part(model.evaluate(row.theta));
    const CMatrix cond = herm_part(detail::dft_row_contract(inv, fp, k, nd).inverse());
    const CMatrix marg = herm_part(static_cast<double>(n) * detail::dft_row_contract(cov, fp, k, nd));
    row.err_conditional = spectral_norm_estimate(static_cast<double>(n) * cond - target, 8);
    row.err_marginal = spectral_norm_estimate(marg - target, 8);
    row.good = hermitian_eigenvalues(target)(nd - 1) >= delta;
    if (row.good) {
      rep.max_good_err_conditional = std::max(rep.max_good_err_conditional, row.err_conditional);
      rep.max_good_err_marginal = std::max(rep.max_good_err_marginal, row.err_marginal);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

// Series over an increasing n list; trend (not rate) is what downstream checks.
inline std::vector<CDReport> cd_convergence_report(const SpectralDensityModel& model,
                                                   const std::vector<Eigen::Index>& n_list,
                                                   double delta, Eigen::Index budget = 8192) {
  std::vector<CDReport> out;
  for (Eigen::Index n : n_list) out.push_back(cd_report(model, n, delta, budget));
  return out;
}

inline void write_cd_csv(const std::string& path, const CDReport& rep) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_cd_csv: cannot open " + path);
  f << "k,theta,err_marginal,err_conditional,good_flag\n";
  f.precision(17);
  for (const auto& r : rep.rows)
    f << r.k << ',' << r.theta << ',' << r.err_marginal << ',' << r.err_conditional << ','
      << (r.good ? 1 : 0) << '\n';
}

}  // namespace acm
