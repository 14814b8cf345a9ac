#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "acm/cd_kernel.hpp"
#include "acm/process_sim.hpp"

using namespace acm;

TEST_CASE("white noise: conditional = I/n and marginal = I exactly") {
  const auto model = SpectralDensityModel::white_noise(3);
  const Eigen::Index n = 8;
  for (Eigen::Index k : {0L, 3L, 7L}) {
    const CMatrix cond = conditional_covariance(model, n, k);
    CHECK((cond - CMatrix::Identity(3, 3) / static_cast<double>(n)).cwiseAbs().maxCoeff() < 1e-12);
    const CMatrix marg = marginal_covariance(model, n, k);
    CHECK((marg - CMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  const CDReport rep = cd_report(model, n, 0.1);
  CHECK(rep.max_good_err_conditional < 1e-12);
  CHECK(rep.max_good_err_marginal < 1e-12);
}

TEST_CASE("marginal covariance: Toeplitz route vs Fejer quadrature route") {
  const auto model = SpectralDensityModel::scalar_ma(2, {Complex(0.5, 0.2)});
  const Eigen::Index n = 12;
  for (Eigen::Index k : {0L, 2L, 7L}) {
    const CMatrix a = marginal_covariance(model, n, k);
    const CMatrix b = marginal_covariance_quadrature(model, n, k);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("conditional covariance below marginal in PSD order") {
  const auto model = SpectralDensityModel::scalar_ma(2, {Complex(0.6, -0.1)});
  const Eigen::Index n = 10;
  for (Eigen::Index k = 0; k < n; ++k) {
    const CMatrix cond = conditional_covariance(model, n, k);
    const CMatrix marg = marginal_covariance(model, n, k);
    const RVector gap = hermitian_eigenvalues(marg - static_cast<double>(n) * cond);
    CHECK(gap(gap.size() - 1) > -1e-9);
  }
}

TEST_CASE("conditional covariance matches a Monte Carlo regression residual") {
  const auto model = SpectralDensityModel::scalar_ma(2, {Complex(0.5, 0.0)});
  const Eigen::Index nd = 2, n = 4, k = 1;
  const CMatrix target = conditional_covariance(model, n, k);

  // Population covariance of vec Y and the regression of y_k on the rest.
  const CMatrix cov_x = model.block_toeplitz_cov(n);
  const FourierPack fp(n);
  CMatrix lift = CMatrix::Zero(nd * n, nd * n);  // vec Y = (F (x) I) vec X
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      lift.block(a * nd, b * nd, nd, nd) = fp.F(a, b) * CMatrix::Identity(nd, nd);
  const CMatrix cov_y = lift * cov_x * lift.adjoint();
  std::vector<Eigen::Index> rest;
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != k) rest.push_back(j);
  CMatrix c_kr(nd, nd * (n - 1)), c_rr(nd * (n - 1), nd * (n - 1));
  for (std::size_t a = 0; a < rest.size(); ++a) {
    c_kr.middleCols(static_cast<Eigen::Index>(a) * nd, nd) = cov_y.block(k * nd, rest[a] * nd, nd, nd);
    for (std::size_t b = 0; b < rest.size(); ++b)
      c_rr.block(static_cast<Eigen::Index>(a) * nd, static_cast<Eigen::Index>(b) * nd, nd, nd) =
          cov_y.block(rest[a] * nd, rest[b] * nd, nd, nd);
  }
  const CMatrix beta = c_kr * c_rr.inverse();

  const int draws = 5000;
  CMatrix acc = CMatrix::Zero(nd, nd);
  for (int i = 0; i < draws; ++i) {
    const SampleBlock blk = sample_exact(model, n, 2718, static_cast<std::uint64_t>(i));
    CVector y_rest(nd * (n - 1));
    for (std::size_t a = 0; a < rest.size(); ++a)
      y_rest.segment(static_cast<Eigen::Index>(a) * nd, nd) = blk.Y.col(rest[a]);
    const CVector resid = blk.Y.col(k) - beta * y_rest;
    acc += resid * resid.adjoint();
  }
  acc /= static_cast<double>(draws);
  const double se = target.cwiseAbs().maxCoeff() / std::sqrt(static_cast<double>(draws));
  CHECK((acc - target).cwiseAbs().maxCoeff() < 5.0 * se);
}

TEST_CASE("near-singular density: good-frequency mask excludes angles near pi") {
  const auto model = SpectralDensityModel::scalar_ma(1, {Complex(0.999, 0.0)});
  const Eigen::Index n = 16;
  const double delta = 0.1 * model.sup_norm_estimate();
  const CDReport rep = cd_report(model, n, delta);
  // S(e^{i pi}) = |1 - 0.999|^2 ~ 1e-6 << delta: k = n/2 must be excluded.
  CHECK_FALSE(rep.rows[static_cast<std::size_t>(n / 2)].good);
  CHECK(rep.rows[0].good);
}

TEST_CASE("CD error trend: decreasing over n for a smooth nonsingular model") {
  const auto model = SpectralDensityModel::scalar_ma(2, {Complex(0.5, 0.0)});
  const auto series = cd_convergence_report(model, {16, 32, 64}, 0.1);
  CHECK(series.back().max_good_err_conditional < series.front().max_good_err_conditional);
}

TEST_CASE("CSV emitter writes the documented columns") {
  const auto model = SpectralDensityModel::white_noise(2);
  const CDReport rep = cd_report(model, 4, 0.1);
  const std::string path = "/tmp/acm_cd_test.csv";
  write_cd_csv(path, rep);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "k,theta,err_marginal,err_conditional,good_flag");
  int lines = 0;
  std::string line;
  while (std::getline(f, line)) ++lines;
  CHECK(lines == 4);
  std::remove(path.c_str());
}
