#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acm/fixed_point.hpp"
#include "acm/rng.hpp"

using namespace acm;

TEST_CASE("U_L is Hermitian unitary at every angle") {
  for (double th : {0.0, 0.7, 2.9, 5.5}) {
    const Eigen::Matrix2cd u = ul_matrix(3, th);
    CHECK((u - u.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((u * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("apply_F on white noise at M = -eta^{-1} I matches the hand 2x2 formula") {
  const Eigen::Index nd = 4, n = 8, lag = 1;
  const auto model = SpectralDensityModel::white_noise(nd);
  const Complex z(0.5, 0.0), eta(0.3, 2.0);
  const double gamma = static_cast<double>(nd) / n;
  const CMatrix m = (-1.0 / eta) * CMatrix::Identity(2 * nd, 2 * nd);
  const CMatrix out = apply_F(m, model, z, eta, lag, n, 0, /*discrete=*/true);

  // T_l = [[c, omega^{lL}],[conj, c]] with c = -gamma/eta; the off-diagonal
  // parts of T_l^{-1} average to zero over the n-point grid, so
  // F(M) = ((c/(c^2-1)) I - E)^{-1} (x) I.
  const Complex c = -gamma / eta;
  Eigen::Matrix2cd core = (c / (c * c - 1.0)) * Eigen::Matrix2cd::Identity();
  core -= detail::shift_matrix(z, eta);
  const CMatrix expect = kron2(core.inverse(), CMatrix::Identity(nd, nd));
  CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("apply_F: continuous quadrature at n nodes equals discrete mode") {
  const Eigen::Index nd = 3, n = 12, lag = 2;
  const auto model = SpectralDensityModel::scalar_ma(nd, {Complex(0.4, 0.1)});
  CounterRng rng(4, 0);
  CMatrix m(2 * nd, 2 * nd);
  for (Eigen::Index i = 0; i < 2 * nd; ++i)
    for (Eigen::Index j = 0; j < 2 * nd; ++j) m(i, j) = 0.1 * rng.next_complex_normal();
  m += kI * CMatrix::Identity(2 * nd, 2 * nd);  // positive imaginary part
  const Complex z(0.2, -0.1), eta(0.0, 1.5);
  const CMatrix a = apply_F(m, model, z, eta, lag, n, static_cast<int>(n), false);
  const CMatrix b = apply_F(m, model, z, eta, lag, n, 0, true);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("apply_F preserves positive imaginary part and the large-t limit") {
  const Eigen::Index nd = 4, n = 8, lag = 1;
  const auto model = SpectralDensityModel::scalar_ma(nd, {Complex(0.5, 0.0)});
  const Complex z(0.7, 0.2);
  const double t = 1e3;
  const Complex eta(0.0, t);
  const CMatrix m0 = (-1.0 / eta) * CMatrix::Identity(2 * nd, 2 * nd);
  const CMatrix out = apply_F(m0, model, z, eta, lag, n, 256, false);
  const RVector im_ev = hermitian_eigenvalues(imag_part(out));
  CHECK(im_ev(im_ev.size() - 1) > 0.0);
  const double gamma = static_cast<double>(nd) / n;
  const double bound = 2.0 * (std::abs(z) + model.sup_norm_estimate() * gamma) / t;
  CHECK(((-kI * t) * out - CMatrix::Identity(2 * nd, 2 * nd)).cwiseAbs().maxCoeff() < bound);
}

TEST_CASE("solve_G: first-order expansion at large Im eta") {
  const Eigen::Index nd = 8, n = 16, lag = 1;
  const auto model = SpectralDensityModel::white_noise(nd);
  const Complex z(0.5, 0.0), eta(0.0, 50.0);
  const StieltjesState st = solve_G(model, z, eta, lag, n);
  const double gamma = 0.5;
  const double bound = 2.0 * (gamma * 1.0 + std::abs(z) + 1.0) / std::norm(eta);
  CHECK(spectral_norm_estimate(st.G + (1.0 / eta) * CMatrix::Identity(2 * nd, 2 * nd), 10) < bound);
}

TEST_CASE("solve_G: residual contract, invariants and trace identities") {
  const auto model = SpectralDensityModel::scalar_ma(8, {Complex(0.5, 0.0)});
  const Eigen::Index n = 16, lag = 1;
  const Complex z(0.8, 0.0);
  for (Complex eta : {Complex(0.0, 1.0), Complex(0.0, 0.2), Complex(0.4, 0.6)}) {
    const StieltjesState st = solve_G(model, z, eta, lag, n);
    CHECK(st.residual <= 1e-10);
    CHECK_NOTHROW(validate_state(st));
    // re-applying F moves the state by at most ~2 tol
    const CMatrix fg = apply_F(st.G, model, z, eta, lag, n, 512, false);
    CHECK(std::sqrt((fg - st.G).squaredNorm()) <= 2e-9);
    const Complex g = stieltjes_trace(st);
    CHECK(g.imag() > 0.0);
    CHECK(std::abs(g) <= 1.0 / eta.imag() + 1e-10);
    const Complex t00 = block_get(st.G, 0, 0).trace() / 8.0;
    CHECK(std::abs(g - t00) < 1e-8);
    // trace-operator bound along the solution
    const Eigen::Matrix2cd tw = trace_op_weighted(model.evaluate(0.3), st.G, n);
    const double gamma_m = (8.0 / 16.0) * model.sup_norm_estimate();
    CHECK(std::sqrt((tw.adjoint() * tw).trace().real()) <= 2.0 * gamma_m / eta.imag() + 1e-9);
  }
}

TEST_CASE("solve_G: reduced isotropic path agrees with the full matrix path") {
  const auto model = SpectralDensityModel::scalar_ma(4, {Complex(0.5, 0.0)});
  const Complex z(0.6, 0.1), eta(0.0, 0.8);
  SolveOptions full;
  full.force_full_matrix = true;
  const StieltjesState a = solve_G(model, z, eta, 1, 8);
  const StieltjesState b = solve_G(model, z, eta, 1, 8, full);
  CHECK(a.reduced_path);
  CHECK_FALSE(b.reduced_path);
  CHECK((a.G - b.G).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("solve_G: uniqueness probe from a distinct admissible start") {
  const auto model = SpectralDensityModel::white_noise(8);
  const Eigen::Index n = 16;
  const Complex z(0.5, 0.0), eta(0.0, 4.0);  // inside the contraction domain
  const StieltjesState a = solve_G(model, z, eta, 1, n);
  SolveOptions opt;
  opt.start = (-1.0 / (eta + kI)) * CMatrix::Identity(16, 16);
  const StieltjesState b = solve_G(model, z, eta, 1, n, opt);
  CHECK((a.G - b.G).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(a.contraction_ratio <= 0.55);
}

TEST_CASE("solve_G handles a non-isotropic matrix density") {
  CounterRng rng(21, 0);
  CMatrix tap(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) tap(i, j) = 0.3 * rng.next_complex_normal();
  const auto model = SpectralDensityModel::ma(2, {tap});
  const StieltjesState st = solve_G(model, Complex(0.5, 0.0), Complex(0.0, 0.7), 1, 4);
  CHECK_FALSE(st.reduced_path);
  CHECK(st.residual <= 1e-10);
  CHECK_NOTHROW(validate_state(st));
}

TEST_CASE("trace transform symmetry of the symmetrized measure") {
  const auto model = SpectralDensityModel::scalar_ma(6, {Complex(0.5, 0.0)});
  // g(-eta) = -g(eta) realized through reflection: conj(g(-conj(eta))) = -g(eta).
  const Complex eta(0.4, 1.1);
  const Complex g1 = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), eta, 1, 12));
  const Complex g2 = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(-eta.real(), eta.imag()), 1, 12));
  CHECK(std::abs(std::conj(g2) + g1) < 1e-10);
  // purely imaginary eta: g is purely imaginary
  const Complex g3 = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(0.0, 0.5), 1, 12));
  CHECK(std::abs(g3.real()) < 1e-10);
}

TEST_CASE("tightness proxy: -it g(it) approaches 1") {
  const auto model = SpectralDensityModel::white_noise(8);
  for (double t : {10.0, 100.0, 1000.0}) {
    const Complex g = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(0.0, t), 1, 16));
    CHECK(std::abs(-kI * t * g - 1.0) < 2.0 / t);
  }
}

TEST_CASE("white-noise scalar system: residuals, large-t expansion, quadrature stability") {
  // t -> infinity: h ~ gamma/t and g01 -> 0
  const auto big = white_noise_system(Complex(1.0, 0.0), 1e3, 1.0);
  CHECK(big.h * 1e3 / 1.0 > 0.9);
  CHECK(big.h * 1e3 / 1.0 < 1.1);
  CHECK(std::abs(big.g01) < 1e-2);
  CHECK(big.residual_gamma < 1e-9);
  CHECK(big.residual_zero < 1e-9);

  // quadrature refinement beyond 512 nodes barely moves the solution
  const auto a = white_noise_system(Complex(0.7, 0.3), 0.5, 0.5, 512);
  const auto b = white_noise_system(Complex(0.7, 0.3), 0.5, 0.5, 1024);
  CHECK(std::abs(a.h - b.h) < 1e-9);
  CHECK(std::abs(a.g01 - b.g01) < 1e-9);
  CHECK(a.residual_gamma < 1e-8);
  CHECK(a.residual_zero < 1e-8);
}

TEST_CASE("white-noise system matches the matrix solver") {
  const Eigen::Index nd = 8, n = 16;
  const double gamma = 0.5;
  for (Complex z : {Complex(0.0, 0.0), Complex(0.5, 0.0), Complex(1.2, 0.4)}) {
    const double t = 1.0;
    const auto wns = white_noise_system(z, t, gamma, 512);
    SolveOptions opt;
    opt.force_full_matrix = true;
    opt.nodes = 512;
    const StieltjesState st = solve_G(SpectralDensityModel::white_noise(nd), z, Complex(0.0, t), 1, n, opt);
    CHECK(std::abs(st.tcal(0, 0) - kI * wns.h) < 1e-6);
    CHECK(std::abs(st.tcal(0, 1) - wns.g01) < 1e-6);
    CHECK(std::abs(st.tcal(1, 0) - std::conj(wns.g01)) < 1e-6);
  }
}
