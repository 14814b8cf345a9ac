// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion prints its key measured quantities.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "acm/cd_kernel.hpp"
#include "acm/fixed_point.hpp"
#include "acm/girko.hpp"
#include "acm/process_sim.hpp"
#include "acm/rng.hpp"
#include "acm/smallsv.hpp"

using namespace acm;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
  std::printf("criterion %d (%s): %s — %s [%.1fs]\n", id, name, pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  if (!pass) ++g_failures;
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. Structural identities.
void criterion1() {
  const double t0 = now_s();
  double worst_fourier = 0.0;
  for (Eigen::Index n : {2, 3, 4, 8, 16, 31, 64, 128, 257, 512}) {
    const FourierPack fp(n);
    worst_fourier = std::max(worst_fourier,
                             (fp.J - fp.F * fp.Omega * fp.F.adjoint()).cwiseAbs().maxCoeff());
  }

  double worst_dual = 0.0;
  CounterRng rng(11, 0);
  for (int cfg = 0; cfg < 100; ++cfg) {
    const Eigen::Index nd = 2 + static_cast<Eigen::Index>(rng.next_u64() % 7);
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.next_u64() % 29);
    const Eigen::Index lag = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(n));
    SampleBlock b;
    b.X.resize(nd, n);
    for (Eigen::Index i = 0; i < nd; ++i)
      for (Eigen::Index j = 0; j < n; ++j) b.X(i, j) = rng.next_complex_normal();
    b.Y = b.X * FourierPack(n).F;
    const CMatrix t = empirical_autocov_time(b, lag);
    const CMatrix f = empirical_autocov_freq(b, lag);
    worst_dual = std::max(worst_dual,
                          (t - f).cwiseAbs().maxCoeff() / std::max(1.0, t.cwiseAbs().maxCoeff()));
  }

  double worst_herm = 0.0;
  for (int cfg = 0; cfg < 30; ++cfg) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.next_u64() % 23);
    CMatrix a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) = rng.next_complex_normal();
    const RVector ev = hermitian_eigenvalues(hermitize(a));
    const RVector sv = singular_values(a);
    std::vector<double> lhs, rhs;
    for (Eigen::Index i = 0; i < ev.size(); ++i) lhs.push_back(std::abs(ev(i)));
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      rhs.push_back(sv(i));
      rhs.push_back(sv(i));
    }
    std::sort(lhs.begin(), lhs.end());
    std::sort(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < lhs.size(); ++i)
      worst_herm = std::max(worst_herm, std::abs(lhs[i] - rhs[i]));
  }

  const bool pass = worst_fourier <= 1e-12 && worst_dual <= 1e-10 && worst_herm <= 1e-9;
  report(1, "structural identities", pass,
         "Fourier factorization " + fmt(worst_fourier) + ", autocov dual-path " + fmt(worst_dual) +
             ", hermitization spectrum " + fmt(worst_herm),
         now_s() - t0);
}

// 2. Fixed-point contract.
void criterion2() {
  const double t0 = now_s();
  bool pass = true;
  std::string why;
  double worst_res = 0.0, worst_contr = 0.0;
  for (int which = 0; which < 2; ++which)
    for (Eigen::Index nd : {8, 16, 32})
      for (double gamma : {0.5, 1.0}) {
        const auto model = which == 0
                               ? SpectralDensityModel::white_noise(nd)
                               : SpectralDensityModel::scalar_ma(nd, {Complex(0.5, 0.0)});
        const Eigen::Index n = static_cast<Eigen::Index>(static_cast<double>(nd) / gamma);
        try {
          const StieltjesState st = solve_G(model, Complex(0.8, 0.0), Complex(0.0, 0.05), 1, n);
          worst_res = std::max(worst_res, st.residual);
          worst_contr = std::max(worst_contr, st.contraction_ratio);
          if (st.residual > 1e-10) pass = false;
          if (st.contraction_ratio > 0.55) pass = false;
        } catch (const std::exception& e) {
          pass = false;
          why = e.what();
        }
      }

  double worst_tight = 0.0;
  for (int which = 0; which < 2; ++which) {
    const auto model = which == 0 ? SpectralDensityModel::white_noise(16)
                                  : SpectralDensityModel::scalar_ma(16, {Complex(0.5, 0.0)});
    for (double t : {10.0, 100.0, 1000.0}) {
      const Complex g = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(0.0, t), 1, 32));
      const double err = std::abs(-kI * t * g - 1.0) * t / 2.0;  // normalized to the 2/t budget
      worst_tight = std::max(worst_tight, err);
      if (err > 1.0) pass = false;
    }
  }
  report(2, "fixed-point contract", pass,
         "residual " + fmt(worst_res) + ", contraction " + fmt(worst_contr) +
             ", tightness (fraction of 2/t budget) " + fmt(worst_tight) +
             (why.empty() ? "" : ", error: " + why),
         now_s() - t0);
}

// 3. White-noise oracle equivalence.
void criterion3() {
  const double t0 = now_s();
  const Eigen::Index nd = 16, n = 32;
  double worst = 0.0;
  bool pass = true;
  std::string why;
  for (Complex z : {Complex(0.3, 0.0), Complex(1.0, 0.0), Complex(1.5, 0.5)})
    for (double t : {0.2, 1.0, 5.0}) {
      try {
        const auto wns = white_noise_system(z, t, 0.5, 512);
        SolveOptions opt;
        opt.force_full_matrix = true;
        const StieltjesState st =
            solve_G(SpectralDensityModel::white_noise(nd), z, Complex(0.0, t), 1, n, opt);
        worst = std::max(worst, std::abs(st.tcal(0, 0) - kI * wns.h));
        worst = std::max(worst, std::abs(st.tcal(0, 1) - wns.g01));
      } catch (const std::exception& e) {
        pass = false;
        why = e.what();
      }
    }
  if (worst > 1e-6) pass = false;
  report(3, "white-noise oracle equivalence", pass,
         "max |matrix - scalar| " + fmt(worst) + (why.empty() ? "" : ", error: " + why),
         now_s() - t0);
}

// 4. Deterministic-equivalent convergence.
void criterion4() {
  const double t0 = now_s();
  const Complex z(0.8, 0.0), eta(0.0, 1.0);
  std::vector<double> gaps;
  for (Eigen::Index nd : {64, 128, 256}) {
    const Eigen::Index n = 2 * nd;
    const auto model = SpectralDensityModel::white_noise(nd);
    const Complex g_det = stieltjes_trace(solve_G(model, z, eta, 1, n));
    double acc = 0.0;
    for (int s = 0; s < 20; ++s) {
      const SampleBlock b = sample_circulant(model, n, 2026, static_cast<std::uint64_t>(s));
      acc += std::abs(empirical_nu(b, 1, z).stieltjes(eta) - g_det);
    }
    gaps.push_back(acc / 20.0);
  }
  const bool pass = gaps[1] < gaps[0] && gaps[2] < gaps[1] && gaps[2] <= 0.05;
  report(4, "deterministic-equivalent convergence", pass,
         "mean |g_emp - g_det| = " + fmt(gaps[0]) + " / " + fmt(gaps[1]) + " / " + fmt(gaps[2]) +
             " over N = 64/128/256",
         now_s() - t0);
}

// 5. Conditional/marginal covariance verification.
void criterion5() {
  const double t0 = now_s();
  const CDReport wn = cd_report(SpectralDensityModel::white_noise(3), 32, 0.1);
  const double wn_err = std::max(wn.max_good_err_conditional, wn.max_good_err_marginal);

  const auto ma = SpectralDensityModel::scalar_ma(1, {Complex(0.5, 0.0)});
  std::vector<double> errs;
  for (Eigen::Index n : {16, 32, 64, 128}) {
    const CDReport r = cd_report(ma, n, 0.1);
    errs.push_back(std::max(r.max_good_err_conditional, r.max_good_err_marginal));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errs.size(); ++i)
    if (!(errs[i] < errs[i - 1])) decreasing = false;
  const bool pass = wn_err <= 1e-12 && decreasing;
  report(5, "conditional covariance verification", pass,
         "white-noise error " + fmt(wn_err) + ", MA(1) error path " + fmt(errs[0]) + " > " +
             fmt(errs[1]) + " > " + fmt(errs[2]) + " > " + fmt(errs[3]),
         now_s() - t0);
}

// 6. Resolvent variance bound.
void criterion6() {
  const double t0 = now_s();
  const Eigen::Index nd = 64, n = 128;
  const CMatrix b_mat = CMatrix::Identity(nd, nd);
  bool pass = true;
  double worst_margin = -1e300;
  for (int which = 0; which < 2; ++which) {
    const auto model = which == 0 ? SpectralDensityModel::white_noise(nd)
                                  : SpectralDensityModel::scalar_ma(nd, {Complex(0.5, 0.0)});
    const auto rep = resolvent_variance_check(model, n, 1, Complex(0.8, 0.0), b_mat,
                                              {Complex(0.0, 2.0), Complex(0.0, 5.0)}, 200,
                                              9000 + static_cast<std::uint64_t>(which));
    for (const auto& e : rep.entries) {
      const double margin = e.ratio - (1.0 + 3.0 * e.bootstrap_se);
      worst_margin = std::max(worst_margin, margin);
      if (margin > 0.0) pass = false;
    }
  }
  report(6, "resolvent variance bound", pass,
         "worst ratio margin over bound " + fmt(worst_margin) + " (<= 0 required)", now_s() - t0);
}

// 7. Small-singular-value experiments.
void criterion7() {
  const double t0 = now_s();
  bool pass = true;
  std::string why;

  DistanceIdentityReport dist;
  try {
    dist = distance_identity_check(SpectralDensityModel::white_noise(16), 32, 1,
                                   Complex(1.0, 0.0), 50, 515);
    if (dist.max_rel_error > 1e-8 || !dist.linearization_ok || !dist.truncation_ok) pass = false;
  } catch (const std::exception& e) {
    pass = false;
    why = e.what();
  }

  const auto model = SpectralDensityModel::white_noise(128);
  TailConfig cfg;
  cfg.n = 256;
  cfg.trials = 500;
  cfg.seed = 2026;
  cfg.z = Complex(0.5, 0.0);
  const auto smallest = tail_smallest(model, cfg, {0.5, 1.0, 2.0, 4.0, 8.0});
  if (smallest.envelope_intercept > 0.02) pass = false;

  std::vector<Eigen::Index> ks;
  for (Eigen::Index k = 11; k <= 64; ++k) ks.push_back(k);
  const auto inter = tail_intermediate(model, cfg, ks, 0.01);
  double worst_exceed = 0.0;
  for (const auto& p : inter.points) worst_exceed = std::max(worst_exceed, p.exceedance);
  if (worst_exceed > 0.05) pass = false;

  report(7, "small-singular-value experiments", pass,
         "distance identity rel err " + fmt(dist.max_rel_error) + ", inequalities " +
             (dist.linearization_ok && dist.truncation_ok ? "hold" : "VIOLATED") +
             ", envelope intercept " + fmt(smallest.envelope_intercept) +
             ", intermediate exceedance " + fmt(worst_exceed) +
             (why.empty() ? "" : ", error: " + why),
         now_s() - t0);
}

// 8. Log-potential / density pipeline.
void criterion8() {
  const double t0 = now_s();
  bool pass = true;
  std::string why;

  // dual-route agreement on empirical measures
  double worst_dual = 0.0;
  const auto m16 = SpectralDensityModel::white_noise(16);
  for (int s = 0; s < 10; ++s) {
    const SampleBlock b = sample_circulant(m16, 32, 88, static_cast<std::uint64_t>(s));
    const auto nu = empirical_nu(b, 1, Complex(0.9, 0.1));
    double smin = 1e300;
    for (double a : nu.atoms) smin = std::min(smin, std::abs(a));
    if (smin < 1e-6) continue;
    worst_dual = std::max(worst_dual, std::abs(log_potential_measure_atoms(nu) -
                                               log_potential_measure_yroute(nu)));
  }
  if (worst_dual > 1e-3) pass = false;

  // circular-law synthetic recovery at 81x81
  auto circ = potential_field_from(-1.6, 1.6, -1.6, 1.6, 81, 81, circular_law_potential);
  density_from_potential(circ);
  const double circ_mass = circ.density_mass();
  double circ_sup = 0.0;
  for (int iy = 1; iy + 1 < circ.ny; ++iy)
    for (int ix = 1; ix + 1 < circ.nx; ++ix) {
      const Complex z = circ.node(ix, iy);
      // stencils straddling the rim sample a C^1 kink; excluded from the sup
      if (std::abs(std::abs(z) - 1.0) < 2.0 * std::max(circ.dx(), circ.dy())) continue;
      const double target = std::abs(z) < 1.0 ? 1.0 / kPi : 0.0;
      circ_sup = std::max(circ_sup, std::abs(circ.density[circ.idx(ix, iy)] - target));
    }
  if (std::abs(circ_mass - 1.0) > 0.05 || circ_sup > 0.05) pass = false;

  // deterministic white-noise density mass
  const auto m8 = SpectralDensityModel::white_noise(8);
  SolveOptions opt;
  opt.discrete = true;
  opt.max_iter = 2000;
  YQuadrature q;
  double det_mass = 0.0;
  try {
    auto f = potential_field_from(-2.2, 2.2, -2.2, 2.2, 41, 41, [&](Complex z) {
      const auto pot = log_potential_deterministic(m8, z, 1, 16, q, opt);
      if (!pot.valid) throw std::runtime_error("solver stall in field");
      return pot.U;
    });
    density_from_potential(f);
    int valid = 0;
    for (char v : f.valid) valid += v;
    det_mass = f.density_mass();
    if (valid != f.nx * f.ny || std::abs(det_mass - 1.0) > 0.05) pass = false;
  } catch (const std::exception& e) {
    pass = false;
    why = e.what();
  }

  // symmetry of the trace transform
  double worst_sym = 0.0;
  for (int which = 0; which < 2; ++which) {
    const auto model = which == 0 ? SpectralDensityModel::white_noise(8)
                                  : SpectralDensityModel::scalar_ma(8, {Complex(0.5, 0.0)});
    const Complex eta(0.4, 1.1);
    const Complex g1 = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), eta, 1, 16));
    const Complex g2 =
        stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(-eta.real(), eta.imag()), 1, 16));
    worst_sym = std::max(worst_sym, std::abs(std::conj(g2) + g1));
    const Complex git = stieltjes_trace(solve_G(model, Complex(0.8, 0.0), Complex(0.0, 0.7), 1, 16));
    worst_sym = std::max(worst_sym, std::abs(git.real()));
  }
  if (worst_sym > 1e-10) pass = false;

  report(8, "log-potential pipeline", pass,
         "dual-route gap " + fmt(worst_dual) + ", circular-law mass " + fmt(circ_mass) +
             " sup err " + fmt(circ_sup) + ", white-noise mass " + fmt(det_mass) +
             ", symmetry " + fmt(worst_sym) + (why.empty() ? "" : ", error: " + why),
         now_s() - t0);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (g_failures == 0)
    std::printf("all 8 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  return g_failures;
}
