#pragma once

// Monte Carlo experiments: small-singular-value tails of R_hat_L - z, the
// bordered distance identity on the linearized matrix H, and the resolvent
// variance bound.

#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/core.hpp"
#include "acm/parallel.hpp"
#include "acm/process_sim.hpp"
#include "acm/spectral_model.hpp"

namespace acm {

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

// Wilson score interval for a binomial proportion.
inline WilsonInterval wilson_interval(double p_hat, int n, double zq = 1.96) {
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / n;
  const double center = (p_hat + z2 / (2.0 * n)) / denom;
  const double half = zq * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval w;
  w.low = std::max(0.0, center - half);
  w.high = std::min(1.0, center + half);
  return w;
}

struct TailConfig {
  Eigen::Index n = 0;
  Eigen::Index lag = 1;
  Complex z{1.0, 0.0};
  int trials = 500;
  std::uint64_t seed = 1;
  int workers = 0;
};

struct TailPoint {
  double t_or_k = 0.0;
  double exceedance = 0.0;
  WilsonInterval ci;
  int trials = 0;
};

struct TailExperiment {
  std::vector<TailPoint> points;
  // linear envelope p ~ intercept + slope * t fitted by least squares
  double envelope_intercept = 0.0;
  double envelope_slope = 0.0;
};

namespace detail {

// Full singular-value profile of R_hat_L - z for each trial.
inline std::vector<RVector> sample_sv_profiles(const SpectralDensityModel& model,
                                               const TailConfig& cfg) {
  const Eigen::Index nd = model.dim();
  std::vector<RVector> out(static_cast<std::size_t>(cfg.trials));
  parallel_for(out.size(), [&](std::size_t i) {
    const SampleBlock b = sample_circulant(model, cfg.n, cfg.seed, static_cast<std::uint64_t>(i));
    const CMatrix shifted = empirical_autocov(b, cfg.lag) - cfg.z * CMatrix::Identity(nd, nd);
    out[i] = singular_values(shifted);
  }, cfg.workers);
  return out;
}

}  // namespace detail

// Empirical P[s_min(R_hat_L - z) <= N^{-3/2} t] over a t-grid.
inline TailExperiment tail_smallest(const SpectralDensityModel& model, const TailConfig& cfg,
                                    const std::vector<double>& t_grid) {
  if (std::abs(cfg.z) == 0.0) throw std::invalid_argument("tail_smallest: need z != 0");
  if (cfg.trials < 100) throw std::invalid_argument("tail_smallest: need >= 100 trials");
  const auto profiles = detail::sample_sv_profiles(model, cfg);
  const double scale = std::pow(static_cast<double>(model.dim()), 1.5);
  TailExperiment exp;
  for (double t : t_grid) {
    TailPoint p;
    p.t_or_k = t;
    p.trials = cfg.trials;
    int cnt = 0;
    for (const auto& s : profiles)
      if (s(s.size() - 1) * scale <= t) ++cnt;
    p.exceedance = static_cast<double>(cnt) / cfg.trials;
    p.ci = wilson_interval(p.exceedance, cfg.trials);
    exp.points.push_back(p);
  }
  // Least-squares line through the (t, p) points.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(exp.points.size());
  for (const auto& p : exp.points) {
    sx += p.t_or_k;
    sy += p.exceedance;
    sxx += p.t_or_k * p.t_or_k;
    sxy += p.t_or_k * p.exceedance;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) > 1e-30) {
    exp.envelope_slope = (m * sxy - sx * sy) / denom;
    exp.envelope_intercept = (sy - exp.envelope_slope * sx) / m;
  }
  return exp;
}

// Empirical P[s_{N-k-1}(R_hat_L - z) <= c sqrt(k)/N] across a k-grid.
inline TailExperiment tail_intermediate(const SpectralDensityModel& model, const TailConfig& cfg,
                                        const std::vector<Eigen::Index>& k_grid, double c) {
  const Eigen::Index nd = model.dim();
  for (Eigen::Index k : k_grid)
    if (k < 1 || k > nd / 2) throw std::out_of_range("tail_intermediate: k outside [1, N/2]");
  const auto profiles = detail::sample_sv_profiles(model, cfg);
  TailExperiment exp;
  for (Eigen::Index k : k_grid) {
    TailPoint p;
    p.t_or_k = static_cast<double>(k);
    p.trials = cfg.trials;
    const double threshold = c * std::sqrt(static_cast<double>(k)) / static_cast<double>(nd);
    int cnt = 0;
    for (const auto& s : profiles)
      if (s(nd - k - 1) <= threshold) ++cnt;
    p.exceedance = static_cast<double>(cnt) / cfg.trials;
    p.ci = wilson_interval(p.exceedance, cfg.trials);
    exp.points.push_back(p);
  }
  return exp;
}

struct DistanceIdentityReport {
  double max_rel_error = 0.0;
  int instances = 0;
  int skipped = 0;
  bool linearization_ok = true;       // smallest sv of H <= smallest sv of R_hat_L - z
  bool truncation_ok = true;          // column-truncated variant, per sampled k
  double worst_linearization_slack = 0.0;
};

// Linearized matrix H = [[Omega^{-L}, Y*], [Y, z I_N]], (N+n) x (N+n).
inline CMatrix build_linearization(const CMatrix& y, Eigen::Index lag, Complex z) {
  const Eigen::Index nd = y.rows();
  const Eigen::Index n = y.cols();
  const FourierPack fp(n);
  CMatrix h = CMatrix::Zero(nd + n, nd + n);
  CMatrix omega_negL = CMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    omega_negL(k, k) = std::exp(2.0 * kPi * kI * static_cast<double>(k * lag) / static_cast<double>(n));
  h.topLeftCorner(n, n) = omega_negL;
  h.topRightCorner(n, nd) = y.adjoint();
  h.bottomLeftCorner(nd, n) = y;
  h.bottomRightCorner(nd, nd) = z * CMatrix::Identity(nd, nd);
  return h;
}

// Distance from column k of H to the span of the others, via orthogonal
// projection (QR of the remaining columns) — the direct route.
inline double column_distance_projector(const CMatrix& h, Eigen::Index k) {
  const Eigen::Index m = h.rows();
  CMatrix rest(m, m - 1);
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < m; ++j)
    if (j != k) rest.col(c++) = h.col(j);
  const Eigen::HouseholderQR<CMatrix> qr(rest);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m, m - 1);
  const CVector hk = h.col(k);
  return (hk - q * (q.adjoint() * hk)).norm();
}

// Cross-checks the bordered-inverse distance formula against the projector
// route on random instances, and verifies both linearization inequalities.
inline DistanceIdentityReport distance_identity_check(const SpectralDensityModel& model,
                                                      Eigen::Index n, Eigen::Index lag, Complex z,
                                                      int instances, std::uint64_t seed,
                                                      int workers = 0) {
  const Eigen::Index nd = model.dim();
  DistanceIdentityReport rep;
  rep.instances = instances;
  std::mutex mu;
  parallel_for(static_cast<std::size_t>(instances), [&](std::size_t inst) {
    const SampleBlock b = sample_circulant(model, n, seed, static_cast<std::uint64_t>(inst));
    const CMatrix h = build_linearization(b.Y, lag, z);
    const Eigen::Index k = static_cast<Eigen::Index>(inst) % n;

    // G_k: H with row k and column k (inside the Omega block) removed.
    const Eigen::Index m = nd + n;
    CMatrix gk(m - 1, m - 1);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == k) continue;
      Eigen::Index cc = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j == k) continue;
        gk(r, cc++) = h(i, j);
      }
      ++r;
    }
    const RVector sv_gk = singular_values(gk);
    const CMatrix shifted = empirical_autocov_freq(b, lag) - z * CMatrix::Identity(nd, nd);
    const RVector sv_r = singular_values(shifted);
    const RVector sv_h = singular_values(h);

    double rel_err = -1.0;
    bool skip = false;
    if (sv_gk(sv_gk.size() - 1) <= 1e-10 * sv_gk(0)) {
      skip = true;
    } else {
      const CMatrix gk_inv = Eigen::PartialPivLU<CMatrix>(gk).solve(CMatrix::Identity(m - 1, m - 1));
      const CMatrix dk = gk_inv.bottomRightCorner(nd, nd);
      const CMatrix pk = gk_inv.bottomLeftCorner(nd, n - 1);
      const CVector yk = b.Y.col(k);
      const Complex omega_mkL =
          std::exp(2.0 * kPi * kI * static_cast<double>(k * lag) / static_cast<double>(n));
      const Complex num = omega_mkL - (yk.adjoint() * dk * yk)(0);
      const double den = std::sqrt(1.0 + (yk.adjoint() * pk).squaredNorm() +
                                   (yk.adjoint() * dk).squaredNorm());
      const double formula = std::abs(num) / den;
      const double direct = column_distance_projector(h, k);
      rel_err = std::abs(formula - direct) / std::max(direct, 1e-300);
    }

    // Linearization: smallest sv of H vs smallest sv of the shifted autocovariance.
    const double slack = sv_h(sv_h.size() - 1) - sv_r(sv_r.size() - 1);
    // Truncated variant at a nontrivial depth.
    const Eigen::Index kk = std::max<Eigen::Index>(1, nd / 4);
    const RVector sv_trunc = singular_values(h.leftCols(m - kk));
    const bool trunc_ok = sv_trunc(sv_trunc.size() - 1) <= sv_r(nd - kk - 1) + 1e-12;

    std::lock_guard<std::mutex> lk(mu);
    if (skip) {
      ++rep.skipped;
    } else {
      rep.max_rel_error = std::max(rep.max_rel_error, rel_err);
    }
    rep.worst_linearization_slack = std::max(rep.worst_linearization_slack, slack);
    if (slack > 1e-12) rep.linearization_ok = false;
    if (!trunc_ok) rep.truncation_ok = false;
  }, workers);
  if (rep.skipped > instances / 20)
    throw std::runtime_error("distance_identity_check: skip rate above 5%");
  return rep;
}

struct VarianceRatioEntry {
  int u = 0, v = 0;
  Complex eta;
  double variance = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  double bootstrap_se = 0.0;  // SE of the ratio estimate
};

struct VarianceReport {
  std::vector<VarianceRatioEntry> entries;
  double max_resolvent_norm_excess = 0.0;  // max over trials of ||Q|| - 1/Im eta
};

// Empirical var(tr B Q_uv) against 8 gamma M^2 ||B||^2 / (Im eta)^4 with
// Q = (H(R_hat_L - z) - eta)^{-1}.
inline VarianceReport resolvent_variance_check(const SpectralDensityModel& model, Eigen::Index n,
                                               Eigen::Index lag, Complex z, const CMatrix& b_mat,
                                               const std::vector<Complex>& eta_list, int trials,
                                               std::uint64_t seed, int workers = 0) {
  if (trials < 200) throw std::invalid_argument("resolvent_variance_check: need >= 200 trials");
  const Eigen::Index nd = model.dim();
  const double gamma = static_cast<double>(nd) / static_cast<double>(n);
  const double m_bound = model.sup_norm_estimate(512);
  const double b_norm = singular_values(b_mat)(0);

  VarianceReport rep;
  for (Complex eta : eta_list) {
    if (eta.imag() <= 0.0) throw std::invalid_argument("resolvent_variance_check: need Im eta > 0");
    // traces[(u,v)][trial]
    std::vector<std::vector<Complex>> traces(4, std::vector<Complex>(static_cast<std::size_t>(trials)));
    std::vector<double> norm_excess(static_cast<std::size_t>(trials), 0.0);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t i) {
      const SampleBlock blk = sample_circulant(model, n, seed, static_cast<std::uint64_t>(i));
      const CMatrix shifted = empirical_autocov_freq(blk, lag) - z * CMatrix::Identity(nd, nd);
      const CMatrix hmat = hermitize(shifted) - eta * CMatrix::Identity(2 * nd, 2 * nd);
      const CMatrix q = Eigen::PartialPivLU<CMatrix>(hmat).solve(CMatrix::Identity(2 * nd, 2 * nd));
      norm_excess[i] = spectral_norm_estimate(q, 8) - 1.0 / eta.imag();
      for (int u = 0; u < 2; ++u)
        for (int v = 0; v < 2; ++v)
          traces[static_cast<std::size_t>(2 * u + v)][i] =
              b_mat.transpose().cwiseProduct(q.block(u * nd, v * nd, nd, nd)).sum();
    }, workers);
    for (double e : norm_excess) rep.max_resolvent_norm_excess = std::max(rep.max_resolvent_norm_excess, e);

    const double bound = 8.0 * gamma * m_bound * m_bound * b_norm * b_norm /
                         std::pow(eta.imag(), 4.0);
    for (int u = 0; u < 2; ++u)
      for (int v = 0; v < 2; ++v) {
        const auto& vals = traces[static_cast<std::size_t>(2 * u + v)];
        Complex mean = 0.0;
        for (const Complex& t : vals) mean += t;
        mean /= static_cast<double>(trials);
        double var = 0.0;
        for (const Complex& t : vals) var += std::norm(t - mean);
        var /= static_cast<double>(trials - 1);

        // Bootstrap SE of var/bound: resample trials with replacement and
        // recompute the variance on each resample.
        CounterRng rng(seed ^ 0xb00157ull, static_cast<std::uint64_t>(2 * u + v));
        const int reps = 200;
        double bs_mean = 0.0, bs_m2 = 0.0;
        std::vector<Complex> resample(static_cast<std::size_t>(trials));
        for (int r = 0; r < reps; ++r) {
          for (int i = 0; i < trials; ++i)
            resample[static_cast<std::size_t>(i)] =
                vals[rng.next_u64() % static_cast<std::uint64_t>(trials)];
          Complex bm = 0.0;
          for (const Complex& t : resample) bm += t;
          bm /= static_cast<double>(trials);
          double bv = 0.0;
          for (const Complex& t : resample) bv += std::norm(t - bm);
          bv /= static_cast<double>(trials - 1);
          const double x = bv / bound;
          const double d = x - bs_mean;
          bs_mean += d / (r + 1);
          bs_m2 += d * (x - bs_mean);
        }
        VarianceRatioEntry e;
        e.u = u;
        e.v = v;
        e.eta = eta;
        e.variance = var;
        e.bound = bound;
        e.ratio = var / bound;
        e.bootstrap_se = std::sqrt(bs_m2 / (reps - 1));
        rep.entries.push_back(e);
      }
  }
  return rep;
}

inline void write_tail_csv(const std::string& path, const TailExperiment& exp) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_tail_csv: cannot open " + path);
  f << "t_or_k,exceedance,ci_low,ci_high,trials\n";
  f.precision(17);
  for (const auto& p : exp.points)
    f << p.t_or_k << ',' << p.exceedance << ',' << p.ci.low << ',' << p.ci.high << ',' << p.trials
      << '\n';
}

}  // namespace acm
