#pragma once

// Deterministic-equivalent solver: Picard iteration with eta-continuation for
// the 2N x 2N matrix fixed point, a 2x2 reduced path for isotropic densities,
// and the scalar white-noise system as an independent cross-check route.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/core.hpp"
#include "acm/spectral_model.hpp"

namespace acm {

// theta |-> [[0, e^{-i L theta}], [e^{i L theta}, 0]]; Hermitian and unitary.
inline Eigen::Matrix2cd ul_matrix(Eigen::Index lag, double theta) {
  Eigen::Matrix2cd u;
  const Complex e = std::exp(-kI * (static_cast<double>(lag) * theta));
  u << 0.0, e, std::conj(e), 0.0;
  return u;
}

struct StieltjesState {
  CMatrix G;                 // 2N x 2N solution
  Complex z;
  Complex eta;
  Eigen::Index dim = 0;      // N
  Eigen::Index n = 0;        // window size entering the trace normalization
  Eigen::Matrix2cd tcal;     // block traces of G / n
  double residual = 0.0;     // ||G - F(G)||
  int iterations = 0;        // iterations spent at the target eta stage
  double contraction_ratio = 0.0;  // max successive-difference ratio in the contraction domain
  std::vector<Complex> eta_path;
  bool reduced_path = false;
  Eigen::Matrix2cd reduced_core = Eigen::Matrix2cd::Zero();  // A with G = A (x) I on the reduced path
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int nodes = 512;                 // quadrature nodes (discrete mode: forced to n)
  bool discrete = false;           // use the n-point frequency grid instead of a dense one
  bool force_full_matrix = false;  // disable the isotropic 2x2 reduction
  std::optional<CMatrix> start;    // admissible start override (uniqueness probes)
  std::optional<Eigen::Matrix2cd> start_reduced;  // warm start for the 2x2 reduced path
};

namespace detail {

struct NodeCache {
  std::vector<double> theta;
  std::vector<CMatrix> S;          // empty when scalar density suffices
  std::vector<double> s_scalar;
  std::vector<Eigen::Matrix2cd> U;
  bool constant_S = false;         // S(theta) independent of theta
  bool isotropic = false;
};

inline NodeCache build_nodes(const SpectralDensityModel& model, Eigen::Index lag, int nodes,
                             bool want_full) {
  NodeCache c;
  c.isotropic = model.isotropic();
  c.constant_S = model.max_lag() == 0;
  for (int j = 0; j < nodes; ++j) {
    const double th = 2.0 * kPi * j / nodes;
    c.theta.push_back(th);
    c.U.push_back(ul_matrix(lag, th));
    if (c.isotropic)
      c.s_scalar.push_back(model.scalar_density(th));
    if (!c.isotropic || want_full)
      c.S.push_back(herm_part(model.evaluate(th)));
  }
  return c;
}

inline Eigen::Matrix2cd shift_matrix(Complex z, Complex eta) {
  Eigen::Matrix2cd e;
  e << eta, z, std::conj(z), eta;
  return e;
}

}  // namespace detail

// One application of the functional: average over nodes of
// (T((I_2 (x) S) M) + U_L)^{-1} (x) S, minus [[eta, z],[zbar, eta]] (x) I,
// inverted.
inline CMatrix apply_F_cached(const CMatrix& m, const detail::NodeCache& cache, Complex z,
                              Complex eta, Eigen::Index n) {
  const Eigen::Index nd = m.rows() / 2;
  const std::size_t nodes = cache.theta.size();
  CMatrix b = CMatrix::Zero(2 * nd, 2 * nd);
  Eigen::Matrix2cd w_const;
  if (cache.constant_S) w_const = trace_op_weighted(cache.S[0], m, n);
  Eigen::Matrix2cd tinv_acc = Eigen::Matrix2cd::Zero();
  for (std::size_t j = 0; j < nodes; ++j) {
    const Eigen::Matrix2cd t =
        (cache.constant_S ? w_const : trace_op_weighted(cache.S[j], m, n)) + cache.U[j];
    if (std::abs(t.determinant()) < 1e-300)
      throw std::runtime_error("apply_F: singular 2x2 node matrix");
    const Eigen::Matrix2cd tinv = t.inverse();
    if (cache.constant_S)
      tinv_acc += tinv;
    else
      b += kron2(tinv, cache.S[j]);
  }
  if (cache.constant_S)
    b = kron2(tinv_acc / static_cast<double>(nodes), cache.S[0]);
  else
    b /= static_cast<double>(nodes);
  b -= kron2(detail::shift_matrix(z, eta), CMatrix::Identity(nd, nd));
  Eigen::PartialPivLU<CMatrix> lu(b);
  return lu.solve(CMatrix::Identity(2 * nd, 2 * nd));
}

inline CMatrix apply_F(const CMatrix& m, const SpectralDensityModel& model, Complex z, Complex eta,
                       Eigen::Index lag, Eigen::Index n, int nodes = 512, bool discrete = false) {
  if (eta.imag() <= 0.0) throw std::invalid_argument("apply_F: need Im eta > 0");
  require_finite(m, "apply_F");
  const detail::NodeCache cache =
      detail::build_nodes(model, lag, discrete ? static_cast<int>(n) : nodes, /*want_full=*/true);
  return apply_F_cached(m, cache, z, eta, n);
}

// Reduced functional for isotropic S = s(theta) I: the iterate stays of the
// form A (x) I_N and the map acts on the 2x2 factor.
inline Eigen::Matrix2cd apply_F_reduced(const Eigen::Matrix2cd& a, const detail::NodeCache& cache,
                                        Complex z, Complex eta, double gamma) {
  const std::size_t nodes = cache.theta.size();
  Eigen::Matrix2cd b = Eigen::Matrix2cd::Zero();
  for (std::size_t j = 0; j < nodes; ++j) {
    const double s = cache.s_scalar[j];
    const Eigen::Matrix2cd t = (gamma * s) * a + cache.U[j];
    if (std::abs(t.determinant()) < 1e-300)
      throw std::runtime_error("apply_F_reduced: singular 2x2 node matrix");
    b += s * t.inverse();
  }
  b /= static_cast<double>(nodes);
  b -= detail::shift_matrix(z, eta);
  return b.inverse();
}

namespace detail {

template <typename Mat>
struct PicardResult {
  Mat value;
  double residual = 0.0;
  int iterations = 0;
  double contraction_ratio = 0.0;
  bool converged = false;
};

// Damped Picard iteration; damping halves when the residual stagnates.
template <typename Mat, typename Step, typename Norm>
PicardResult<Mat> picard(Mat g, const Step& step, const Norm& norm, double tol, int max_iter) {
  PicardResult<Mat> out;
  double alpha = 1.0;
  double prev_diff = -1.0;
  double prev_res = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int k = 0; k < max_iter; ++k) {
    const Mat fg = step(g);
    const Mat delta = fg - g;
    const double res = norm(delta);
    out.iterations = k + 1;
    if (prev_diff > 0.0 && k >= 2)
      out.contraction_ratio = std::max(out.contraction_ratio, res / prev_diff);
    if (res <= tol) {
      out.value = fg;
      out.residual = norm(step(fg) - fg);
      out.converged = true;
      return out;
    }
    if (res > 0.99 * prev_res) {
      if (++stall >= 2) {
        alpha = std::max(0.5 * alpha, 0.05);
        stall = 0;
      }
    } else {
      stall = 0;
    }
    prev_res = res;
    prev_diff = res;
    g = g + alpha * delta;
  }
  out.value = g;
  out.residual = norm(step(g) - g);
  out.converged = out.residual <= tol;
  return out;
}

}  // namespace detail

// Solves G = F_{S,z}(G, eta) by eta-continuation: start high inside the
// contraction domain (Im eta_0 = 8 ||S|| max(gamma, sqrt(gamma))), halve the
// imaginary part toward the target, warm-starting each stage.
inline StieltjesState solve_G(const SpectralDensityModel& model, Complex z, Complex eta_target,
                              Eigen::Index lag, Eigen::Index n, SolveOptions opt = {}) {
  if (eta_target.imag() <= 0.0) throw std::invalid_argument("solve_G: need Im eta > 0");
  const Eigen::Index nd = model.dim();
  const double gamma = static_cast<double>(nd) / static_cast<double>(n);
  const bool reduced = model.isotropic() && !opt.force_full_matrix && !opt.start.has_value();
  const int nodes = opt.discrete ? static_cast<int>(n) : opt.nodes;
  const detail::NodeCache cache = detail::build_nodes(model, lag, nodes, /*want_full=*/!reduced);

  // Continuation schedule down to the target imaginary part. A supplied warm
  // start skips the schedule (and the norm estimate that seeds it): the caller
  // vouches that the start is close to the target solution.
  const double im_target = eta_target.imag();
  const bool warm = opt.start.has_value() || (reduced && opt.start_reduced.has_value());
  std::vector<double> im_path;
  if (warm) {
    im_path.push_back(im_target);
  } else {
    const double im_domain = 4.0 * model.sup_norm_estimate(256) * std::max(gamma, std::sqrt(gamma));
    double im = std::max(2.0 * im_domain, im_target);
    for (;;) {
      im_path.push_back(im);
      if (im <= im_target) break;
      im = std::max(0.5 * im, im_target);
    }
  }

  StieltjesState st;
  st.z = z;
  st.dim = nd;
  st.n = n;
  st.reduced_path = reduced;

  auto fro = [](const auto& m) { return std::sqrt(m.squaredNorm()); };

  if (reduced) {
    Eigen::Matrix2cd a = opt.start_reduced.value_or(
        ((-1.0 / Complex(eta_target.real(), im_path.front())) * Eigen::Matrix2cd::Identity()).eval());
    double contraction = 0.0;
    for (std::size_t stage = 0; stage < im_path.size(); ++stage) {
      const Complex eta(eta_target.real(), im_path[stage]);
      st.eta_path.push_back(eta);
      auto res = detail::picard(
          a, [&](const Eigen::Matrix2cd& x) { return apply_F_reduced(x, cache, z, eta, gamma); },
          fro, opt.tol, opt.max_iter);
      if (stage == 0) contraction = res.contraction_ratio;
      if (!res.converged)
        throw std::runtime_error("solve_G: stalled at Im eta = " + std::to_string(eta.imag()) +
                                 " with residual " + std::to_string(res.residual));
      a = res.value;
      st.iterations = res.iterations;
      st.residual = res.residual;
    }
    st.eta = eta_target;
    st.contraction_ratio = contraction;
    st.reduced_core = a;
    st.G = kron2(a, CMatrix::Identity(nd, nd));
  } else {
    CMatrix g = opt.start.value_or(
        (-1.0 / Complex(eta_target.real(), im_path.front())) * CMatrix::Identity(2 * nd, 2 * nd));
    double contraction = 0.0;
    for (std::size_t stage = 0; stage < im_path.size(); ++stage) {
      const Complex eta(eta_target.real(), im_path[stage]);
      st.eta_path.push_back(eta);
      auto res = detail::picard(
          g, [&](const CMatrix& x) { return apply_F_cached(x, cache, z, eta, n); }, fro, opt.tol,
          opt.max_iter);
      if (stage == 0) contraction = res.contraction_ratio;
      if (!res.converged)
        throw std::runtime_error("solve_G: stalled at Im eta = " + std::to_string(eta.imag()) +
                                 " with residual " + std::to_string(res.residual));
      g = res.value;
      st.iterations = res.iterations;
      st.residual = res.residual;
    }
    st.eta = eta_target;
    st.contraction_ratio = contraction;
    st.G = std::move(g);
  }
  st.tcal = trace_op_T(st.G, n);
  return st;
}

inline Complex stieltjes_trace(const StieltjesState& st) {
  return st.G.trace() / static_cast<double>(2 * st.dim);
}

// Checks the Stieltjes-class invariants of a delivered state; throws on
// violation with the offending quantity.
inline void validate_state(const StieltjesState& st, double slack = 1e-8) {
  const CMatrix im = imag_part(st.G);
  const double min_im = hermitian_eigenvalues(im)(2 * st.dim - 1);
  if (min_im <= 0.0)
    throw std::runtime_error("StieltjesState: Im G not positive definite (min eig " +
                             std::to_string(min_im) + ")");
  const double nrm = spectral_norm_estimate(st.G, 8);
  if (nrm > 1.0 / st.eta.imag() + 1e-10)
    throw std::runtime_error("StieltjesState: ||G|| = " + std::to_string(nrm) +
                             " exceeds 1/Im eta");
  const Complex t00 = block_get(st.G, 0, 0).trace() / static_cast<double>(st.dim);
  const Complex t11 = block_get(st.G, 1, 1).trace() / static_cast<double>(st.dim);
  if (std::abs(t00 - t11) > slack)
    throw std::runtime_error("StieltjesState: block traces differ by " +
                             std::to_string(std::abs(t00 - t11)));
}

struct WhiteNoiseSolution {
  double h = 0.0;        // g00 = g11 = i h, h > 0
  Complex g01;
  double residual_gamma = 0.0;  // residual of the gamma equation
  double residual_zero = 0.0;   // residual of the zero equation
  double fixed_point_residual = 0.0;
  int iterations = 0;
};

// Scalar system for white noise at eta = i t, L = 1: unknowns (h, g01) with
// Delta~(theta) = h^2 + |g01 + e^{-i theta}|^2, satisfying
//   gamma = (1/2pi) int (h^2 + |g01|^2 + g01 e^{i theta})/Delta~ + t h - zbar g01,
//   0     = (1/2pi) int h e^{-i theta}/Delta~ - z h - t g01.
inline WhiteNoiseSolution white_noise_system(Complex z, double t, double gamma,
                                             int quad_nodes = 512, double tol = 1e-12,
                                             int max_iter = 2000) {
  if (t <= 0.0 || gamma <= 0.0) throw std::invalid_argument("white_noise_system: need t, gamma > 0");
  std::vector<Eigen::Matrix2cd> u;
  for (int j = 0; j < quad_nodes; ++j) u.push_back(ul_matrix(1, 2.0 * kPi * j / quad_nodes));

  // One application of t2 |-> gamma (b2(t2) - E)^{-1}, b2 = avg (t2 + U)^{-1}.
  auto step_at = [&](double tt, const Eigen::Matrix2cd& t2) {
    Eigen::Matrix2cd b = Eigen::Matrix2cd::Zero();
    for (const auto& uj : u) b += (t2 + uj).inverse();
    b /= static_cast<double>(quad_nodes);
    b -= detail::shift_matrix(z, Complex(0.0, tt));
    return (gamma * b.inverse()).eval();
  };
  auto fro = [](const Eigen::Matrix2cd& m) { return std::sqrt(m.squaredNorm()); };

  // t-continuation mirrors the matrix solver's eta schedule.
  std::vector<double> path;
  double tt = std::max(8.0 * std::max(gamma, std::sqrt(gamma)), t);
  for (;;) {
    path.push_back(tt);
    if (tt <= t) break;
    tt = std::max(0.5 * tt, t);
  }
  Eigen::Matrix2cd t2 = (gamma / Complex(0.0, -path.front())) * Eigen::Matrix2cd::Identity();
  WhiteNoiseSolution sol;
  for (double stage_t : path) {
    auto res = detail::picard(
        t2, [&](const Eigen::Matrix2cd& x) { return step_at(stage_t, x); }, fro, tol, max_iter);
    if (!res.converged)
      throw std::runtime_error("white_noise_system: stalled at t = " + std::to_string(stage_t) +
                               " residual " + std::to_string(res.residual));
    t2 = res.value;
    sol.iterations = res.iterations;
    sol.fixed_point_residual = res.residual;
  }
  sol.h = t2(0, 0).imag();
  sol.g01 = t2(0, 1);
  if (sol.h <= 0.0) throw std::runtime_error("white_noise_system: h not positive");

  // Verification residuals of the two displayed equations, same quadrature.
  Complex eq_gamma = 0.0, eq_zero = 0.0;
  for (int j = 0; j < quad_nodes; ++j) {
    const double th = 2.0 * kPi * j / quad_nodes;
    const Complex e = std::exp(kI * th);
    const double delta = sol.h * sol.h + std::norm(sol.g01 + std::conj(e));
    eq_gamma += (sol.h * sol.h + std::norm(sol.g01) + sol.g01 * e) / delta;
    eq_zero += sol.h * std::conj(e) / delta;
  }
  eq_gamma /= static_cast<double>(quad_nodes);
  eq_zero /= static_cast<double>(quad_nodes);
  sol.residual_gamma = std::abs(eq_gamma + t * sol.h - std::conj(z) * sol.g01 - gamma);
  sol.residual_zero = std::abs(eq_zero - z * sol.h - t * sol.g01);
  return sol;
}

}  // namespace acm
