#pragma once

// Hermitization pipeline: symmetrized singular-value measures, log-potentials
// by the atom route and the Stieltjes y-integration route, and density
// recovery on a z-grid via the discrete Laplacian.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "acm/core.hpp"
#include "acm/fixed_point.hpp"
#include "acm/parallel.hpp"
#include "acm/process_sim.hpp"

namespace acm {

struct SignedAtomMeasure {
  std::vector<double> atoms;
  std::vector<double> weights;  // nonnegative, summing to 1

  double total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  // g(eta) = sum w_l / (a_l - eta).
  Complex stieltjes(Complex eta) const {
    Complex g = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) g += weights[i] / (atoms[i] - eta);
    return g;
  }
};

// Symmetrized singular-value measure of R_hat_L - z: atoms +-s_l, weight 1/(2N).
inline SignedAtomMeasure empirical_nu(const SampleBlock& block, Eigen::Index lag, Complex z) {
  const Eigen::Index nd = block.X.rows();
  const CMatrix shifted = empirical_autocov(block, lag) - z * CMatrix::Identity(nd, nd);
  const RVector s = singular_values(shifted);
  SignedAtomMeasure nu;
  const double w = 1.0 / static_cast<double>(2 * nd);
  for (Eigen::Index i = 0; i < nd; ++i) {
    nu.atoms.push_back(s(i));
    nu.weights.push_back(w);
    nu.atoms.push_back(-s(i));
    nu.weights.push_back(w);
  }
  return nu;
}

// U(z) = -(1/N) sum log s_l(R_hat_L - z); errors out on an atom hit.
inline double log_potential_empirical(const SampleBlock& block, Eigen::Index lag, Complex z) {
  const Eigen::Index nd = block.X.rows();
  const CMatrix shifted = empirical_autocov(block, lag) - z * CMatrix::Identity(nd, nd);
  const RVector s = singular_values(shifted);
  if (s(nd - 1) < 1e-12)
    throw std::runtime_error("log_potential_empirical: z hits an atom (s_min = " +
                             std::to_string(s(nd - 1)) + ")");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < nd; ++i) acc += std::log(s(i));
  return -acc / static_cast<double>(nd);
}

// Independent route through the eigenvalues of R_hat_L itself.
inline double log_potential_empirical_eig(const SampleBlock& block, Eigen::Index lag, Complex z) {
  const CMatrix r = empirical_autocov(block, lag);
  const CVector lam = general_eigenvalues(r);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    const double d = std::abs(lam(i) - z);
    if (d < 1e-12) throw std::runtime_error("log_potential_empirical_eig: z hits an eigenvalue");
    acc += std::log(d);
  }
  return -acc / static_cast<double>(lam.size());
}

struct YQuadrature {
  double y_min = 1e-4;
  double y_max = 1e3;
  int nodes = 200;  // log-spaced trapezoid
};

// -[log y_max - int_{y_min}^{y_max} Im g(iy) dy] for a symmetric measure given
// through its Stieltjes transform; the identity dL/dy = Im g(iy) with
// L(y) = int (1/2) log(t^2 + y^2) nu(dt) underlies the formula.
inline std::vector<double> y_grid(const YQuadrature& q) {
  if (q.y_min <= 0.0 || q.y_max <= q.y_min || q.nodes < 2)
    throw std::invalid_argument("y_grid: bad y-quadrature");
  std::vector<double> y(static_cast<std::size_t>(q.nodes));
  const double lr = std::log(q.y_max / q.y_min);
  for (int i = 0; i < q.nodes; ++i)
    y[static_cast<std::size_t>(i)] = q.y_min * std::exp(lr * i / (q.nodes - 1));
  return y;
}

// Trapezoid over sampled Im g(iy). Subtracts the reference integrand
// r(y) = y/(1+y^2) -- the Im g of the two-atom measure at +-1 -- and adds its
// integral back in closed form; the residual decays like 1/y^3, which tames
// the log-grid trapezoid error.
inline double log_potential_from_samples(const std::vector<double>& y,
                                         const std::vector<double>& im_g) {
  if (y.size() != im_g.size() || y.size() < 2)
    throw std::invalid_argument("log_potential_from_samples: size mismatch");
  const auto ref = [](double v) { return v / (1.0 + v * v); };
  double integral = 0.0;
  for (std::size_t i = 1; i < y.size(); ++i)
    integral += 0.5 * ((im_g[i] - ref(y[i])) + (im_g[i - 1] - ref(y[i - 1]))) * (y[i] - y[i - 1]);
  integral += 0.5 * std::log((1.0 + y.back() * y.back()) / (1.0 + y.front() * y.front()));
  return -(std::log(y.back()) - integral);
}

template <typename StieltjesFn>
double log_potential_from_stieltjes(const StieltjesFn& g_of_iy, const YQuadrature& q) {
  const std::vector<double> y = y_grid(q);
  std::vector<double> im_g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) im_g[i] = std::imag(g_of_iy(y[i]));
  return log_potential_from_samples(y, im_g);
}

// Atom-free route for an empirical measure (used as the dual-route check).
inline double log_potential_measure_yroute(const SignedAtomMeasure& nu, const YQuadrature& q = {}) {
  return log_potential_from_stieltjes([&](double y) { return nu.stieltjes(Complex(0.0, y)); }, q);
}

// Direct atom route: -int log|t| nu(dt).
inline double log_potential_measure_atoms(const SignedAtomMeasure& nu) {
  double acc = 0.0;
  for (std::size_t i = 0; i < nu.atoms.size(); ++i) {
    const double a = std::abs(nu.atoms[i]);
    if (a < 1e-300) throw std::runtime_error("log_potential_measure_atoms: atom at 0");
    acc += nu.weights[i] * std::log(a);
  }
  return -acc;
}

struct DeterministicPotential {
  double U = 0.0;
  double tail_bound = 0.0;        // m2/(2 y_max^2) truncation estimate
  double ymin_sensitivity = 0.0;  // |U(y_min) - U(2 y_min)| probe
  bool valid = true;
};

// Deterministic-equivalent log-potential at z via Im g(iy) from the solver.
inline DeterministicPotential log_potential_deterministic(const SpectralDensityModel& model,
                                                          Complex z, Eigen::Index lag,
                                                          Eigen::Index n, YQuadrature q = {},
                                                          SolveOptions opt = {}) {
  DeterministicPotential out;
  try {
    // March down the y-grid, warm-starting each solve from its predecessor;
    // a node that stalls on the warm path falls back to full continuation.
    const std::vector<double> y = y_grid(q);
    std::vector<double> im_g(y.size());
    SolveOptions o = opt;
    for (std::size_t i = y.size(); i-- > 0;) {
      StieltjesState st;
      try {
        st = solve_G(model, z, Complex(0.0, y[i]), lag, n, o);
      } catch (const std::runtime_error&) {
        st = solve_G(model, z, Complex(0.0, y[i]), lag, n, opt);
      }
      im_g[i] = std::imag(stieltjes_trace(st));
      if (st.reduced_path)
        o.start_reduced = st.reduced_core;
      else
        o.start = st.G;
    }
    out.U = log_potential_from_samples(y, im_g);

    // second moment proxy: the crude bound m2 <= y^2 (1 - y Im g) evaluated
    // at the grid node nearest y_max/4.
    std::size_t probe = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (std::abs(y[i] - q.y_max / 4.0) < std::abs(y[probe] - q.y_max / 4.0)) probe = i;
    out.tail_bound = std::abs(y[probe] * y[probe] * (1.0 - y[probe] * im_g[probe])) /
                     (2.0 * q.y_max * q.y_max);

    // y_min sensitivity: re-integrate on the subgrid starting at 2 y_min.
    std::size_t lo = 0;
    while (lo + 2 < y.size() && y[lo] < 2.0 * q.y_min) ++lo;
    out.ymin_sensitivity = std::abs(
        out.U - log_potential_from_samples(std::vector<double>(y.begin() + static_cast<long>(lo), y.end()),
                                           std::vector<double>(im_g.begin() + static_cast<long>(lo), im_g.end())));
  } catch (const std::exception&) {
    out.valid = false;
  }
  return out;
}

struct PotentialField {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  int nx = 0, ny = 0;
  std::vector<double> U;        // row-major, index iy*nx + ix
  std::vector<double> density;  // interior nodes only; NaN elsewhere
  std::vector<char> valid;
  std::string provenance;

  double dx() const { return (x1 - x0) / (nx - 1); }
  double dy() const { return (y1 - y0) / (ny - 1); }
  Complex node(int ix, int iy) const { return Complex(x0 + ix * dx(), y0 + iy * dy()); }
  std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix); }

  static PotentialField make(double x0_, double x1_, double y0_, double y1_, int nx_, int ny_) {
    if (nx_ < 3 || ny_ < 3 || x1_ <= x0_ || y1_ <= y0_)
      throw std::invalid_argument("PotentialField: need nx, ny >= 3 and a proper box");
    PotentialField f;
    f.x0 = x0_; f.x1 = x1_; f.y0 = y0_; f.y1 = y1_; f.nx = nx_; f.ny = ny_;
    const std::size_t total = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    f.U.assign(total, 0.0);
    f.density.assign(total, std::numeric_limits<double>::quiet_NaN());
    f.valid.assign(total, 0);
    return f;
  }

  // Sum of the density layer times the cell area (interior nodes).
  double density_mass() const {
    double m = 0.0;
    for (double d : density)
      if (std::isfinite(d)) m += d;
    return m * dx() * dy();
  }
};

// Populates U on the grid from any z -> U map; parallel over nodes.
template <typename Fn>
PotentialField potential_field_from(double x0, double x1, double y0, double y1, int nx, int ny,
                                    const Fn& u_of_z, int workers = 0) {
  PotentialField f = PotentialField::make(x0, x1, y0, y1, nx, ny);
  parallel_for(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), [&](std::size_t i) {
    const int ix = static_cast<int>(i % static_cast<std::size_t>(nx));
    const int iy = static_cast<int>(i / static_cast<std::size_t>(nx));
    try {
      f.U[i] = u_of_z(f.node(ix, iy));
      f.valid[i] = 1;
    } catch (const std::exception&) {
      f.valid[i] = 0;
    }
  }, workers);
  return f;
}

// density = -(1/2pi) * (5-point Laplacian of U) at interior nodes whose full
// stencil is populated.
inline void density_from_potential(PotentialField& f) {
  if (f.U.empty()) throw std::invalid_argument("density_from_potential: unpopulated field");
  const double idx2 = 1.0 / (f.dx() * f.dx());
  const double idy2 = 1.0 / (f.dy() * f.dy());
  for (int iy = 1; iy + 1 < f.ny; ++iy)
    for (int ix = 1; ix + 1 < f.nx; ++ix) {
      const std::size_t c = f.idx(ix, iy);
      const std::size_t e = f.idx(ix + 1, iy), w = f.idx(ix - 1, iy);
      const std::size_t nn = f.idx(ix, iy + 1), ss = f.idx(ix, iy - 1);
      if (!(f.valid[c] && f.valid[e] && f.valid[w] && f.valid[nn] && f.valid[ss])) continue;
      const double lap = (f.U[e] - 2.0 * f.U[c] + f.U[w]) * idx2 +
                         (f.U[nn] - 2.0 * f.U[c] + f.U[ss]) * idy2;
      f.density[c] = -lap / (2.0 * kPi);
    }
}

struct FieldComparison {
  double sup_U = 0.0, l1_U = 0.0;
  double sup_density = 0.0, l1_density = 0.0;
  std::size_t compared_nodes = 0;
};

inline FieldComparison compare_fields(const PotentialField& a, const PotentialField& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.x0 != b.x0 || a.x1 != b.x1 || a.y0 != b.y0 || a.y1 != b.y1)
    throw std::invalid_argument("compare_fields: grid mismatch");
  FieldComparison c;
  const double cell = a.dx() * a.dy();
  for (std::size_t i = 0; i < a.U.size(); ++i) {
    if (!(a.valid[i] && b.valid[i])) continue;
    ++c.compared_nodes;
    const double du = std::abs(a.U[i] - b.U[i]);
    c.sup_U = std::max(c.sup_U, du);
    c.l1_U += du * cell;
    if (std::isfinite(a.density[i]) && std::isfinite(b.density[i])) {
      const double dd = std::abs(a.density[i] - b.density[i]);
      c.sup_density = std::max(c.sup_density, dd);
      c.l1_density += dd * cell;
    }
  }
  return c;
}

// Closed-form potential of the uniform measure on the unit disk.
inline double circular_law_potential(Complex z) {
  const double r = std::abs(z);
  return r >= 1.0 ? -std::log(r) : 0.5 * (1.0 - r * r);
}

inline void write_field_csv(const std::string& path, const PotentialField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_field_csv: cannot open " + path);
  out << "re_z,im_z,U,density,valid_flag\n";
  out.precision(17);
  for (int iy = 0; iy < f.ny; ++iy)
    for (int ix = 0; ix < f.nx; ++ix) {
      const std::size_t i = f.idx(ix, iy);
      const Complex z = f.node(ix, iy);
      out << z.real() << ',' << z.imag() << ',' << f.U[i] << ',' << f.density[i] << ','
          << static_cast<int>(f.valid[i]) << '\n';
    }
}

}  // namespace acm
