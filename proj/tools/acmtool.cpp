// Command-line driver: orchestrates simulation, solver, potential/density,
// CD-kernel and small-singular-value experiments from a JSON config file.
// Exit codes: 0 success, 1 numerical failure, 2 config error, 3 missing artifact.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "acm/cd_kernel.hpp"
#include "acm/fixed_point.hpp"
#include "acm/girko.hpp"
#include "acm/model_io.hpp"
#include "acm/process_sim.hpp"
#include "acm/smallsv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace acm;

namespace {

constexpr const char* kVersion = "acmtool 1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArtifactError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CLI overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> grid;   // "x0,x1,y0,y1,nx,ny"
  std::optional<std::string> eta;    // "re,im"
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

std::vector<double> parse_csv_doubles(const std::string& s, std::size_t expect,
                                      const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + tok + "' in " + what);
    }
  }
  if (out.size() != expect)
    throw ConfigError(what + ": expected " + std::to_string(expect) + " comma-separated values");
  return out;
}

void apply_overrides(json& cfg, const Overrides& ov) {
  if (ov.seed) cfg["seed"] = *ov.seed;
  if (ov.out) cfg["out"] = *ov.out;
  if (ov.workers) cfg["workers"] = *ov.workers;
  if (ov.eta) {
    const auto v = parse_csv_doubles(*ov.eta, 2, "--eta");
    cfg["eta"] = {v[0], v[1]};
  }
  if (ov.grid) {
    const auto v = parse_csv_doubles(*ov.grid, 6, "--grid");
    cfg["grid"] = {{"x0", v[0]}, {"x1", v[1]}, {"y0", v[2]}, {"y1", v[3]},
                   {"nx", static_cast<int>(v[4])}, {"ny", static_cast<int>(v[5])}};
  }
}

template <typename T>
T require(const json& cfg, const std::string& key) {
  if (!cfg.contains(key)) throw ConfigError("missing required config key '" + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for config key '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for config key '" + key + "': " + e.what());
  }
}

Complex get_complex(const json& cfg, const std::string& key, Complex fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError("config key '" + key + "' must be [re, im]");
  return Complex(v[0].get<double>(), v[1].get<double>());
}

SpectralDensityModel model_from_config(const json& cfg) {
  if (cfg.contains("model_file")) {
    const std::string path = cfg.at("model_file").get<std::string>();
    if (!fs::exists(path))
      throw ConfigError("model file not found: " + path +
                        " (expected JSON with keys: kind, dim, and kind-specific data; "
                        "see README 'Model files')");
    try {
      return load_model(path);
    } catch (const std::exception& e) {
      throw ConfigError("model file " + path + ": " + e.what());
    }
  }
  if (!cfg.contains("model")) throw ConfigError("config needs 'model' object or 'model_file' path");
  try {
    return model_from_json(cfg.at("model"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad 'model' object: ") + e.what());
  }
}

struct CommonParams {
  Eigen::Index n = 0;
  Eigen::Index lag = 1;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out;
};

CommonParams common_params(const json& cfg) {
  CommonParams p;
  p.n = require<Eigen::Index>(cfg, "n");
  p.lag = get_or<Eigen::Index>(cfg, "lag", 1);
  p.seed = get_or<std::uint64_t>(cfg, "seed", 1);
  p.workers = get_or<int>(cfg, "workers", 0);
  p.out = require<std::string>(cfg, "out");
  if (p.n < 1) throw ConfigError("'n' must be >= 1");
  if (p.lag < 0 || p.lag >= p.n) throw ConfigError("'lag' must satisfy 0 <= lag < n");
  return p;
}

void validate_dims(const SpectralDensityModel& model, const CommonParams& p) {
  if (model.dim() < 1) throw ConfigError("model dimension must be >= 1");
  if (model.dim() > p.n)
    throw ConfigError("need N <= n (got N = " + std::to_string(model.dim()) +
                      ", n = " + std::to_string(p.n) + ")");
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& cfg,
                    const std::vector<std::string>& files, const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["config"] = cfg;
  m["seed"] = cfg.contains("seed") ? cfg.at("seed") : json(1);
  m["version"] = kVersion;
  m["files"] = files;
  if (!extra.empty()) m["report"] = extra;
  std::ofstream f(out_dir + "/manifest.json");
  if (!f) throw std::runtime_error("cannot write manifest in " + out_dir);
  f << m.dump(2) << '\n';
}

std::string prep_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw ConfigError("cannot create output directory: " + out);
  return out;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

YQuadrature quadrature_from(const json& cfg) {
  YQuadrature q;
  if (cfg.contains("quadrature")) {
    const json& v = cfg.at("quadrature");
    q.y_min = get_or<double>(v, "y_min", q.y_min);
    q.y_max = get_or<double>(v, "y_max", q.y_max);
    q.nodes = get_or<int>(v, "nodes", q.nodes);
  }
  return q;
}

struct GridBox {
  double x0, x1, y0, y1;
  int nx, ny;
};

GridBox grid_from(const json& cfg) {
  if (!cfg.contains("grid")) throw ConfigError("missing required config key 'grid'");
  const json& g = cfg.at("grid");
  GridBox b;
  b.x0 = require<double>(g, "x0");
  b.x1 = require<double>(g, "x1");
  b.y0 = require<double>(g, "y0");
  b.y1 = require<double>(g, "y1");
  b.nx = require<int>(g, "nx");
  b.ny = require<int>(g, "ny");
  if (b.nx < 3 || b.ny < 3 || b.x1 <= b.x0 || b.y1 <= b.y0)
    throw ConfigError("'grid' needs nx, ny >= 3 and x0 < x1, y0 < y1");
  return b;
}

// Reads a field CSV back, inferring the grid from the node coordinates.
PotentialField read_field_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArtifactError("missing artifact: " + path);
  std::string line;
  if (!std::getline(f, line) || line != "re_z,im_z,U,density,valid_flag")
    throw ArtifactError("artifact " + path + " is not a field CSV (bad header)");
  std::vector<double> xs, ys, us, ds;
  std::vector<char> vs;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    if (cols.size() != 5) throw ArtifactError("artifact " + path + ": malformed row");
    xs.push_back(std::stod(cols[0]));
    ys.push_back(std::stod(cols[1]));
    us.push_back(std::stod(cols[2]));
    ds.push_back(std::stod(cols[3]));
    vs.push_back(static_cast<char>(std::stoi(cols[4])));
  }
  auto uniq = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ux = uniq(xs), uy = uniq(ys);
  const int nx = static_cast<int>(ux.size()), ny = static_cast<int>(uy.size());
  if (nx < 3 || ny < 3 || xs.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw ArtifactError("artifact " + path + ": inconsistent grid");
  PotentialField fld = PotentialField::make(ux.front(), ux.back(), uy.front(), uy.back(), nx, ny);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fld.U[i] = us[i];
    fld.density[i] = ds[i];
    fld.valid[i] = vs[i];
  }
  return fld;
}

PotentialField compute_potential_field(const json& cfg, const CommonParams& p) {
  const GridBox g = grid_from(cfg);
  if (get_or<std::string>(cfg, "synthetic", "") == "circular_law") {
    auto f = potential_field_from(g.x0, g.x1, g.y0, g.y1, g.nx, g.ny, circular_law_potential,
                                  p.workers);
    f.provenance = "circular_law";
    return f;
  }
  const SpectralDensityModel model = model_from_config(cfg);
  validate_dims(model, p);
  const YQuadrature q = quadrature_from(cfg);
  auto f = potential_field_from(
      g.x0, g.x1, g.y0, g.y1, g.nx, g.ny,
      [&](Complex z) {
        const DeterministicPotential pot = log_potential_deterministic(model, z, p.lag, p.n, q);
        if (!pot.valid) throw std::runtime_error("solver stall");
        return pot.U;
      },
      p.workers);
  f.provenance = "deterministic";
  return f;
}

int count_valid(const PotentialField& f) {
  int c = 0;
  for (char v : f.valid) c += v;
  return c;
}

// ---- subcommands ----

int cmd_simulate(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const SpectralDensityModel model = model_from_config(cfg);
  validate_dims(model, p);
  const Complex z = get_complex(cfg, "z", Complex(1.0, 0.0));
  const int trials = get_or<int>(cfg, "trials", 1);
  if (trials < 1) throw ConfigError("'trials' must be >= 1");
  const std::string sampler = get_or<std::string>(cfg, "sampler", "circulant");
  if (sampler != "circulant" && sampler != "exact")
    throw ConfigError("'sampler' must be 'circulant' or 'exact'");
  const std::string out = prep_out_dir(p.out);

  auto draw = [&](std::uint64_t stream) {
    return sampler == "exact" ? sample_exact(model, p.n, p.seed, stream)
                              : sample_circulant(model, p.n, p.seed, stream);
  };

  const SampleBlock first = draw(0);
  write_sample_block(out + "/block.bin", first);

  std::ofstream spectra(out + "/spectra.csv");
  spectra << "trial,index,singular_value\n";
  spectra.precision(17);
  for (int t = 0; t < trials; ++t) {
    const SampleBlock b = t == 0 ? first : draw(static_cast<std::uint64_t>(t));
    const RVector s = singular_values(empirical_autocov(b, p.lag));
    for (Eigen::Index i = 0; i < s.size(); ++i)
      spectra << t << ',' << i << ',' << s(i) << '\n';
  }

  const SignedAtomMeasure nu = empirical_nu(first, p.lag, z);
  std::ofstream atoms(out + "/nu_atoms.csv");
  atoms << "atom,weight\n";
  atoms.precision(17);
  for (std::size_t i = 0; i < nu.atoms.size(); ++i)
    atoms << nu.atoms[i] << ',' << nu.weights[i] << '\n';

  write_manifest(out, "simulate", cfg, {"block.bin", "spectra.csv", "nu_atoms.csv"},
                 {{"atom_count", nu.atoms.size()}, {"z", complex_json(z)}});
  return 0;
}

int cmd_solve(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const SpectralDensityModel model = model_from_config(cfg);
  validate_dims(model, p);
  const Complex z = get_complex(cfg, "z", Complex(0.0, 0.0));
  const Complex eta = get_complex(cfg, "eta", Complex(0.0, 1.0));
  if (eta.imag() <= 0.0) throw ConfigError("'eta' needs a positive imaginary part");
  const std::string out = prep_out_dir(p.out);

  SolveOptions opt;
  opt.force_full_matrix = get_or<bool>(cfg, "force_full_matrix", false);
  opt.nodes = get_or<int>(cfg, "nodes", opt.nodes);
  opt.discrete = get_or<bool>(cfg, "discrete", opt.discrete);

  const auto t0 = std::chrono::steady_clock::now();
  StieltjesState st;
  try {
    st = solve_G(model, z, eta, p.lag, p.n, opt);
    validate_state(st);
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json rec;
  rec["z"] = complex_json(z);
  rec["eta"] = complex_json(eta);
  rec["residual"] = st.residual;
  rec["iterations"] = st.iterations;
  rec["contraction_ratio"] = st.contraction_ratio;
  rec["reduced_path"] = st.reduced_path;
  rec["trace_g"] = complex_json(stieltjes_trace(st));
  rec["tcal"] = {{complex_json(st.tcal(0, 0)), complex_json(st.tcal(0, 1))},
                 {complex_json(st.tcal(1, 0)), complex_json(st.tcal(1, 1))}};
  rec["wall_time_s"] = wall;
  std::ofstream f(out + "/solve.json");
  f << rec.dump(2) << '\n';
  write_manifest(out, "solve", cfg, {"solve.json"}, rec);
  return 0;
}

int cmd_potential(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const std::string out = prep_out_dir(p.out);
  const PotentialField f = compute_potential_field(cfg, p);
  if (count_valid(f) == 0) {
    std::cerr << "numerical failure: solver stalled at every grid node\n";
    return 1;
  }
  write_field_csv(out + "/potential.csv", f);
  write_manifest(out, "potential", cfg, {"potential.csv"},
                 {{"valid_nodes", count_valid(f)}, {"provenance", f.provenance}});
  return 0;
}

int cmd_density(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const std::string out = prep_out_dir(p.out);
  PotentialField f = cfg.contains("potential_file")
                         ? read_field_csv(cfg.at("potential_file").get<std::string>())
                         : compute_potential_field(cfg, p);
  density_from_potential(f);
  if (count_valid(f) == 0) {
    std::cerr << "numerical failure: no valid potential nodes\n";
    return 1;
  }
  write_field_csv(out + "/density.csv", f);
  write_manifest(out, "density", cfg, {"density.csv"},
                 {{"density_mass", f.density_mass()}, {"valid_nodes", count_valid(f)}});
  return 0;
}

int cmd_cdkernel(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const SpectralDensityModel model = model_from_config(cfg);
  validate_dims(model, p);
  const double delta = get_or<double>(cfg, "delta", 0.1 * model.sup_norm_estimate());
  const std::string out = prep_out_dir(p.out);
  const CDReport rep = cd_report(model, p.n, delta);
  write_cd_csv(out + "/cd.csv", rep);
  write_manifest(out, "cdkernel", cfg, {"cd.csv"},
                 {{"max_good_err_conditional", rep.max_good_err_conditional},
                  {"max_good_err_marginal", rep.max_good_err_marginal},
                  {"delta", delta}});
  return 0;
}

int cmd_smallsv(const json& cfg) {
  const CommonParams p = common_params(cfg);
  const SpectralDensityModel model = model_from_config(cfg);
  validate_dims(model, p);
  const std::string out = prep_out_dir(p.out);

  TailConfig tc;
  tc.n = p.n;
  tc.lag = p.lag;
  tc.z = get_complex(cfg, "z", Complex(1.0, 0.0));
  tc.trials = get_or<int>(cfg, "trials", 500);
  tc.seed = p.seed;
  tc.workers = p.workers;

  std::vector<double> t_grid = get_or<std::vector<double>>(
      cfg, "t_grid", {0.05, 0.1, 0.2, 0.4, 0.8, 1.6});
  std::vector<std::string> files;
  json report;
  try {
    const TailExperiment smallest = tail_smallest(model, tc, t_grid);
    write_tail_csv(out + "/tail_smallest.csv", smallest);
    files.push_back("tail_smallest.csv");
    report["envelope_intercept"] = smallest.envelope_intercept;
    report["envelope_slope"] = smallest.envelope_slope;

    if (cfg.contains("k_grid")) {
      std::vector<Eigen::Index> ks;
      for (const auto& v : cfg.at("k_grid")) ks.push_back(v.get<Eigen::Index>());
      const double c = get_or<double>(cfg, "c", 0.01);
      const TailExperiment inter = tail_intermediate(model, tc, ks, c);
      write_tail_csv(out + "/tail_intermediate.csv", inter);
      files.push_back("tail_intermediate.csv");
    }

    const int instances = get_or<int>(cfg, "distance_instances", 50);
    const DistanceIdentityReport dist =
        distance_identity_check(model, p.n, p.lag, tc.z, instances, p.seed, p.workers);
    report["distance_max_rel_error"] = dist.max_rel_error;
    report["distance_skipped"] = dist.skipped;
    report["linearization_ok"] = dist.linearization_ok;
    report["truncation_ok"] = dist.truncation_ok;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }

  write_manifest(out, "smallsv", cfg, files, report);
  return 0;
}

int cmd_compare(const json& cfg) {
  const std::string path_a = require<std::string>(cfg, "a");
  const std::string path_b = require<std::string>(cfg, "b");
  const std::string out = prep_out_dir(require<std::string>(cfg, "out"));
  const PotentialField fa = read_field_csv(path_a);
  const PotentialField fb = read_field_csv(path_b);
  FieldComparison c;
  try {
    c = compare_fields(fa, fb);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json rec;
  rec["sup_U"] = c.sup_U;
  rec["l1_U"] = c.l1_U;
  rec["sup_density"] = c.sup_density;
  rec["l1_density"] = c.l1_density;
  rec["compared_nodes"] = c.compared_nodes;
  std::ofstream f(out + "/compare.json");
  f << rec.dump(2) << '\n';
  std::cout << rec.dump(2) << '\n';
  write_manifest(out, "compare", cfg, {"compare.json"}, rec);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autocovariance spectrum toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed_val = 0;
  std::string out_val, grid_val, eta_val;
  int workers_val = 0;

  const std::vector<std::string> names{"simulate", "solve",   "potential", "density",
                                       "cdkernel", "smallsv", "compare"};
  for (const auto& name : names) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", config_path, "JSON config file")->required();
    s->add_option("--seed", seed_val, "override config seed");
    s->add_option("--out", out_val, "override output directory");
    s->add_option("--workers", workers_val, "override worker count");
    s->add_option("--grid", grid_val, "override grid: x0,x1,y0,y1,nx,ny");
    s->add_option("--eta", eta_val, "override eta: re,im");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) ov.seed = seed_val;
  if (sub->count("--out")) ov.out = out_val;
  if (sub->count("--workers")) ov.workers = workers_val;
  if (sub->count("--grid")) ov.grid = grid_val;
  if (sub->count("--eta")) ov.eta = eta_val;

  try {
    json cfg = load_config(config_path);
    apply_overrides(cfg, ov);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "simulate") return cmd_simulate(cfg);
    if (cmd == "solve") return cmd_solve(cfg);
    if (cmd == "potential") return cmd_potential(cfg);
    if (cmd == "density") return cmd_density(cfg);
    if (cmd == "cdkernel") return cmd_cdkernel(cfg);
    if (cmd == "smallsv") return cmd_smallsv(cfg);
    if (cmd == "compare") return cmd_compare(cfg);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
}
