#include "spinbath/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spinbath/eigensolver.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/observables.hpp"
#include "spinbath/propagation.hpp"
#include "spinbath/version.hpp"

namespace spinbath {

namespace {

using json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double elapsed(const std::chrono::steady_clock::time_point& since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string freq_mode_name(FrequencyMode m) {
  switch (m) {
    case FrequencyMode::quantile: return "quantile";
    case FrequencyMode::random: return "random";
    case FrequencyMode::explicit_list: return "explicit";
  }
  return "?";
}

}  // namespace

std::string lambda_tag(double lambda) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", lambda);
  return buf;
}

RunConfig RunConfig::paper_preset() {
  RunConfig cfg;  // field defaults already match the reference preset
  cfg.isolated_reference = true;
  return cfg;
}

void RunConfig::validate() const {
  if (n_s < 1 || n_s > 24) throw ConfigError("run config: n_s out of range [1,24]");
  if (n_eig < 1) throw ConfigError("run config: n_eig must be >= 1");
  if (!(kT > 0.0)) throw ConfigError("run config: kT must be positive");
  if (!(omega0 > 0.0) || !(omega_d > 0.0))
    throw ConfigError("run config: omega0 and omega_d must be positive");
  if (lambda_list.empty()) throw ConfigError("run config: lambda list is empty");
  for (double l : lambda_list)
    if (!std::isfinite(l)) throw ConfigError("run config: lambda values must be finite");
  if (!(t_max > 0.0) || !(dt_out > 0.0))
    throw ConfigError("run config: t_max and dt_out must be positive");
  (void)IntegratorConfig::uniform_grid(t_max, dt_out);  // divisibility check
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw ConfigError("run config: tolerances must be positive");
  if (threads < 0) throw ConfigError("run config: threads must be >= 0");
  if (!(lanczos_tol > 0.0)) throw ConfigError("run config: lanczos tol must be positive");
}

namespace {

ModelParams model_for(const RunConfig& cfg, double lambda,
                      const std::vector<double>& freqs) {
  ModelParams p;
  p.n_s = cfg.n_s;
  p.omega0 = cfg.omega0;
  p.beta = cfg.beta;
  p.lambda0 = cfg.lambda0;
  p.lambda = lambda;
  p.omega_d = cfg.omega_d;
  p.frequencies = freqs;
  return p;
}

std::string spectrum_key(const ModelParams& p, int n_eig, const RunConfig& cfg) {
  std::ostringstream key;
  key << "ns=" << p.n_s << " beta=" << g17(p.beta) << " lambda=" << g17(p.lambda)
      << " omegad=" << g17(p.omega_d) << " neig=" << n_eig
      << " tol=" << g17(cfg.lanczos_tol) << " seed=" << cfg.lanczos_seed
      << " maxk=" << cfg.max_krylov << " freqs=";
  for (std::size_t j = 0; j < p.frequencies.size(); ++j) {
    if (j) key << ',';
    key << g17(p.frequencies[j]);
  }
  return key.str();
}

// Observables on the output grid for one lambda: per ensemble member, one
// reduced density matrix per grid time. Trajectories are independent, so the
// member loop is a parallel map; each slab row is owned by one task.
struct LambdaRun {
  std::vector<std::vector<ReducedDensityMatrix>> slab;  // [member][grid index]
  double max_norm_drift = 0.0;
  long long n_accepted = 0, n_rejected = 0, n_apply = 0;
};

LambdaRun run_trajectories(const SuperSpinForm& form, const BathSpectrum& spectrum,
                           const IntegratorConfig& icfg, int threads) {
  const std::size_t n_m = spectrum.count();
  const std::size_t n_t = icfg.t_grid.size();
  LambdaRun result;
  result.slab.assign(n_m, std::vector<ReducedDensityMatrix>(n_t));

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned n_threads =
      std::min<unsigned>(threads > 0 ? static_cast<unsigned>(threads) : hw,
                         static_cast<unsigned>(n_m));

  // The propagator sees H shifted to the center of its diagonal range; the
  // global phase exp(i c t) cancels inside every reduced density matrix, and
  // the smaller spectral radius buys a proportionally longer stable step.
  SuperSpinForm shifted = form;
  const auto [dmin, dmax] = std::minmax_element(shifted.diag.begin(), shifted.diag.end());
  const double center = 0.5 * (*dmin + *dmax);
  for (double& d : shifted.diag) d -= center;
  const LinearOperator op = make_operator(std::move(shifted));

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(n_threads);
  std::mutex merge_mutex;

  auto worker = [&](unsigned tid) {
    try {
      LambdaRun local;
      for (;;) {
        const std::size_t m = next.fetch_add(1);
        if (m >= n_m) break;
        const StateVector psi0 = make_initial_state(spectrum.eigenvectors[m]);
        auto* row = &result.slab[m];
        const TrajectoryRecord rec = evolve_rk8(
            op, psi0, icfg,
            [row](std::size_t idx, double, const StateVector& psi) {
              (*row)[idx] = partial_trace_impurity(psi);
            });
        local.max_norm_drift = std::max(local.max_norm_drift, rec.max_norm_drift);
        local.n_accepted += rec.n_accepted;
        local.n_rejected += rec.n_rejected;
        local.n_apply += rec.n_apply;
      }
      std::lock_guard<std::mutex> lock(merge_mutex);
      result.max_norm_drift = std::max(result.max_norm_drift, local.max_norm_drift);
      result.n_accepted += local.n_accepted;
      result.n_rejected += local.n_rejected;
      result.n_apply += local.n_apply;
    } catch (const std::exception& ex) {
      errors[tid] = ex.what();
    }
  };

  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned tid = 0; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
    for (auto& th : pool) th.join();
  }
  for (const auto& err : errors)
    if (!err.empty()) throw NumericalError(err);
  return result;
}

void write_csv(const std::filesystem::path& path, const std::vector<double>& times,
               const std::vector<double>& s, const std::vector<double>& x,
               const std::vector<double>& y, const std::vector<double>& z) {
  std::ofstream out(path, std::ios::binary);  // binary: '\n' endings everywhere
  if (!out) throw ConfigError("runner: cannot write " + path.string());
  out << "t,S,X,Y,Z\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    out << g17(times[i]) << ',' << g17(s[i]) << ',' << g17(x[i]) << ',' << g17(y[i])
        << ',' << g17(z[i]) << '\n';
  }
  if (!out) throw ConfigError("runner: write failed for " + path.string());
}

void write_plot_script(const std::filesystem::path& path,
                       const std::vector<double>& lambdas, bool isolated) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("runner: cannot write " + path.string());
  out << "# Entropy overlay across intra-bath couplings; run: gnuplot plot.gp\n"
         "set datafile separator ','\n"
         "set terminal pngcairo size 1000,700\n"
         "set output 'entropy.png'\n"
         "set xlabel 't'\n"
         "set ylabel 'S(t)  [nats]'\n"
         "set key right bottom\n"
         "ln2 = log(2)\n"
         "set arrow from graph 0, first ln2 to graph 1, first ln2 nohead dt 2\n"
         "plot \\\n";
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    out << "  'sweep_lambda_" << lambda_tag(lambdas[i])
        << ".csv' every ::1 using 1:2 with lines title 'lambda=" << lambda_tag(lambdas[i])
        << "'" << (i + 1 < lambdas.size() ? ", \\\n" : "\n");
  }
  out << "\nset output 'spin_z.png'\n"
         "set ylabel 'Z(t)'\n"
         "plot \\\n";
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    out << "  'sweep_lambda_" << lambda_tag(lambdas[i])
        << ".csv' every ::1 using 1:5 with lines title 'lambda=" << lambda_tag(lambdas[i])
        << "'" << (i + 1 < lambdas.size() || isolated ? ", \\\n" : "\n");
  }
  if (isolated)
    out << "  'isolated.csv' every ::1 using 1:5 with lines dt 3 lw 2 title 'isolated'\n";
  if (!out) throw ConfigError("runner: write failed for " + path.string());
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["n_s"] = cfg.n_s;
  j["n_eig"] = cfg.n_eig;
  j["kT"] = cfg.kT;
  j["omega0"] = cfg.omega0;
  j["beta"] = cfg.beta;
  j["lambda0"] = cfg.lambda0;
  j["omega_d"] = cfg.omega_d;
  j["lambda_list"] = cfg.lambda_list;
  j["t_max"] = cfg.t_max;
  j["dt_out"] = cfg.dt_out;
  j["rtol"] = cfg.rtol;
  j["atol"] = cfg.atol;
  j["freq_mode"] = freq_mode_name(cfg.freq.mode);
  j["freq_seed"] = cfg.freq.seed;
  j["freq_file"] = cfg.freq_file;
  j["isolated_reference"] = cfg.isolated_reference;
  j["threads"] = cfg.threads;
  j["lanczos_seed"] = cfg.lanczos_seed;
  j["lanczos_tol"] = cfg.lanczos_tol;
  j["max_krylov"] = cfg.max_krylov;
  j["reuse_spectrum"] = cfg.reuse_spectrum;
  return j;
}

}  // namespace

void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
  json j;
  j["version"] = m.version;
  j["complete"] = m.complete;
  j["failure_stage"] = m.failure_stage;
  j["config"] = config_to_json(m.config);
  j["frequencies"] = m.frequencies;
  json ls = json::array();
  for (const auto& l : m.lambdas) {
    json e;
    e["lambda"] = l.lambda;
    e["n_states"] = l.n_states;
    e["degeneracy_extended"] = l.extended;
    e["truncation_indicator"] = l.truncation_indicator;
    e["max_norm_drift"] = l.max_norm_drift;
    e["norm_flagged"] = l.norm_flagged;
    e["steps_accepted"] = l.n_accepted;
    e["steps_rejected"] = l.n_rejected;
    e["operator_applications"] = l.n_apply;
    e["wall_seconds"] = l.wall_seconds;
    ls.push_back(std::move(e));
  }
  j["lambdas"] = std::move(ls);
  j["isolated_max_norm_drift"] = m.isolated_max_norm_drift;
  j["isolated_wall_seconds"] = m.isolated_wall_seconds;
  j["total_wall_seconds"] = m.total_wall_seconds;
  j["hardware_threads"] = m.hardware_threads;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("runner: cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("runner: write failed for " + path.string());
}

RunConfig config_from_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("manifest: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& ex) {
    throw ConfigError("manifest: parse error in " + path.string() + ": " + ex.what());
  }
  try {
    const json& c = j.at("config");
    RunConfig cfg;
    cfg.n_s = c.at("n_s").get<int>();
    cfg.n_eig = c.at("n_eig").get<int>();
    cfg.kT = c.at("kT").get<double>();
    cfg.omega0 = c.at("omega0").get<double>();
    cfg.beta = c.at("beta").get<double>();
    cfg.lambda0 = c.at("lambda0").get<double>();
    cfg.omega_d = c.at("omega_d").get<double>();
    cfg.lambda_list = c.at("lambda_list").get<std::vector<double>>();
    cfg.t_max = c.at("t_max").get<double>();
    cfg.dt_out = c.at("dt_out").get<double>();
    cfg.rtol = c.at("rtol").get<double>();
    cfg.atol = c.at("atol").get<double>();
    cfg.isolated_reference = c.at("isolated_reference").get<bool>();
    cfg.threads = c.at("threads").get<int>();
    cfg.lanczos_seed = c.at("lanczos_seed").get<std::uint64_t>();
    cfg.lanczos_tol = c.at("lanczos_tol").get<double>();
    cfg.max_krylov = c.at("max_krylov").get<int>();
    cfg.reuse_spectrum = c.at("reuse_spectrum").get<bool>();
    // Re-run from the realized frequencies so the physics reproduces exactly
    // whatever sampling mode generated them.
    cfg.freq.mode = FrequencyMode::explicit_list;
    cfg.freq.values = j.at("frequencies").get<std::vector<double>>();
    return cfg;
  } catch (const json::exception& ex) {
    throw ConfigError("manifest: missing or bad field in " + path.string() + ": " +
                      ex.what());
  }
}

RunManifest run_experiment(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunManifest man;
  man.version = SPINBATH_VERSION;
  man.config = cfg;
  man.hardware_threads = static_cast<int>(std::thread::hardware_concurrency());
  const auto manifest_path = cfg.out_dir / "manifest.json";

  std::string stage = "config validation";
  try {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    stage = "frequency sampling";
    man.frequencies = sample_debye_frequencies(cfg.n_s, cfg.omega_d, cfg.freq);

    const std::size_t bath_dim = dim_for_spins(static_cast<unsigned>(cfg.n_s));
    const int n_eig_eff = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(cfg.n_eig), bath_dim));
    man.config.n_eig = n_eig_eff;

    IntegratorConfig icfg;
    icfg.rtol = cfg.rtol;
    icfg.atol = cfg.atol;
    icfg.t_grid = IntegratorConfig::uniform_grid(cfg.t_max, cfg.dt_out);
    const auto& grid = icfg.t_grid;

    for (double lambda : cfg.lambda_list) {
      const auto t_lambda = std::chrono::steady_clock::now();
      const ModelParams params = model_for(cfg, lambda, man.frequencies);

      // The thermal ensemble lives on the isolated environment, whose
      // Hamiltonian carries the intra-bath coupling, so each lambda gets its
      // own diagonalization (and its own cache file).
      stage = "bath diagonalization (lambda=" + lambda_tag(lambda) + ")";
      LanczosConfig lcfg;
      lcfg.n_eig = n_eig_eff;
      lcfg.max_krylov = cfg.max_krylov;
      lcfg.tol = cfg.lanczos_tol;
      lcfg.seed = cfg.lanczos_seed;
      const PauliTermList bath_h = build_bath_hamiltonian(params);
      const std::string key = spectrum_key(params, n_eig_eff, cfg);
      const auto cache_path =
          cfg.out_dir / ("spectrum_lambda_" + lambda_tag(lambda) + ".dat");
      BathSpectrum spectrum;
      bool cached = false;
      if (cfg.reuse_spectrum && std::filesystem::exists(cache_path)) {
        std::string stored_key;
        try {
          BathSpectrum loaded = load_spectrum(cache_path, &stored_key);
          if (stored_key == key) {
            spectrum = std::move(loaded);
            cached = true;
          }
        } catch (const ConfigError&) {
          // unreadable or stale cache: recompute below
        }
      }
      if (!cached) {
        spectrum = lowest_eigenpairs(bath_h, lcfg);
        save_spectrum(spectrum, cache_path, key);
      }

      stage = "thermal weights (lambda=" + lambda_tag(lambda) + ")";
      const ThermalEnsemble ensemble = boltzmann_weights(spectrum, cfg.kT);

      stage = "trajectory ensemble (lambda=" + lambda_tag(lambda) + ")";
      const SuperSpinForm form = SuperSpinForm::from(params);
      const LambdaRun traj = run_trajectories(form, spectrum, icfg, cfg.threads);

      stage = "observable assembly (lambda=" + lambda_tag(lambda) + ")";
      std::vector<double> s_col(grid.size()), x_col(grid.size()), y_col(grid.size()),
          z_col(grid.size());
      std::vector<ReducedDensityMatrix> members(spectrum.count());
      for (std::size_t ti = 0; ti < grid.size(); ++ti) {
        for (std::size_t m = 0; m < spectrum.count(); ++m)
          members[m] = traj.slab[m][ti];
        const ReducedDensityMatrix rho = thermal_reduced_density(members, ensemble);
        const SpinComponents c = spin_components(rho);
        s_col[ti] = entropy(rho);
        x_col[ti] = c.x;
        y_col[ti] = c.y;
        z_col[ti] = c.z;
      }
      write_csv(cfg.out_dir / ("sweep_lambda_" + lambda_tag(lambda) + ".csv"), grid,
                s_col, x_col, y_col, z_col);

      LambdaStats stats;
      stats.lambda = lambda;
      stats.n_states = static_cast<int>(spectrum.count());
      stats.extended = spectrum.extended;
      stats.truncation_indicator = ensemble.truncation_indicator;
      stats.max_norm_drift = traj.max_norm_drift;
      stats.norm_flagged = traj.max_norm_drift > 1e-6;
      stats.n_accepted = traj.n_accepted;
      stats.n_rejected = traj.n_rejected;
      stats.n_apply = traj.n_apply;
      stats.wall_seconds = elapsed(t_lambda);
      man.lambdas.push_back(stats);
    }

    if (cfg.isolated_reference) {
      // The lambda_0 = 0 system factorizes; the impurity alone is the exact
      // reference, integrated in its own two-dimensional space.
      stage = "isolated reference";
      const auto t_iso = std::chrono::steady_clock::now();
      PauliTermList h_iso(1);
      h_iso.add(0.5 * cfg.omega0, {{0u, PauliAxis::Z}});
      h_iso.add(cfg.beta, {{0u, PauliAxis::X}});
      const StateVector psi0 = StateVector::basis_state(2, 1);
      std::vector<double> s_col(grid.size()), x_col(grid.size()), y_col(grid.size()),
          z_col(grid.size());
      const TrajectoryRecord rec = evolve_rk8(
          h_iso, psi0, icfg,
          [&](std::size_t idx, double, const StateVector& psi) {
            const ReducedDensityMatrix rho = partial_trace_impurity(psi);
            const SpinComponents c = spin_components(rho);
            s_col[idx] = entropy(rho);
            x_col[idx] = c.x;
            y_col[idx] = c.y;
            z_col[idx] = c.z;
          });
      write_csv(cfg.out_dir / "isolated.csv", grid, s_col, x_col, y_col, z_col);
      man.isolated_max_norm_drift = rec.max_norm_drift;
      man.isolated_wall_seconds = elapsed(t_iso);
    }

    stage = "plot script";
    write_plot_script(cfg.out_dir / "plot.gp", cfg.lambda_list, cfg.isolated_reference);

    man.complete = true;
    man.total_wall_seconds = elapsed(t_start);
    stage = "manifest";
    save_manifest(man, manifest_path);
    return man;
  } catch (const std::exception& ex) {
    man.complete = false;
    man.failure_stage = stage;
    man.total_wall_seconds = elapsed(t_start);
    try {
      std::filesystem::create_directories(cfg.out_dir);
      save_manifest(man, manifest_path);
    } catch (...) {
      // the original error is the one worth reporting
    }
    std::ostringstream msg;
    msg << "stage '" << stage << "' failed: " << ex.what();
    if (dynamic_cast<const ConfigError*>(&ex)) throw ConfigError(msg.str());
    throw NumericalError(msg.str());
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty file " + path.string());
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("csv: bad number '" + cell + "' at " + path.string() + ":" +
                          std::to_string(line_no));
      }
    }
    if (vals.size() != table.columns.size())
      throw ConfigError("csv: ragged row at " + path.string() + ":" +
                        std::to_string(line_no));
    table.rows.push_back(std::move(vals));
  }
  return table;
}

std::vector<SummaryRow> summarize(const std::filesystem::path& out_dir,
                                  const std::vector<double>& lambda_list) {
  const CsvTable iso = read_csv(out_dir / "isolated.csv");
  if (iso.columns != std::vector<std::string>{"t", "S", "X", "Y", "Z"})
    throw ConfigError("summarize: unexpected isolated.csv header");
  if (iso.rows.empty()) throw ConfigError("summarize: isolated.csv has no data");

  std::vector<SummaryRow> rows;
  for (double lambda : lambda_list) {
    const auto path = out_dir / ("sweep_lambda_" + lambda_tag(lambda) + ".csv");
    const CsvTable t = read_csv(path);
    if (t.columns != iso.columns)
      throw ConfigError("summarize: unexpected header in " + path.string());
    if (t.rows.size() != iso.rows.size())
      throw ConfigError("summarize: grid mismatch between " + path.string() +
                        " and isolated.csv");

    SummaryRow row;
    row.lambda = lambda;
    const double t_end = t.rows.back()[0];
    const double t_half = 0.5 * t_end;
    double s_sum = 0.0;
    std::size_t s_count = 0;
    double sq_x = 0.0, sq_y = 0.0, sq_z = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      const auto& ri = iso.rows[i];
      if (std::abs(r[0] - ri[0]) > 1e-9)
        throw ConfigError("summarize: time grids disagree at row " + std::to_string(i));
      if (r[0] >= t_half) {
        s_sum += r[1];
        ++s_count;
      }
      const double dx = r[2] - ri[2];
      const double dy = r[3] - ri[3];
      const double dz = r[4] - ri[4];
      sq_x += dx * dx;
      sq_y += dy * dy;
      sq_z += dz * dz;
      row.max_dz = std::max(row.max_dz, std::abs(dz));
    }
    const auto n = static_cast<double>(t.rows.size());
    row.s_bar = s_count ? s_sum / static_cast<double>(s_count) : 0.0;
    row.rms_x = std::sqrt(sq_x / n);
    row.rms_y = std::sqrt(sq_y / n);
    row.rms_z = std::sqrt(sq_z / n);
    rows.push_back(row);
  }
  return rows;
}

std::string format_summary(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s %12s %12s %12s %12s %12s\n", "lambda", "S_bar",
                "max|dZ|", "rms_dX", "rms_dY", "rms_dZ");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%8s %12.6g %12.6g %12.6g %12.6g %12.6g\n",
                  lambda_tag(r.lambda).c_str(), r.s_bar, r.max_dz, r.rms_x, r.rms_y,
                  r.rms_z);
    out << buf;
  }
  return out.str();
}

}  // namespace spinbath
