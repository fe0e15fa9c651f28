// Acceptance suite: one line per criterion, [PASS] or [FAIL], nonzero exit on
// any failure. The two full sweeps dominate the runtime (tens of minutes).

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "spinbath/eigensolver.hpp"
#include "spinbath/model.hpp"
#include "spinbath/observables.hpp"
#include "spinbath/propagation.hpp"
#include "spinbath/runner.hpp"

using namespace spinbath;

namespace {

int failures = 0;

void report(int num, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", num, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

constexpr double kLn2 = 0.6931471805599453;

StateVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector psi(dim);
  for (std::size_t i = 0; i < dim; ++i) psi[i] = {u(rng), u(rng)};
  const double nn = psi.norm();
  for (std::size_t i = 0; i < dim; ++i) psi[i] /= nn;
  return psi;
}

}  // namespace

int main() {
  const auto base = std::filesystem::temp_directory_path();
  const auto dir_a = base / "spinbath_acceptance_a";
  const auto dir_b = base / "spinbath_acceptance_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  // ---- the two full reference sweeps (criteria 1-3, 5b, 8, 9) ----
  RunConfig cfg = RunConfig::paper_preset();
  cfg.out_dir = dir_a;
  std::fprintf(stderr, "running reference sweep 1/2 ...\n");
  const RunManifest man_a = run_experiment(cfg);
  std::fprintf(stderr, "sweep 1 done in %.0f s; running sweep 2/2 ...\n",
               man_a.total_wall_seconds);
  cfg.out_dir = dir_b;
  const RunManifest man_b = run_experiment(cfg);
  std::fprintf(stderr, "sweep 2 done in %.0f s\n", man_b.total_wall_seconds);

  const std::vector<double> lambdas = cfg.lambda_list;

  // ---- 1: entropy ceiling at lambda = 0 ----
  {
    const CsvTable t = read_csv(dir_a / "sweep_lambda_0.csv");
    double s_max = 0.0;
    bool bounded = true;
    for (const auto& r : t.rows) {
      s_max = std::max(s_max, r[1]);
      if (r[1] > kLn2 + 1e-9) bounded = false;
    }
    const double wall0 = man_a.lambdas[0].wall_seconds;
    report(1, s_max >= 0.95 * kLn2 && bounded && wall0 <= 300.0,
           fmt("max S = %.6f (>= %.6f required, ceiling ln2 %s), lambda=0 wall %.0f s",
               s_max, 0.95 * kLn2, bounded ? "held" : "VIOLATED", wall0));
  }

  // ---- 2 and 3: suppression ordering and strong-coupling tracking ----
  {
    const auto rows = summarize(dir_a, lambdas);
    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].s_bar < rows[i - 1].s_bar)) decreasing = false;
    const double s0 = rows.front().s_bar, s8 = rows.back().s_bar;
    report(2, decreasing && s8 <= 0.5 * s0,
           fmt("S_bar = {%.4f, %.4f, %.4f, %.4f, %.4f}, S_bar(8)/S_bar(0) = %.3f",
               rows[0].s_bar, rows[1].s_bar, rows[2].s_bar, rows[3].s_bar,
               rows[4].s_bar, s8 / s0));

    const double rx = rows.back().rms_x / rows.front().rms_x;
    const double ry = rows.back().rms_y / rows.front().rms_y;
    report(3, rx < 0.25 && ry < 0.25,
           fmt("RMS dev ratios lambda=8 vs lambda=0: X %.4f, Y %.4f (< 0.25 required)",
               rx, ry));
  }

  // ---- 4: pair-sum vs super-spin matvec identity ----
  {
    std::mt19937_64 rng(271828);
    double worst = 0.0;
    for (double lambda : lambdas) {
      ModelParams p = ModelParams::paper_defaults(lambda);
      const PauliTermList full = build_full_hamiltonian(p);
      const SuperSpinForm form = SuperSpinForm::from(p);
      StateVector a(full.dim()), b(full.dim());
      for (int rep = 0; rep < 100; ++rep) {
        const StateVector psi = random_unit(rng, full.dim());
        apply_hamiltonian(full, psi, a);
        apply_superspin_hamiltonian(form, psi, b);
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < a.dim(); ++i) {
          diff += std::norm(a[i] - b[i]);
          ref += std::norm(a[i]);
        }
        worst = std::max(worst, std::sqrt(diff / ref));
      }
    }
    report(4, worst <= 1e-12,
           fmt("max relative matvec deviation %.3e over 100 vectors x %zu couplings",
               worst, lambdas.size()));
  }

  // ---- 5: propagator oracle at n_s=6 plus sweep-wide norm drift ----
  {
    ModelParams p = ModelParams::paper_defaults(2.0);
    p.n_s = 6;
    p.frequencies = sample_debye_frequencies(p.n_s, p.omega_d, {});
    const PauliTermList full = build_full_hamiltonian(p);
    const PauliTermList bath = build_bath_hamiltonian(p);
    const DenseSpectrum d = dense_spectrum_oracle(bath);
    StateVector ground(bath.dim());
    for (std::size_t i = 0; i < bath.dim(); ++i)
      ground[i] = d.vectors(static_cast<Eigen::Index>(i), 0);
    const StateVector psi0 = make_initial_state(ground);

    IntegratorConfig icfg;
    icfg.t_grid = {0.0, 100.0};
    StateVector last;
    evolve_rk8(full, psi0, icfg, [&](std::size_t i, double, const StateVector& s) {
      if (i == 1) last = s;
    });
    const auto exact = evolve_exact_oracle(full, psi0, icfg.t_grid);
    double amp_err = 0.0;
    for (std::size_t i = 0; i < last.dim(); ++i)
      amp_err = std::max(amp_err, std::abs(last[i] - exact[1][i]));

    double sweep_drift = 0.0;
    for (const auto& l : man_a.lambdas) sweep_drift = std::max(sweep_drift, l.max_norm_drift);
    for (const auto& l : man_b.lambdas) sweep_drift = std::max(sweep_drift, l.max_norm_drift);
    sweep_drift = std::max({sweep_drift, man_a.isolated_max_norm_drift,
                            man_b.isolated_max_norm_drift});

    report(5, amp_err <= 1e-6 && sweep_drift <= 1e-8,
           fmt("n_s=6 t=100 max amplitude error %.3e (<= 1e-6); worst sweep norm drift "
               "%.3e (<= 1e-8)",
               amp_err, sweep_drift));
  }

  // ---- 6: eigensolver oracle at n_s=10 ----
  {
    double worst_de = 0.0, worst_resid = 0.0, worst_gram = 0.0;
    for (double lambda : {2.0, 8.0}) {
      ModelParams p = ModelParams::paper_defaults(lambda);
      p.n_s = 10;
      p.frequencies = sample_debye_frequencies(p.n_s, p.omega_d, {});
      const PauliTermList bath = build_bath_hamiltonian(p);
      LanczosConfig lc;
      lc.n_eig = 20;
      const BathSpectrum s = lowest_eigenpairs(bath, lc);
      const DenseSpectrum d = dense_spectrum_oracle(bath);
      for (std::size_t m = 0; m < s.count(); ++m)
        worst_de = std::max(worst_de, std::abs(s.energies[m] - d.energies[m]));
      const SpectrumReport rep = verify_spectrum(s, bath);
      worst_resid = std::max(worst_resid, rep.max_residual);
      worst_gram = std::max(worst_gram, rep.max_gram_deviation);
    }
    report(6, worst_de <= 1e-9 && worst_resid <= 1e-8 && worst_gram <= 1e-10,
           fmt("n_s=10: |dE| %.3e (<=1e-9), residual %.3e (<=1e-8), gram %.3e "
               "(<=1e-10)",
               worst_de, worst_resid, worst_gram));
  }

  // ---- 7: entropy formula equivalence and endpoints ----
  {
    const double grid[] = {1e-6, 1e-4, 0.01, 0.1, 0.2499, 0.25 - 1e-12};
    double worst = 0.0;
    for (double det : grid) {
      const double u = std::sqrt(1.0 - 4.0 * det);
      ReducedDensityMatrix rho;
      rho.rho11 = 0.5 * (1.0 + u);
      rho.rho00 = 0.5 * (1.0 - u);
      worst = std::max(worst, std::abs(entropy(rho) - entropy_closed_form(det)));
    }
    ReducedDensityMatrix pure;
    pure.rho11 = 1.0;
    ReducedDensityMatrix mixed;
    mixed.rho11 = mixed.rho00 = 0.5;
    const double s_pure = std::abs(entropy(pure));
    const double s_mixed = std::abs(entropy(mixed) - kLn2);
    report(7, worst <= 1e-10 && s_pure <= 1e-12 && s_mixed <= 1e-12,
           fmt("grid max |dS| %.3e (<=1e-10); S(pure) dev %.3e, S(mixed) dev %.3e "
               "(<=1e-12)",
               worst, s_pure, s_mixed));
  }

  // ---- 8: Rabi closed form against the shipped isolated reference ----
  {
    const CsvTable iso = read_csv(dir_a / "isolated.csv");
    const double a = 0.8288 / 2, b = 0.01;
    const double om_sq = a * a + b * b, om = std::sqrt(om_sq);
    double worst = 0.0;
    for (const auto& r : iso.rows) {
      const double sn = std::sin(om * r[0]);
      const double z_exact = 1.0 - 2.0 * (b * b / om_sq) * sn * sn;
      worst = std::max(worst, std::abs(r[4] - z_exact));
    }
    report(8, worst <= 1e-8,
           fmt("max |Z - Z_rabi| = %.3e over %zu grid points (<= 1e-8)", worst,
               iso.rows.size()));
  }

  // ---- 9: determinism and performance ----
  {
    bool identical = true;
    std::string first_diff;
    std::vector<std::string> names = {"isolated.csv"};
    for (double l : lambdas) names.push_back("sweep_lambda_" + lambda_tag(l) + ".csv");
    for (const auto& name : names) {
      if (slurp(dir_a / name) != slurp(dir_b / name)) {
        identical = false;
        if (first_diff.empty()) first_diff = name;
      }
    }
    const double wall = std::max(man_a.total_wall_seconds, man_b.total_wall_seconds);
    const bool in_budget = wall <= 1800.0;
    report(9, identical && in_budget,
           fmt("CSVs %s across runs; slower sweep %.0f s (<= 1800 s) on %d hardware "
               "thread(s)",
               identical ? "byte-identical" : ("DIFFER at " + first_diff).c_str(), wall,
               man_a.hardware_threads));
  }

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
