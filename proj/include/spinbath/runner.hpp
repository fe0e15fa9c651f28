#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spinbath/model.hpp"

// End-to-end experiment driver: per-lambda bath diagonalization, thermal
// trajectory ensemble, isolated-spin reference, CSV/manifest/plot artifacts.

namespace spinbath {

struct RunConfig {
  int n_s = 12;
  int n_eig = 20;
  double kT = 0.02;
  double omega0 = 0.8288;
  double beta = 0.01;
  double lambda0 = 1.0;
  double omega_d = 1.0;
  std::vector<double> lambda_list = {0.0, 1.0, 2.0, 4.0, 8.0};
  double t_max = 100.0;
  double dt_out = 0.1;
  double rtol = 1e-10;
  double atol = 1e-12;
  FrequencySpec freq;
  std::string freq_file;  // recorded when freq.values came from a file
  std::filesystem::path out_dir = "out";
  bool isolated_reference = false;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t lanczos_seed = 12345;
  double lanczos_tol = 1e-10;
  int max_krylov = 0;
  bool reuse_spectrum = true;

  static RunConfig paper_preset();
  void validate() const;
};

struct LambdaStats {
  double lambda = 0.0;
  int n_states = 0;  // ensemble size after any degeneracy extension
  bool extended = false;
  double truncation_indicator = 0.0;
  double max_norm_drift = 0.0;
  bool norm_flagged = false;
  long long n_accepted = 0;
  long long n_rejected = 0;
  long long n_apply = 0;
  double wall_seconds = 0.0;
};

struct RunManifest {
  std::string version;
  bool complete = false;
  std::string failure_stage;  // empty when complete
  RunConfig config;           // resolved values
  std::vector<double> frequencies;
  std::vector<LambdaStats> lambdas;
  double isolated_max_norm_drift = 0.0;
  double isolated_wall_seconds = 0.0;
  double total_wall_seconds = 0.0;
  int hardware_threads = 0;
};

RunManifest run_experiment(const RunConfig& cfg);

void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunConfig config_from_manifest(const std::filesystem::path& path);

std::string lambda_tag(double lambda);  // the <value> part of sweep file names

struct SummaryRow {
  double lambda = 0.0;
  double s_bar = 0.0;    // mean S over the last half of the horizon
  double max_dz = 0.0;   // max |Z - Z_isolated|
  double rms_x = 0.0, rms_y = 0.0, rms_z = 0.0;  // deviations from isolated
};

std::vector<SummaryRow> summarize(const std::filesystem::path& out_dir,
                                  const std::vector<double>& lambda_list);
std::string format_summary(const std::vector<SummaryRow>& rows);

// CSV helpers shared by the runner, summarize, and the test suites.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace spinbath
