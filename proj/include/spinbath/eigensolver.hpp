#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spinbath/hilbert.hpp"
#include "spinbath/model.hpp"

// Lowest eigenpairs of the bath Hamiltonian via Lanczos iteration with full
// reorthogonalization, plus a dense-diagonalization oracle for small systems.

namespace spinbath {

struct LanczosConfig {
  int n_eig = 20;
  int max_krylov = 0;   // 0 = min(dim, 600)
  double tol = 1e-10;   // residual tolerance relative to the Ritz-value spread
  bool reorth = true;   // full reorthogonalization; kept on, recorded for manifests
  std::uint64_t seed = 12345;  // start-vector seed
};

struct BathSpectrum {
  std::vector<double> energies;           // ascending
  std::vector<StateVector> eigenvectors;  // same order, unit norm, phase-fixed
  std::vector<double> residuals;          // ||H v - e v||, absolute
  double width_estimate = 0.0;            // Ritz spread the tolerances were scaled by
  int requested = 0;                      // pair count asked for
  bool extended = false;                  // count grew to finish a degenerate multiplet

  std::size_t count() const { return energies.size(); }
};

BathSpectrum lowest_eigenpairs(const PauliTermList& h, const LanczosConfig& cfg);

// Full spectrum by dense symmetric diagonalization; refuses above dim 4096.
struct DenseSpectrum {
  std::vector<double> energies;  // ascending, all of them
  Eigen::MatrixXcd vectors;      // eigenvectors as columns
};
DenseSpectrum dense_spectrum_oracle(const PauliTermList& h);

struct SpectrumReport {
  double max_residual = 0.0;        // max ||H v - e v||
  double max_gram_deviation = 0.0;  // max |<v_i|v_j> - delta_ij|
};
SpectrumReport verify_spectrum(const BathSpectrum& s, const PauliTermList& h);

// Cache file: one-line versioned ASCII header, an opaque key line the caller
// can use to detect stale caches, then little-endian binary doubles.
void save_spectrum(const BathSpectrum& s, const std::filesystem::path& path,
                   const std::string& key = "none");
BathSpectrum load_spectrum(const std::filesystem::path& path,
                           std::string* key_out = nullptr);

}  // namespace spinbath
