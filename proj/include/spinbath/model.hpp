#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spinbath/hilbert.hpp"

// Central spin coupled to an interacting spin bath:
//   H = (w0/2) Z_0 + beta X_0 + lambda0 X_0 sum_j X_j
//     + sum_j [(w_j/2) Z_j + beta X_j] + lambda sum_{i<j} X_i X_j
// Site 0 is the impurity, sites 1..n_s the bath. Bath frequencies come from
// a Debye density g(w) ~ w^2 cut off at omega_d.

namespace spinbath {

struct ModelParams {
  int n_s = 12;
  double omega0 = 0.8288;
  double beta = 0.01;
  double lambda0 = 1.0;
  double lambda = 0.0;
  double omega_d = 1.0;
  std::vector<double> frequencies;  // n_s entries in (0, omega_d]

  static ModelParams paper_defaults(double lambda = 0.0);
  void validate() const;
  unsigned full_spins() const { return static_cast<unsigned>(n_s) + 1; }
};

enum class FrequencyMode { quantile, random, explicit_list };

struct FrequencySpec {
  FrequencyMode mode = FrequencyMode::quantile;
  std::uint64_t seed = 0;            // random mode
  std::vector<double> values;        // explicit mode
};

// Sorted ascending. quantile: w_j = omega_d * ((j - 1/2)/n_s)^(1/3);
// random: w_j = omega_d * u_j^(1/3), u_j uniform from `seed`;
// explicit: validated passthrough.
std::vector<double> sample_debye_frequencies(int n_s, double omega_d,
                                             const FrequencySpec& spec);
std::vector<double> read_frequency_file(const std::filesystem::path& path);

struct PauliFactor {
  unsigned site;
  PauliAxis axis;
};

struct PauliTerm {
  double coeff;
  std::vector<PauliFactor> factors;  // one or two, distinct sites
};

// Real-coefficient weighted sum of 1- and 2-site Pauli strings. Terms with
// identical factor sets merge on add; zero-coefficient terms are dropped.
class PauliTermList {
 public:
  explicit PauliTermList(int n_spins) : n_spins_(n_spins) {}

  void add(double coeff, std::vector<PauliFactor> factors);
  int n_spins() const { return n_spins_; }
  std::size_t dim() const { return dim_for_spins(static_cast<unsigned>(n_spins_)); }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  PauliTermList scaled(double factor) const;
  double coeff_one_norm() const;  // sum |c|, a cheap upper bound on ||H||_2

 private:
  int n_spins_;
  std::vector<PauliTerm> terms_;
};

PauliTermList build_full_hamiltonian(const ModelParams& p);
PauliTermList build_bath_hamiltonian(const ModelParams& p);

StateVector apply_hamiltonian(const PauliTermList& h, const StateVector& psi);
void apply_hamiltonian(const PauliTermList& h, const StateVector& psi, StateVector& out);

// Dense matrix of a term list; the complex form always works, the real form
// requires a Y-free list. Used by the diagonalization oracles.
Eigen::MatrixXcd to_dense_matrix(const PauliTermList& h);
bool is_real_representable(const PauliTermList& h);
Eigen::MatrixXd to_dense_matrix_real(const PauliTermList& h);

// Average-frequency rewriting of the same Hamiltonian:
//   H = (w0/2) Z_0 + beta X_0 + lambda0 X_0 Sx
//     + sum_j (nu_j/2) Z_j + (Omega/2) Sz + beta Sx + (lambda/2)[Sx^2 - n_s]
// with Sx,Sz summed over bath sites, Omega the mean bath frequency and
// nu_j = w_j - Omega.
struct SuperSpinForm {
  double Omega = 0.0;
  std::vector<double> nu;
  ModelParams params;
  std::vector<std::size_t> bath_masks;  // XOR masks of bath sites 1..n_s
  std::vector<double> diag;             // H diagonal over the product basis

  static SuperSpinForm from(const ModelParams& p);
};

StateVector apply_superspin_hamiltonian(const SuperSpinForm& s, const StateVector& psi);
void apply_superspin_hamiltonian(const SuperSpinForm& s, const StateVector& psi,
                                 StateVector& out);

// 2x2 impurity Hamiltonian for a frozen bath X-polarization s_x:
// [[w0/2, beta + lambda0*s_x], [beta + lambda0*s_x, -w0/2]].
Eigen::Matrix2d effective_hamiltonian_spin(const ModelParams& p, double s_x);

}  // namespace spinbath
