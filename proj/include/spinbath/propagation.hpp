#pragma once

#include <functional>
#include <vector>

#include "spinbath/hilbert.hpp"
#include "spinbath/model.hpp"

// Schrodinger propagation i d|psi>/dt = H|psi> (hbar = 1) by an adaptive
// embedded Runge-Kutta pair of order 8 with 5th/3rd-order error estimation,
// plus a dense eigendecomposition propagator as a small-system oracle.

namespace spinbath {

// Matrix-free Hermitian operator handle; apply writes out = H|in>.
struct LinearOperator {
  std::size_t dim = 0;
  std::function<void(const StateVector&, StateVector&)> apply;
};

LinearOperator make_operator(PauliTermList h);
LinearOperator make_operator(SuperSpinForm s);

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 0.0;         // 0 = automatic startup estimate
  double h_max = 0.0;          // 0 = unlimited
  std::vector<double> t_grid;  // ascending output times, starting at 0

  void validate() const;
  static std::vector<double> uniform_grid(double t_max, double dt);
};

// Called at every grid time with read-only state access.
using GridObserver =
    std::function<void(std::size_t index, double t, const StateVector& psi)>;

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<StateVector> states;  // only filled when store_states was set
  double max_norm_drift = 0.0;      // max over grid of | ||psi|| - 1 |
  bool norm_flagged = false;        // drift exceeded 1e-6
  long long n_accepted = 0;
  long long n_rejected = 0;
  long long n_apply = 0;            // operator applications
};

TrajectoryRecord evolve_rk8(const LinearOperator& op, const StateVector& psi0,
                            const IntegratorConfig& cfg,
                            const GridObserver& observer = {},
                            bool store_states = false);
TrajectoryRecord evolve_rk8(const PauliTermList& h, const StateVector& psi0,
                            const IntegratorConfig& cfg,
                            const GridObserver& observer = {},
                            bool store_states = false);

// |1>_0 (x) |m>_e : bath amplitudes shifted into sites 1..n_s, impurity bit set.
StateVector make_initial_state(const StateVector& bath_vector);

// psi(t) = V exp(-iEt) V^dag psi0 from one dense diagonalization (dim <= 4096).
std::vector<StateVector> evolve_exact_oracle(const PauliTermList& h,
                                             const StateVector& psi0,
                                             const std::vector<double>& times);

}  // namespace spinbath
