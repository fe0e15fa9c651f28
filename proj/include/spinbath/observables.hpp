#pragma once

#include <vector>

#include "spinbath/eigensolver.hpp"
#include "spinbath/hilbert.hpp"

// Thermally weighted reduced density matrix of the impurity and the derived
// entropy / spin-component observables.

namespace spinbath {

struct ReducedDensityMatrix {
  double rho11 = 0.0;  // impurity-up occupation
  double rho00 = 0.0;
  cplx rho10 = 0.0;    // coherence; rho01 = conj(rho10)

  double trace() const { return rho11 + rho00; }
  double det() const { return rho11 * rho00 - std::norm(rho10); }
};

struct ThermalEnsemble {
  double kT = 0.0;
  std::vector<double> weights;        // normalized, non-increasing
  double truncation_indicator = 0.0;  // exp(-(e_last - e_1)/kT)
};

// p_m = exp(-(e_m - e_1)/kT) / sum_k exp(-(e_k - e_1)/kT); the shift keeps the
// exponentials in range at kT = 0.02 with energy spreads of order 1.
ThermalEnsemble boltzmann_weights(const BathSpectrum& spectrum, double kT);
ThermalEnsemble boltzmann_weights(const std::vector<double>& energies, double kT);

// Trace over sites 1..n_s; site-0 bit picks the 2x2 entry.
ReducedDensityMatrix partial_trace_impurity(const StateVector& psi);

ReducedDensityMatrix thermal_reduced_density(
    const std::vector<ReducedDensityMatrix>& members, const ThermalEnsemble& ensemble);

// Von Neumann entropy in nats, from the eigenvalues p = (1 +/- sqrt(1-4 det))/2.
double entropy(const ReducedDensityMatrix& rho);
// -ln(det)/2 - sqrt(1-4det)/2 * ln((1+sqrt(1-4det))/(1-sqrt(1-4det))); singular
// as det -> 0, kept as a cross-check where well-conditioned.
double entropy_closed_form(double det);

struct SpinComponents {
  double x = 0.0, y = 0.0, z = 0.0;
};
// X = rho10 + rho01, Y = i(rho10 - rho01), Z = rho11 - rho00.
SpinComponents spin_components(const ReducedDensityMatrix& rho);

}  // namespace spinbath
