#include "spinbath/observables.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "spinbath/errors.hpp"

namespace spinbath {

ThermalEnsemble boltzmann_weights(const std::vector<double>& energies, double kT) {
  if (!(kT > 0.0)) throw ConfigError("thermal weights: kT must be positive");
  if (energies.empty()) throw ConfigError("thermal weights: empty spectrum");
  for (std::size_t m = 1; m < energies.size(); ++m)
    if (energies[m] < energies[m - 1])
      throw ConfigError("thermal weights: energies must be ascending");

  ThermalEnsemble e;
  e.kT = kT;
  const double e1 = energies.front();
  double z = 0.0;
  e.weights.reserve(energies.size());
  for (double en : energies) {
    const double w = std::exp(-(en - e1) / kT);
    e.weights.push_back(w);
    z += w;
  }
  for (double& w : e.weights) w /= z;
  e.truncation_indicator = std::exp(-(energies.back() - e1) / kT);
  return e;
}

ThermalEnsemble boltzmann_weights(const BathSpectrum& spectrum, double kT) {
  return boltzmann_weights(spectrum.energies, kT);
}

ReducedDensityMatrix partial_trace_impurity(const StateVector& psi) {
  const std::size_t dim = psi.dim();
  if (dim < 2 || !std::has_single_bit(dim))
    throw ConfigError("partial trace: need an even power-of-two dimension");
  const std::size_t bath_dim = dim / 2;
  ReducedDensityMatrix rho;
  for (std::size_t b = 0; b < bath_dim; ++b) {
    const cplx up = psi[(b << 1) | 1];
    const cplx down = psi[b << 1];
    rho.rho11 += std::norm(up);
    rho.rho00 += std::norm(down);
    rho.rho10 += up * std::conj(down);
  }
  return rho;
}

ReducedDensityMatrix thermal_reduced_density(
    const std::vector<ReducedDensityMatrix>& members, const ThermalEnsemble& ensemble) {
  if (members.size() != ensemble.weights.size())
    throw ConfigError("thermal density: member/weight count mismatch");
  ReducedDensityMatrix rho;
  for (std::size_t m = 0; m < members.size(); ++m) {
    const double p = ensemble.weights[m];
    rho.rho11 += p * members[m].rho11;
    rho.rho00 += p * members[m].rho00;
    rho.rho10 += p * members[m].rho10;
  }
  return rho;
}

double entropy(const ReducedDensityMatrix& rho) {
  if (std::abs(rho.trace() - 1.0) > 1e-8)
    throw NumericalError("entropy: density matrix trace deviates from 1");
  double det = rho.det();
  if (det < -1e-12)
    throw NumericalError("entropy: density matrix is not positive semidefinite");
  det = std::clamp(det, 0.0, 0.25);

  const double u = std::sqrt(std::max(0.0, 1.0 - 4.0 * det));
  const double pp = 0.5 * (1.0 + u);
  const double pm = 0.5 * (1.0 - u);
  double s = 0.0;
  if (pp > 0.0) s -= pp * std::log(pp);
  if (pm > 0.0) s -= pm * std::log(pm);
  return s;
}

double entropy_closed_form(double det) {
  if (!(det > 0.0) || det > 0.25)
    throw ConfigError("entropy closed form: det must lie in (0, 0.25]");
  const double u = std::sqrt(std::max(0.0, 1.0 - 4.0 * det));
  double s = -0.5 * std::log(det);
  if (u > 0.0) s -= 0.5 * u * std::log((1.0 + u) / (1.0 - u));
  return s;
}

SpinComponents spin_components(const ReducedDensityMatrix& rho) {
  SpinComponents c;
  c.x = 2.0 * rho.rho10.real();
  c.y = -2.0 * rho.rho10.imag();
  c.z = rho.rho11 - rho.rho00;
  return c;
}

}  // namespace spinbath
