#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "spinbath/errors.hpp"

// Bit-encoded tensor-product basis for N spin-1/2 modes. Site s owns bit s of
// the basis index; bit value 1 is the sigma_z = +1 (up) state, bit value 0 the
// sigma_z = -1 (down) state. The impurity, when present, is site 0.

namespace spinbath {

using cplx = std::complex<double>;

enum class PauliAxis { X, Y, Z };

namespace basis {

inline bool bit(std::size_t index, unsigned site) { return (index >> site) & 1u; }
inline std::size_t site_mask(unsigned site) { return std::size_t{1} << site; }
inline std::size_t flip(std::size_t index, unsigned site) { return index ^ site_mask(site); }

// Index from per-site bits, site 0 at the lowest bit.
std::size_t compose(const std::vector<int>& bits);
std::vector<int> extract(std::size_t index, unsigned n_sites);

}  // namespace basis

unsigned spin_count(std::size_t dim);        // log2(dim); throws if dim not a power of two
std::size_t dim_for_spins(unsigned n);

struct StateVector {
  std::vector<cplx> amp;

  StateVector() = default;
  explicit StateVector(std::size_t dim) : amp(dim, cplx{0.0, 0.0}) {}
  static StateVector basis_state(std::size_t dim, std::size_t index);

  std::size_t dim() const { return amp.size(); }
  cplx* data() { return amp.data(); }
  const cplx* data() const { return amp.data(); }
  cplx& operator[](std::size_t i) { return amp[i]; }
  const cplx& operator[](std::size_t i) const { return amp[i]; }

  double norm_sq() const;
  double norm() const;
  void fill_zero();
};

// sigma_axis^(site) |psi>. Input is not mutated.
StateVector apply_pauli(PauliAxis axis, unsigned site, const StateVector& psi);

// acc += coeff * sigma_axis^(site) |psi>
void apply_pauli_accumulate(PauliAxis axis, unsigned site, cplx coeff,
                            const StateVector& psi, StateVector& acc);

// <phi|psi>, conjugation on phi.
cplx inner_product(const StateVector& phi, const StateVector& psi);

}  // namespace spinbath
