#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "spinbath/errors.hpp"
#include "spinbath/hilbert.hpp"

using namespace spinbath;

namespace {

StateVector random_state(std::mt19937_64& rng, std::size_t dim, bool normalize = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateVector psi(dim);
  for (std::size_t i = 0; i < dim; ++i) psi[i] = {u(rng), u(rng)};
  if (normalize) {
    const double nn = psi.norm();
    for (std::size_t i = 0; i < dim; ++i) psi[i] /= nn;
  }
  return psi;
}

double max_diff(const StateVector& a, const StateVector& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("basis index helpers") {
  CHECK(basis::bit(0b1010, 1));
  CHECK_FALSE(basis::bit(0b1010, 0));
  CHECK(basis::site_mask(3) == 8);
  CHECK(basis::flip(0b1010, 1) == 0b1000);
  CHECK(basis::compose({1, 0, 1}) == 0b101);
  CHECK(basis::extract(0b101, 3) == std::vector<int>{1, 0, 1});
  CHECK(basis::compose(basis::extract(137, 8)) == 137);
}

TEST_CASE("spin_count and dim_for_spins") {
  CHECK(spin_count(2) == 1);
  CHECK(spin_count(8192) == 13);
  CHECK(dim_for_spins(13) == 8192);
  CHECK_THROWS_AS(spin_count(0), ConfigError);
  CHECK_THROWS_AS(spin_count(3), ConfigError);
  CHECK_THROWS_AS(spin_count(12), ConfigError);
}

TEST_CASE("StateVector basics") {
  StateVector v = StateVector::basis_state(8, 5);
  CHECK(v.dim() == 8);
  CHECK(v[5] == cplx{1.0, 0.0});
  CHECK(v.norm_sq() == 1.0);
  CHECK_THROWS_AS(StateVector::basis_state(8, 8), ConfigError);

  v[0] = {3.0, 4.0};
  v[5] = 0.0;
  CHECK(v.norm() == doctest::Approx(5.0));
  v.fill_zero();
  CHECK(v.norm_sq() == 0.0);
}

TEST_CASE("pauli action on basis states") {
  // one spin: index 1 = up (sigma_z = +1), index 0 = down
  const StateVector up = StateVector::basis_state(2, 1);
  const StateVector down = StateVector::basis_state(2, 0);

  StateVector r = apply_pauli(PauliAxis::Z, 0, up);
  CHECK(r[1] == cplx{1.0, 0.0});
  CHECK(r[0] == cplx{0.0, 0.0});
  r = apply_pauli(PauliAxis::Z, 0, down);
  CHECK(r[0] == cplx{-1.0, 0.0});

  r = apply_pauli(PauliAxis::X, 0, up);
  CHECK(r[0] == cplx{1.0, 0.0});
  CHECK(r[1] == cplx{0.0, 0.0});

  // Y is Hermitian, traceless, and squares to identity; its sign convention
  // is internal (never observable through X/Z expectation values).
  r = apply_pauli(PauliAxis::Y, 0, up);
  CHECK(std::abs(std::abs(r[0]) - 1.0) < 1e-15);
  CHECK(std::abs(r[0].real()) < 1e-15);  // purely imaginary amplitude
  CHECK(r[1] == cplx{0.0, 0.0});
}

TEST_CASE("pauli involution, hermiticity, anticommutation") {
  std::mt19937_64 rng(314);
  const std::size_t dim = 32;
  const StateVector psi = random_state(rng, dim);
  const StateVector phi = random_state(rng, dim);

  for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z}) {
    for (unsigned site : {0u, 2u, 4u}) {
      // involution: sigma^2 = 1
      const StateVector twice = apply_pauli(axis, site, apply_pauli(axis, site, psi));
      CHECK(max_diff(twice, psi) < 1e-15);

      // hermiticity: <phi|sigma psi> = <sigma phi|psi>
      const cplx lhs = inner_product(phi, apply_pauli(axis, site, psi));
      const cplx rhs = inner_product(apply_pauli(axis, site, phi), psi);
      CHECK(std::abs(lhs - rhs) < 1e-14);
    }
  }

  // same-site anticommutation {X,Z} = 0, different-site commutation
  StateVector xz = apply_pauli(PauliAxis::X, 1, apply_pauli(PauliAxis::Z, 1, psi));
  StateVector zx = apply_pauli(PauliAxis::Z, 1, apply_pauli(PauliAxis::X, 1, psi));
  for (std::size_t i = 0; i < dim; ++i) {
    CHECK(std::abs(xz[i] + zx[i]) < 1e-15);
  }
  xz = apply_pauli(PauliAxis::X, 1, apply_pauli(PauliAxis::Z, 3, psi));
  zx = apply_pauli(PauliAxis::Z, 3, apply_pauli(PauliAxis::X, 1, psi));
  CHECK(max_diff(xz, zx) < 1e-15);

  // {X,Y} = 0 and {Y,Z} = 0 on the same site
  StateVector xy = apply_pauli(PauliAxis::X, 0, apply_pauli(PauliAxis::Y, 0, psi));
  StateVector yx = apply_pauli(PauliAxis::Y, 0, apply_pauli(PauliAxis::X, 0, psi));
  for (std::size_t i = 0; i < dim; ++i) CHECK(std::abs(xy[i] + yx[i]) < 1e-15);
}

TEST_CASE("apply_pauli_accumulate matches apply_pauli") {
  std::mt19937_64 rng(2718);
  const std::size_t dim = 64;
  const StateVector psi = random_state(rng, dim);
  const cplx coeff{0.3, -0.7};

  for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z}) {
    StateVector acc = random_state(rng, dim, false);
    StateVector expect = acc;
    apply_pauli_accumulate(axis, 3, coeff, psi, acc);
    const StateVector direct = apply_pauli(axis, 3, psi);
    for (std::size_t i = 0; i < dim; ++i) expect[i] += coeff * direct[i];
    CHECK(max_diff(acc, expect) < 1e-14);
  }
}

TEST_CASE("inner_product conjugates the left argument") {
  StateVector a(2), b(2);
  a[0] = {0.0, 1.0};  // i
  b[0] = {1.0, 0.0};
  const cplx ip = inner_product(a, b);  // conj(i) * 1 = -i
  CHECK(ip.real() == doctest::Approx(0.0));
  CHECK(ip.imag() == doctest::Approx(-1.0));

  std::mt19937_64 rng(11);
  const StateVector x = random_state(rng, 16);
  CHECK(std::abs(inner_product(x, x) - cplx{x.norm_sq(), 0.0}) < 1e-14);
}
