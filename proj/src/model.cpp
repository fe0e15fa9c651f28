#include "spinbath/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "spinbath/errors.hpp"
#include "spinbath/kernels.hpp"

namespace spinbath {

ModelParams ModelParams::paper_defaults(double lambda) {
  ModelParams p;
  p.n_s = 12;
  p.omega0 = 0.8288;
  p.beta = 0.01;
  p.lambda0 = 1.0;
  p.lambda = lambda;
  p.omega_d = 1.0;
  FrequencySpec spec;  // quantile
  p.frequencies = sample_debye_frequencies(p.n_s, p.omega_d, spec);
  return p;
}

void ModelParams::validate() const {
  if (n_s < 1) throw ConfigError("model: n_s must be >= 1");
  if (n_s > 24) throw ConfigError("model: n_s too large for a dense state vector");
  if (!(omega_d > 0.0)) throw ConfigError("model: omega_d must be positive");
  if (!(omega0 > 0.0)) throw ConfigError("model: omega0 must be positive");
  if (!std::isfinite(beta) || !std::isfinite(lambda0) || !std::isfinite(lambda))
    throw ConfigError("model: couplings must be finite");
  if (frequencies.size() != static_cast<std::size_t>(n_s))
    throw ConfigError("model: need exactly n_s bath frequencies");
  for (double w : frequencies) {
    if (!(w > 0.0) || w > omega_d * (1.0 + 1e-12))
      throw ConfigError("model: bath frequencies must lie in (0, omega_d]");
  }
}

std::vector<double> sample_debye_frequencies(int n_s, double omega_d,
                                             const FrequencySpec& spec) {
  if (n_s < 1) throw ConfigError("frequencies: n_s must be >= 1");
  if (!(omega_d > 0.0)) throw ConfigError("frequencies: omega_d must be positive");
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(n_s));
  switch (spec.mode) {
    case FrequencyMode::quantile:
      // Midpoint quantiles of the Debye density g(w) = 3 w^2 / omega_d^3:
      // the CDF is (w/omega_d)^3, so w_j = omega_d * ((j - 1/2) / n_s)^{1/3}.
      for (int j = 1; j <= n_s; ++j)
        w.push_back(omega_d * std::cbrt((j - 0.5) / n_s));
      break;
    case FrequencyMode::random: {
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      for (int j = 0; j < n_s; ++j) {
        double u = uni(rng);
        while (u <= 0.0) u = uni(rng);  // keep frequencies strictly positive
        w.push_back(omega_d * std::cbrt(u));
      }
      break;
    }
    case FrequencyMode::explicit_list:
      if (spec.values.size() != static_cast<std::size_t>(n_s))
        throw ConfigError("frequencies: explicit list must have exactly n_s entries");
      for (double v : spec.values) {
        if (!std::isfinite(v) || !(v > 0.0) || v > omega_d * (1.0 + 1e-12))
          throw ConfigError("frequencies: explicit values must lie in (0, omega_d]");
      }
      w = spec.values;
      break;
  }
  std::sort(w.begin(), w.end());
  return w;
}

std::vector<double> read_frequency_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("frequencies: cannot open " + path.string());
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    if (!tok.empty() && tok.front() == '#') {  // comment to end of line
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("frequencies: bad number '" + tok + "' in " + path.string());
    }
    if (pos != tok.size())
      throw ConfigError("frequencies: bad number '" + tok + "' in " + path.string());
    vals.push_back(v);
  }
  if (vals.empty()) throw ConfigError("frequencies: no values in " + path.string());
  return vals;
}

void PauliTermList::add(double coeff, std::vector<PauliFactor> factors) {
  if (factors.empty() || factors.size() > 2)
    throw ConfigError("term list: terms carry one or two Pauli factors");
  for (const auto& f : factors) {
    if (f.site >= static_cast<unsigned>(n_spins_))
      throw ConfigError("term list: factor site out of range");
  }
  std::sort(factors.begin(), factors.end(),
            [](const PauliFactor& a, const PauliFactor& b) { return a.site < b.site; });
  if (factors.size() == 2 && factors[0].site == factors[1].site)
    throw ConfigError("term list: repeated site in one term");
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    auto& t = terms_[i];
    if (t.factors.size() != factors.size()) continue;
    bool same = true;
    for (std::size_t k = 0; k < factors.size(); ++k) {
      if (t.factors[k].site != factors[k].site || t.factors[k].axis != factors[k].axis) {
        same = false;
        break;
      }
    }
    if (same) {
      t.coeff += coeff;
      if (t.coeff == 0.0)
        terms_.erase(terms_.begin() + static_cast<std::ptrdiff_t>(i));
      return;
    }
  }
  if (coeff != 0.0) terms_.push_back(PauliTerm{coeff, std::move(factors)});
}

PauliTermList PauliTermList::scaled(double factor) const {
  PauliTermList out(n_spins_);
  for (const auto& t : terms_) out.add(factor * t.coeff, t.factors);
  return out;
}

double PauliTermList::coeff_one_norm() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coeff);
  return s;
}

PauliTermList build_full_hamiltonian(const ModelParams& p) {
  p.validate();
  const unsigned n = p.full_spins();  // impurity at site 0, bath at 1..n_s
  PauliTermList h(static_cast<int>(n));
  h.add(0.5 * p.omega0, {{0u, PauliAxis::Z}});
  h.add(p.beta, {{0u, PauliAxis::X}});
  for (unsigned j = 1; j < n; ++j) {
    h.add(p.lambda0, {{0u, PauliAxis::X}, {j, PauliAxis::X}});
    h.add(0.5 * p.frequencies[j - 1], {{j, PauliAxis::Z}});
    h.add(p.beta, {{j, PauliAxis::X}});
  }
  if (p.lambda != 0.0) {
    for (unsigned i = 1; i < n; ++i)
      for (unsigned j = i + 1; j < n; ++j)
        h.add(p.lambda, {{i, PauliAxis::X}, {j, PauliAxis::X}});
  }
  return h;
}

PauliTermList build_bath_hamiltonian(const ModelParams& p) {
  p.validate();
  const unsigned n = static_cast<unsigned>(p.n_s);  // bath-only register
  PauliTermList h(static_cast<int>(n));
  for (unsigned j = 0; j < n; ++j) {
    h.add(0.5 * p.frequencies[j], {{j, PauliAxis::Z}});
    h.add(p.beta, {{j, PauliAxis::X}});
  }
  if (p.lambda != 0.0) {
    for (unsigned i = 0; i < n; ++i)
      for (unsigned j = i + 1; j < n; ++j)
        h.add(p.lambda, {{i, PauliAxis::X}, {j, PauliAxis::X}});
  }
  return h;
}

namespace {

bool all_x(const PauliTerm& t) {
  for (const auto& f : t.factors)
    if (f.axis != PauliAxis::X) return false;
  return true;
}

}  // namespace

void apply_hamiltonian(const PauliTermList& h, const StateVector& psi, StateVector& out) {
  const std::size_t n = h.dim();
  if (psi.dim() != n)
    throw ConfigError("apply: state dimension does not match term list");
  if (out.dim() != n) out = StateVector(n);
  out.fill_zero();
  const auto& ops = kernels::active();
  StateVector scratch_a(0), scratch_b(0);
  for (const auto& t : h.terms()) {
    if (all_x(t)) {
      // Pure X strings are a single XOR-mask pass whatever the factor count.
      std::size_t mask = 0;
      for (const auto& f : t.factors) mask |= basis::site_mask(f.site);
      ops.flip_axpy(out.data(), psi.data(), t.coeff, n, mask);
    } else if (t.factors.size() == 1 && t.factors[0].axis == PauliAxis::Z) {
      ops.zsign_axpy(out.data(), psi.data(), t.coeff, n, t.factors[0].site);
    } else if (t.factors.size() == 1) {
      apply_pauli_accumulate(t.factors[0].axis, t.factors[0].site,
                             kernels::cplx(t.coeff, 0.0), psi, out);
    } else {
      // General two-factor term: stage the string through scratch states.
      scratch_a = apply_pauli(t.factors[0].axis, t.factors[0].site, psi);
      scratch_b = apply_pauli(t.factors[1].axis, t.factors[1].site, scratch_a);
      ops.axpy(out.data(), scratch_b.data(), t.coeff, n);
    }
  }
}

StateVector apply_hamiltonian(const PauliTermList& h, const StateVector& psi) {
  StateVector out(h.dim());
  apply_hamiltonian(h, psi, out);
  return out;
}

namespace {

// Walk one Pauli string applied to basis ket |col>, tracking the image index
// and amplitude by bit arithmetic alone (no shared code with the apply path).
template <typename Scalar>
void dense_accumulate(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                      const PauliTerm& t, std::size_t dim) {
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t row = col;
    std::complex<double> amp(t.coeff, 0.0);
    for (const auto& f : t.factors) {
      const std::size_t mask = basis::site_mask(f.site);
      switch (f.axis) {
        case PauliAxis::X:
          row ^= mask;
          break;
        case PauliAxis::Y:
          amp *= (row & mask) ? std::complex<double>(0.0, -1.0)
                              : std::complex<double>(0.0, 1.0);
          row ^= mask;
          break;
        case PauliAxis::Z:
          if (!(row & mask)) amp = -amp;
          break;
      }
    }
    if constexpr (std::is_same_v<Scalar, double>)
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += amp.real();
    else
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += amp;
  }
}

}  // namespace

Eigen::MatrixXcd to_dense_matrix(const PauliTermList& h) {
  const std::size_t dim = h.dim();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) dense_accumulate(m, t, dim);
  return m;
}

bool is_real_representable(const PauliTermList& h) {
  for (const auto& t : h.terms())
    for (const auto& f : t.factors)
      if (f.axis == PauliAxis::Y) return false;
  return true;
}

Eigen::MatrixXd to_dense_matrix_real(const PauliTermList& h) {
  if (!is_real_representable(h))
    throw ConfigError("dense: term list has Y factors, use the complex form");
  const std::size_t dim = h.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                            static_cast<Eigen::Index>(dim));
  for (const auto& t : h.terms()) dense_accumulate(m, t, dim);
  return m;
}

SuperSpinForm SuperSpinForm::from(const ModelParams& p) {
  p.validate();
  SuperSpinForm s;
  s.params = p;
  double sum = 0.0;
  for (double w : p.frequencies) sum += w;
  s.Omega = sum / p.n_s;
  s.nu.resize(p.frequencies.size());
  for (std::size_t j = 0; j < p.frequencies.size(); ++j)
    s.nu[j] = p.frequencies[j] - s.Omega;

  for (int j = 1; j <= p.n_s; ++j)
    s.bath_masks.push_back(basis::site_mask(static_cast<unsigned>(j)));

  // Diagonal: (w0/2) z_0 + sum_j (w_j/2) z_j - lambda*n_s/2, with z_s = +/-1
  // read off bit s. The constant comes from the Sx^2 - n_s counterterm.
  const std::size_t n = dim_for_spins(p.full_spins());
  s.diag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = (i & 1u) ? 0.5 * p.omega0 : -0.5 * p.omega0;
    for (int j = 1; j <= p.n_s; ++j) {
      const double half_w = 0.5 * p.frequencies[static_cast<std::size_t>(j - 1)];
      d += (i & s.bath_masks[static_cast<std::size_t>(j - 1)]) ? half_w : -half_w;
    }
    d -= 0.5 * p.lambda * p.n_s;
    s.diag[i] = d;
  }
  return s;
}

void apply_superspin_hamiltonian(const SuperSpinForm& s, const StateVector& psi,
                                 StateVector& out) {
  const ModelParams& p = s.params;
  const std::size_t n = s.diag.size();
  if (psi.dim() != n)
    throw ConfigError("apply: state dimension does not match model");
  if (out.dim() != n) out = StateVector(n);
  const auto& ops = kernels::active();

  thread_local std::vector<kernels::cplx> u;
  if (u.size() != n) u.resize(n);

  ops.sum_bitflips(u.data(), psi.data(), s.bath_masks.data(), s.bath_masks.size(), n);
  ops.central_apply(out.data(), psi.data(), u.data(), s.diag.data(), p.beta, p.lambda0,
                    0.5 * p.lambda, s.bath_masks.data(), s.bath_masks.size(), n);
}

StateVector apply_superspin_hamiltonian(const SuperSpinForm& s, const StateVector& psi) {
  StateVector out(s.diag.size());
  apply_superspin_hamiltonian(s, psi, out);
  return out;
}

Eigen::Matrix2d effective_hamiltonian_spin(const ModelParams& p, double s_x) {
  Eigen::Matrix2d h;
  const double off = p.beta + p.lambda0 * s_x;
  h << 0.5 * p.omega0, off, off, -0.5 * p.omega0;
  return h;
}

}  // namespace spinbath
