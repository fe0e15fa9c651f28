#include "spinbath/eigensolver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "spinbath/errors.hpp"
#include "spinbath/kernels.hpp"

namespace spinbath {

namespace {

constexpr std::size_t kDenseCap = 4096;

// Real random direction. The Hamiltonians here are real symmetric, so a real
// start keeps every Lanczos vector exactly real (imag parts stay 0.0 bit for
// bit), which makes cached spectra reproducible.
void fill_random_real(StateVector& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (auto& a : v.amp) a = cplx(uni(rng), 0.0);
}

// Two-pass classical Gram-Schmidt of w against basis[0..m), accumulating the
// projection coefficients into column col of t (rows 0..m).
void orthogonalize(StateVector& w, const std::vector<StateVector>& basis,
                   Eigen::MatrixXd* t, Eigen::Index col) {
  const auto& ops = kernels::active();
  const std::size_t n = w.dim();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const cplx c = ops.dot(basis[i].data(), w.data(), n);
      ops.caxpy(w.data(), basis[i].data(), -c, n);
      if (t) (*t)(static_cast<Eigen::Index>(i), col) += c.real();
    }
  }
}

bool append_random_orthogonal(std::vector<StateVector>& basis, std::size_t dim,
                              std::mt19937_64& rng) {
  if (basis.size() >= dim) return false;
  StateVector v(dim);
  for (int attempt = 0; attempt < 32; ++attempt) {
    fill_random_real(v, rng);
    orthogonalize(v, basis, nullptr, 0);
    const double nrm = v.norm();
    if (nrm > 1e-6) {
      kernels::active().scale(v.data(), 1.0 / nrm, dim);
      basis.push_back(v);
      return true;
    }
  }
  throw NumericalError("lanczos: could not draw a vector outside the current basis");
}

void fix_phase(StateVector& v) {
  std::size_t imax = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    const double m = std::norm(v[i]);
    if (m > best) {
      best = m;
      imax = i;
    }
  }
  const cplx a = v[imax];
  const double mag = std::abs(a);
  if (mag == 0.0) return;
  const cplx phase = std::conj(a) / mag;
  if (phase != cplx(1.0, 0.0))
    kernels::active().caxpy(v.data(), v.data(), phase - cplx(1.0, 0.0), v.dim());
}

}  // namespace

BathSpectrum lowest_eigenpairs(const PauliTermList& h, const LanczosConfig& cfg) {
  const std::size_t dim = h.dim();
  if (cfg.n_eig < 1) throw ConfigError("lanczos: n_eig must be >= 1");
  if (static_cast<std::size_t>(cfg.n_eig) > dim)
    throw ConfigError("lanczos: n_eig exceeds the space dimension");
  if (!(cfg.tol > 0.0)) throw ConfigError("lanczos: tol must be positive");
  const int max_k = cfg.max_krylov > 0
                        ? cfg.max_krylov
                        : static_cast<int>(std::min<std::size_t>(dim, 600));
  if (max_k < cfg.n_eig || static_cast<std::size_t>(max_k) > dim)
    throw ConfigError("lanczos: need n_eig <= max_krylov <= dim");

  const double scale0 = std::max(h.coeff_one_norm(), 1e-300);
  std::mt19937_64 rng(cfg.seed);

  std::vector<StateVector> basis;
  basis.reserve(static_cast<std::size_t>(max_k));
  {
    StateVector v0(dim);
    fill_random_real(v0, rng);
    kernels::active().scale(v0.data(), 1.0 / v0.norm(), dim);
    basis.push_back(std::move(v0));
  }

  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(max_k, max_k);
  StateVector w(dim);
  const int n_req = cfg.n_eig;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  int m = 0;             // basis columns whose H-image has been processed
  double beta_last = 0;  // remainder norm of the most recent column
  int n_eff = n_req;
  bool converged = false;
  double width = scale0;
  std::vector<double> est;

  for (int k = 0; k < max_k; ++k) {
    apply_hamiltonian(h, basis[static_cast<std::size_t>(k)], w);
    orthogonalize(w, basis, &t, k);
    beta_last = w.norm();
    m = k + 1;

    const bool last_possible = (k == max_k - 1);
    const bool check_now = last_possible || (m >= n_req && m % 10 == 0);
    if (check_now) {
      const Eigen::MatrixXd t_m =
          Eigen::MatrixXd(t.topLeftCorner(m, m).selfadjointView<Eigen::Lower>());
      es.compute(t_m);
      if (es.info() != Eigen::Success)
        throw NumericalError("lanczos: projected eigensolve failed");
      const auto& ev = es.eigenvalues();
      width = std::max(ev(m - 1) - ev(0), 1e-12 * scale0);
      const double tol_abs = cfg.tol * width;

      // Extend past the requested count while the spectrum has no clean gap
      // (a thermal projector truncated inside a degenerate multiplet would be
      // basis-dependent).
      n_eff = std::min(n_req, m);
      while (n_eff < m && ev(n_eff) - ev(n_eff - 1) < 1e-10) ++n_eff;

      // Residual bound per Ritz pair: the Arnoldi remainder lives only in the
      // last processed column, so ||H x - e x|| = beta_last * |y_last|.
      est.assign(static_cast<std::size_t>(n_eff), 0.0);
      bool all_ok = (n_eff <= m) && (n_eff >= n_req);
      for (int j = 0; j < n_eff; ++j) {
        est[static_cast<std::size_t>(j)] =
            beta_last * std::abs(es.eigenvectors()(m - 1, j));
        if (est[static_cast<std::size_t>(j)] > tol_abs) all_ok = false;
      }
      if (all_ok && n_eff < m) {
        converged = true;
        break;
      }
    }
    if (converged || m >= max_k) break;

    // Grow the basis: normalize the remainder, or on breakdown (an invariant
    // subspace was exhausted) continue from a fresh random direction.
    if (static_cast<std::size_t>(m) >= dim) break;
    if (beta_last > 1e-13 * scale0) {
      kernels::active().scale(w.data(), 1.0 / beta_last, dim);
      basis.push_back(w);
      // Only the lower triangle is read (selfadjointView): the matching upper
      // entry accrues on its own when column k+1 is orthogonalized.
      t(k + 1, k) = beta_last;
    } else {
      if (!append_random_orthogonal(basis, dim, rng)) break;
    }
  }

  if (!converged) {
    // The whole space may simply have been spanned, in which case the final
    // Rayleigh-Ritz is exact; re-check before declaring failure.
    const Eigen::MatrixXd t_m =
        Eigen::MatrixXd(t.topLeftCorner(m, m).selfadjointView<Eigen::Lower>());
    es.compute(t_m);
    if (es.info() != Eigen::Success)
      throw NumericalError("lanczos: projected eigensolve failed");
    const auto& ev = es.eigenvalues();
    width = std::max(ev(m - 1) - ev(0), 1e-12 * scale0);
    n_eff = std::min(n_req, m);
    while (n_eff < m && ev(n_eff) - ev(n_eff - 1) < 1e-10) ++n_eff;
    est.assign(static_cast<std::size_t>(n_eff), 0.0);
    bool all_ok = static_cast<std::size_t>(m) >= dim && n_eff >= n_req;
    if (static_cast<std::size_t>(m) >= dim) {
      // beta_last measures only rounding residue here
      for (int j = 0; j < n_eff; ++j)
        est[static_cast<std::size_t>(j)] =
            beta_last * std::abs(es.eigenvectors()(m - 1, j));
    } else {
      for (int j = 0; j < n_eff; ++j) {
        est[static_cast<std::size_t>(j)] =
            beta_last * std::abs(es.eigenvectors()(m - 1, j));
        if (est[static_cast<std::size_t>(j)] > cfg.tol * width) all_ok = false;
      }
    }
    if (!all_ok) {
      std::ostringstream msg;
      msg << "lanczos: not converged within max_krylov=" << max_k
          << "; residual estimates:";
      for (double r : est) msg << ' ' << r;
      msg << " (tolerance " << cfg.tol * width << ")";
      throw NumericalError(msg.str());
    }
    converged = true;
  }

  BathSpectrum out;
  out.requested = n_req;
  out.extended = n_eff > n_req;
  out.width_estimate = width;
  out.energies.resize(static_cast<std::size_t>(n_eff));
  out.residuals.resize(static_cast<std::size_t>(n_eff));
  out.eigenvectors.reserve(static_cast<std::size_t>(n_eff));

  const auto& ops = kernels::active();
  for (int j = 0; j < n_eff; ++j) {
    out.energies[static_cast<std::size_t>(j)] = es.eigenvalues()(j);
    StateVector x(dim);
    for (int i = 0; i < m; ++i)
      ops.axpy(x.data(), basis[static_cast<std::size_t>(i)].data(),
               es.eigenvectors()(i, j), dim);
    const double nrm = x.norm();
    if (nrm > 0.0 && std::abs(nrm - 1.0) > 1e-12)
      ops.scale(x.data(), 1.0 / nrm, dim);
    fix_phase(x);
    // True residual, not the estimate
    apply_hamiltonian(h, x, w);
    ops.axpy(w.data(), x.data(), -es.eigenvalues()(j), dim);
    out.residuals[static_cast<std::size_t>(j)] = w.norm();
    out.eigenvectors.push_back(std::move(x));
  }

  for (double r : out.residuals) {
    if (r > std::max(100.0 * cfg.tol, 1e-8) * width) {
      std::ostringstream msg;
      msg << "lanczos: assembled pair residual " << r
          << " inconsistent with convergence estimate (width " << width << ")";
      throw NumericalError(msg.str());
    }
  }
  return out;
}

DenseSpectrum dense_spectrum_oracle(const PauliTermList& h) {
  const std::size_t dim = h.dim();
  if (dim > kDenseCap)
    throw ConfigError("dense oracle: dimension exceeds the 4096 cap");
  DenseSpectrum out;
  if (is_real_representable(h)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense_matrix_real(h));
    if (es.info() != Eigen::Success)
      throw NumericalError("dense oracle: eigensolve failed");
    out.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
    out.vectors = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense_matrix(h));
    if (es.info() != Eigen::Success)
      throw NumericalError("dense oracle: eigensolve failed");
    out.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
    out.vectors = es.eigenvectors();
  }
  return out;
}

SpectrumReport verify_spectrum(const BathSpectrum& s, const PauliTermList& h) {
  const std::size_t dim = h.dim();
  for (const auto& v : s.eigenvectors)
    if (v.dim() != dim) throw ConfigError("verify: dimension mismatch");
  SpectrumReport rep;
  const auto& ops = kernels::active();
  StateVector w(dim);
  for (std::size_t j = 0; j < s.count(); ++j) {
    apply_hamiltonian(h, s.eigenvectors[j], w);
    ops.axpy(w.data(), s.eigenvectors[j].data(), -s.energies[j], dim);
    rep.max_residual = std::max(rep.max_residual, w.norm());
    for (std::size_t i = 0; i <= j; ++i) {
      const cplx g = inner_product(s.eigenvectors[i], s.eigenvectors[j]);
      const double dev = std::abs(g - (i == j ? cplx(1.0, 0.0) : cplx(0.0, 0.0)));
      rep.max_gram_deviation = std::max(rep.max_gram_deviation, dev);
    }
  }
  return rep;
}

namespace {

constexpr char kMagic[] = "spinbath spectrum v1 le";

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError(std::string("spectrum file: truncated reading ") + what);
  return v;
}

}  // namespace

void save_spectrum(const BathSpectrum& s, const std::filesystem::path& path,
                   const std::string& key) {
  static_assert(std::endian::native == std::endian::little,
                "spectrum cache assumes a little-endian host");
  if (key.find('\n') != std::string::npos)
    throw ConfigError("spectrum file: key must be a single line");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("spectrum file: cannot write " + path.string());
  out << kMagic << '\n' << "key " << key << '\n';
  const std::uint64_t dim = s.eigenvectors.empty() ? 0 : s.eigenvectors[0].dim();
  put(out, dim);
  put(out, static_cast<std::uint64_t>(s.count()));
  put(out, static_cast<std::uint64_t>(s.requested));
  put(out, static_cast<std::uint8_t>(s.extended ? 1 : 0));
  put(out, s.width_estimate);
  for (double e : s.energies) put(out, e);
  for (double r : s.residuals) put(out, r);
  for (const auto& v : s.eigenvectors) {
    if (v.dim() != dim) throw ConfigError("spectrum file: ragged eigenvectors");
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(dim * sizeof(cplx)));
  }
  if (!out) throw ConfigError("spectrum file: write failed for " + path.string());
}

BathSpectrum load_spectrum(const std::filesystem::path& path, std::string* key_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("spectrum file: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kMagic)
    throw ConfigError("spectrum file: unrecognized header in " + path.string());
  std::getline(in, line);
  if (line.rfind("key ", 0) != 0)
    throw ConfigError("spectrum file: missing key line in " + path.string());
  if (key_out) *key_out = line.substr(4);

  const auto dim = get<std::uint64_t>(in, "dim");
  const auto count = get<std::uint64_t>(in, "count");
  const auto requested = get<std::uint64_t>(in, "requested");
  const auto extended = get<std::uint8_t>(in, "extended flag");
  const auto width = get<double>(in, "width");
  if (dim > (std::uint64_t{1} << 30) || count > dim)
    throw ConfigError("spectrum file: implausible sizes in " + path.string());

  BathSpectrum s;
  s.requested = static_cast<int>(requested);
  s.extended = extended != 0;
  s.width_estimate = width;
  s.energies.resize(count);
  s.residuals.resize(count);
  for (auto& e : s.energies) e = get<double>(in, "energies");
  for (auto& r : s.residuals) r = get<double>(in, "residuals");
  s.eigenvectors.reserve(count);
  for (std::uint64_t j = 0; j < count; ++j) {
    StateVector v(dim);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(dim * sizeof(cplx)));
    if (!in) throw ConfigError("spectrum file: truncated eigenvector data");
    s.eigenvectors.push_back(std::move(v));
  }
  return s;
}

}  // namespace spinbath
