#include "spinbath/propagation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spinbath/errors.hpp"
#include "spinbath/kernels.hpp"

namespace spinbath {

LinearOperator make_operator(PauliTermList h) {
  LinearOperator op;
  op.dim = h.dim();
  op.apply = [h = std::move(h)](const StateVector& in, StateVector& out) {
    apply_hamiltonian(h, in, out);
  };
  return op;
}

LinearOperator make_operator(SuperSpinForm s) {
  LinearOperator op;
  op.dim = s.diag.size();
  op.apply = [s = std::move(s)](const StateVector& in, StateVector& out) {
    apply_superspin_hamiltonian(s, in, out);
  };
  return op;
}

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw ConfigError("integrator: rtol and atol must be positive");
  if (t_grid.empty()) throw ConfigError("integrator: empty output grid");
  if (t_grid.front() != 0.0) throw ConfigError("integrator: grid must start at 0");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw ConfigError("integrator: grid times must be strictly ascending");
  if (h_init < 0.0 || h_max < 0.0)
    throw ConfigError("integrator: step bounds must be non-negative");
}

std::vector<double> IntegratorConfig::uniform_grid(double t_max, double dt) {
  if (!(t_max > 0.0) || !(dt > 0.0))
    throw ConfigError("integrator: t_max and dt must be positive");
  const double steps = t_max / dt;
  const auto n = static_cast<long long>(std::llround(steps));
  if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9 * steps)
    throw ConfigError("integrator: dt must divide t_max");
  std::vector<double> grid(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i)
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) * dt;
  return grid;
}

namespace {

// Dormand-Prince 8(5,3) coefficients (Hairer-Norsett-Wanner). Twelve stages;
// stages 11 and 12 reuse the k2/k3 slots exactly as in the reference codes.
namespace dp853 {
constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

// 3rd-order companion weights for the stiffness-safe error blend
constexpr double bhh1 = 0.244094488188976377952755905512e0;
constexpr double bhh2 = 0.733846688281611857341361741547e0;
constexpr double bhh3 = 0.220588235294117647058823529412e-1;

// 5th-order error weights
constexpr double er1 = 0.1312004499419488073250102996e-1;
constexpr double er6 = -0.1225156446376204440720569753e1;
constexpr double er7 = -0.4957589496572501915214079952e0;
constexpr double er8 = 0.1664377182454986536961530415e1;
constexpr double er9 = -0.3503288487499736816886487290e0;
constexpr double er10 = 0.3341791187130174790297318841e0;
constexpr double er11 = 0.8192320648511571246570742613e-1;
constexpr double er12 = -0.2235530786388629525884427845e-1;

constexpr double safe = 0.9;
constexpr double alpha = 0.125;  // 1/8 for an 8th-order pair
constexpr double min_scale = 1.0 / 3.0;
constexpr double max_scale = 6.0;
}  // namespace dp853

struct Rk8Workspace {
  // k1..k10 plus the stage input; stages 11/12 land in the k2/k3 slots.
  StateVector k1, k2, k3, k4, k5, k6, k7, k8, k9, k10;
  StateVector yw, ynew, e3, e5, zero;

  explicit Rk8Workspace(std::size_t n)
      : k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n),
        yw(n), ynew(n), e3(n), e5(n), zero(n) {}
};

// Weighted-rms norm of v with component scales from y: sqrt(sum((v_c/sci)^2) / N)
// over the 2n real components.
double wrms_norm(const StateVector& v, const StateVector& y, double atol, double rtol) {
  double s3 = 0.0, s5 = 0.0;
  kernels::active().err_wrms_pair(v.data(), v.data(), y.data(), y.data(), atol, rtol,
                                  v.dim(), s3, s5);
  return std::sqrt(s5 / static_cast<double>(2 * v.dim()));
}

}  // namespace

TrajectoryRecord evolve_rk8(const LinearOperator& op, const StateVector& psi0,
                            const IntegratorConfig& cfg, const GridObserver& observer,
                            bool store_states) {
  using namespace dp853;
  cfg.validate();
  const std::size_t n = op.dim;
  if (psi0.dim() != n) throw ConfigError("integrator: state/operator dimension mismatch");
  if (std::abs(psi0.norm() - 1.0) > 1e-6)
    throw ConfigError("integrator: initial state is not normalized");

  const auto& ops = kernels::active();
  TrajectoryRecord rec;
  rec.times = cfg.t_grid;
  Rk8Workspace ws(n);
  StateVector y = psi0;

  // dpsi/dt = -i H psi; the generator is time-independent so stage times never
  // enter the right-hand side.
  auto rhs = [&](const StateVector& in, StateVector& out) {
    op.apply(in, out);
    ops.scale_neg_i(out.data(), n);
    ++rec.n_apply;
  };

  auto emit = [&](std::size_t idx, double t) {
    const double drift = std::abs(y.norm() - 1.0);
    rec.max_norm_drift = std::max(rec.max_norm_drift, drift);
    if (store_states) rec.states.push_back(y);
    if (observer) observer(idx, t, y);
  };

  double t = cfg.t_grid.front();
  emit(0, t);
  if (cfg.t_grid.size() == 1) {
    rec.norm_flagged = rec.max_norm_drift > 1e-6;
    return rec;
  }

  const double t_end = cfg.t_grid.back();
  const double h_cap = cfg.h_max > 0.0 ? cfg.h_max : std::numeric_limits<double>::infinity();

  rhs(y, ws.k1);

  // Startup step estimate from the first derivative and a trial Euler step.
  double h_work;
  if (cfg.h_init > 0.0) {
    h_work = std::min(cfg.h_init, h_cap);
  } else {
    const double d0 = wrms_norm(y, y, cfg.atol, cfg.rtol);
    const double d1 = wrms_norm(ws.k1, y, cfg.atol, cfg.rtol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * (d0 / d1);
    h0 = std::min(h0, t_end - t);
    const double c1 = 1.0;
    const cplx* v1 = ws.k1.data();
    ops.lincomb(ws.yw.data(), y.data(), h0, &c1, &v1, 1, n);
    rhs(ws.yw, ws.k4);
    const cplx* vk = ws.k1.data();
    const double cm = -1.0;
    ops.lincomb(ws.e5.data(), ws.k4.data(), 1.0, &cm, &vk, 1, n);
    const double d2 = wrms_norm(ws.e5, y, cfg.atol, cfg.rtol) / h0;
    const double der12 = std::max(d1, d2);
    const double h1 = der12 > 1e-15 ? std::pow(0.01 / der12, 0.125)
                                    : std::max(1e-6, h0 * 1e-3);
    h_work = std::min({100.0 * h0, h1, h_cap, t_end - t});
  }
  if (!(h_work > 0.0)) h_work = 1e-6;

  std::size_t next_idx = 1;
  bool rejected_last = false;

  auto stage = [&](StateVector& dst, double h, const double* cs, const cplx* const* vs,
                   std::size_t nv) { ops.lincomb(dst.data(), y.data(), h, cs, vs, nv, n); };

  while (next_idx < cfg.t_grid.size()) {
    const double t_goal = cfg.t_grid[next_idx];
    bool landed = false;
    double h = h_work;
    if (t + h >= t_goal) {
      h = t_goal - t;
      landed = true;
    }
    if (h < std::max(1e-14, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(t))) {
      std::ostringstream msg;
      msg << "integrator: step size underflow (h=" << h << " at t=" << t
          << "); tolerances unattainable";
      throw NumericalError(msg.str());
    }

    {
      const cplx *K1 = ws.k1.data(), *K2 = ws.k2.data(), *K3 = ws.k3.data(),
                 *K4 = ws.k4.data(), *K5 = ws.k5.data(), *K6 = ws.k6.data(),
                 *K7 = ws.k7.data(), *K8 = ws.k8.data(), *K9 = ws.k9.data(),
                 *K10 = ws.k10.data();
      {
        const double cs[] = {a21};
        const cplx* vs[] = {K1};
        stage(ws.yw, h, cs, vs, 1);
        rhs(ws.yw, ws.k2);
      }
      {
        const double cs[] = {a31, a32};
        const cplx* vs[] = {K1, K2};
        stage(ws.yw, h, cs, vs, 2);
        rhs(ws.yw, ws.k3);
      }
      {
        const double cs[] = {a41, a43};
        const cplx* vs[] = {K1, K3};
        stage(ws.yw, h, cs, vs, 2);
        rhs(ws.yw, ws.k4);
      }
      {
        const double cs[] = {a51, a53, a54};
        const cplx* vs[] = {K1, K3, K4};
        stage(ws.yw, h, cs, vs, 3);
        rhs(ws.yw, ws.k5);
      }
      {
        const double cs[] = {a61, a64, a65};
        const cplx* vs[] = {K1, K4, K5};
        stage(ws.yw, h, cs, vs, 3);
        rhs(ws.yw, ws.k6);
      }
      {
        const double cs[] = {a71, a74, a75, a76};
        const cplx* vs[] = {K1, K4, K5, K6};
        stage(ws.yw, h, cs, vs, 4);
        rhs(ws.yw, ws.k7);
      }
      {
        const double cs[] = {a81, a84, a85, a86, a87};
        const cplx* vs[] = {K1, K4, K5, K6, K7};
        stage(ws.yw, h, cs, vs, 5);
        rhs(ws.yw, ws.k8);
      }
      {
        const double cs[] = {a91, a94, a95, a96, a97, a98};
        const cplx* vs[] = {K1, K4, K5, K6, K7, K8};
        stage(ws.yw, h, cs, vs, 6);
        rhs(ws.yw, ws.k9);
      }
      {
        const double cs[] = {a101, a104, a105, a106, a107, a108, a109};
        const cplx* vs[] = {K1, K4, K5, K6, K7, K8, K9};
        stage(ws.yw, h, cs, vs, 7);
        rhs(ws.yw, ws.k10);
      }
      {
        const double cs[] = {a111, a114, a115, a116, a117, a118, a119, a1110};
        const cplx* vs[] = {K1, K4, K5, K6, K7, K8, K9, K10};
        stage(ws.yw, h, cs, vs, 8);
        rhs(ws.yw, ws.k2);  // stage 11 lands in the k2 slot
      }
      {
        const double cs[] = {a121, a124, a125, a126, a127, a128, a129, a1210, a1211};
        const cplx* vs[] = {K1, K4, K5, K6, K7, K8, K9, K10, K2};
        stage(ws.yw, h, cs, vs, 9);
        rhs(ws.yw, ws.k3);  // stage 12 lands in the k3 slot
      }
      {
        const double cs[] = {b1, b6, b7, b8, b9, b10, b11, b12};
        const cplx* vs[] = {K1, K6, K7, K8, K9, K10, K2, K3};
        ops.lincomb(ws.ynew.data(), y.data(), h, cs, vs, 8, n);
        // Error vectors: 8th-minus-3rd and the 5th-order combination.
        const double c3s[] = {b1 - bhh1, b6, b7, b8, b9 - bhh2, b10, b11, b12 - bhh3};
        ops.lincomb(ws.e3.data(), ws.zero.data(), 1.0, c3s, vs, 8, n);
        const double c5s[] = {er1, er6, er7, er8, er9, er10, er11, er12};
        ops.lincomb(ws.e5.data(), ws.zero.data(), 1.0, c5s, vs, 8, n);
      }
    }

    double err3 = 0.0, err5 = 0.0;
    ops.err_wrms_pair(ws.e3.data(), ws.e5.data(), y.data(), ws.ynew.data(), cfg.atol,
                      cfg.rtol, n, err3, err5);
    double deno = err5 + 0.01 * err3;
    if (deno <= 0.0) deno = 1.0;
    const double err =
        std::abs(h) * err5 * std::sqrt(1.0 / (static_cast<double>(2 * n) * deno));

    if (err <= 1.0) {
      double scale = err == 0.0 ? max_scale
                                : std::clamp(safe * std::pow(err, -alpha), min_scale,
                                             max_scale);
      if (rejected_last) scale = std::min(scale, 1.0);
      rejected_last = false;
      ++rec.n_accepted;
      std::swap(y.amp, ws.ynew.amp);
      if (landed) {
        t = t_goal;
        emit(next_idx, t);
        ++next_idx;
      } else {
        t += h;
      }
      h_work = std::min(h * scale, h_cap);
      if (next_idx < cfg.t_grid.size()) rhs(y, ws.k1);
    } else {
      const double scale = std::max(safe * std::pow(err, -alpha), min_scale);
      h_work = h * scale;
      rejected_last = true;
      ++rec.n_rejected;
    }
  }

  rec.norm_flagged = rec.max_norm_drift > 1e-6;
  return rec;
}

TrajectoryRecord evolve_rk8(const PauliTermList& h, const StateVector& psi0,
                            const IntegratorConfig& cfg, const GridObserver& observer,
                            bool store_states) {
  return evolve_rk8(make_operator(h), psi0, cfg, observer, store_states);
}

StateVector make_initial_state(const StateVector& bath_vector) {
  const std::size_t bath_dim = bath_vector.dim();
  if (bath_dim == 0) throw ConfigError("initial state: empty bath vector");
  (void)spin_count(bath_dim);  // power-of-two check
  if (std::abs(bath_vector.norm() - 1.0) > 1e-10)
    throw ConfigError("initial state: bath vector is not normalized");
  StateVector full(2 * bath_dim);
  for (std::size_t b = 0; b < bath_dim; ++b) full[(b << 1) | 1] = bath_vector[b];
  return full;
}

std::vector<StateVector> evolve_exact_oracle(const PauliTermList& h,
                                             const StateVector& psi0,
                                             const std::vector<double>& times) {
  const std::size_t dim = h.dim();
  if (dim > 4096)
    throw ConfigError("exact propagator: dimension exceeds the 4096 cap");
  if (psi0.dim() != dim)
    throw ConfigError("exact propagator: state dimension mismatch");

  Eigen::VectorXd energies;
  Eigen::MatrixXcd vecs;
  if (is_real_representable(h)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense_matrix_real(h));
    if (es.info() != Eigen::Success)
      throw NumericalError("exact propagator: eigensolve failed");
    energies = es.eigenvalues();
    vecs = es.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(to_dense_matrix(h));
    if (es.info() != Eigen::Success)
      throw NumericalError("exact propagator: eigensolve failed");
    energies = es.eigenvalues();
    vecs = es.eigenvectors();
  }

  Eigen::Map<const Eigen::VectorXcd> v0(psi0.data(), static_cast<Eigen::Index>(dim));
  const Eigen::VectorXcd coeff = vecs.adjoint() * v0;
  std::vector<StateVector> out;
  out.reserve(times.size());
  Eigen::VectorXcd rotated(static_cast<Eigen::Index>(dim));
  for (double t : times) {
    for (Eigen::Index k = 0; k < rotated.size(); ++k)
      rotated(k) = coeff(k) * std::exp(cplx(0.0, -energies(k) * t));
    Eigen::VectorXcd psi_t = vecs * rotated;
    StateVector s(dim);
    Eigen::Map<Eigen::VectorXcd>(s.data(), psi_t.size()) = psi_t;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace spinbath
