#pragma once

#include <complex>
#include <cstddef>
#include <string>

// Array kernels for the state-vector inner loops. Every kernel exists in a
// scalar reference form and, on x86-64, an AVX2+FMA form selected at runtime
// via cpuid. Elementwise kernels (flip/sign/diagonal/axpy/lincomb and the
// fused model apply) use fused multiply-adds in both backends and produce
// bit-identical results; reduction kernels (dot, nrm2sq, error norms)
// accumulate in a backend-specific order and agree only to rounding.
//
// Index space: arrays hold n complex<double> amplitudes, n a power of two
// for the bit-flip kernels. `mask` is XOR-ed into the element index, so a
// one-bit mask is a single-site spin flip and a two-bit mask a pair flip.

namespace spinbath::kernels {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

struct Ops {
  // dst[i] += c * src[i ^ mask]
  void (*flip_axpy)(cplx* dst, const cplx* src, double c, std::size_t n, std::size_t mask);
  void (*flip_caxpy)(cplx* dst, const cplx* src, cplx c, std::size_t n, std::size_t mask);
  // dst[i] += (bit `bit` of i set ? +c : -c) * src[i]
  void (*zsign_axpy)(cplx* dst, const cplx* src, double c, std::size_t n, unsigned bit);
  void (*zsign_caxpy)(cplx* dst, const cplx* src, cplx c, std::size_t n, unsigned bit);
  // dst[i] += d[i] * src[i], d real, one entry per complex element
  void (*diag_axpy)(cplx* dst, const cplx* src, const double* d, std::size_t n);
  // dst[i] += c * src[i]
  void (*axpy)(cplx* dst, const cplx* src, double c, std::size_t n);
  void (*caxpy)(cplx* dst, const cplx* src, cplx c, std::size_t n);
  void (*scale)(cplx* v, double c, std::size_t n);
  // v[i] = -i * v[i]
  void (*scale_neg_i)(cplx* v, std::size_t n);
  // dst[i] = base[i] + h * sum_t coeff[t] * vecs[t][i]
  void (*lincomb)(cplx* dst, const cplx* base, double h, const double* coeff,
                  const cplx* const* vecs, std::size_t nvec, std::size_t n);
  // dst[i] = sum_k src[i ^ masks[k]]
  void (*sum_bitflips)(cplx* dst, const cplx* src, const std::size_t* masks,
                       std::size_t nmask, std::size_t n);
  // Fused central-spin model apply (site 0 = impurity, masks = bath site bits,
  // all masks even, u = sum of single bath flips of psi):
  //   acc[i] = diag[i]*psi[i] + beta*psi[i^1] + lambda0*u[i^1]
  //          + beta*u[i] + half_lambda * sum_k u[i ^ masks[k]]
  void (*central_apply)(cplx* acc, const cplx* psi, const cplx* u, const double* diag,
                        double beta, double lambda0, double half_lambda,
                        const std::size_t* masks, std::size_t nmask, std::size_t n);
  // <a|b> with conjugation on a
  cplx (*dot)(const cplx* a, const cplx* b, std::size_t n);
  double (*nrm2sq)(const cplx* v, std::size_t n);
  // Weighted sums of squares for an embedded error pair, over the 2n real
  // components: sci = atol + rtol*max(|y0_c|,|y1_c|), errK += (eK_c/sci)^2.
  void (*err_wrms_pair)(const cplx* e3, const cplx* e5, const cplx* y0, const cplx* y1,
                        double atol, double rtol, std::size_t n,
                        double& err3, double& err5);
};

extern const Ops scalar_ops;
#ifdef SPINBATH_HAVE_AVX2_BUILD
extern const Ops avx2_ops;
#endif

bool cpu_has_avx2();
const Ops& active();
Backend active_backend();
std::string backend_name(Backend b);
// Throws ConfigError if the requested backend is unavailable.
void force_backend(Backend b);
void reset_backend();  // back to cpuid auto-selection

}  // namespace spinbath::kernels
