#include "spinbath/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// AVX2+FMA kernels. One __m256d holds two complex<double> amplitudes.
// Elementwise kernels replay the scalar backend's fma chains lane by lane,
// so both backends round identically; reductions use four parallel lanes
// folded at the end. Bit-flip loads stay contiguous: an even mask XORs the
// base of an aligned two-complex block, an odd mask additionally swaps the
// two complex halves of the loaded vector (permute2f128).

namespace spinbath::kernels {
namespace {

inline const double* dp(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cplx* p) { return reinterpret_cast<double*>(p); }

inline __m256d load2(const cplx* p, std::size_t i) { return _mm256_loadu_pd(dp(p) + 2 * i); }
inline void store2(cplx* p, std::size_t i, __m256d v) { _mm256_storeu_pd(dp(p) + 2 * i, v); }
inline __m256d swap_halves(__m256d v) { return _mm256_permute2f128_pd(v, v, 0x01); }

// src vector for dst block at even index i under XOR mask.
inline __m256d load_flipped(const cplx* src, std::size_t i, std::size_t mask) {
  if (mask & 1) {
    __m256d v = load2(src, i ^ (mask & ~std::size_t{1}));
    return swap_halves(v);
  }
  return load2(src, i ^ mask);
}

// d += c*s, complex c broadcast as cr=[cr,cr,cr,cr], cm=[-ci,ci,-ci,ci];
// same two-fma chain per component as the scalar backend.
inline __m256d fma_cc(__m256d d, __m256d cr, __m256d cm, __m256d s) {
  __m256d t = _mm256_fmadd_pd(cr, s, d);
  __m256d sw = _mm256_shuffle_pd(s, s, 0b0101);
  return _mm256_fmadd_pd(cm, sw, t);
}

inline __m256d bcast_cm(cplx c) { return _mm256_setr_pd(-c.imag(), c.imag(), -c.imag(), c.imag()); }

void flip_axpy(cplx* dst, const cplx* src, double c, std::size_t n, std::size_t mask) {
  if (n < 2) return scalar_ops.flip_axpy(dst, src, c, n, mask);
  const __m256d cv = _mm256_set1_pd(c);
  for (std::size_t i = 0; i < n; i += 2)
    store2(dst, i, _mm256_fmadd_pd(cv, load_flipped(src, i, mask), load2(dst, i)));
}

void flip_caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n, std::size_t mask) {
  if (n < 2) return scalar_ops.flip_caxpy(dst, src, c, n, mask);
  const __m256d cr = _mm256_set1_pd(c.real());
  const __m256d cm = bcast_cm(c);
  for (std::size_t i = 0; i < n; i += 2)
    store2(dst, i, fma_cc(load2(dst, i), cr, cm, load_flipped(src, i, mask)));
}

void zsign_axpy(cplx* dst, const cplx* src, double c, std::size_t n, unsigned bit) {
  if (n < 2) return scalar_ops.zsign_axpy(dst, src, c, n, bit);
  if (bit == 0) {
    const __m256d cv = _mm256_setr_pd(-c, -c, c, c);
    for (std::size_t i = 0; i < n; i += 2)
      store2(dst, i, _mm256_fmadd_pd(cv, load2(src, i), load2(dst, i)));
    return;
  }
  const std::size_t blk = std::size_t{1} << bit;
  for (std::size_t base = 0; base < n; base += blk) {
    const __m256d cv = _mm256_set1_pd((base & blk) ? c : -c);
    for (std::size_t i = base; i < base + blk; i += 2)
      store2(dst, i, _mm256_fmadd_pd(cv, load2(src, i), load2(dst, i)));
  }
}

void zsign_caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n, unsigned bit) {
  if (n < 2) return scalar_ops.zsign_caxpy(dst, src, c, n, bit);
  if (bit == 0) {
    const __m256d cr = _mm256_setr_pd(-c.real(), -c.real(), c.real(), c.real());
    const __m256d cm = _mm256_setr_pd(c.imag(), -c.imag(), -c.imag(), c.imag());
    for (std::size_t i = 0; i < n; i += 2)
      store2(dst, i, fma_cc(load2(dst, i), cr, cm, load2(src, i)));
    return;
  }
  const std::size_t blk = std::size_t{1} << bit;
  for (std::size_t base = 0; base < n; base += blk) {
    const cplx cc = (base & blk) ? c : -c;
    const __m256d cr = _mm256_set1_pd(cc.real());
    const __m256d cm = bcast_cm(cc);
    for (std::size_t i = base; i < base + blk; i += 2)
      store2(dst, i, fma_cc(load2(dst, i), cr, cm, load2(src, i)));
  }
}

void diag_axpy(cplx* dst, const cplx* src, const double* d, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d dv = _mm256_setr_pd(d[i], d[i], d[i + 1], d[i + 1]);
    store2(dst, i, _mm256_fmadd_pd(dv, load2(src, i), load2(dst, i)));
  }
  for (; i < n; ++i)
    dst[i] = cplx(std::fma(d[i], src[i].real(), dst[i].real()),
                  std::fma(d[i], src[i].imag(), dst[i].imag()));
}

void axpy(cplx* dst, const cplx* src, double c, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    store2(dst, i, _mm256_fmadd_pd(cv, load2(src, i), load2(dst, i)));
  for (; i < n; ++i)
    dst[i] = cplx(std::fma(c, src[i].real(), dst[i].real()),
                  std::fma(c, src[i].imag(), dst[i].imag()));
}

void caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n) {
  const __m256d cr = _mm256_set1_pd(c.real());
  const __m256d cm = bcast_cm(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    store2(dst, i, fma_cc(load2(dst, i), cr, cm, load2(src, i)));
  if (i < n) scalar_ops.caxpy(dst + i, src + i, c, n - i);
}

void scale(cplx* v, double c, std::size_t n) {
  const __m256d cv = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store2(v, i, _mm256_mul_pd(cv, load2(v, i)));
  for (; i < n; ++i) v[i] = cplx(c * v[i].real(), c * v[i].imag());
}

void scale_neg_i(cplx* v, std::size_t n) {
  const __m256d sign = _mm256_setr_pd(0.0, -0.0, 0.0, -0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d x = load2(v, i);
    x = _mm256_shuffle_pd(x, x, 0b0101);     // [im, re, im, re]
    store2(v, i, _mm256_xor_pd(x, sign));    // [im, -re, ...]
  }
  for (; i < n; ++i) v[i] = cplx(v[i].imag(), -v[i].real());
}

void lincomb(cplx* dst, const cplx* base, double h, const double* coeff,
             const cplx* const* vecs, std::size_t nvec, std::size_t n) {
  const __m256d hv = _mm256_set1_pd(h);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t t = 0; t < nvec; ++t)
      acc = _mm256_fmadd_pd(_mm256_set1_pd(coeff[t]), load2(vecs[t], i), acc);
    store2(dst, i, _mm256_fmadd_pd(hv, acc, load2(base, i)));
  }
  for (; i < n; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t t = 0; t < nvec; ++t)
      acc = cplx(std::fma(coeff[t], vecs[t][i].real(), acc.real()),
                 std::fma(coeff[t], vecs[t][i].imag(), acc.imag()));
    dst[i] = cplx(std::fma(h, acc.real(), base[i].real()),
                  std::fma(h, acc.imag(), base[i].imag()));
  }
}

void sum_bitflips(cplx* dst, const cplx* src, const std::size_t* masks,
                  std::size_t nmask, std::size_t n) {
  if (n < 2) return scalar_ops.sum_bitflips(dst, src, masks, nmask, n);
  for (std::size_t i = 0; i < n; i += 2) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < nmask; ++k)
      acc = _mm256_add_pd(acc, load_flipped(src, i, masks[k]));
    store2(dst, i, acc);
  }
}

void central_apply(cplx* acc, const cplx* psi, const cplx* u, const double* diag,
                   double beta, double lambda0, double half_lambda,
                   const std::size_t* masks, std::size_t nmask, std::size_t n) {
  if (n < 2)
    return scalar_ops.central_apply(acc, psi, u, diag, beta, lambda0, half_lambda,
                                    masks, nmask, n);
  const __m256d bv = _mm256_set1_pd(beta);
  const __m256d l0v = _mm256_set1_pd(lambda0);
  const __m256d hlv = _mm256_set1_pd(half_lambda);
  for (std::size_t i = 0; i < n; i += 2) {
    const __m256d dv = _mm256_setr_pd(diag[i], diag[i], diag[i + 1], diag[i + 1]);
    __m256d a = _mm256_mul_pd(dv, load2(psi, i));
    a = _mm256_fmadd_pd(bv, swap_halves(load2(psi, i)), a);
    a = _mm256_fmadd_pd(l0v, swap_halves(load2(u, i)), a);
    a = _mm256_fmadd_pd(bv, load2(u, i), a);
    if (half_lambda != 0.0) {
      __m256d s = _mm256_setzero_pd();
      for (std::size_t k = 0; k < nmask; ++k)
        s = _mm256_add_pd(s, load_flipped(u, i, masks[k]));
      a = _mm256_fmadd_pd(hlv, s, a);
    }
    store2(acc, i, a);
  }
}

cplx dot(const cplx* a, const cplx* b, std::size_t n) {
  const __m256d conj_sign = _mm256_setr_pd(0.0, -0.0, 0.0, -0.0);
  __m256d racc = _mm256_setzero_pd();
  __m256d iacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d av = load2(a, i);
    const __m256d bv = load2(b, i);
    racc = _mm256_fmadd_pd(av, bv, racc);  // lanes: ar*br, ai*bi
    const __m256d ac = _mm256_xor_pd(av, conj_sign);          // ar, -ai
    const __m256d bs = _mm256_shuffle_pd(bv, bv, 0b0101);     // bi, br
    iacc = _mm256_fmadd_pd(ac, bs, iacc);  // lanes: ar*bi, -ai*br
  }
  alignas(32) double r[4], m[4];
  _mm256_store_pd(r, racc);
  _mm256_store_pd(m, iacc);
  double re = r[0] + r[1] + r[2] + r[3];
  double im = m[0] + m[1] + m[2] + m[3];
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double nrm2sq(const cplx* v, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d x = load2(v, i);
    acc = _mm256_fmadd_pd(x, x, acc);
  }
  alignas(32) double r[4];
  _mm256_store_pd(r, acc);
  double s = r[0] + r[1] + r[2] + r[3];
  for (; i < n; ++i)
    s += v[i].real() * v[i].real() + v[i].imag() * v[i].imag();
  return s;
}

void err_wrms_pair(const cplx* e3, const cplx* e5, const cplx* y0, const cplx* y1,
                   double atol, double rtol, std::size_t n,
                   double& err3, double& err5) {
  const double* p3 = dp(e3);
  const double* p5 = dp(e5);
  const double* q0 = dp(y0);
  const double* q1 = dp(y1);
  const std::size_t m = 2 * n;
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d av = _mm256_set1_pd(atol);
  const __m256d rv = _mm256_set1_pd(rtol);
  __m256d s3 = _mm256_setzero_pd();
  __m256d s5 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m256d x0 = _mm256_and_pd(absmask, _mm256_loadu_pd(q0 + i));
    const __m256d x1 = _mm256_and_pd(absmask, _mm256_loadu_pd(q1 + i));
    const __m256d sci = _mm256_fmadd_pd(rv, _mm256_max_pd(x0, x1), av);
    const __m256d w3 = _mm256_div_pd(_mm256_loadu_pd(p3 + i), sci);
    const __m256d w5 = _mm256_div_pd(_mm256_loadu_pd(p5 + i), sci);
    s3 = _mm256_fmadd_pd(w3, w3, s3);
    s5 = _mm256_fmadd_pd(w5, w5, s5);
  }
  alignas(32) double r3[4], r5[4];
  _mm256_store_pd(r3, s3);
  _mm256_store_pd(r5, s5);
  double t3 = r3[0] + r3[1] + r3[2] + r3[3];
  double t5 = r5[0] + r5[1] + r5[2] + r5[3];
  for (; i < m; ++i) {
    const double sci = atol + rtol * std::max(std::abs(q0[i]), std::abs(q1[i]));
    const double w3 = p3[i] / sci;
    const double w5 = p5[i] / sci;
    t3 += w3 * w3;
    t5 += w5 * w5;
  }
  err3 = t3;
  err5 = t5;
}

}  // namespace

const Ops avx2_ops = {
    flip_axpy, flip_caxpy, zsign_axpy, zsign_caxpy, diag_axpy,
    axpy,      caxpy,      scale,      scale_neg_i, lincomb,
    sum_bitflips, central_apply, dot,  nrm2sq,      err_wrms_pair,
};

}  // namespace spinbath::kernels
