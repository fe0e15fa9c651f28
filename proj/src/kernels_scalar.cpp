#include "spinbath/kernels.hpp"

#include <algorithm>
#include <cmath>

// Reference kernels. Elementwise multiply-adds go through std::fma so the
// scalar and AVX2 backends round identically; reductions accumulate left to
// right in a single scalar chain.

namespace spinbath::kernels {
namespace {

inline void fma_cr(cplx& d, double c, const cplx& s) {
  d = cplx(std::fma(c, s.real(), d.real()), std::fma(c, s.imag(), d.imag()));
}

// d += c*s with complex c, expanded so each component is two chained fmas.
inline void fma_cc(cplx& d, const cplx& c, const cplx& s) {
  double re = std::fma(c.real(), s.real(), d.real());
  re = std::fma(-c.imag(), s.imag(), re);
  double im = std::fma(c.real(), s.imag(), d.imag());
  im = std::fma(c.imag(), s.real(), im);
  d = cplx(re, im);
}

void flip_axpy(cplx* dst, const cplx* src, double c, std::size_t n, std::size_t mask) {
  for (std::size_t i = 0; i < n; ++i) fma_cr(dst[i], c, src[i ^ mask]);
}

void flip_caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n, std::size_t mask) {
  for (std::size_t i = 0; i < n; ++i) fma_cc(dst[i], c, src[i ^ mask]);
}

void zsign_axpy(cplx* dst, const cplx* src, double c, std::size_t n, unsigned bit) {
  const std::size_t m = std::size_t{1} << bit;
  for (std::size_t i = 0; i < n; ++i) fma_cr(dst[i], (i & m) ? c : -c, src[i]);
}

void zsign_caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n, unsigned bit) {
  const std::size_t m = std::size_t{1} << bit;
  for (std::size_t i = 0; i < n; ++i) fma_cc(dst[i], (i & m) ? c : -c, src[i]);
}

void diag_axpy(cplx* dst, const cplx* src, const double* d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) fma_cr(dst[i], d[i], src[i]);
}

void axpy(cplx* dst, const cplx* src, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) fma_cr(dst[i], c, src[i]);
}

void caxpy(cplx* dst, const cplx* src, cplx c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) fma_cc(dst[i], c, src[i]);
}

void scale(cplx* v, double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = cplx(c * v[i].real(), c * v[i].imag());
}

void scale_neg_i(cplx* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = cplx(v[i].imag(), -v[i].real());
}

void lincomb(cplx* dst, const cplx* base, double h, const double* coeff,
             const cplx* const* vecs, std::size_t nvec, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t t = 0; t < nvec; ++t) fma_cr(acc, coeff[t], vecs[t][i]);
    dst[i] = cplx(std::fma(h, acc.real(), base[i].real()),
                  std::fma(h, acc.imag(), base[i].imag()));
  }
}

void sum_bitflips(cplx* dst, const cplx* src, const std::size_t* masks,
                  std::size_t nmask, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < nmask; ++k) acc += src[i ^ masks[k]];
    dst[i] = acc;
  }
}

void central_apply(cplx* acc, const cplx* psi, const cplx* u, const double* diag,
                   double beta, double lambda0, double half_lambda,
                   const std::size_t* masks, std::size_t nmask, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    cplx a{0.0, 0.0};
    fma_cr(a, diag[i], psi[i]);
    fma_cr(a, beta, psi[i ^ 1]);
    fma_cr(a, lambda0, u[i ^ 1]);
    fma_cr(a, beta, u[i]);
    if (half_lambda != 0.0) {
      cplx s{0.0, 0.0};
      for (std::size_t k = 0; k < nmask; ++k) s += u[i ^ masks[k]];
      fma_cr(a, half_lambda, s);
    }
    acc[i] = a;
  }
}

cplx dot(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

double nrm2sq(const cplx* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += v[i].real() * v[i].real() + v[i].imag() * v[i].imag();
  return s;
}

void err_wrms_pair(const cplx* e3, const cplx* e5, const cplx* y0, const cplx* y1,
                   double atol, double rtol, std::size_t n,
                   double& err3, double& err5) {
  const double* p3 = reinterpret_cast<const double*>(e3);
  const double* p5 = reinterpret_cast<const double*>(e5);
  const double* q0 = reinterpret_cast<const double*>(y0);
  const double* q1 = reinterpret_cast<const double*>(y1);
  double s3 = 0.0, s5 = 0.0;
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const double sci = atol + rtol * std::max(std::abs(q0[i]), std::abs(q1[i]));
    const double w3 = p3[i] / sci;
    const double w5 = p5[i] / sci;
    s3 += w3 * w3;
    s5 += w5 * w5;
  }
  err3 = s3;
  err5 = s5;
}

}  // namespace

const Ops scalar_ops = {
    flip_axpy, flip_caxpy, zsign_axpy, zsign_caxpy, diag_axpy,
    axpy,      caxpy,      scale,      scale_neg_i, lincomb,
    sum_bitflips, central_apply, dot,  nrm2sq,      err_wrms_pair,
};

}  // namespace spinbath::kernels
