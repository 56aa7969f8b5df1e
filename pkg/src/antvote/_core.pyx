# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels.py`` (same signatures)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

# Values below this carry no usable probability mass; keeping them out of the
# subnormal range keeps the O(n^2) recursion at full speed.
cdef double TINY = 1e-300


def poisson_binomial_pmf(counts, probs):
    cdef cnp.int64_t[::1] c = np.ascontiguousarray(counts, dtype=np.int64)
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef Py_ssize_t n = 0, i, j, k, m = 0
    for i in range(c.shape[0]):
        n += c[i]
    out = np.zeros(n + 1, dtype=np.float64)
    cdef double[::1] pmf = out
    cdef double pi, qi
    pmf[0] = 1.0
    with nogil:
      for i in range(c.shape[0]):
          pi = p[i]
          if pi <= 0.0:
              continue
          qi = 1.0 - pi
          for j in range(c[i]):
              if pi >= 1.0:
                  for k in range(m + 1, 0, -1):
                      pmf[k] = pmf[k - 1]
                  pmf[0] = 0.0
              else:
                  pmf[m + 1] = pmf[m] * pi
                  for k in range(m, 0, -1):
                      pmf[k] = pmf[k] * qi + pmf[k - 1] * pi
                      if pmf[k] < TINY:
                          pmf[k] = 0.0  # subnormal arithmetic is very slow
                  pmf[0] = pmf[0] * qi
                  if pmf[0] < TINY:
                      pmf[0] = 0.0
                  if pmf[m + 1] < TINY:
                      pmf[m + 1] = 0.0
              m += 1
    return out


def equalize_gamma(double p_hH, double p_lH, double p_hL, double p_lL, double alpha,
                   bh1, bl0, int iters=64):
    a1 = np.asarray(bh1, dtype=np.float64)
    a2 = np.asarray(bl0, dtype=np.float64)
    a1, a2 = np.broadcast_arrays(a1, a2)
    shape = a1.shape
    cdef double[::1] x1 = np.ascontiguousarray(a1).ravel()
    cdef double[::1] x2 = np.ascontiguousarray(a2).ravel()
    cdef Py_ssize_t N = x1.shape[0], i
    val = np.empty(N); gam = np.empty(N); xh_out = np.empty(N); xl_out = np.empty(N)
    cdef double[::1] v = val, g = gam, oh = xh_out, ol = xl_out
    cdef double d = p_hH + p_lL - 1.0, a = alpha - 0.5, top = 1.0 - alpha
    cdef double h1, b, dh, dl, lo, hi, mid, gg, xh, xl
    cdef int it
    with nogil:
      for i in range(N):
          h1 = x1[i]
          b = 1.0 - x2[i]
          dh = p_hH * p_lL * h1 + p_lH * p_lL * b + p_lH
          dl = p_hH * p_hL * h1 + p_hH * p_lL * b + p_hL
          if d * (a + top * h1) / dh <= d * a / dl:
              gg = 0.0
          elif d * a / dh >= d * (a + top * b) / dl:
              gg = top
          else:
              lo = 0.0
              hi = top
              for it in range(iters):
                  mid = 0.5 * (lo + hi)
                  # same comparison as xi_h > xi_l; d, dh, dl > 0 so no division is needed
                  if (a + (top - mid) * h1) * dl > (a + mid * b) * dh:
                      lo = mid
                  else:
                      hi = mid
              gg = 0.5 * (lo + hi)
          xh = d * (a + (top - gg) * h1) / dh
          xl = d * (a + gg * b) / dl
          g[i] = gg
          oh[i] = xh
          ol[i] = xl
          v[i] = xh if xh < xl else xl
    return (val.reshape(shape), gam.reshape(shape), xh_out.reshape(shape), xl_out.reshape(shape))
