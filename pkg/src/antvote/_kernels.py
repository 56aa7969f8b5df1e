"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_core.pyx`` one for one and are used whenever the compiled
extension is unavailable (or ``ANTVOTE_BACKEND=python`` is set).
"""

from __future__ import annotations

import numpy as np

TINY = 1e-300


def poisson_binomial_pmf(counts, probs) -> np.ndarray:
    """PMF of the number of successes among independent Bernoulli voters.

    ``counts[i]`` voters succeed independently with probability ``probs[i]``.
    The update is the classic one-voter-at-a-time O(n^2) recursion.
    """
    counts = np.asarray(counts, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    n = int(counts.sum())
    pmf = np.zeros(n + 1, dtype=np.float64)
    pmf[0] = 1.0
    m = 0
    for c, p in zip(counts.tolist(), probs.tolist()):
        if p <= 0.0:
            continue  # failures never shift the tally
        q = 1.0 - p
        for _ in range(c):
            if p >= 1.0:
                pmf[1 : m + 2] = pmf[0 : m + 1].copy()
                pmf[0] = 0.0
            else:
                head = pmf[0 : m + 1] * p
                pmf[0 : m + 1] *= q
                pmf[1 : m + 2] += head
                pmf[pmf < TINY] = 0.0  # keep the tails out of the subnormal range
            m += 1
    return pmf


def equalize_gamma(p_hH, p_lH, p_hL, p_lL, alpha, bh1, bl0, iters=64):
    """For each (beta_h1, beta_l0) pair maximize min(xi_h, xi_l) over gamma.

    xi_h falls and xi_l rises with gamma, so the maximum sits at the crossing
    (found by bisection) or at an end of [0, 1 - alpha]. Returns
    ``(value, gamma, xi_h, xi_l)`` arrays.
    """
    bh1 = np.asarray(bh1, dtype=np.float64)
    b = 1.0 - np.asarray(bl0, dtype=np.float64)
    bh1, b = np.broadcast_arrays(bh1, b)
    d = p_hH + p_lL - 1.0
    a = alpha - 0.5
    top = 1.0 - alpha
    dh = p_hH * p_lL * bh1 + p_lH * p_lL * b + p_lH
    dl = p_hH * p_hL * bh1 + p_hH * p_lL * b + p_hL

    def xh(g):
        return d * (a + (top - g) * bh1) / dh

    def xl(g):
        return d * (a + g * b) / dl

    lo = np.zeros_like(bh1)
    hi = np.full_like(bh1, top)
    left = xh(lo) <= xl(lo)
    right = xh(hi) >= xl(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = xh(mid) > xl(mid)
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    gam = 0.5 * (lo + hi)
    gam = np.where(left, 0.0, np.where(right, top, gam))
    h = xh(gam)
    l = xl(gam)
    return np.minimum(h, l), gam, h, l
