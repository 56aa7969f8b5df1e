"""Numerical re-derivation of the threshold curve.

The closed form is cross-checked by brute optimization of
``max min(xi_h, xi_l)`` over ``(beta_h1, beta_l0, gamma)``. Gamma is
eliminated per grid point by bisection (``xi_h`` falls and ``xi_l`` rises in
gamma), the remaining square is scanned on a grid and then refined along the
coordinates. Roots of the segment boundaries are found by plain bisection.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import equalize_gamma
from .model import DomainError, SignalModel
from .threshold import (
    Segment,
    b_star,
    flat_boundary,
    flat_value,
    steep_value,
    tail_value,
    theta,
    xi_nl,
    xi_pair,
    xi_star,
)
from .voteshare import thread_count

FEAS_SLACK = 1e-9
BISECT_ITERS = 64


class NoBracket(ValueError):
    pass


@dataclass(frozen=True)
class NumericBounds:
    alpha: float
    lower: float
    upper: float
    argmax: tuple[float, float, float]
    grid_upper: float
    grid_lower: float
    floor: float
    lower_argmax: tuple[float, float, float] | None = None

    @property
    def binding(self) -> str:
        return "floor" if self.floor >= self.grid_upper else "grid"


def biased_floor(s: SignalModel, alpha: float) -> float:
    """Cap reachable when every minority agent votes A (the biased-gamma family)."""
    return min(steep_value(s, alpha), flat_value(s))


def _evaluate(s: SignalModel, alpha: float, bh1, bl0):
    return equalize_gamma(s.p_hH, s.p_lH, s.p_hL, s.p_lL, alpha, bh1, bl0, BISECT_ITERS)


def _feasible(val, gam, alpha):
    return (val <= gam + FEAS_SLACK) & (val <= (1.0 - alpha) - gam + FEAS_SLACK)


def _best(val, mask=None):
    v = val if mask is None else np.where(mask, val, -np.inf)
    i = int(np.argmax(v))  # first maximum: lexicographically smallest parameters
    return i, float(v.flat[i])


def _refine(s, alpha, x, y, best, res, feasible_only):
    step = res
    for _ in range(2):
        step *= 0.1
        for axis in (0, 1):
            offs = np.arange(-10, 11) * step
            if axis == 0:
                xs = np.clip(x + offs, 0.0, 1.0)
                ys = np.full_like(xs, y)
            else:
                ys = np.clip(y + offs, 0.0, 1.0)
                xs = np.full_like(ys, x)
            val, gam, _, _ = _evaluate(s, alpha, xs, ys)
            mask = _feasible(val, gam, alpha) if feasible_only else None
            i, v = _best(val, mask)
            if v > best:
                best, x, y = v, float(xs[i]), float(ys[i])
    val, gam, _, _ = _evaluate(s, alpha, np.array([x]), np.array([y]))
    return x, y, float(gam[0]), best


def numeric_xi_bounds(s: SignalModel, alpha: float, resolution: float = 1e-3) -> NumericBounds:
    th = theta(s)
    if not (0.5 < alpha <= th + 1e-12):
        raise DomainError(f"alpha={alpha} outside (1/2, theta={th}]")
    m = int(round(1.0 / resolution))
    g = np.linspace(0.0, 1.0, m + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    val, gam, xh, xl = _evaluate(s, alpha, X, Y)

    i, up = _best(val)
    ux, uy, ug, up = _refine(s, alpha, float(X.flat[i]), float(Y.flat[i]), up, resolution, False)

    mask = _feasible(val, gam, alpha)
    if mask.any():
        j, lo = _best(val, mask)
        lx, ly, lg, lo = _refine(s, alpha, float(X.flat[j]), float(Y.flat[j]), lo, resolution, True)
        largmax = (lx, ly, lg)
    else:
        lo, largmax = -np.inf, None

    fl = biased_floor(s, alpha)
    return NumericBounds(
        alpha=alpha,
        lower=max(lo, fl),
        upper=max(up, fl),
        argmax=(ux, uy, ug),
        grid_upper=up,
        grid_lower=lo,
        floor=fl,
        lower_argmax=largmax,
    )


def check_bisection_precondition(s: SignalModel, alpha: float, beta_h1: float, beta_l0: float) -> bool:
    """True when xi_h starts above xi_l at gamma=0 and ends below it at gamma=1-alpha."""
    a = xi_pair(s, alpha, beta_h1, beta_l0, 0.0)
    b = xi_pair(s, alpha, beta_h1, beta_l0, 1.0 - alpha)
    return a.xi_h > a.xi_l and b.xi_h < b.xi_l


# ---------------------------------------------------------------------------
# Curve verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    segment: Segment
    closed: float
    lower: float
    upper: float
    argmax: tuple[float, float, float]
    abs_err: float
    sandwich: bool
    structure_ok: bool
    passed: bool


@dataclass
class CurveReport:
    tol: float
    points: list[CurvePoint] = field(default_factory=list)

    @property
    def max_abs_err(self) -> float:
        return max((p.abs_err for p in self.points), default=0.0)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)


def _structure_ok(s: SignalModel, seg: Segment, nb: NumericBounds, resolution: float, tol: float) -> bool:
    bh1, bl0, _ = nb.argmax
    if seg in (Segment.FLAT, Segment.STEEP):
        return nb.grid_upper <= nb.floor + tol
    if nb.grid_upper > steep_value(s, nb.alpha) + tol and not (bh1 >= 1.0 - resolution or bl0 <= resolution):
        return False
    if seg is Segment.TAIL:
        return bh1 >= 1.0 - resolution and bl0 <= 10 * resolution
    return bh1 >= 1.0 - resolution


def verify_point(s: SignalModel, alpha: float, tol: float = 2e-3, resolution: float = 1e-3) -> CurvePoint:
    tp = xi_star(s, alpha)
    nb = numeric_xi_bounds(s, alpha, resolution)
    err = abs(tp.xi_star - nb.upper)
    sandwich = nb.lower <= tp.xi_star + FEAS_SLACK and tp.xi_star <= nb.upper + tol
    struct = _structure_ok(s, tp.segment, nb, resolution, tol)
    return CurvePoint(alpha, tp.segment, tp.xi_star, nb.lower, nb.upper, nb.argmax, err, sandwich, struct, err <= tol and sandwich and struct)


def verify_curve(s: SignalModel, alpha_grid, tol: float = 2e-3, resolution: float = 1e-3, workers: int | None = None) -> CurveReport:
    grid = [float(a) for a in alpha_grid]
    report = CurveReport(tol=tol)
    if not grid:
        return report
    workers = workers or thread_count()
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report.points = list(pool.map(lambda a: verify_point(s, a, tol, resolution), grid))
    else:
        report.points = [verify_point(s, a, tol, resolution) for a in grid]
    return report


def alpha_grid(s: SignalModel, step: float = 0.005) -> list[float]:
    """Points ``1/2 + step, 1/2 + 2 step, ...`` up to theta inclusive."""
    th = theta(s)
    count = int(np.floor((th - 0.5) / step + 1e-9))
    pts = [round(0.5 + i * step, 12) for i in range(1, count + 1)]
    return [a for a in pts if a <= th + 1e-12]


# ---------------------------------------------------------------------------
# Boundary roots
# ---------------------------------------------------------------------------


def bisect(f, lo: float, hi: float, iters: int = 200, xtol: float = 1e-15) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoBracket(f"no sign change on [{lo}, {hi}]")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < xtol:
            break
    return 0.5 * (lo + hi)


def boundary_roots(s: SignalModel) -> tuple[float, float]:
    """(Steep/NonLinear root, NonLinear/Tail root) found numerically.

    The first is the zero of ``xi_NL(a) - delta (a - 1/2)/p_hL``. The curves
    ``xi_NL`` and ``delta a / 2`` only touch at the Tail boundary (``xi_NL``
    is the unconstrained maximum of a family that contains the Tail line),
    so the second root is located where the maximizing ``1 - beta_l0``
    crosses 1, which is the same point.
    """
    return steep_nl_root(s), nl_tail_root(s)


def steep_nl_root(s: SignalModel) -> float:
    return bisect(lambda a: xi_nl(s, a) - steep_value(s, a), 0.5, flat_boundary(s))


def nl_tail_root(s: SignalModel) -> float:
    return bisect(lambda a: b_star(s, a) - 1.0, 0.5, flat_boundary(s))


def tangency_gap(s: SignalModel, alpha: float) -> float:
    """xi_NL(alpha) - delta*alpha/2, nonnegative with a double zero at the Tail boundary."""
    return xi_nl(s, alpha) - tail_value(s, alpha)
