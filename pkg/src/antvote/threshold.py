"""Closed-form threshold quantities.

All functions expect a canonical :class:`~antvote.model.SignalModel`
(``p_hH <= p_lL``). The curve ``xi_star`` has up to four pieces, named
Flat, Steep, NonLinear and Tail from large to small ``alpha``; above
``theta`` the sentinel value 1 marks the unlimited-coalition regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .model import DomainError, SignalModel


class Segment(str, Enum):
    STRONG_EQ = "StrongEq"
    FLAT = "Flat"
    STEEP = "Steep"
    NONLINEAR = "NonLinear"
    TAIL = "Tail"


@dataclass(frozen=True)
class ThresholdPoint:
    alpha: float
    segment: Segment
    xi_star: float
    theta: float
    alpha_nl: float
    alpha_tail: float


@dataclass(frozen=True)
class XiPair:
    xi_h: float
    xi_l: float
    params: tuple[float, float, float]

    @property
    def min(self) -> float:
        return min(self.xi_h, self.xi_l)


@dataclass(frozen=True)
class MajoritySolution:
    beta_l_star: float
    beta_h_star: float

    @property
    def feasible(self) -> bool:
        return 0.0 <= self.beta_l_star <= 1.0 and 0.0 <= self.beta_h_star <= 1.0

    @property
    def interior(self) -> bool:
        return 0.0 < self.beta_l_star < 1.0 and 0.0 < self.beta_h_star < 1.0


@dataclass(frozen=True)
class Segment3Params:
    b_star: float
    gamma_star: float
    xi_nl: float
    gamma_alt1: float
    gamma_alt2: float

    @property
    def beta_l0(self) -> float:
        return 1.0 - self.b_star


def _check_canonical(s: SignalModel) -> None:
    if s.p_hH > s.p_lL:
        raise DomainError("threshold formulas need a canonical signal (p_hH <= p_lL)")


# ---------------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------------


def theta(s: SignalModel) -> float:
    _check_canonical(s)
    return 0.5 + s.p_lH / (2.0 * s.p_lL)


def flat_boundary(s: SignalModel) -> float:
    """Left end of the Flat piece, ``1/(2 p_lL)``."""
    return 1.0 / (2.0 * s.p_lL)


def tail_boundary(s: SignalModel) -> float:
    """``1/(1 + p_lL + (p_lL - p_hH))``; a Tail piece exists iff this exceeds 1/2."""
    return 1.0 / (1.0 + 2.0 * s.p_lL - s.p_hH)


def has_tail(s: SignalModel) -> bool:
    return tail_boundary(s) > 0.5


def alpha_nl(s: SignalModel) -> float:
    _check_canonical(s)
    hH, lH, hL, lL = s.p_hH, s.p_lH, s.p_hL, s.p_lL
    num = (
        2 * hH * lL**2
        + hH * (hH + 3 * lL)
        - (3 * hH + lL)
        + 2
        - 2 * hL * math.sqrt(hH * hL * lH * lL)
    )
    return num / (2 * lH**2 + 8 * hH * lL**2)


def _radicand(s: SignalModel, alpha: float) -> float:
    return 2.0 * (1.0 - alpha * s.p_lH) * (1.0 - 2.0 * alpha * s.p_lL) * s.p_lH * s.p_lL


def xi_nl(s: SignalModel, alpha: float) -> float:
    r = _radicand(s, alpha)
    if r < 0.0:
        if r > -1e-14:
            r = 0.0
        else:
            raise DomainError(f"xi_NL undefined at alpha={alpha}: needs alpha <= 1/(2 p_lL)")
    den = 4.0 * math.sqrt(r) + 2 * s.p_lH + 4 * s.p_lL - 8 * alpha * s.p_lH * s.p_lL
    return s.delta / den


def steep_value(s: SignalModel, alpha: float) -> float:
    return s.delta * (alpha - 0.5) / s.p_hL


def tail_value(s: SignalModel, alpha: float) -> float:
    return 0.5 * s.delta * alpha


def flat_value(s: SignalModel) -> float:
    return s.delta / (2.0 * s.p_lL)


def classify(s: SignalModel, alpha: float) -> Segment:
    """Segment label. Intervals follow the closed-form case table; the single
    point ``alpha == tail_boundary`` (covered by neither case) is labelled
    NonLinear, where both formulas agree."""
    if not alpha > 0.5:
        raise DomainError(f"alpha must exceed 1/2, got {alpha}")
    if alpha > 1.0:
        raise DomainError(f"alpha must be at most 1, got {alpha}")
    th = theta(s)
    if alpha > th:
        return Segment.STRONG_EQ
    if alpha >= flat_boundary(s):
        return Segment.FLAT
    if alpha >= alpha_nl(s):
        return Segment.STEEP
    if has_tail(s) and alpha < tail_boundary(s):
        return Segment.TAIL
    return Segment.NONLINEAR


def segment_cap(s: SignalModel, alpha: float, segment: Segment | None = None) -> float:
    """The largest tolerable deviating fraction at ``alpha`` (``1 - alpha`` above theta)."""
    seg = classify(s, alpha) if segment is None else segment
    if seg is Segment.STRONG_EQ:
        return 1.0 - alpha
    return _value(s, alpha, seg)


def _value(s: SignalModel, alpha: float, seg: Segment) -> float:
    if seg is Segment.STRONG_EQ:
        return 1.0
    if seg is Segment.FLAT:
        return flat_value(s)
    if seg is Segment.STEEP:
        return steep_value(s, alpha)
    if seg is Segment.NONLINEAR:
        return xi_nl(s, alpha)
    return tail_value(s, alpha)


def xi_star(s: SignalModel, alpha: float) -> ThresholdPoint:
    seg = classify(s, alpha)
    return ThresholdPoint(
        alpha=alpha,
        segment=seg,
        xi_star=_value(s, alpha, seg),
        theta=theta(s),
        alpha_nl=alpha_nl(s),
        alpha_tail=tail_boundary(s),
    )


def segment_boundaries(s: SignalModel) -> dict[str, float | None]:
    return {
        "tail": tail_boundary(s) if has_tail(s) else None,
        "alpha_nl": alpha_nl(s),
        "flat": flat_boundary(s),
        "theta": theta(s),
    }


# ---------------------------------------------------------------------------
# Deviation caps and majority solution systems
# ---------------------------------------------------------------------------


def _caps_denominators(s: SignalModel, beta_h1: float, b: float) -> tuple[float, float]:
    dh = s.p_hH * s.p_lL * beta_h1 + s.p_lH * s.p_lL * b + s.p_lH
    dl = s.p_hH * s.p_hL * beta_h1 + s.p_hH * s.p_lL * b + s.p_hL
    return dh, dl


def xi_pair(s: SignalModel, alpha: float, beta_h1: float, beta_l0: float, gamma: float) -> XiPair:
    b = 1.0 - beta_l0
    dh, dl = _caps_denominators(s, beta_h1, b)
    a = alpha - 0.5
    xh = s.delta * (a + (1.0 - alpha - gamma) * beta_h1) / dh
    xl = s.delta * (a + gamma * b) / dl
    return XiPair(xh, xl, (beta_h1, beta_l0, gamma))


def majority_solution_seg1(s: SignalModel, alpha: float, xi: float) -> MajoritySolution:
    """Majority strategy putting f_H at 1/2 + xi and f_L at 1/2 when every minority agent votes A."""
    if not alpha > 0.5:
        raise DomainError("alpha must exceed 1/2")
    a = alpha - 0.5
    return MajoritySolution(
        beta_l_star=(a - s.p_hL * xi / s.delta) / alpha,
        beta_h_star=(a + s.p_lL * xi / s.delta) / alpha,
    )


def majority_solution_general(
    s: SignalModel, alpha: float, xi: float, beta_h1: float, beta_l0: float, gamma: float
) -> MajoritySolution:
    """Majority strategy that leaves both deviating shares at exactly 1/2."""
    b = 1.0 - beta_l0
    d = s.delta
    bl = (0.5 - (1.0 - alpha) + gamma * b) / alpha - xi / (d * alpha) * (
        s.p_hH * s.p_hL * beta_h1 + s.p_hH * s.p_lL * b + s.p_hL
    )
    bh = (0.5 - (1.0 - alpha - gamma) * beta_h1) / alpha + xi / (d * alpha) * (
        s.p_hH * s.p_lL * beta_h1 + s.p_lH * s.p_lL * b + s.p_lH
    )
    return MajoritySolution(bl, bh)


def deviating_shares_grouped(
    s: SignalModel,
    alpha: float,
    gamma: float,
    xi: float,
    maj_beta_l: float,
    maj_beta_h: float,
    beta_h1: float,
    beta_l0: float,
) -> tuple[float, float]:
    """Worst-case shares when xi type-1 agents switch to R (state H) or xi type-0 agents switch to A (state L)."""
    f_H = (
        alpha * (s.p_hH * maj_beta_h + s.p_lH * maj_beta_l)
        + (1.0 - alpha - gamma - xi) * (s.p_hH * beta_h1 + s.p_lH)
        + gamma * s.p_lH * beta_l0
    )
    f_L = (
        alpha * (s.p_hL * maj_beta_h + s.p_lL * maj_beta_l)
        + (1.0 - alpha - gamma) * (s.p_hL * beta_h1 + s.p_lL)
        + (gamma - xi) * s.p_lL * beta_l0
        + xi
    )
    return f_H, f_L


# ---------------------------------------------------------------------------
# beta_h1 = 1 family
# ---------------------------------------------------------------------------


def hat_gamma_xi(s: SignalModel, alpha: float, beta_l0: float) -> tuple[float, float]:
    """(gamma_hat, xi_hat): the gamma equalizing both caps when beta_h1 = 1, and the common cap."""
    b = 1.0 - beta_l0
    den = (s.p_lL * b + s.p_hL) * (s.p_lH * b + s.p_hH + 1.0)
    xi_hat = s.delta * (alpha - 0.5 + 0.5 * b) / den
    gamma_hat = (0.5 * (s.p_lL * b + s.p_hL + 1.0) - alpha * (s.p_hH * s.p_lL + s.p_lH * s.p_lL * b + s.p_lH)) / den
    return gamma_hat, xi_hat


def b_star(s: SignalModel, alpha: float) -> float:
    """Maximizer of xi_hat over 1 - beta_l0 (unclipped quadratic root)."""
    r = max(_radicand(s, alpha), 0.0)
    return (1.0 - 2.0 * alpha) + math.sqrt(r) / (s.p_lL * s.p_lH)


def gamma_star_forms(s: SignalModel, alpha: float) -> tuple[float, float]:
    """The two rationalized expressions for the optimal type-0 fraction."""
    lH, lL = s.p_lH, s.p_lL
    root = math.sqrt(max(_radicand(s, alpha), 0.0))
    k = (1.0 - 2 * alpha * lL) * (1.0 - alpha * lH)
    alt1 = (k + 0.5 * (1.0 / lH - 2 * alpha) * root) / (4 * k + (1.0 / lL + 2.0 / lH - 4 * alpha) * root)
    alt2 = (2 * lL**2 - (3 - 2 * alpha * lH) * lH * lL + lH * root) / (2 * (2 * lL - lH) ** 2)
    return alt1, alt2


def segment3_range(s: SignalModel) -> tuple[float, float]:
    lo = tail_boundary(s) if has_tail(s) else 0.5
    return lo, alpha_nl(s)


def segment3_params(s: SignalModel, alpha: float, *, tol: float = 1e-12) -> Segment3Params:
    lo, hi = segment3_range(s)
    if not (lo - tol <= alpha <= hi + tol) or alpha <= 0.5:
        raise DomainError(f"alpha={alpha} is outside the NonLinear range [{lo}, {hi}]")
    bs = b_star(s, alpha)
    g, xh = hat_gamma_xi(s, alpha, 1.0 - bs)
    a1, a2 = gamma_star_forms(s, alpha)
    return Segment3Params(b_star=bs, gamma_star=g, xi_nl=xi_nl(s, alpha), gamma_alt1=a1, gamma_alt2=a2)


def tail_gamma(s: SignalModel, alpha: float) -> float:
    return 0.5 * (1.0 - (s.p_lL + s.p_lH) * alpha)


# ---------------------------------------------------------------------------
# Derivative signs along the ray 1 - beta_l0 = t * beta_h1
# ---------------------------------------------------------------------------


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def derivative_sign_terms(s: SignalModel, alpha: float, gamma: float, t: float) -> tuple[float, float]:
    a = alpha - 0.5
    h = (1.0 - alpha - gamma) * s.p_lH - a * s.p_hH * s.p_lL - a * s.p_lH * s.p_lL * t
    # Differentiating xi_l along the ray gives a constant term with p_hL
    # (the h-signal probability in state L), not p_lL.
    l = t * (gamma * s.p_hL - a * s.p_hH * s.p_lL) - a * s.p_hH * s.p_hL
    return h, l


def derivative_signs(s: SignalModel, alpha: float, gamma: float, t: float) -> tuple[int, int]:
    if t < 0:
        raise DomainError("t must be nonnegative")
    h, l = derivative_sign_terms(s, alpha, gamma, t)
    return _sign(h), _sign(l)
