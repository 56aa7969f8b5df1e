"""Equilibrium profiles for each regime of the majority fraction.

Each builder takes an environment (for ``n``, prior, signal, utilities and
the realized majority fraction) and a tolerated deviating fraction ``xi``,
and returns a grouped profile whose deviation margins are strictly positive.
All analytic formulas use the realized fractions ``count / n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .deviation import deviating_shares
from .model import (
    ALWAYS_A,
    ALWAYS_R,
    AgentGroup,
    AgentType,
    DomainError,
    Environment,
    GroupedProfile,
    SignalModel,
    Strategy,
    round_half_away,
)
from .threshold import (
    Segment,
    classify,
    flat_boundary,
    flat_value,
    majority_solution_general,
    majority_solution_seg1,
    segment3_params,
    steep_value,
    tail_gamma,
    tail_value,
    theta,
    xi_nl,
)

BOUNDARY_TOL = 1e-12


class InfeasibleXi(ValueError):
    pass


class AlreadyBoundary(ValueError):
    """Raised only by callers that insist on an interior starting point."""


@dataclass(frozen=True)
class ConstructionResult:
    profile: GroupedProfile
    margins: tuple[float, float]
    delta_push: float
    segment: Segment
    xi: float
    alpha: float
    majority_strategy: Strategy
    feasible: bool = True
    note: str = ""


def push_to_boundary(signal: SignalModel, beta_l_star: float, beta_h_star: float) -> tuple[Strategy, float]:
    """Slide along (-(p_hH+p_hL), +(p_lH+p_lL)) until one coordinate hits its bound.

    Per unit of the step the H-share rises, and the L-share falls, by
    alpha * delta, so both deviation margins grow equally.
    """
    if beta_l_star <= BOUNDARY_TOL or beta_h_star >= 1.0 - BOUNDARY_TOL:
        return Strategy(min(1.0, max(0.0, beta_l_star)), min(1.0, max(0.0, beta_h_star))), 0.0
    if not (0.0 < beta_l_star < 1.0 and 0.0 < beta_h_star < 1.0):
        raise InfeasibleXi(f"majority solution ({beta_l_star}, {beta_h_star}) lies outside the unit square")
    rate_l = signal.p_hH + signal.p_hL
    rate_h = signal.p_lH + signal.p_lL
    d_l = beta_l_star / rate_l
    d_h = (1.0 - beta_h_star) / rate_h
    if d_l <= d_h:
        return Strategy(0.0, min(1.0, beta_h_star + d_l * rate_h)), d_l
    return Strategy(max(0.0, beta_l_star - d_h * rate_l), 1.0), d_h


def _blocks(env: Environment, maj: Strategy, minority: list[tuple[int, AgentType, Strategy]]) -> GroupedProfile:
    out = [AgentGroup(env.majority_count(), AgentType.MAJORITY, env.majority_utility, maj)]
    for count, atype, s in minority:
        if count > 0:
            out.append(AgentGroup(count, atype, env.minority_utility, s))
    return GroupedProfile(tuple(out))


def _result(env: Environment, profile: GroupedProfile, xi: float, delta: float, seg: Segment, maj: Strategy, note: str = "") -> ConstructionResult:
    sh = deviating_shares(profile, xi, env.signal)
    margins = (sh.margin_H, sh.margin_L)
    return ConstructionResult(
        profile=profile,
        margins=margins,
        delta_push=delta,
        segment=seg,
        xi=xi,
        alpha=env.alpha,
        majority_strategy=maj,
        feasible=min(margins) > 0,
        note=note,
    )


def _check_xi(xi: float) -> None:
    if not (xi >= 0.0) or math.isnan(xi):
        raise InfeasibleXi(f"xi must be nonnegative, got {xi}")


def construct_flat(env: Environment, xi: float) -> ConstructionResult:
    """All minority agents vote A; the majority solves the seg-1 system, then is pushed."""
    s, alpha = env.signal, env.alpha
    _check_xi(xi)
    if alpha < flat_boundary(s) - BOUNDARY_TOL:
        raise DomainError(f"flat construction needs alpha >= 1/(2 p_lL) = {flat_boundary(s)}, got {alpha}")
    if xi >= flat_value(s):
        raise InfeasibleXi(f"xi={xi} is not below the flat cap {flat_value(s)}")
    sol = majority_solution_seg1(s, alpha, xi)
    if not sol.interior:
        raise InfeasibleXi(f"no interior majority solution at xi={xi}: {sol}")
    maj, delta = push_to_boundary(s, sol.beta_l_star, sol.beta_h_star)
    minority = [(env.n - env.majority_count(), AgentType.MINORITY1, ALWAYS_A)]
    seg = Segment.FLAT if alpha <= theta(s) else Segment.STRONG_EQ
    return _result(env, _blocks(env, maj, minority), xi, delta, seg, maj)


def construct_above_theta(env: Environment) -> ConstructionResult:
    """Profile that survives every minority agent switching to R (the seg-1 system at xi = 1 - alpha)."""
    s, alpha = env.signal, env.alpha
    th = theta(s)
    if alpha < th - BOUNDARY_TOL:
        raise DomainError(f"needs alpha >= theta = {th}, got {alpha}")
    xi = 1.0 - alpha
    sol = majority_solution_seg1(s, alpha, xi)
    minority = [(env.n - env.majority_count(), AgentType.MINORITY1, ALWAYS_A)]
    if sol.beta_h_star >= 1.0 - 1e-12 or sol.beta_l_star <= 0.0:
        # alpha == theta: the solution sits on the boundary with zero slack.
        maj = Strategy(min(1.0, max(0.0, sol.beta_l_star)), min(1.0, sol.beta_h_star))
        res = _result(env, _blocks(env, maj, minority), xi, 0.0, Segment.STRONG_EQ, maj, "boundary solution, no slack")
        return replace(res, feasible=False)
    maj, delta = push_to_boundary(s, sol.beta_l_star, sol.beta_h_star)
    return _result(env, _blocks(env, maj, minority), xi, delta, Segment.STRONG_EQ, maj)


def steep_delta_interval(s: SignalModel, alpha: float, xi: float) -> tuple[float, float]:
    d = s.delta
    shift = xi * s.p_lL / (alpha * d)
    lo = (xi + (alpha - 0.5) * s.p_lH) / (alpha * s.p_hH) - shift
    hi = (alpha - 0.5) * s.p_lL / (alpha * s.p_hL) - shift
    return lo, hi


def construct_steep(env: Environment, xi: float) -> ConstructionResult:
    """All minority agents vote A; informative-on-l majority with beta_h in the open window."""
    s, alpha = env.signal, env.alpha
    _check_xi(xi)
    if alpha > flat_boundary(s) + BOUNDARY_TOL:
        raise DomainError(f"steep construction needs alpha <= 1/(2 p_lL) = {flat_boundary(s)}, got {alpha}")
    cap = steep_value(s, alpha)
    if xi >= cap:
        raise InfeasibleXi(f"xi={xi} is not below the steep cap {cap}")
    lo, hi = steep_delta_interval(s, alpha, xi)
    if not lo < hi:
        raise InfeasibleXi(f"empty delta window ({lo}, {hi})")
    delta = 0.5 * (lo + hi)
    beta_h = 1.0 + (-0.5 + xi * s.p_lL / s.delta) / alpha + delta
    if not 0.0 <= beta_h <= 1.0:
        raise InfeasibleXi(f"beta_h={beta_h} leaves [0, 1]")
    maj = Strategy(0.0, beta_h)
    minority = [(env.n - env.majority_count(), AgentType.MINORITY1, ALWAYS_A)]
    return _result(env, _blocks(env, maj, minority), xi, delta, Segment.STEEP, maj)


def construct_nonlinear(env: Environment, xi: float) -> ConstructionResult:
    """Type-1 agents vote A, type-0 agents mix on l; majority from the general system, then pushed."""
    s, alpha, n = env.signal, env.alpha, env.n
    _check_xi(xi)
    params = segment3_params(s, alpha, tol=1e-9)
    cap = xi_nl(s, alpha)
    if xi >= cap:
        raise InfeasibleXi(f"xi={xi} is not below xi_NL={cap}")
    minority_total = n - env.majority_count()
    c0 = round_half_away(params.gamma_star * n)
    c1 = minority_total - c0
    need = math.ceil(xi * n)
    if not (c0 > need and c1 > need):
        raise InfeasibleXi(f"sub-group counts ({c0}, {c1}) do not exceed ceil(xi*n)={need}")
    gamma = c0 / n
    beta_l0 = min(1.0, max(0.0, params.beta_l0))
    sol = majority_solution_general(s, alpha, xi, 1.0, beta_l0, gamma)
    if not sol.interior:
        raise InfeasibleXi(f"no interior majority solution at xi={xi}: {sol}")
    maj, delta = push_to_boundary(s, sol.beta_l_star, sol.beta_h_star)
    minority = [(c0, AgentType.MINORITY0, Strategy(beta_l0, 0.0)), (c1, AgentType.MINORITY1, ALWAYS_A)]
    return _result(env, _blocks(env, maj, minority), xi, delta, Segment.NONLINEAR, maj)


def construct_tail(env: Environment, xi: float) -> ConstructionResult:
    """Informative majority; a gamma* share of the minority votes R, the rest votes A."""
    s, alpha, n = env.signal, env.alpha, env.n
    _check_xi(xi)
    if classify(s, alpha) is not Segment.TAIL:
        raise DomainError(f"alpha={alpha} is not in the Tail segment")
    cap = tail_value(s, alpha)
    if xi >= cap:
        raise InfeasibleXi(f"xi={xi} is not below the tail cap {cap}")
    c0 = round_half_away(tail_gamma(s, alpha) * n)
    c1 = n - env.majority_count() - c0
    need = math.ceil(xi * n)
    if xi > 0 and not (c0 >= need and c1 >= need):
        raise InfeasibleXi(f"sub-group counts ({c0}, {c1}) are below ceil(xi*n)={need}")
    maj = Strategy(0.0, 1.0)
    minority = [(c0, AgentType.MINORITY0, ALWAYS_R), (c1, AgentType.MINORITY1, ALWAYS_A)]
    return _result(env, _blocks(env, maj, minority), xi, 0.0, Segment.TAIL, maj)


def construct(env: Environment, xi: float) -> ConstructionResult:
    """Dispatch on the segment of the realized majority fraction."""
    seg = classify(env.signal, env.alpha)
    if seg is Segment.STRONG_EQ:
        if xi < 1.0 - env.alpha:
            return construct_flat(env, xi)
        return construct_above_theta(env)
    if seg is Segment.FLAT:
        return construct_flat(env, xi)
    if seg is Segment.STEEP:
        return construct_steep(env, xi)
    if seg is Segment.NONLINEAR:
        return construct_nonlinear(env, xi)
    return construct_tail(env, xi)


def cap_for(env: Environment) -> float:
    """The largest xi the dispatcher's construction can tolerate at the env's alpha."""
    from .threshold import segment_cap

    return segment_cap(env.signal, env.alpha)
