"""Coalition deviations and finite-n equilibrium checks.

Only minority agents can profit from breaking the informed majority
decision, and for them the damaging deviations are monotone: in state H the
worst case moves the most A-leaning minority agents to always-R, and in
state L it moves the least A-leaning ones to always-A. Those two extreme
profiles are evaluated exactly. A brute-force enumerator over shared
deviation strategies is provided as an independent oracle for small n.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ALWAYS_A,
    ALWAYS_R,
    AgentGroup,
    AgentType,
    Environment,
    GroupedProfile,
    SignalModel,
    Strategy,
)
from .voteshare import (
    WinProbabilities,
    expected_vote_shares,
    fidelity_from_win,
    utility_from_win,
    win_probabilities,
    win_probabilities_from_arrays,
)

MINORITY = (AgentType.MINORITY0, AgentType.MINORITY1)


class KTooLarge(ValueError):
    pass


class ExplosionGuard(RuntimeError):
    pass


@dataclass(frozen=True)
class DeviationSpec:
    k0: int = 0
    k1: int = 0
    km: int = 0
    strategy0: Strategy | None = None
    strategy1: Strategy | None = None
    strategy_m: Strategy | None = None

    @property
    def size(self) -> int:
        return self.k0 + self.k1 + self.km


@dataclass(frozen=True)
class DeviatingShares:
    f_H: float
    f_L: float

    @property
    def margin_H(self) -> float:
        return self.f_H - 0.5

    @property
    def margin_L(self) -> float:
        return 0.5 - self.f_L

    @property
    def fails_H(self) -> bool:
        """Failure condition f'_H <= 1/2."""
        return self.f_H <= 0.5

    @property
    def fails_L(self) -> bool:
        """Failure condition f'_L >= 1/2."""
        return self.f_L >= 0.5


@dataclass(frozen=True)
class EquilibriumReport:
    n: int
    k: int
    xi: float
    base_fidelity: float
    deviated_fidelity_allA: float
    deviated_fidelity_allR: float
    margins: tuple[float, float]
    gains_allA: dict[str, float]
    gains_allR: dict[str, float]
    max_gain: float
    majority_gain: float
    e_bound: float
    epsilon_bound: float
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "Pass"

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "xi": self.xi,
            "base_fidelity": self.base_fidelity,
            "deviated_fidelity_allA": self.deviated_fidelity_allA,
            "deviated_fidelity_allR": self.deviated_fidelity_allR,
            "margin_H": self.margins[0],
            "margin_L": self.margins[1],
            "gains_allA": self.gains_allA,
            "gains_allR": self.gains_allR,
            "max_gain": self.max_gain,
            "majority_gain": self.majority_gain,
            "e_bound": self.e_bound,
            "epsilon_bound": self.epsilon_bound,
            "verdict": self.verdict,
        }


# ---------------------------------------------------------------------------
# Deviator ordering
# ---------------------------------------------------------------------------


def _order_for_A(blocks) -> list[int]:
    """Minority blocks in the order they join an always-A deviation: type-0 first, least A-leaning first."""
    idx = [i for i, b in enumerate(blocks) if b.agent_type in MINORITY]
    return sorted(idx, key=lambda i: (blocks[i].agent_type is not AgentType.MINORITY0, blocks[i].strategy.beta_l, blocks[i].strategy.beta_h, i))


def _order_for_R(blocks) -> list[int]:
    """Minority blocks in the order they join an always-R deviation: type-1 first, most A-leaning first."""
    idx = [i for i, b in enumerate(blocks) if b.agent_type in MINORITY]
    return sorted(idx, key=lambda i: (blocks[i].agent_type is not AgentType.MINORITY1, -blocks[i].strategy.beta_h, -blocks[i].strategy.beta_l, i))


def _move(profile: GroupedProfile, order: list[int], k: int, target: Strategy, target_type: AgentType) -> GroupedProfile:
    remaining = [b.count for b in profile.blocks]
    moved: list[AgentGroup] = []
    left = k
    for i in order:
        if left == 0:
            break
        take = min(left, remaining[i])
        remaining[i] -= take
        left -= take
        moved.append(AgentGroup(take, target_type, profile.blocks[i].utility, target))
    kept = [b.with_count(c) for b, c in zip(profile.blocks, remaining) if c > 0]
    return GroupedProfile(tuple(kept + moved)).normalized()


def extreme_deviation_profiles(profile: GroupedProfile, k: int) -> tuple[GroupedProfile, GroupedProfile]:
    """(all-A deviation, all-R deviation) by ``k`` minority agents."""
    if k < 0:
        raise KTooLarge("k must be nonnegative")
    if k > profile.minority_count:
        raise KTooLarge(f"k={k} exceeds the minority count {profile.minority_count}")
    blocks = profile.blocks
    allA = _move(profile, _order_for_A(blocks), k, ALWAYS_A, AgentType.MINORITY1)
    allR = _move(profile, _order_for_R(blocks), k, ALWAYS_R, AgentType.MINORITY0)
    if k == 0:
        return profile, profile
    return allA, allR


def deviating_shares(profile: GroupedProfile, xi: float, signal: SignalModel) -> DeviatingShares:
    """Worst-case expected shares after a fraction ``xi`` of all agents deviates.

    The mass ``xi * n`` may be fractional. In state H it is removed from the
    most A-leaning minority agents; in state L it is added to the least
    A-leaning ones, matching the extreme profiles.
    """
    n = profile.n
    base = expected_vote_shares(profile, signal)
    blocks = profile.blocks

    mass = xi * n
    drop = 0.0
    for i in _order_for_R(blocks):
        if mass <= 0:
            break
        take = min(mass, blocks[i].count)
        drop += take * signal.q("H", blocks[i].strategy.beta_l, blocks[i].strategy.beta_h)
        mass -= take

    mass = xi * n
    rise = 0.0
    for i in _order_for_A(blocks):
        if mass <= 0:
            break
        take = min(mass, blocks[i].count)
        rise += take * (1.0 - signal.q("L", blocks[i].strategy.beta_l, blocks[i].strategy.beta_h))
        mass -= take
    return DeviatingShares(base.f_H - drop / n, base.f_L + rise / n)


# ---------------------------------------------------------------------------
# Equilibrium check
# ---------------------------------------------------------------------------


def deviator_count(xi: float, n: int) -> int:
    """k = floor(xi * n), guarding against binary round-off just below an integer."""
    return int(math.floor(xi * n + 1e-9))


def epsilon_from_margin(margin: float, n: int, B: int, p_H: float, p_L: float) -> tuple[float, float]:
    """(e, epsilon): e = 2 exp(-2 m^2 n) bounds the chance that either state's tally crosses 1/2."""
    e = 2.0 * math.exp(-2.0 * margin * margin * n) if margin > 0 else 2.0
    return e, 2.0 * B * (B + 1) * e / (p_H * p_L)


def _gains(profile: GroupedProfile, env: Environment, base: WinProbabilities, dev: WinProbabilities) -> tuple[dict[str, float], float]:
    gains: dict[str, float] = {}
    maj_gain = -math.inf
    for b in profile.blocks:
        g = utility_from_win(b.utility, env.prior, dev) - utility_from_win(b.utility, env.prior, base)
        if b.agent_type is AgentType.MAJORITY:
            maj_gain = max(maj_gain, g)
        else:
            key = ",".join(map(str, b.utility.as_list()))
            gains[key] = max(gains.get(key, -math.inf), g)
    return gains, maj_gain


def check_equilibrium(env: Environment, profile: GroupedProfile | None, xi: float, epsilon: float | None = None) -> EquilibriumReport:
    profile = env.profile if profile is None else profile
    n = profile.n
    k = deviator_count(xi, n)
    if k > profile.minority_count:
        raise KTooLarge(f"k={k} exceeds the minority count {profile.minority_count}")
    signal = env.signal
    shares = deviating_shares(profile, xi, signal)
    margins = (shares.margin_H, shares.margin_L)
    m = min(margins)
    e, eps_default = epsilon_from_margin(m, n, env.B, env.prior.p_H, env.prior.p_L)
    eps = eps_default if epsilon is None else float(epsilon)

    base = win_probabilities(profile, signal)
    allA, allR = extreme_deviation_profiles(profile, k)
    winA = win_probabilities(allA, signal)
    winR = win_probabilities(allR, signal)
    gA, mA = _gains(profile, env, base, winA)
    gR, mR = _gains(profile, env, base, winR)
    max_gain = max([0.0] + list(gA.values()) + list(gR.values())) if k > 0 else 0.0
    majority_gain = max(mA, mR) if k > 0 else 0.0
    verdict = "Pass" if (max_gain <= eps and m > 0) else "Fail"
    return EquilibriumReport(
        n=n,
        k=k,
        xi=xi,
        base_fidelity=fidelity_from_win(env.prior, base),
        deviated_fidelity_allA=fidelity_from_win(env.prior, winA),
        deviated_fidelity_allR=fidelity_from_win(env.prior, winR),
        margins=margins,
        gains_allA=gA,
        gains_allR=gR,
        max_gain=max_gain,
        majority_gain=majority_gain,
        e_bound=e,
        epsilon_bound=eps,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# Brute force
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BruteForceResult:
    best_gain: float
    witness: DeviationSpec
    evaluated: int
    max_majority_gain: float
    majority_improving_witness: DeviationSpec | None = field(default=None)


def _take(blocks, order, k):
    """Split ``k`` deviators off the blocks in ``order``; returns (remaining counts, [(block index, taken)])."""
    remaining = [b.count for b in blocks]
    taken = []
    for i in order:
        if k == 0:
            break
        t = min(k, remaining[i])
        remaining[i] -= t
        k -= t
        taken.append((i, t))
    return remaining, taken


def brute_force_best_deviation(
    env: Environment,
    profile: GroupedProfile | None,
    k: int,
    grid_step: float,
    include_majority: bool = False,
    budget: int = 2_000_000,
    tol: float = 1e-12,
) -> BruteForceResult:
    """Enumerate coalitions of at most ``k`` agents with shared per-sub-group strategies.

    Sub-groups are type-0 minority, type-1 minority and (optionally) the
    majority. A deviation counts only if every deviator weakly gains.
    """
    profile = env.profile if profile is None else profile
    blocks = profile.blocks
    signal, prior = env.signal, env.prior
    if k == 0:
        return BruteForceResult(0.0, DeviationSpec(), 0, 0.0, None)
    steps = round(1.0 / grid_step)
    if abs(steps * grid_step - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1")
    grid = [Strategy(i / steps, j / steps) for i in range(steps + 1) for j in range(steps + 1)]

    n0 = profile.count_of(AgentType.MINORITY0)
    n1 = profile.count_of(AgentType.MINORITY1)
    nm = profile.majority_count if include_majority else 0
    comps = [
        (k0, k1, km)
        for k0 in range(min(k, n0) + 1)
        for k1 in range(min(k - k0, n1) + 1)
        for km in range(min(k - k0 - k1, nm) + 1)
        if k0 + k1 + km > 0
    ]
    total = sum(len(grid) ** sum(1 for x in c if x > 0) for c in comps)
    if total > budget:
        raise ExplosionGuard(f"enumeration needs {total} evaluations, budget is {budget}")

    base = win_probabilities(profile, signal)
    order0 = [i for i, b in enumerate(blocks) if b.agent_type is AgentType.MINORITY0]
    order1 = [i for i, b in enumerate(blocks) if b.agent_type is AgentType.MINORITY1]
    orderm = [i for i, b in enumerate(blocks) if b.agent_type is AgentType.MAJORITY]

    def qs(s: Strategy) -> tuple[float, float]:
        return signal.q("H", s.beta_l, s.beta_h), signal.q("L", s.beta_l, s.beta_h)

    grid_q = [qs(s) for s in grid]
    block_q = [qs(b.strategy) for b in blocks]

    best = (-math.inf, DeviationSpec())
    best_maj = (-math.inf, None)
    evaluated = 0
    for k0, k1, km in comps:
        counts = [b.count for b in blocks]
        parts = []
        for order, kk in ((order0, k0), (order1, k1), (orderm, km)):
            if kk:
                _, taken = _take(blocks, order, kk)
                for i, t in taken:
                    counts[i] -= t
                parts.append(taken)
            else:
                parts.append([])
        base_c = np.array(counts, dtype=np.int64)
        base_qH = np.array([q[0] for q in block_q])
        base_qL = np.array([q[1] for q in block_q])
        active = [p for p in parts if p]
        for choice in itertools.product(range(len(grid)), repeat=len(active)):
            c_extra, qh_extra, ql_extra = [], [], []
            for taken, gi in zip(active, choice):
                tot = sum(t for _, t in taken)
                c_extra.append(tot)
                qh_extra.append(grid_q[gi][0])
                ql_extra.append(grid_q[gi][1])
            win = win_probabilities_from_arrays(
                np.concatenate([base_c, np.array(c_extra, dtype=np.int64)]),
                np.concatenate([base_qH, qh_extra]),
                np.concatenate([base_qL, ql_extra]),
            )
            evaluated += 1
            deviator_gains = []
            maj_gain = None
            for taken in active:
                for i, _ in taken:
                    g = utility_from_win(blocks[i].utility, prior, win) - utility_from_win(blocks[i].utility, prior, base)
                    deviator_gains.append(g)
                    if blocks[i].agent_type is AgentType.MAJORITY:
                        maj_gain = g if maj_gain is None else max(maj_gain, g)
            if min(deviator_gains) < -tol:
                continue
            spec = _spec(k0, k1, km, parts, active, choice, grid)
            g = max(deviator_gains)
            if g > best[0] + tol:
                best = (g, spec)
            if maj_gain is not None and maj_gain > best_maj[0] + tol:
                best_maj = (maj_gain, spec)
    best_gain = max(best[0], 0.0)
    witness = best[1] if best[0] > tol else DeviationSpec()
    max_maj = best_maj[0] if best_maj[1] is not None else 0.0
    maj_witness = best_maj[1] if max_maj > tol else None
    return BruteForceResult(best_gain, witness, evaluated, max_maj, maj_witness)


def _spec(k0, k1, km, parts, active, choice, grid) -> DeviationSpec:
    strat = {}
    it = iter(zip(active, choice))
    for label, p in zip(("s0", "s1", "sm"), parts):
        if p:
            _, gi = next(it)
            strat[label] = grid[gi]
    return DeviationSpec(k0, k1, km, strat.get("s0"), strat.get("s1"), strat.get("sm"))


def extreme_gain(env: Environment, profile: GroupedProfile, k: int) -> float:
    """Largest minority gain over the two extreme deviations of size ``k``."""
    if k == 0:
        return 0.0
    base = win_probabilities(profile, env.signal)
    out = 0.0
    for dev in extreme_deviation_profiles(profile, k):
        gains, _ = _gains(profile, env, base, win_probabilities(dev, env.signal))
        out = max([out] + list(gains.values()))
    return out
