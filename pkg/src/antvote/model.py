"""Domain types for the two-type voting game.

Everything here is an immutable value. Signal models are kept in the
canonical orientation ``p_hH <= p_lL``; a raw model that violates it is
relabelled (H<->L, h<->l, A<->R) and flagged with ``swapped=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

IDENTITY_TOL = 1e-12


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class InvalidProbability(ModelError):
    pass


class NonInformative(ModelError):
    pass


class InconsistentCounts(ModelError):
    pass


class DominatedStrategyInProfile(ModelError):
    pass


class InvalidUtility(ModelError):
    pass


class DomainError(ValueError):
    """A closed-form quantity was requested outside its domain."""


def _check_prob(name: str, x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise InvalidProbability(f"{name}={x!r} is not a probability in [0, 1]")
    return x


# ---------------------------------------------------------------------------
# Signal structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalModel:
    """Conditional signal probabilities ``P(signal | state)``."""

    p_hH: float
    p_lH: float
    p_hL: float
    p_lL: float
    swapped: bool = False

    @property
    def delta(self) -> float:
        return self.p_hH - self.p_hL

    def delta_forms(self) -> tuple[float, float, float, float]:
        """The four algebraically equal expressions for the informativeness gap."""
        return (
            self.p_hH - self.p_hL,
            self.p_lL - self.p_lH,
            self.p_hH * self.p_lL - self.p_hL * self.p_lH,
            self.p_hH + self.p_lL - 1.0,
        )

    @property
    def is_canonical(self) -> bool:
        return self.p_hH <= self.p_lL

    def swap(self) -> "SignalModel":
        """Relabel states, signals and alternatives. Applying it twice is the identity."""
        return SignalModel(
            p_hH=self.p_lL,
            p_lH=self.p_hL,
            p_hL=self.p_lH,
            p_lL=self.p_hH,
            swapped=not self.swapped,
        )

    def q(self, state: str, beta_l: float, beta_h: float) -> float:
        """Probability that an agent with strategy (beta_l, beta_h) votes A in ``state``."""
        if state == "H":
            return self.p_hH * beta_h + self.p_lH * beta_l
        if state == "L":
            return self.p_hL * beta_h + self.p_lL * beta_l
        raise ValueError(f"state must be 'H' or 'L', got {state!r}")


def validate_signal(
    p_hH: float, p_lH: float, p_hL: float, p_lL: float, *, canonicalize: bool = True
) -> SignalModel:
    """Validate four raw probabilities and return a canonical :class:`SignalModel`."""
    vals = [_check_prob(n, v) for n, v in zip(("p_hH", "p_lH", "p_hL", "p_lL"), (p_hH, p_lH, p_hL, p_lL))]
    p_hH, p_lH, p_hL, p_lL = vals
    if abs(p_hH + p_lH - 1.0) > IDENTITY_TOL or abs(p_hL + p_lL - 1.0) > IDENTITY_TOL:
        raise InvalidProbability("signal rows must sum to 1 within 1e-12")
    if not p_hH > p_hL:
        raise NonInformative(f"need p_hH > p_hL, got {p_hH} <= {p_hL}")
    model = SignalModel(p_hH, p_lH, p_hL, p_lL)
    if canonicalize and not model.is_canonical:
        model = model.swap()
    forms = model.delta_forms()
    if max(forms) - min(forms) > IDENTITY_TOL:
        raise InvalidProbability(f"delta identities disagree: {forms}")
    return model


def signal_from_pair(p_hH: float, p_lL: float, *, canonicalize: bool = True) -> SignalModel:
    """Shorthand used by the CLI and tests: rows are completed from the diagonal."""
    return validate_signal(p_hH, 1.0 - p_hH, 1.0 - p_lL, p_lL, canonicalize=canonicalize)


def delta(signal: SignalModel) -> float:
    return signal.delta


# ---------------------------------------------------------------------------
# Prior, utilities, strategies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prior:
    p_H: float
    p_L: float

    def __post_init__(self) -> None:
        _check_prob("p_H", self.p_H)
        _check_prob("p_L", self.p_L)
        if self.p_H <= 0 or self.p_L <= 0:
            raise InvalidProbability("prior probabilities must be strictly positive")
        if abs(self.p_H + self.p_L - 1.0) > IDENTITY_TOL:
            raise InvalidProbability("prior must sum to 1")

    def swap(self) -> "Prior":
        return Prior(self.p_L, self.p_H)


class AgentType(str, Enum):
    MAJORITY = "Majority"
    MINORITY0 = "MinorityType0"
    MINORITY1 = "MinorityType1"

    @property
    def is_majority(self) -> bool:
        return self is AgentType.MAJORITY

    @classmethod
    def parse(cls, raw: str | "AgentType") -> "AgentType":
        if isinstance(raw, AgentType):
            return raw
        key = str(raw).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "majority": cls.MAJORITY,
            "maj": cls.MAJORITY,
            "minoritytype0": cls.MINORITY0,
            "type0": cls.MINORITY0,
            "minority0": cls.MINORITY0,
            "minoritytype1": cls.MINORITY1,
            "type1": cls.MINORITY1,
            "minority1": cls.MINORITY1,
        }
        if key not in aliases:
            raise ModelError(f"unknown agent type {raw!r}")
        return aliases[key]


@dataclass(frozen=True)
class UtilityTable:
    """Integer utilities v(state, alternative) in {0, ..., B}."""

    v_HA: int
    v_LA: int
    v_HR: int
    v_LR: int

    def __post_init__(self) -> None:
        for name in ("v_HA", "v_LA", "v_HR", "v_LR"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise InvalidUtility(f"{name}={v!r} must be a nonnegative integer")

    @property
    def B(self) -> int:
        return max(self.v_HA, self.v_LA, self.v_HR, self.v_LR)

    @property
    def is_majority(self) -> bool:
        return self.v_HA > self.v_HR and self.v_LA < self.v_LR

    @property
    def is_minority(self) -> bool:
        return self.v_HA < self.v_HR and self.v_LA > self.v_LR

    def swap(self) -> "UtilityTable":
        # H<->L and A<->R together: v'(H, A) = v(L, R), v'(L, A) = v(H, R).
        return UtilityTable(v_HA=self.v_LR, v_LA=self.v_HR, v_HR=self.v_LA, v_LR=self.v_HA)

    def as_list(self) -> list[int]:
        return [self.v_HA, self.v_LA, self.v_HR, self.v_LR]


# Utility tables from the worked example with 50 voters.
MAJORITY_EXAMPLE = UtilityTable(4, 0, 1, 2)
MINORITY_EXAMPLE = UtilityTable(2, 3, 3, 1)


@dataclass(frozen=True)
class Strategy:
    beta_l: float
    beta_h: float

    def __post_init__(self) -> None:
        _check_prob("beta_l", self.beta_l)
        _check_prob("beta_h", self.beta_h)

    def swap(self) -> "Strategy":
        # Voting A' on h' means voting R on l.
        return Strategy(beta_l=1.0 - self.beta_h, beta_h=1.0 - self.beta_l)


ALWAYS_A = Strategy(1.0, 1.0)
ALWAYS_R = Strategy(0.0, 0.0)
INFORMATIVE = Strategy(0.0, 1.0)


@dataclass(frozen=True)
class AgentGroup:
    """A homogeneous block of agents sharing type, utility and strategy."""

    count: int
    agent_type: AgentType
    utility: UtilityTable
    strategy: Strategy

    def __post_init__(self) -> None:
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count <= 0:
            raise InconsistentCounts(f"group count must be a positive integer, got {self.count!r}")
        if self.agent_type is AgentType.MAJORITY and not self.utility.is_majority:
            raise InvalidUtility(f"majority group needs a majority utility table, got {self.utility}")
        if self.agent_type is not AgentType.MAJORITY and not self.utility.is_minority:
            raise InvalidUtility(f"minority group needs a minority utility table, got {self.utility}")
        if self.agent_type is AgentType.MINORITY0 and self.strategy.beta_h != 0.0:
            raise ModelError("type-0 minority agents must have beta_h = 0")
        if self.agent_type is AgentType.MINORITY1 and self.strategy.beta_l != 1.0:
            raise ModelError("type-1 minority agents must have beta_l = 1")

    def with_count(self, count: int) -> "AgentGroup":
        return replace(self, count=count)


@dataclass(frozen=True)
class GroupedProfile:
    """A strategy profile stored as homogeneous blocks."""

    blocks: tuple[AgentGroup, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise InconsistentCounts("a profile needs at least one block")

    @property
    def n(self) -> int:
        return sum(b.count for b in self.blocks)

    def count_of(self, *types: AgentType) -> int:
        return sum(b.count for b in self.blocks if b.agent_type in types)

    @property
    def majority_count(self) -> int:
        return self.count_of(AgentType.MAJORITY)

    @property
    def minority_count(self) -> int:
        return self.count_of(AgentType.MINORITY0, AgentType.MINORITY1)

    def normalized(self) -> "GroupedProfile":
        """Merge blocks that are identical apart from their counts, keeping first-seen order."""
        merged: dict[tuple, int] = {}
        proto: dict[tuple, AgentGroup] = {}
        for b in self.blocks:
            key = (b.agent_type, b.utility, b.strategy)
            merged[key] = merged.get(key, 0) + b.count
            proto.setdefault(key, b)
        return GroupedProfile(tuple(proto[k].with_count(c) for k, c in merged.items()))


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Environment:
    n: int
    prior: Prior
    signal: SignalModel
    groups: tuple[AgentGroup, ...]
    alpha: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "groups", tuple(self.groups))
        total = sum(g.count for g in self.groups)
        if total != self.n:
            raise InconsistentCounts(f"group counts sum to {total}, expected n={self.n}")
        maj = sum(g.count for g in self.groups if g.agent_type is AgentType.MAJORITY)
        if maj == 0:
            raise InconsistentCounts("environment has no majority agents")
        t0 = sum(g.count for g in self.groups if g.agent_type is AgentType.MINORITY0)
        object.__setattr__(self, "alpha", maj / self.n)
        object.__setattr__(self, "gamma", t0 / self.n)
        if not self.alpha > 0.5:
            raise InconsistentCounts(f"majority fraction must exceed 1/2, got {self.alpha}")
        if self.signal.delta <= 0:
            raise NonInformative("signal must be strictly informative")

    @property
    def profile(self) -> GroupedProfile:
        return GroupedProfile(self.groups)

    @property
    def majority_utility(self) -> UtilityTable:
        return next(g.utility for g in self.groups if g.agent_type is AgentType.MAJORITY)

    @property
    def minority_utility(self) -> UtilityTable:
        for g in self.groups:
            if g.agent_type is not AgentType.MAJORITY:
                return g.utility
        return MINORITY_EXAMPLE

    @property
    def B(self) -> int:
        return max(g.utility.B for g in self.groups)

    def majority_count(self) -> int:
        return sum(g.count for g in self.groups if g.agent_type is AgentType.MAJORITY)


# ---------------------------------------------------------------------------
# Dominance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonDominated:
    pass


@dataclass(frozen=True)
class Dominated:
    witness: Strategy


def is_nondominated(majority: bool, s: Strategy, tol: float = 0.0) -> bool:
    if majority:
        return s.beta_l <= tol or s.beta_h >= 1.0 - tol
    return s.beta_l >= 1.0 - tol or s.beta_h <= tol


def classify_strategy(agent_type: AgentType | bool, s: Strategy, signal: SignalModel) -> NonDominated | Dominated:
    """Dominance test with an explicit improving witness.

    A majority agent gains by shifting A-votes from the l signal to the h
    signal at the exchange rate ``(p_hH+p_hL)/(p_lH+p_lL)``. That move raises
    the A-probability in state H by ``eps*delta/(p_lH+p_lL)`` and lowers it in
    state L by the same amount. Minority agents move the opposite way.
    """
    majority = agent_type if isinstance(agent_type, bool) else AgentType.parse(agent_type).is_majority
    if is_nondominated(majority, s):
        return NonDominated()
    rate = (signal.p_hH + signal.p_hL) / (signal.p_lH + signal.p_lL)
    if majority:
        eps = min(1.0 - s.beta_h, s.beta_l / rate)
        bh = 1.0 if eps == 1.0 - s.beta_h else s.beta_h + eps
        bl = 0.0 if eps == s.beta_l / rate else s.beta_l - eps * rate
    else:
        eps = min(s.beta_h, (1.0 - s.beta_l) / rate)
        bh = 0.0 if eps == s.beta_h else s.beta_h - eps
        bl = 1.0 if eps == (1.0 - s.beta_l) / rate else s.beta_l + eps * rate
    return Dominated(Strategy(beta_l=min(1.0, max(0.0, bl)), beta_h=min(1.0, max(0.0, bh))))


# ---------------------------------------------------------------------------
# Construction from configuration
# ---------------------------------------------------------------------------


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def split_counts(n: int, alpha: float, gamma: float = 0.0) -> tuple[int, int, int]:
    """(majority, type-0, type-1) counts from target fractions."""
    maj = round_half_away(alpha * n)
    t0 = round_half_away(gamma * n)
    t1 = n - maj - t0
    if min(maj, t0, t1) < 0:
        raise InconsistentCounts(f"targets alpha={alpha}, gamma={gamma} do not fit n={n}")
    return maj, t0, t1


def _utility(raw: Any, default: UtilityTable) -> UtilityTable:
    if raw is None:
        return default
    if isinstance(raw, UtilityTable):
        return raw
    if isinstance(raw, Mapping):
        return UtilityTable(**{k: raw[k] for k in ("v_HA", "v_LA", "v_HR", "v_LR")})
    vals = list(raw)
    if len(vals) != 4:
        raise InvalidUtility("utility needs four entries [vHA, vLA, vHR, vLR]")
    for v in vals:
        if isinstance(v, float) and not v.is_integer():
            raise InvalidUtility(f"utilities must be integers, got {v}")
    return UtilityTable(*(int(v) for v in vals))


def _strategy(raw: Any, default: Strategy) -> Strategy:
    if raw is None:
        return default
    if isinstance(raw, Strategy):
        return raw
    if isinstance(raw, Mapping):
        return Strategy(beta_l=float(raw.get("bl", raw.get("beta_l"))), beta_h=float(raw.get("bh", raw.get("beta_h"))))
    bl, bh = raw
    return Strategy(float(bl), float(bh))


def _signal(raw: Any) -> SignalModel:
    if isinstance(raw, SignalModel):
        return raw
    if raw is None:
        raise ModelError("configuration is missing the signal block")
    if "p_lH" in raw or "plH" in raw:
        return validate_signal(
            raw.get("phH", raw.get("p_hH")),
            raw.get("plH", raw.get("p_lH")),
            raw.get("phL", raw.get("p_hL")),
            raw.get("plL", raw.get("p_lL")),
            canonicalize=False,
        )
    phH = raw.get("phH", raw.get("p_hH"))
    phL = raw.get("phL", raw.get("p_hL"))
    if phH is None or phL is None:
        raise ModelError("signal block needs phH and phL")
    return validate_signal(float(phH), 1.0 - float(phH), float(phL), 1.0 - float(phL), canonicalize=False)


def _prior(raw: Any) -> Prior:
    if isinstance(raw, Prior):
        return raw
    if raw is None:
        raise ModelError("configuration is missing the prior block")
    pH = raw.get("pH", raw.get("p_H"))
    pL = raw.get("pL", raw.get("p_L"))
    if pH is None and pL is None:
        raise ModelError("prior block needs pH or pL")
    pH = float(pH) if pH is not None else 1.0 - float(pL)
    pL = float(pL) if pL is not None else 1.0 - pH
    return Prior(pH, pL)


_DEFAULT_STRATEGY = {
    AgentType.MAJORITY: INFORMATIVE,
    AgentType.MINORITY0: ALWAYS_R,
    AgentType.MINORITY1: ALWAYS_A,
}


def build_environment(config: Mapping[str, Any], *, strict: bool = False) -> Environment:
    """Create an :class:`Environment` from a JSON-like mapping.

    Either ``groups`` (explicit counts) or ``alpha``/``gamma`` targets must be
    present. A raw signal with ``p_hH > p_lL`` is canonicalized, and the
    prior, utilities and strategies are relabelled along with it.
    """
    if "n" not in config:
        raise ModelError("configuration is missing n")
    n = int(config["n"])
    if n <= 0:
        raise InconsistentCounts("n must be positive")
    signal = _signal(config.get("signal"))
    prior = _prior(config.get("prior"))
    maj_u = _utility(config.get("majority_utility"), MAJORITY_EXAMPLE)
    min_u = _utility(config.get("minority_utility"), MINORITY_EXAMPLE)

    groups: list[AgentGroup] = []
    if config.get("groups"):
        for i, g in enumerate(config["groups"]):
            atype = AgentType.parse(g.get("type", "Majority"))
            default_u = maj_u if atype.is_majority else min_u
            count = g.get("count")
            if isinstance(count, float) and count.is_integer():
                count = int(count)
            try:
                groups.append(
                    AgentGroup(
                        count=count,
                        agent_type=atype,
                        utility=_utility(g.get("utility"), default_u),
                        strategy=_strategy(g.get("strategy"), _DEFAULT_STRATEGY[atype]),
                    )
                )
            except ModelError as exc:
                raise type(exc)(f"group {i}: {exc}") from exc
    elif "alpha" in config:
        maj, t0, t1 = split_counts(n, float(config["alpha"]), float(config.get("gamma", 0.0)))
        for count, atype, u in ((maj, AgentType.MAJORITY, maj_u), (t0, AgentType.MINORITY0, min_u), (t1, AgentType.MINORITY1, min_u)):
            if count > 0:
                groups.append(AgentGroup(count, atype, u, _DEFAULT_STRATEGY[atype]))
    else:
        raise ModelError("configuration needs either groups or alpha")

    if sum(g.count for g in groups) != n:
        raise InconsistentCounts(f"group counts sum to {sum(g.count for g in groups)}, expected n={n}")

    if not signal.is_canonical:
        signal = signal.swap()
        prior = prior.swap()
        groups = [_swap_group(g) for g in groups]

    if strict:
        for i, g in enumerate(groups):
            if isinstance(classify_strategy(g.agent_type, g.strategy, signal), Dominated):
                raise DominatedStrategyInProfile(f"group {i} plays a dominated strategy {g.strategy}")
    return Environment(n=n, prior=prior, signal=signal, groups=tuple(groups))


def _swap_group(g: AgentGroup) -> AgentGroup:
    s = g.strategy.swap()
    t = g.agent_type
    if t is AgentType.MINORITY0:
        t = AgentType.MINORITY1
    elif t is AgentType.MINORITY1:
        t = AgentType.MINORITY0
    return AgentGroup(g.count, t, g.utility.swap(), s)


def make_profile(blocks: Iterable[tuple[int, AgentType | str, Strategy | Sequence[float]]], *,
                 majority_utility: UtilityTable = MAJORITY_EXAMPLE,
                 minority_utility: UtilityTable = MINORITY_EXAMPLE) -> GroupedProfile:
    """Convenience builder: ``[(count, type, (beta_l, beta_h)), ...]``; zero-count blocks are dropped."""
    out = []
    for count, atype, strat in blocks:
        if count == 0:
            continue
        atype = AgentType.parse(atype)
        u = majority_utility if atype.is_majority else minority_utility
        out.append(AgentGroup(int(count), atype, u, _strategy(strat, ALWAYS_A)))
    return GroupedProfile(tuple(out))


def minority_type_for(s: Strategy) -> AgentType:
    """Type label for a non-dominated minority strategy (type-1 wins ties, e.g. always-A)."""
    if s.beta_l == 1.0:
        return AgentType.MINORITY1
    if s.beta_h == 0.0:
        return AgentType.MINORITY0
    raise ModelError(f"{s} is dominated for a minority agent and has no type")
