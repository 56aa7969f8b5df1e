"""Vote shares, exact win probabilities, fidelity and utilities.

Given the world state, every agent votes A independently with probability
``q = p_hW * beta_h + p_lW * beta_l``, so the A-tally is Poisson-binomial and
its PMF is computed exactly by the kernel in :mod:`antvote._backend`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import poisson_binomial_pmf
from .model import Environment, GroupedProfile, Prior, SignalModel, UtilityTable

STATES = ("H", "L")


class InvalidTrials(ValueError):
    pass


@dataclass(frozen=True)
class VoteShares:
    f_H: float
    f_L: float


@dataclass(frozen=True)
class WinProbabilities:
    lambda_HA: float
    lambda_LR: float
    lambda_HR: float
    lambda_LA: float

    @property
    def tie_H(self) -> float:
        return max(0.0, 1.0 - self.lambda_HA - self.lambda_HR)

    @property
    def tie_L(self) -> float:
        return max(0.0, 1.0 - self.lambda_LA - self.lambda_LR)


@dataclass(frozen=True)
class FidelityResult:
    fidelity: float
    win: WinProbabilities
    tie_mass_H: float
    tie_mass_L: float


def block_arrays(profile: GroupedProfile, signal: SignalModel, state: str) -> tuple[np.ndarray, np.ndarray]:
    counts = np.array([b.count for b in profile.blocks], dtype=np.int64)
    probs = np.array([signal.q(state, b.strategy.beta_l, b.strategy.beta_h) for b in profile.blocks])
    return counts, np.clip(probs, 0.0, 1.0)


def expected_vote_shares(profile: GroupedProfile, signal: SignalModel) -> VoteShares:
    n = profile.n
    f = []
    for state in STATES:
        counts, probs = block_arrays(profile, signal, state)
        f.append(float(np.dot(counts, probs)) / n)
    return VoteShares(*f)


def tally_pmf(counts: Sequence[int], probs: Sequence[float]) -> np.ndarray:
    return poisson_binomial_pmf(np.asarray(counts, dtype=np.int64), np.asarray(probs, dtype=np.float64))


def outcome_probabilities(pmf: np.ndarray) -> tuple[float, float, float]:
    """(P[A wins], P[R wins], P[tie]) from a tally PMF over 0..n."""
    n = pmf.shape[0] - 1
    a_min = n // 2 + 1  # strictly more than n/2
    r_max = (n - 1) // 2  # strictly fewer than n/2
    p_a = float(pmf[a_min:].sum())
    p_r = float(pmf[: r_max + 1].sum())
    tie = float(pmf[n // 2]) if n % 2 == 0 else 0.0
    return min(1.0, p_a), min(1.0, p_r), tie


def win_probabilities_from_arrays(counts, probs_H, probs_L) -> WinProbabilities:
    a_H, r_H, _ = outcome_probabilities(tally_pmf(counts, probs_H))
    a_L, r_L, _ = outcome_probabilities(tally_pmf(counts, probs_L))
    return WinProbabilities(lambda_HA=a_H, lambda_LR=r_L, lambda_HR=r_H, lambda_LA=a_L)


def win_probabilities(profile: GroupedProfile, signal: SignalModel) -> WinProbabilities:
    counts, p_H = block_arrays(profile, signal, "H")
    _, p_L = block_arrays(profile, signal, "L")
    return win_probabilities_from_arrays(counts, p_H, p_L)


def fidelity_from_win(prior: Prior, win: WinProbabilities) -> float:
    return prior.p_H * win.lambda_HA + prior.p_L * win.lambda_LR


def fidelity(env: Environment, profile: GroupedProfile | None = None) -> FidelityResult:
    profile = env.profile if profile is None else profile
    win = win_probabilities(profile, env.signal)
    return FidelityResult(fidelity_from_win(env.prior, win), win, win.tie_H, win.tie_L)


def utility_from_win(utility: UtilityTable, prior: Prior, win: WinProbabilities) -> float:
    return prior.p_L * (win.lambda_LA * utility.v_LA + win.lambda_LR * utility.v_LR) + prior.p_H * (
        win.lambda_HA * utility.v_HA + win.lambda_HR * utility.v_HR
    )


def expected_utility(env: Environment, profile: GroupedProfile, group_index: int) -> float:
    """Ex-ante utility of an agent in block ``group_index`` of ``profile``."""
    block = profile.blocks[group_index]
    return utility_from_win(block.utility, env.prior, win_probabilities(profile, env.signal))


def per_agent_variance(profile: GroupedProfile, signal: SignalModel, state: str, *, majority_only: bool = False) -> float:
    """(1/n) Var(A-tally | state); with ``majority_only`` the sum runs over majority agents but still divides by n."""
    counts, probs = block_arrays(profile, signal, state)
    if majority_only:
        counts = counts * np.array([b.agent_type.is_majority for b in profile.blocks], dtype=np.int64)
    return float(np.dot(counts, probs * (1.0 - probs))) / profile.n


def hoeffding_bound(margin: float, n: int) -> float:
    """exp(-2 m^2 n): tail bound on the share falling ``margin`` below its mean."""
    return math.exp(-2.0 * margin * margin * n)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

MC_CHUNK = 16384


def thread_count() -> int:
    raw = os.environ.get("ANTVOTE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class MonteCarloResult:
    trials: int
    seed: int
    lambda_HA: float
    lambda_LR: float
    fidelity: float
    se_lambda_HA: float
    se_lambda_LR: float
    se_fidelity: float


def _mc_chunk(seed: int, state_idx: int, chunk: int, size: int, counts: np.ndarray, probs: np.ndarray) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(state_idx, chunk))
    rng = np.random.Generator(np.random.PCG64(ss))
    votes = np.zeros(size, dtype=np.int64)
    for c, p in zip(counts.tolist(), probs.tolist()):
        votes += rng.binomial(c, p, size=size)
    n = int(counts.sum())
    return int(np.count_nonzero(2 * votes > n)), int(np.count_nonzero(2 * votes < n))


def exact_standard_error(env: Environment, win: WinProbabilities, trials: int) -> float:
    """Standard error of the Monte Carlo fidelity estimate implied by the exact win probabilities.

    Unlike the plug-in error it stays positive when every sampled election goes the same way.
    """
    a, r = win.lambda_HA, win.lambda_LR
    return math.sqrt((env.prior.p_H**2 * a * (1 - a) + env.prior.p_L**2 * r * (1 - r)) / trials)


def monte_carlo(env: Environment, profile: GroupedProfile | None, trials: int, seed: int, *, workers: int | None = None) -> MonteCarloResult:
    """Seeded simulation of the tally in each state.

    Trials are cut into fixed-size chunks and each chunk derives its own
    stream from ``(seed, state, chunk index)``, so the result does not depend
    on how many workers run the chunks.
    """
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        raise InvalidTrials(f"trials must be a positive integer, got {trials!r}")
    profile = env.profile if profile is None else profile
    workers = workers or thread_count()
    sizes = [MC_CHUNK] * (trials // MC_CHUNK)
    if trials % MC_CHUNK:
        sizes.append(trials % MC_CHUNK)
    wins = {}
    for si, state in enumerate(STATES):
        counts, probs = block_arrays(profile, env.signal, state)
        tasks = [(seed, si, ci, size, counts, probs) for ci, size in enumerate(sizes)]
        if workers > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                res = list(pool.map(lambda t: _mc_chunk(*t), tasks))
        else:
            res = [_mc_chunk(*t) for t in tasks]
        wins[state] = (sum(r[0] for r in res), sum(r[1] for r in res))
    lam_HA = wins["H"][0] / trials
    lam_LR = wins["L"][1] / trials
    se_HA = math.sqrt(lam_HA * (1 - lam_HA) / trials)
    se_LR = math.sqrt(lam_LR * (1 - lam_LR) / trials)
    fid = env.prior.p_H * lam_HA + env.prior.p_L * lam_LR
    se_f = math.sqrt((env.prior.p_H * se_HA) ** 2 + (env.prior.p_L * se_LR) ** 2)
    return MonteCarloResult(trials, seed, lam_HA, lam_LR, fid, se_HA, se_LR, se_f)
