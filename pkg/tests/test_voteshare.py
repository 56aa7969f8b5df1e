import itertools
import math

import numpy as np
import pytest

from antvote import _kernels
from antvote.model import AgentType, Prior, Strategy, UtilityTable, build_environment, make_profile
from antvote.voteshare import (
    InvalidTrials,
    WinProbabilities,
    expected_utility,
    expected_vote_shares,
    fidelity,
    hoeffding_bound,
    monte_carlo,
    outcome_probabilities,
    per_agent_variance,
    tally_pmf,
    utility_from_win,
    win_probabilities,
)

from .conftest import ex2_env


def informative(n):
    return make_profile([(n, "Majority", (0.0, 1.0))])


def test_shares_examples(ex2):
    sh = expected_vote_shares(make_profile([(5, "Majority", (1, 1))]), ex2)
    assert (sh.f_H, sh.f_L) == pytest.approx((1.0, 1.0))
    sh = expected_vote_shares(informative(7), ex2)
    assert (sh.f_H, sh.f_L) == pytest.approx((0.7, 0.2))


def test_tail_profile_shares(ex2):
    from antvote.construct import construct_tail

    res = construct_tail(ex2_env(4001, 0.51), 0.0)
    sh = expected_vote_shares(res.profile, ex2)
    # realized counts shift the shares by O(1/n) from 1/2 +/- delta*alpha/2
    assert sh.f_H == pytest.approx(0.6275, abs=5e-4)
    assert sh.f_L == pytest.approx(0.3725, abs=5e-4)


def test_shares_difference_identity(ex2):
    rng = np.random.default_rng(3)
    for _ in range(50):
        blocks = [(int(rng.integers(1, 9)), "Majority", tuple(rng.uniform(size=2))) for _ in range(3)]
        prof = make_profile(blocks)
        sh = expected_vote_shares(prof, ex2)
        mean = sum(c * (s[1] - s[0]) for c, _, s in blocks) / prof.n
        assert sh.f_H - sh.f_L == pytest.approx(ex2.delta * mean, abs=1e-12)


def test_n3_informative(ex2):
    w = win_probabilities(informative(3), ex2)
    assert w.lambda_HA == pytest.approx(0.784, abs=1e-12)
    assert w.lambda_LR == pytest.approx(0.896, abs=1e-12)
    env = build_environment({"n": 3, "alpha": 1.0, "prior": {"pH": 0.6}, "signal": {"phH": 0.7, "phL": 0.2}})
    assert fidelity(env, informative(3)).fidelity == pytest.approx(0.8288, abs=1e-12)


def test_single_and_tie(ex2):
    w = win_probabilities(make_profile([(1, "Majority", (1, 1))]), ex2)
    assert (w.lambda_HA, w.lambda_LR) == (1.0, 0.0)
    w = win_probabilities(make_profile([(1, "Majority", (1, 1)), (1, "type0", (0, 0))]), ex2)
    assert (w.lambda_HA, w.lambda_LR) == (0.0, 0.0)
    assert w.tie_H == pytest.approx(1.0)


def _enumerate(probs):
    n = len(probs)
    a = r = 0.0
    for votes in itertools.product((0, 1), repeat=n):
        p = math.prod(q if v else 1 - q for v, q in zip(votes, probs))
        s = sum(votes)
        if 2 * s > n:
            a += p
        elif 2 * s < n:
            r += p
    return a, r


def test_dp_matches_enumeration():
    rng = np.random.default_rng(11)
    for n in range(1, 13):
        counts = np.ones(n, dtype=np.int64)
        probs = rng.uniform(size=n)
        probs[rng.uniform(size=n) < 0.2] = 1.0
        a, r, _ = outcome_probabilities(tally_pmf(counts, probs))
        ea, er = _enumerate(list(probs))
        assert a == pytest.approx(ea, abs=1e-12) and r == pytest.approx(er, abs=1e-12)


def test_pmf_sums_to_one_both_kernels():
    counts = np.array([400, 300, 301])
    probs = np.array([0.3, 0.77, 1.0])
    from antvote import _backend

    p1 = _backend.poisson_binomial_pmf(counts, probs)
    p2 = _kernels.poisson_binomial_pmf(counts, probs)
    assert p1.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(p1 - p2)) < 1e-13


def test_lambda_monotone_in_strategies(ex2):
    rng = np.random.default_rng(5)
    for _ in range(40):
        blocks = [(int(rng.integers(1, 15)), "Majority", tuple(rng.uniform(size=2))) for _ in range(3)]
        base = win_probabilities(make_profile(blocks), ex2).lambda_HA
        i = int(rng.integers(3))
        c, t, (bl, bh) = blocks[i]
        bumped = list(blocks)
        bumped[i] = (c, t, (min(1.0, bl + 0.1), min(1.0, bh + 0.1)))
        assert win_probabilities(make_profile(bumped), ex2).lambda_HA >= base - 1e-12


def test_utility_examples(prior):
    w = WinProbabilities(1.0, 1.0, 0.0, 0.0)
    assert utility_from_win(UtilityTable(4, 0, 1, 2), prior, w) == pytest.approx(3.2)
    assert utility_from_win(UtilityTable(2, 3, 3, 1), prior, w) == pytest.approx(1.6)
    w2 = WinProbabilities(0.3, 0.6, 0.7, 0.4)
    assert utility_from_win(UtilityTable(5, 5, 5, 5), prior, w2) == pytest.approx(5.0)


def test_expected_utility_block(ex2):
    env = ex2_env(51, 0.7)
    u = expected_utility(env, env.profile, 0)
    w = win_probabilities(env.profile, ex2)
    assert u == pytest.approx(utility_from_win(env.majority_utility, env.prior, w))


def test_variance_examples(ex2):
    assert per_agent_variance(make_profile([(4, "Majority", (1, 1))]), ex2, "H") == 0.0
    assert per_agent_variance(informative(9), ex2, "H") == pytest.approx(0.21)
    sh = expected_vote_shares(informative(9), ex2)
    bound = 2 * ex2.delta * 0.21 / min(ex2.p_hH, ex2.p_lH)
    assert sh.f_H - sh.f_L == pytest.approx(0.5) and bound == pytest.approx(0.7)


def test_hoeffding_surrogate(ex2):
    rng = np.random.default_rng(2)
    for _ in range(100):
        n = int(rng.integers(5, 300))
        q = float(rng.uniform(0.5, 0.9))
        m = q - 0.5
        pmf = tally_pmf([n], [q])
        a, _, _ = outcome_probabilities(pmf)
        assert 1 - a <= hoeffding_bound(m, n) + 1e-15


def test_monte_carlo_trials_validation():
    env = ex2_env(11, 0.7)
    with pytest.raises(InvalidTrials):
        monte_carlo(env, None, 0, seed=1)


def test_monte_carlo_n3(ex2):
    env = build_environment({"n": 3, "alpha": 1.0, "prior": {"pH": 0.6}, "signal": {"phH": 0.7, "phL": 0.2}})
    mc = monte_carlo(env, informative(3), 200_000, seed=4)
    assert abs(mc.lambda_HA - 0.784) <= 3 * mc.se_lambda_HA


def test_monte_carlo_deterministic_and_worker_independent():
    env = ex2_env(51, 0.6)
    a = monte_carlo(env, None, 40_000, seed=9, workers=1)
    b = monte_carlo(env, None, 40_000, seed=9, workers=4)
    c = monte_carlo(env, None, 40_000, seed=9, workers=1)
    assert a == b == c
    assert monte_carlo(env, None, 40_000, seed=10) != a
