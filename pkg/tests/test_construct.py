import pytest

from antvote.construct import (
    ConstructionResult,
    InfeasibleXi,
    construct,
    construct_above_theta,
    construct_flat,
    construct_nonlinear,
    construct_steep,
    construct_tail,
    push_to_boundary,
    steep_delta_interval,
)
from antvote.deviation import deviating_shares
from antvote.model import AgentType, DomainError, NonDominated, Strategy, classify_strategy
from antvote.threshold import classify, segment3_params, xi_nl, xi_star
from antvote.voteshare import expected_vote_shares

from .conftest import ex2_env

N = 100_001  # large n keeps realized fractions within 1e-5 of the targets


def _nondominated(res: ConstructionResult, signal):
    return all(isinstance(classify_strategy(b.agent_type, b.strategy, signal), NonDominated) for b in res.profile.blocks)


def test_push_example(ex2):
    s, d = push_to_boundary(ex2, 0.058462, 0.92)
    assert s.beta_l == 0.0 and s.beta_h == pytest.approx(0.991453, abs=1e-6)
    assert d == pytest.approx(0.064957, abs=1e-6)
    assert push_to_boundary(ex2, 0.0, 0.5) == (Strategy(0.0, 0.5), 0.0)


def test_push_margins_equal_alpha_delta_Delta(ex2):
    env = ex2_env(20, 0.65)
    res = construct_flat(env, 0.28)
    m = env.alpha * res.delta_push * ex2.delta
    assert res.margins[0] == pytest.approx(m, abs=1e-12) and res.margins[1] == pytest.approx(m, abs=1e-12)


def test_flat_example(ex2):
    res = construct_flat(ex2_env(20, 0.65), 0.28)
    assert res.majority_strategy.beta_l == 0.0
    assert res.majority_strategy.beta_h == pytest.approx(0.991453, abs=1e-6)
    assert res.margins == pytest.approx((0.021111, 0.021111), abs=1e-6)
    with pytest.raises(InfeasibleXi):
        construct_flat(ex2_env(20, 0.65), 0.3125)
    r0 = construct_flat(ex2_env(20, 0.65), 0.0)
    assert r0.margins[0] == pytest.approx(r0.margins[1]) and r0.margins[0] > 0


def test_above_theta(ex2):
    res = construct_above_theta(ex2_env(50, 0.7))
    assert (res.majority_strategy.beta_l, res.majority_strategy.beta_h) == pytest.approx((0.090909, 1.0), abs=1e-6)
    assert res.margins == pytest.approx((0.009091, 0.009091), abs=1e-6)
    assert res.feasible
    # everyone in the minority switching to R leaves f'_H just above 1/2
    sh = deviating_shares(res.profile, 0.3, ex2)
    assert sh.f_H == pytest.approx(0.509091, abs=1e-6)


def test_above_theta_at_theta_is_flagged(ex2):
    env = ex2_env(16, 0.6875)
    assert env.alpha == 0.6875
    res = construct_above_theta(env)
    assert not res.feasible
    assert res.majority_strategy.beta_h == pytest.approx(1.0)


def test_flat_and_above_theta_agree(ex2):
    env = ex2_env(50, 0.7)
    a = construct_above_theta(env)
    b = construct_flat(env, 0.3 - 1e-12)
    assert a.majority_strategy.beta_l == pytest.approx(b.majority_strategy.beta_l, abs=1e-9)
    assert a.majority_strategy.beta_h == pytest.approx(b.majority_strategy.beta_h, abs=1e-9)


def test_steep_example(ex2):
    lo, hi = steep_delta_interval(ex2, 0.6, 0.2)
    assert (lo, hi) == pytest.approx((0.014286, 0.133333), abs=1e-6)
    res = construct_steep(ex2_env(20, 0.6), 0.2)
    assert res.delta_push == pytest.approx(0.073810, abs=1e-6)
    assert res.majority_strategy.beta_h == pytest.approx(0.773810, abs=1e-6)
    sh = expected_vote_shares(res.profile, ex2)
    assert (sh.f_H, sh.f_L) == pytest.approx((0.725, 0.492857), abs=1e-6)
    assert sh.f_H - 0.5 - 0.2 == pytest.approx(0.025, abs=1e-9)
    with pytest.raises(InfeasibleXi):
        construct_steep(ex2_env(20, 0.6), 0.25)


def test_nonlinear(ex2):
    env = ex2_env(2001, 0.54)
    cap = xi_nl(ex2, env.alpha)
    res = construct_nonlinear(env, 0.9 * cap)
    assert res.feasible and min(res.margins) > 0
    c0 = res.profile.count_of(AgentType.MINORITY0)
    c1 = res.profile.count_of(AgentType.MINORITY1)
    import math

    assert c0 > math.ceil(0.9 * cap * env.n) and c1 > math.ceil(0.9 * cap * env.n)
    assert _nondominated(res, ex2)
    with pytest.raises(InfeasibleXi):
        construct_nonlinear(env, cap)
    with pytest.raises(DomainError):
        construct_nonlinear(ex2_env(2001, 0.6), 0.1)


def test_tail(ex2):
    env = ex2_env(N, 0.51)
    res = construct_tail(env, 0.0)
    assert res.profile.count_of(AgentType.MINORITY0) / env.n == pytest.approx(0.2195, abs=1e-5)
    assert res.profile.count_of(AgentType.MINORITY1) / env.n == pytest.approx(0.2705, abs=1e-5)
    sh = expected_vote_shares(res.profile, ex2)
    assert (sh.f_H, sh.f_L) == pytest.approx((0.6275, 0.3725), abs=2e-5)
    assert res.margins == pytest.approx((0.1275, 0.1275), abs=2e-5)
    with pytest.raises(InfeasibleXi):
        construct_tail(env, ex2.delta * env.alpha / 2)


@pytest.mark.parametrize("alpha", [0.7, 0.65, 0.6, 0.54, 0.51])
@pytest.mark.parametrize("factor", [0.0, 0.5, 0.9])
def test_constructions_are_valid(ex2, alpha, factor):
    env = ex2_env(4001, alpha)
    tp = xi_star(ex2, env.alpha)
    cap = 1 - env.alpha if tp.segment.value == "StrongEq" else tp.xi_star
    xi = factor * cap
    res = construct(env, xi)
    assert res.segment is classify(ex2, env.alpha)
    assert _nondominated(res, ex2)
    assert min(res.margins) > 0
    maj = res.majority_strategy
    assert maj.beta_l == 0.0 or maj.beta_h == 1.0
    sh = deviating_shares(res.profile, xi, ex2)
    assert not sh.fails_H and not sh.fails_L
    assert (sh.margin_H, sh.margin_L) == pytest.approx(res.margins, abs=1e-12)


def test_gamma_star_count_rounding(ex2):
    env = ex2_env(2001, 0.54)
    p = segment3_params(ex2, env.alpha, tol=1e-9)
    res = construct_nonlinear(env, 0.5 * p.xi_nl)
    assert res.profile.count_of(AgentType.MINORITY0) == int(p.gamma_star * 2001 + 0.5)
