import math

import numpy as np
import pytest

from antvote.model import DomainError, SignalModel, signal_from_pair
from antvote.threshold import (
    Segment,
    alpha_nl,
    b_star,
    classify,
    derivative_signs,
    deviating_shares_grouped,
    flat_boundary,
    has_tail,
    hat_gamma_xi,
    majority_solution_general,
    majority_solution_seg1,
    segment3_params,
    segment3_range,
    steep_value,
    tail_boundary,
    tail_gamma,
    tail_value,
    theta,
    xi_nl,
    xi_pair,
    xi_star,
)


def random_signals(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        phH = rng.uniform(0.5, 0.99)
        plL = rng.uniform(phH, 0.995)
        if plL + phH - 1 > 1e-3:
            out.append(signal_from_pair(phH, plL))
    return out


# --- oracle values first --------------------------------------------------


def test_theta_values(ex2, sym80):
    assert theta(ex2) == pytest.approx(0.6875, abs=1e-12)
    assert theta(sym80) == pytest.approx(0.625, abs=1e-12)
    for s in random_signals(200):
        assert theta(s) > 0.5
        assert theta(s) == pytest.approx(1 - s.delta / (2 * s.p_lL), abs=1e-12)


def test_alpha_nl_values(ex2, sym80):
    assert alpha_nl(ex2) == pytest.approx(0.55597, abs=1e-5)
    assert alpha_nl(sym80) == pytest.approx(1 / 1.8, abs=1e-9)
    for s in random_signals(1000, seed=1):
        a = alpha_nl(s)
        assert 1 / (1 + s.p_lL) - 1e-12 <= a < flat_boundary(s)


def test_xi_nl_values(ex2):
    assert xi_nl(ex2, 0.54) == pytest.approx(0.135181, abs=1e-6)
    a = alpha_nl(ex2)
    assert xi_nl(ex2, a) == pytest.approx(steep_value(ex2, a), abs=1e-9)
    assert steep_value(ex2, a) == pytest.approx(0.13993, abs=1e-5)
    at = tail_boundary(ex2)
    assert at == pytest.approx(1 / 1.9)
    assert xi_nl(ex2, at) == pytest.approx(0.131579, abs=1e-6)
    assert xi_nl(ex2, at) == pytest.approx(tail_value(ex2, at), abs=1e-9)


def test_xi_nl_domain(ex2):
    with pytest.raises(DomainError):
        xi_nl(ex2, 0.9)


@pytest.mark.parametrize(
    "alpha,segment,value",
    [(0.7, Segment.STRONG_EQ, 1.0), (0.65, Segment.FLAT, 0.3125), (0.6, Segment.STEEP, 0.25),
     (0.54, Segment.NONLINEAR, 0.135181), (0.51, Segment.TAIL, 0.1275)],
)
def test_xi_star_example(ex2, alpha, segment, value):
    tp = xi_star(ex2, alpha)
    assert tp.segment is segment
    assert tp.xi_star == pytest.approx(value, abs=1e-6)


def test_xi_star_symmetric(sym80):
    tp = xi_star(sym80, 0.55)
    assert tp.segment is Segment.TAIL and tp.xi_star == pytest.approx(0.165)


def test_xi_star_domain(ex2):
    with pytest.raises(DomainError):
        xi_star(ex2, 0.5)


def test_xi_pair_examples(ex2):
    p = xi_pair(ex2, 0.6, 0.0, 1.0, 0.2)
    assert (p.xi_h, p.xi_l) == pytest.approx((0.1 * 0.5 / 0.3, 0.25), abs=1e-12)
    g = tail_gamma(ex2, 0.51)
    p = xi_pair(ex2, 0.51, 1.0, 0.0, g)
    assert (p.xi_h, p.xi_l) == pytest.approx((0.1275, 0.1275), abs=1e-12)
    a, b = xi_pair(ex2, 0.6, 0.7, 0.3, 0.1), xi_pair(ex2, 0.6, 0.7, 0.3, 0.11)
    assert b.xi_h < a.xi_h and b.xi_l > a.xi_l


def test_seg1_solution(ex2):
    sol = majority_solution_seg1(ex2, 0.65, 0.28)
    assert (sol.beta_l_star, sol.beta_h_star) == pytest.approx((0.058462, 0.92), abs=1e-6)
    sol = majority_solution_seg1(ex2, 0.65, 0.0)
    assert sol.beta_l_star == pytest.approx(0.15 / 0.65) and sol.beta_h_star == pytest.approx(0.15 / 0.65)
    for a in (0.62, 0.65, 0.68, 0.9):
        assert majority_solution_seg1(ex2, a, ex2.delta / (2 * ex2.p_lL)).beta_h_star == pytest.approx(1.0, abs=1e-12) or a < flat_boundary(ex2)


def test_general_solution_substitutes_back(ex2):
    rng = np.random.default_rng(4)
    for _ in range(200):
        a = rng.uniform(0.51, 0.7)
        g = rng.uniform(0, 1 - a)
        xi = rng.uniform(0, min(g, 1 - a - g))
        h1, l0 = rng.uniform(size=2)
        sol = majority_solution_general(ex2, a, xi, h1, l0, g)
        fH, fL = deviating_shares_grouped(ex2, a, g, xi, sol.beta_l_star, sol.beta_h_star, h1, l0)
        assert fH == pytest.approx(0.5, abs=1e-12) and fL == pytest.approx(0.5, abs=1e-12)
        xh = xi_pair(ex2, a, h1, l0, g).xi_h
        assert majority_solution_general(ex2, a, xh, h1, l0, g).beta_h_star == pytest.approx(1.0, abs=1e-12)


def test_general_solution_interior_in_segment3(ex2):
    p = segment3_params(ex2, 0.54)
    sol = majority_solution_general(ex2, 0.54, 0.9 * p.xi_nl, 1.0, 1 - 0.894542, p.gamma_star)
    assert sol.interior


def test_hat_gamma_xi(ex2):
    g, x = hat_gamma_xi(ex2, 0.6, 1.0)
    assert x == pytest.approx(0.147059, abs=1e-6)
    assert x == pytest.approx(0.5 * 0.1 / (0.2 * 1.7), abs=1e-12)
    for a in (0.52, 0.55, 0.6):
        g0, x0 = hat_gamma_xi(ex2, a, 0.0)
        assert x0 == pytest.approx(ex2.delta * a / 2, abs=1e-12)
        for l0 in (0.0, 0.3, 0.9):
            g, x = hat_gamma_xi(ex2, a, l0)
            p = xi_pair(ex2, a, 1.0, l0, g)
            assert p.xi_h == pytest.approx(x, abs=1e-12) and p.xi_l == pytest.approx(x, abs=1e-12)


def test_segment3_params(ex2):
    p = segment3_params(ex2, 0.54)
    assert p.b_star == pytest.approx(0.894542, abs=2e-6)
    assert p.xi_nl == pytest.approx(0.135181, abs=1e-6)
    assert p.gamma_alt1 == pytest.approx(p.gamma_alt2, abs=1e-10)
    pair = xi_pair(ex2, 0.54, 1.0, p.beta_l0, p.gamma_star)
    assert pair.xi_h == pytest.approx(p.xi_nl, abs=1e-10) and pair.xi_l == pytest.approx(p.xi_nl, abs=1e-10)
    assert b_star(ex2, 1 / 1.9) == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(DomainError):
        segment3_params(ex2, 0.6)


def test_derivative_signs_match_finite_differences(ex2):
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(400):
        a = rng.uniform(0.51, 0.68)
        g = rng.uniform(0, 1 - a)
        t = rng.uniform(0, 3)
        h1 = rng.uniform(0.05, min(0.95, 0.95 / max(t, 1e-9)))
        e = 1e-6

        def pair(x):
            return xi_pair(ex2, a, x, 1 - t * x, g)

        dh = (pair(h1 + e).xi_h - pair(h1 - e).xi_h) / (2 * e)
        dl = (pair(h1 + e).xi_l - pair(h1 - e).xi_l) / (2 * e)
        sh, sl = derivative_signs(ex2, a, g, t)
        if abs(dh) > 1e-7:
            assert sh == (1 if dh > 0 else -1)
            checked += 1
        if abs(dl) > 1e-7:
            assert sl == (1 if dl > 0 else -1)
    assert checked > 300


def test_derivative_sign_edge_cases(ex2):
    assert derivative_signs(ex2, 0.6, 0.2, 0.0)[1] == -1
    assert derivative_signs(ex2, 0.6, 0.4, 1.0)[0] == -1
    with pytest.raises(DomainError):
        derivative_signs(ex2, 0.6, 0.2, -1.0)


# --- structural properties --------------------------------------------------


def test_continuity_and_positivity():
    for s in random_signals(60, seed=2) + [SignalModel(0.7, 0.3, 0.2, 0.8), signal_from_pair(0.8, 0.8)]:
        # the two adjacent closed forms agree exactly at each boundary
        assert abs(steep_value(s, flat_boundary(s)) - s.delta / (2 * s.p_lL)) <= 1e-9
        assert abs(xi_nl(s, alpha_nl(s)) - steep_value(s, alpha_nl(s))) <= 1e-9
        if has_tail(s):
            assert abs(xi_nl(s, tail_boundary(s)) - tail_value(s, tail_boundary(s))) <= 1e-9
        grid = np.linspace(0.5 + 1e-6, theta(s), 300)
        vals = [xi_star(s, float(a)).xi_star for a in grid]
        assert min(vals) > 0
        assert all(v2 >= v1 - 1e-12 for v1, v2 in zip(vals, vals[1:]))


def test_symmetric_signals_have_empty_segments():
    for p in (0.6, 0.7, 0.8, 0.95):
        s = signal_from_pair(p, p)
        assert theta(s) == pytest.approx(flat_boundary(s), abs=1e-9)
        assert alpha_nl(s) == pytest.approx(1 / (1 + p), abs=1e-9)
        assert tail_boundary(s) == pytest.approx(alpha_nl(s), abs=1e-9)


def test_xi_nl_dominance_inside_segment3():
    for s in random_signals(30, seed=6):
        lo, hi = segment3_range(s)
        for a in np.linspace(max(lo, 0.5 + 1e-6), hi, 20):
            assert xi_nl(s, a) >= steep_value(s, a) - 1e-12
            assert xi_nl(s, a) >= tail_value(s, a) - 1e-12
        for a in np.linspace(hi + 1e-4, flat_boundary(s), 10):
            assert xi_nl(s, a) < steep_value(s, a)


def test_three_segment_limit_is_not_quarter_delta():
    s = signal_from_pair(0.6, 0.9)
    assert not has_tail(s)
    limit = xi_nl(s, 0.5 + 1e-12)
    assert limit > 0
    assert abs(limit - s.delta / 4) > 1e-3


def test_classify_tail_boundary_point(ex2):
    assert classify(ex2, tail_boundary(ex2)) is Segment.NONLINEAR
