"""Randomized invariants (hypothesis)."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from antvote.construct import construct
from antvote.deviation import deviating_shares
from antvote.model import SignalModel, Strategy, make_profile, signal_from_pair, validate_signal
from antvote.threshold import Segment, alpha_nl, flat_boundary, has_tail, tail_boundary, theta, xi_pair, xi_star
from antvote.voteshare import expected_vote_shares, outcome_probabilities, tally_pmf

from .conftest import ex2_env

prob = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def signals(draw):
    phH = draw(st.floats(0.5, 0.98))
    plL = draw(st.floats(phH, 0.995))
    if phH + plL - 1 < 1e-3:
        plL = min(0.995, phH + 0.01)
    return signal_from_pair(phH, plL)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_validate_canonical_and_delta(a, b):
    hi, lo = max(a, b), min(a, b)
    if hi - lo < 1e-6:
        return
    s = validate_signal(hi, 1 - hi, lo, 1 - lo)
    assert s.is_canonical
    forms = s.delta_forms()
    assert max(forms) - min(forms) <= 1e-12
    assert s.swap().swap() == s


@given(signals())
def test_boundary_order(s):
    a_t = tail_boundary(s)
    a_nl, a_f, th = alpha_nl(s), flat_boundary(s), theta(s)
    if has_tail(s):
        assert 0.5 < a_t <= a_nl + 1e-9
    assert a_nl < a_f + 1e-12 and a_f <= th + 1e-12


@given(signals(), st.floats(0.0, 1.0))
def test_xi_star_positive_and_bounded(s, u):
    a = 0.5 + 1e-6 + u * (theta(s) - 0.5 - 1e-6)
    tp = xi_star(s, a)
    assert 0 < tp.xi_star <= 1
    assert tp.segment is not Segment.STRONG_EQ


@given(signals(), st.floats(0.51, 0.9), prob, prob, prob)
def test_xi_pair_monotone_in_gamma(s, a, h1, l0, u):
    if a > theta(s):
        return
    g = u * (1 - a) * 0.99
    p, q = xi_pair(s, a, h1, l0, g), xi_pair(s, a, h1, l0, g + 0.01 * (1 - a))
    assert q.xi_h <= p.xi_h + 1e-15 and q.xi_l >= p.xi_l - 1e-15


@given(st.lists(st.tuples(st.integers(1, 30), prob, prob), min_size=1, max_size=4))
def test_shares_match_tally_mean(blocks):
    s = SignalModel(0.7, 0.3, 0.2, 0.8)
    prof = make_profile([(c, "Majority", (bl, bh)) for c, bl, bh in blocks])
    sh = expected_vote_shares(prof, s)
    for state, f in (("H", sh.f_H), ("L", sh.f_L)):
        counts = [b.count for b in prof.blocks]
        probs = [s.q(state, b.strategy.beta_l, b.strategy.beta_h) for b in prof.blocks]
        pmf = tally_pmf(counts, probs)
        assert abs(float(np.dot(np.arange(len(pmf)), pmf)) / prof.n - f) < 1e-9
        a, r, t = outcome_probabilities(pmf)
        assert abs(a + r + t - 1) < 1e-9


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([0.7, 0.65, 0.6, 0.54, 0.51]), st.floats(0.0, 0.95), st.integers(501, 3001))
def test_constructed_margins_positive(alpha, factor, n):
    env = ex2_env(n, alpha)
    tp = xi_star(env.signal, env.alpha)
    cap = 1 - env.alpha if tp.segment is Segment.STRONG_EQ else tp.xi_star
    xi = factor * cap
    res = construct(env, xi)
    sh = deviating_shares(res.profile, xi, env.signal)
    assert min(res.margins) > 0 and not sh.fails_H and not sh.fails_L
