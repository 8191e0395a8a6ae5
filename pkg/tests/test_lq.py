import math

import numpy as np
import pytest

from hamlearn.lq import (
    DegenerateProblem,
    DivisionNearZero,
    LQProblem,
    algebraic_riccati_roots,
    discrete_riccati_gain,
    grid_problems,
    lq_hamilton_rhs,
    riccati_backward,
    riccati_flow,
    riccati_rhs,
    simultaneous_flip_check,
    stable_root,
)

BASE = LQProblem(0.0, 1.0, 1.0, 1.0)


def test_roots_and_stability():
    (lo, lo_stable), (hi, hi_stable) = algebraic_riccati_roots(BASE)
    assert (lo, hi) == (-1.0, 1.0)
    assert hi_stable and not lo_stable
    assert stable_root(BASE) == 1.0
    for prob in grid_problems():
        th = stable_root(prob)
        assert abs(riccati_rhs(th, prob)) < 1e-9 * max(1.0, th * th)
        # textbook scalar LQR: P = r (a + sqrt(a^2 + b^2 q / r)) / b^2
        assert th == pytest.approx(prob.r * (prob.a + math.sqrt(prob.a ** 2 + prob.q / prob.r)), rel=1e-12)


def test_problem_validation():
    with pytest.raises(ValueError):
        LQProblem(0, 1, 0, 1)
    with pytest.raises(ValueError):
        LQProblem(0, 1, 1, 0)
    with pytest.raises(DegenerateProblem):
        algebraic_riccati_roots(LQProblem(0.0, 0.0, 1.0, 1.0))


def test_ratio_obeys_unflipped_riccati():
    x, p = 0.8, -0.3
    for conv_prob in grid_problems()[:6]:
        xd, pd = lq_hamilton_rhs(x, p, conv_prob)
        th = p / x
        assert (pd - th * xd) / x == pytest.approx(riccati_rhs(th, conv_prob), rel=1e-12, abs=1e-12)


def test_flipped_flow_monotone_between_roots():
    (lo, _), (hi, _) = algebraic_riccati_roots(BASE)
    for start in np.linspace(lo + 0.1, hi - 0.1, 7):
        _, th = riccati_flow(BASE, start, T=20.0, tau=1e-3)
        steps = np.diff(th)
        assert np.all(steps >= -1e-15) or np.all(steps <= 1e-15)
        assert abs(th[-1] - hi) < 1e-6


def test_backward_flow_reaches_stable_root():
    _, th = riccati_backward(BASE, 0.0, T=20.0)
    assert abs(th[0] - 1.0) < 1e-6 and th[-1] == 0.0


def test_flip_check_examples():
    rep = simultaneous_flip_check(1.0, 1.0, BASE, T=2.0)
    assert np.max(np.abs(rep.theta - 1.0)) < 1e-6
    rep = simultaneous_flip_check(1.0, 0.0, BASE, T=5.0)
    assert rep.residual < 1e-5
    with pytest.raises(DivisionNearZero):
        simultaneous_flip_check(0.0, 1.0, BASE)
    with pytest.raises(ValueError):
        simultaneous_flip_check(1.0, 0.0, BASE, convention="other")


def test_hamilton_rhs_under_both_sign_conventions():
    assert lq_hamilton_rhs(1.0, 1.0, BASE) == (-1.0, -1.0)
    assert lq_hamilton_rhs(1.0, 1.0, BASE, convention="reversed") == (1.0, -1.0)


def test_discrete_gain_approaches_continuous_gain():
    gain, cost = discrete_riccati_gain(BASE, 1e-3, T=20.0)
    assert gain == pytest.approx(1.0, rel=2e-3)
    assert cost > 0
