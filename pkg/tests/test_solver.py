"""Newton iteration, damping, continuation, and failure reporting."""

from __future__ import annotations

import numpy as np
import pytest

from skewcrit.errors import BranchJump, DegenerateHessian, MaxIterExceeded
from skewcrit.registry import example_config
from skewcrit.solver import NewtonSettings, continuation, newton_step, solve


def _problem(name):
    return example_config(name).problem()


def test_single_newton_step_on_flat_problem_is_frozen():
    prob = _problem("trivial")
    u = newton_step(prob, np.array([0.5, 0.3]), np.array([0.7]))
    assert np.allclose(u, [0.2, -0.3], atol=1e-14)


def test_trivial_roots_land_on_closed_form():
    prob = _problem("trivial")
    for y in (-1.0, 0.0, 0.7, 1.0):
        res = solve(prob, np.array([y]), np.array([0.5, 0.3]))
        assert res.converged
        assert np.max(np.abs(res.x - np.array([y, 0.0]))) < 1e-10


def test_skew3d_roots_land_on_closed_form():
    prob = _problem("skew3d")
    for y in (-0.3, 0.0, 0.4, 1.0):
        res = solve(prob, np.array([y]), np.array([y, 0.1, -0.1]))
        assert res.converged
        assert np.max(np.abs(res.x - np.array([y, 0.0, 0.0]))) < 1e-10


def test_flat_problem_converges_in_one_step():
    prob = _problem("trivial")
    res = solve(prob, np.array([0.7]), np.array([0.5, 0.3]))
    assert res.iterations == 1
    assert res.residual_history[-1] < 1e-14


def test_residual_history_contracts_quadratically():
    prob = _problem("skew3d")
    res = solve(prob, np.array([0.4]), np.array([0.4, 0.5, -0.5]))
    hist = list(res.residual_history)
    assert res.converged
    noise = 32 * np.finfo(float).eps
    for rk, rk1 in zip(hist, hist[1:]):
        if rk < 1e-3 and rk1 > noise:
            assert rk1 <= 10.0 * rk**2


def test_hessian_report_is_stamped_at_the_root():
    prob = _problem("skew3d")
    res = solve(prob, np.array([0.4]), np.array([0.4, 0.1, -0.1]))
    assert res.hessian.at_critical_point == "verified"
    assert res.hessian.condition_number == pytest.approx(
        (3.0 + np.sqrt(5.0)) / 2.0, abs=1e-12
    )


def test_iteration_budget_exhaustion_carries_partial_state():
    prob = _problem("skew3d")
    far = np.array([0.4, 5.0, 5.0])
    tight = NewtonSettings(max_iter=3)
    with pytest.raises(MaxIterExceeded) as exc:
        solve(prob, np.array([0.4]), far, tight)
    partial = exc.value.result
    assert partial is not None
    assert not partial.converged
    assert partial.iterations == 3
    assert len(partial.residual_history) >= 3

    # same start converges once the budget is realistic; this basin ends
    # on the second solution branch (y, -1, 1) of the skew3d equations
    res = solve(prob, np.array([0.4]), far, NewtonSettings(max_iter=200))
    assert res.converged
    assert np.max(np.abs(res.x - np.array([0.4, -1.0, 1.0]))) < 1e-10


def test_degenerate_problem_raises_at_the_first_step():
    prob = _problem("degenerate")
    with pytest.raises(DegenerateHessian):
        solve(prob, np.array([0.4]), np.array([0.3, 0.2]))


def test_continuation_follows_the_root_line():
    prob = _problem("trivial")
    ys = [np.array([v]) for v in np.linspace(-1.0, 1.0, 9)]
    out = continuation(prob, ys, np.array([-1.0, 0.2]))
    assert not out.failures
    assert len(out.samples) == 9
    for y, res in out.samples:
        assert np.max(np.abs(res.x - np.array([y[0], 0.0]))) < 1e-10


def test_continuation_secant_predictor_matches_previous_results():
    prob = _problem("skew3d")
    ys = [np.array([v]) for v in np.linspace(0.0, 0.8, 5)]
    prev = continuation(prob, ys, np.array([0.0, 0.1, -0.1]), predictor="previous")
    sec = continuation(prob, ys, np.array([0.0, 0.1, -0.1]), predictor="secant")
    assert len(prev.samples) == len(sec.samples) == 5
    for (_, a), (_, b) in zip(prev.samples, sec.samples):
        assert np.max(np.abs(a.x - b.x)) < 1e-9


def test_continuation_flags_jumps_past_the_cap():
    prob = _problem("trivial")
    ys = [np.array([0.0]), np.array([0.01]), np.array([0.9])]
    out = continuation(prob, ys, np.array([0.0, 0.0]), jump_cap=0.05)
    assert len(out.samples) == 2
    assert len(out.failures) == 1
    y_bad, exc = out.failures[0]
    assert y_bad[0] == pytest.approx(0.9)
    assert isinstance(exc, BranchJump)


def test_continuation_records_failures_and_moves_on():
    prob = _problem("skew3d")
    ys = [np.array([0.0]), np.array([0.4])]
    tight = NewtonSettings(max_iter=1)
    out = continuation(prob, ys, np.array([0.3, 2.0, 2.0]), settings=tight)
    assert len(out.samples) + len(out.failures) == 2
    assert out.failures
    assert isinstance(out.failures[0][1], MaxIterExceeded)
