"""Charts, one-forms, graph distributions, and the restricted Hessian."""

from __future__ import annotations

import math

import numpy as np
import pytest

from skewcrit.build import skew_problem_from_exprs
from skewcrit.errors import DimensionMismatch, NotSquare
from skewcrit.geometry import (
    AmbientChart,
    GraphDistribution,
    alpha_on_D,
    alpha_on_d_jacobian,
    F_map,
    skew_hessian,
)
from skewcrit.registry import example_config


def _trivial():
    return example_config("trivial").problem()


def _skew3d():
    return example_config("skew3d").problem()


def test_chart_dimensions_must_be_consistent():
    chart = AmbientChart(3, 1, 2)
    assert chart.n == 3 and chart.m == 1 and chart.d == 2
    with pytest.raises(NotSquare):
        AmbientChart(3, 1, 1)
    with pytest.raises(DimensionMismatch):
        AmbientChart(2, 0, 2)


def test_graph_basis_stacks_slope_over_identity():
    prob = _skew3d()
    x = np.array([0.0, 1.0, 2.0])
    basis = prob.dist.basis_at(x)
    # first row is the slope row delta = [x3, 0]; fiber block is identity
    assert np.allclose(basis, [[2.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def test_pairing_against_graph_basis_trivial_case():
    prob = _trivial()
    x = np.array([0.5, 0.3])
    # alpha = (x1, x2), flat graph: the pairing picks the fiber component
    assert np.allclose(alpha_on_D(prob, x), [0.3])


def test_pairing_against_graph_basis_state_dependent_case():
    prob = _skew3d()
    got = alpha_on_D(prob, np.array([0.0, 1.0, 2.0]))
    assert np.allclose(got, [4.0, 3.0])


def test_pairing_jacobian_matches_finite_differences():
    prob = _skew3d()
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.uniform(-1.0, 1.0, size=3)
        analytic = alpha_on_d_jacobian(prob, x)
        step = 1e-6
        fd = np.zeros_like(analytic)
        for j in range(3):
            xp, xm = x.copy(), x.copy()
            xp[j] += step
            xm[j] -= step
            fd[:, j] = (alpha_on_D(prob, xp) - alpha_on_D(prob, xm)) / (2 * step)
        assert np.max(np.abs(analytic - fd)) < 1e-8


def test_target_map_stacks_pairing_and_constraint():
    prob = _trivial()
    paired, constraint = F_map(prob, np.array([0.5, 0.3]))
    assert np.allclose(paired, [0.3])
    assert np.allclose(constraint, [0.5])


def test_restricted_hessian_of_trivial_problem_is_identity():
    prob = _trivial()
    rep = skew_hessian(prob, np.array([0.7, 0.0]))
    assert np.allclose(rep.matrix, [[1.0]])
    assert rep.condition_number == pytest.approx(1.0)
    assert rep.nondegenerate


def test_restricted_hessian_at_skew3d_root_is_frozen_matrix():
    prob = _skew3d()
    rep = skew_hessian(prob, np.array([0.4, 0.0, 0.0]))
    assert np.allclose(rep.matrix, [[0.0, 1.0], [1.0, 1.0]], atol=1e-12)
    golden = (3.0 + math.sqrt(5.0)) / 2.0
    assert rep.condition_number == pytest.approx(golden, abs=1e-12)
    assert rep.nondegenerate


def test_everywhere_annihilating_one_form_is_degenerate():
    prob = example_config("degenerate").problem()
    rep = skew_hessian(prob, np.array([0.3, 0.2]))
    assert not rep.nondegenerate


def test_problem_builder_rejects_wrong_shapes():
    chart = AmbientChart(2, 1, 1)
    with pytest.raises(DimensionMismatch):
        skew_problem_from_exprs(chart, ["x1"], [["0"]], ["x1"])
    with pytest.raises(DimensionMismatch):
        skew_problem_from_exprs(chart, ["x1", "x2"], [["0", "0"]], ["x1"])


def test_distribution_rejects_wrong_slope_shape():
    with pytest.raises(DimensionMismatch):
        GraphDistribution(3, 2, lambda x: np.zeros((2, 2)), None).delta_at(
            np.zeros(3)
        )
