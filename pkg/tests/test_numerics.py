"""Finite differences, kernel bases, Richardson extrapolation, slope fits."""

from __future__ import annotations

import math

import numpy as np
import pytest

from skewcrit.errors import BelowFloor, InsufficientSamples, NonFiniteEvaluation, RankDeficient
from skewcrit.numerics import fd_jacobian, kernel_split, richardson_limit, slope_fit


def test_fd_jacobian_matches_analytic_on_smooth_map():
    def f(x):
        return np.array([x[0] ** 2 * x[1], np.sin(x[1]), x[0] + 3.0 * x[2]])

    x = np.array([0.7, -0.4, 1.2])
    expected = np.array(
        [
            [2 * 0.7 * -0.4, 0.7**2, 0.0],
            [0.0, np.cos(-0.4), 0.0],
            [1.0, 0.0, 3.0],
        ]
    )
    got = fd_jacobian(f, x)
    assert np.max(np.abs(got - expected)) < 1e-9


def test_fd_jacobian_rows_are_outputs_columns_inputs():
    def f(x):
        return np.array([x[0] + 2 * x[1]])

    jac = fd_jacobian(f, np.zeros(2))
    assert jac.shape == (1, 2)
    assert np.allclose(jac, [[1.0, 2.0]], atol=1e-10)


def test_fd_jacobian_rejects_non_finite_values():
    def f(x):
        return np.array([math.nan])

    with pytest.raises(NonFiniteEvaluation):
        fd_jacobian(f, np.array([0.0]))


def test_kernel_split_spans_the_nullspace():
    a = np.array([[1.0, 2.0, 3.0]])
    split = kernel_split(a)
    assert split.kernel_basis.shape == (3, 2)
    assert np.max(np.abs(a @ split.kernel_basis)) < 1e-12
    gram = split.kernel_basis.T @ split.kernel_basis
    assert np.max(np.abs(gram - np.eye(2))) < 1e-12
    assert split.complement_basis.shape == (3, 1)
    assert abs(np.linalg.det(a @ split.complement_basis)) > 1e-12


def test_kernel_split_sign_convention_is_reproducible():
    a = np.array([[0.0, 1.0]])
    split = kernel_split(a)
    # one kernel direction; first nonzero entry is made positive
    assert split.kernel_basis.shape == (2, 1)
    assert split.kernel_basis[0, 0] > 0

    split2 = kernel_split(a.copy())
    assert np.array_equal(split.kernel_basis, split2.kernel_basis)


def test_kernel_split_rejects_rank_deficient_rows():
    with pytest.raises(RankDeficient):
        kernel_split(np.array([[1.0, 2.0], [2.0, 4.0]]))
    split = kernel_split(np.eye(2))
    assert split.kernel_basis.shape == (2, 0)


def test_richardson_limit_is_exact_on_polynomials():
    hs = [0.1 / 2**k for k in range(7)]
    for poly in (
        lambda h: 2.0 + 3.0 * h,
        lambda h: 2.0 + 3.0 * h**2,
        lambda h: 5.0 - 2.0 * h + 3.0 * h**2 + h**3,
    ):
        got = richardson_limit([(h, poly(h)) for h in hs])
        assert abs(got - poly(0.0)) < 1e-12


def test_richardson_limit_handles_vector_samples():
    hs = [0.1 / 2**k for k in range(5)]
    samples = [(h, np.array([1.0 + h, 2.0 - 3.0 * h**2])) for h in hs]
    got = richardson_limit(samples)
    assert np.max(np.abs(got - np.array([1.0, 2.0]))) < 1e-12


def test_richardson_limit_with_order_gap_two_converges_on_even_series():
    hs = [0.4 / 2**k for k in range(6)]
    samples = [(h, math.cos(h)) for h in hs]  # 1 - h^2/2 + h^4/24 - ...
    got = richardson_limit(samples, order_gap=2)
    assert abs(got - 1.0) < 1e-13


def test_richardson_limit_needs_two_samples_and_decreasing_h():
    with pytest.raises(InsufficientSamples):
        richardson_limit([(0.1, 1.0)])
    with pytest.raises(ValueError):
        richardson_limit([(0.1, 1.0), (0.2, 1.0)])


def test_slope_fit_recovers_clean_power_laws():
    hs = [0.1 / 2**k for k in range(8)]
    for p in (1, 2, 3, 4):
        slope, r2 = slope_fit([(h, 0.7 * h**p) for h in hs])
        assert abs(slope - p) < 1e-10
        assert r2 > 0.999999


def test_slope_fit_drops_points_below_floor():
    pairs = [(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4), (0.0125, 1e-16)]
    slope, _ = slope_fit(pairs)
    assert abs(slope - 2.0) < 1e-10


def test_slope_fit_raises_when_everything_is_noise():
    pairs = [(0.1 / 2**k, 1e-16) for k in range(6)]
    with pytest.raises(BelowFloor):
        slope_fit(pairs)
