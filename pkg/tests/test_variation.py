"""Problem families: solution curves, residual systems, group equivariance."""

from __future__ import annotations

import numpy as np
import pytest

from skewcrit.errors import (
    DataContactViolation,
    DegenerateHessian,
    GroupNotClosed,
    HypothesisViolated,
    SingularSystem,
)
from skewcrit.registry import example_config
from skewcrit.variation import (
    GroupAction,
    ProblemFamily,
    assemble_residual_system,
    data_contact_checks,
    equivariance_check,
    predict_solution_residual,
    solution_family,
    verify_gamma_contact,
)


def _family(name):
    cfg = example_config(name)
    return (
        cfg.family(),
        np.asarray(cfg.experiment.y, float),
        np.asarray(cfg.experiment.x0, float),
        cfg.solver,
    )


def test_family_members_agree_at_time_zero():
    fam, y, x0, _ = _family("trivial-alpha-perturbed")
    p1 = fam.problem(1, 0.0)
    p2 = fam.problem(2, 0.0)
    x = np.array([0.4, -0.2])
    assert np.allclose(p1.alpha.at(x), p2.alpha.at(x))
    assert np.allclose(p1.g.at(x), p2.g.at(x))


def test_solution_curves_start_at_the_shared_root():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c, gamma1, gamma2 = solution_family(fam, y, x0, settings)
    assert np.max(np.abs(x_c - np.array([0.7, 0.0]))) < 1e-10
    assert np.allclose(gamma1.value(y, 0.0), x_c, atol=1e-12)
    assert np.allclose(gamma2.value(y, 0.0), x_c, atol=1e-12)


def test_solution_curve_tracks_the_perturbed_root():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c, _, gamma2 = solution_family(fam, y, x0, settings)
    # alpha2 fiber component x2 + t^2 has root x2 = -t^2 at x1 = y
    t = 0.05
    got = gamma2.value(y, t)
    assert got[0] == pytest.approx(0.7, abs=1e-10)
    assert got[1] == pytest.approx(-(t**2), abs=1e-10)


def test_data_contact_checks_report_each_block():
    fam, y, x0, settings = _family("skew3d-cubic-perturbed")
    x = np.array([0.4, 0.0, 0.0])
    checks = data_contact_checks(fam, x, 3)
    assert set(checks) == {"alpha", "delta", "g"}


def test_gamma_contact_measures_the_claimed_order():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    est = verify_gamma_contact(fam, y, 2, x0, settings)
    assert abs(est.r_est - 2.0) <= 0.1
    assert np.allclose(est.residual, [0.0, -1.0], atol=1e-6)


def test_gamma_contact_rejects_an_inflated_data_claim():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    with pytest.raises(DataContactViolation):
        verify_gamma_contact(fam, y, 3, x0, settings)


def test_identical_family_is_machine_limited_at_any_claim():
    fam, y, x0, settings = _family("trivial-identical")
    est = verify_gamma_contact(fam, y, 2, x0, settings)
    assert est.machine_limited


def test_residual_system_of_fiber_perturbation_is_frozen():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c = np.array([0.7, 0.0])
    system = assemble_residual_system(fam, x_c, y, 2)
    assert np.allclose(system.matrix, [[0.0, 1.0], [1.0, 0.0]], atol=1e-9)
    assert np.allclose(system.constant, [1.0, 0.0], atol=1e-9)
    assert system.gamma_dot == pytest.approx(1.0, abs=1e-8)
    u = predict_solution_residual(system)
    assert np.allclose(u, [0.0, -1.0], atol=1e-9)


def test_residual_system_of_constraint_perturbation_is_frozen():
    fam, y, x0, settings = _family("trivial-g-perturbed")
    x_c = np.array([0.7, 0.0])
    system = assemble_residual_system(fam, x_c, y, 2)
    assert np.allclose(system.constant, [0.0, 0.5], atol=1e-9)
    u = predict_solution_residual(system)
    assert np.allclose(u, [-0.5, 0.0], atol=1e-9)


def test_residual_system_of_slope_perturbation_uses_descended_term():
    fam, y, x0, settings = _family("trivial-delta-perturbed")
    x_c = np.array([0.7, 0.0])
    system = assemble_residual_system(fam, x_c, y, 2)
    # the slope perturbation enters as res_delta^T alpha_W = 0.7 at y = 0.7
    assert np.allclose(system.constant, [0.7, 0.0], atol=1e-9)
    u = predict_solution_residual(system)
    assert np.allclose(u, [0.0, -0.7], atol=1e-9)


def test_residual_system_in_three_dimensions_is_frozen():
    fam, y, x0, settings = _family("skew3d-cubic-perturbed")
    x_c = np.array([0.4, 0.0, 0.0])
    system = assemble_residual_system(fam, x_c, y, 3)
    assert np.allclose(
        system.matrix,
        [[0.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.0, 0.0]],
        atol=1e-9,
    )
    assert np.allclose(system.constant, [0.4, 0.0, 0.0], atol=1e-9)
    u = predict_solution_residual(system)
    assert np.allclose(u, [0.0, 0.4, -0.4], atol=1e-9)


def test_prediction_matches_measured_solution_residual():
    for name, r in [
        ("trivial-alpha-perturbed", 2),
        ("trivial-g-perturbed", 2),
        ("trivial-delta-perturbed", 2),
        ("skew3d-cubic-perturbed", 3),
    ]:
        fam, y, x0, settings = _family(name)
        x_c, _, _ = solution_family(fam, y, x0, settings)
        system = assemble_residual_system(fam, x_c, y, r)
        predicted = predict_solution_residual(system)
        measured = verify_gamma_contact(fam, y, r, x0, settings).residual
        rel = np.max(np.abs(predicted - measured)) / (1.0 + np.max(np.abs(measured)))
        assert rel <= 1e-4, name


def test_index_swap_changes_nothing_at_order_two():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c = np.array([0.7, 0.0])
    u1 = predict_solution_residual(assemble_residual_system(fam, x_c, y, 2, index=1))
    u2 = predict_solution_residual(assemble_residual_system(fam, x_c, y, 2, index=2))
    assert np.max(np.abs(u1 - u2)) < 1e-6


def test_height_stretch_placements_coincide_for_preserving_families():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c = np.array([0.7, 0.0])
    us = [
        predict_solution_residual(
            assemble_residual_system(fam, x_c, y, 2, gamma_dot_placement=p)
        )
        for p in ("linear", "constant", "constant_pow_r")
    ]
    assert np.max(np.abs(us[0] - us[1])) < 1e-10
    assert np.max(np.abs(us[0] - us[2])) < 1e-10
    with pytest.raises(ValueError):
        assemble_residual_system(fam, x_c, y, 2, gamma_dot_placement="left")


def test_assembly_rejects_a_noncritical_base_point():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    with pytest.raises(ValueError):
        assemble_residual_system(fam, np.array([0.5, 0.3]), y, 2)


def test_assembly_rejects_a_degenerate_restriction():
    cfg = example_config("degenerate")
    fam = ProblemFamily.from_exprs(
        cfg.chart,
        ["x2", "0"],
        [["0"]],
        ["x1"],
        alpha2=["x2", "t^2"],
    )
    # every point with x2 = 0 satisfies the critical equations here
    with pytest.raises(DegenerateHessian):
        assemble_residual_system(fam, np.array([0.4, 0.0]), np.array([0.4]), 2)


def test_singular_prediction_system_is_reported():
    fam, y, x0, settings = _family("trivial-alpha-perturbed")
    x_c = np.array([0.7, 0.0])
    system = assemble_residual_system(fam, x_c, y, 2)
    broken = type(system)(
        matrix=np.zeros_like(system.matrix),
        constant=system.constant,
        gamma_dot=system.gamma_dot,
        d=system.d,
        m=system.m,
        condition_number=float("inf"),
    )
    with pytest.raises(SingularSystem):
        predict_solution_residual(broken)


def test_reflection_group_closes_with_order_two():
    cfg = example_config("reflection-symmetric")
    action = cfg.group_action()
    elements = action.elements()
    assert len(elements) == 2


def test_non_closing_generators_are_detected():
    action = GroupAction(
        generators=(
            (np.array([[2.0, 0.0], [0.0, 1.0]]), np.array([[1.0]])),
        )
    )
    with pytest.raises(GroupNotClosed):
        action.elements(cap=16)


def test_symmetric_family_passes_equivariance():
    cfg = example_config("reflection-symmetric")
    fam = cfg.family()
    rep = equivariance_check(
        fam,
        cfg.group_action(),
        np.asarray(cfg.experiment.y, float),
        2,
        np.asarray(cfg.experiment.x0, float),
        cfg.solver,
    )
    assert rep.max_discrepancy < 1e-8
    assert rep.group_order == 2
    assert rep.cloud_size == 20


def test_odd_perturbation_fails_the_alpha_residual_precheck():
    cfg = example_config("odd-perturbed")
    fam = cfg.family()
    with pytest.raises(HypothesisViolated) as exc:
        equivariance_check(
            fam,
            cfg.group_action(),
            np.asarray(cfg.experiment.y, float),
            2,
            np.asarray(cfg.experiment.x0, float),
            cfg.solver,
        )
    assert exc.value.kind == "data-residual equivariance (alpha)"
    assert exc.value.generator == 0


def test_group_with_wrong_target_action_fails_the_constraint_precheck():
    cfg = example_config("reflection-symmetric")
    fam = cfg.family()
    # fiber sign flip fixes alpha and the distribution, but pairing it
    # with a target flip breaks g(Ax) = B g(x)
    wrong = GroupAction(
        generators=(
            (np.array([[1.0, 0.0], [0.0, -1.0]]), np.array([[-1.0]])),
        )
    )
    with pytest.raises(HypothesisViolated) as exc:
        equivariance_check(
            fam,
            wrong,
            np.asarray(cfg.experiment.y, float),
            2,
            np.asarray(cfg.experiment.x0, float),
            cfg.solver,
        )
    assert "equivariance" in exc.value.kind or "invariance" in exc.value.kind
