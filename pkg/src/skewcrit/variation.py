"""Families of skew problems: solution contact, residual prediction, symmetry.

A ProblemFamily holds two parametric skew problems over the family
parameter t that coincide at t = 0.  The solution map of each member
problem (constraint value y -> critical point x) is itself a family, and
its residual against the unperturbed solution solves a linear system
assembled purely from data residuals and the skew Hessian at the base
critical point.  That system is what assemble_residual_system builds and
predict_solution_residual solves; verify_gamma_contact measures the same
residual directly from warm-started solves so the two routes stay
independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contact import AdaptedFamily, ContactEstimate, contact_estimate, default_h_seq
from .errors import (
    DataContactViolation,
    DegenerateHessian,
    GroupNotClosed,
    HypothesisViolated,
    SingularSystem,
)
from .geometry import alpha_on_D, alpha_on_d_jacobian
from .solver import NewtonSettings, solve

__all__ = [
    "ProblemFamily",
    "ResidualSystem",
    "GroupAction",
    "EquivarianceReport",
    "solve_family",
    "solution_family",
    "data_contact_checks",
    "verify_gamma_contact",
    "assemble_residual_system",
    "predict_solution_residual",
    "equivariance_check",
]

#: data families must meet the claimed order minus this slack in slope fits
DATA_SLOPE_SLACK = 0.1

#: condition cap beyond which the assembled system counts as singular
SYSTEM_COND_CAP = 1e12


@dataclass(frozen=True)
class ProblemFamily:
    """Two t-parametrized skew problems sharing a chart, equal at t=0.

    ``problem(i, t)`` freezes member i in {1, 2} at parameter t.  The
    alpha/delta/g families expose the raw data for contact estimation;
    delta families are flattened row-major to (n-d)*d components.
    """

    chart: "AmbientChart"
    problem: Callable[[int, float], "SkewProblem"]
    alpha_families: tuple
    delta_families: tuple
    g_families: tuple

    @classmethod
    def from_exprs(
        cls,
        chart,
        alpha1,
        delta1,
        g1,
        alpha2=None,
        delta2=None,
        g2=None,
    ):
        """Build from expression lists; missing member-2 data reuse member 1."""
        from .build import adapted_family_from_exprs, skew_problem_from_exprs

        alpha2 = alpha1 if alpha2 is None else alpha2
        delta2 = delta1 if delta2 is None else delta2
        g2 = g1 if g2 is None else g2
        data = {1: (alpha1, delta1, g1), 2: (alpha2, delta2, g2)}

        def build_problem(i, t):
            a, dl, g = data[i]
            return skew_problem_from_exprs(chart, a, dl, g, t=t)

        def fam(exprs):
            return adapted_family_from_exprs(exprs, chart.n, target_h=None)

        def flat(rows):
            return [e for row in rows for e in row]

        return cls(
            chart=chart,
            problem=build_problem,
            alpha_families=(fam(alpha1), fam(alpha2)),
            delta_families=(fam(flat(delta1)), fam(flat(delta2))),
            g_families=(fam(g1), fam(g2)),
        )


def solve_family(family, i, y, t, x0, settings=NewtonSettings()):
    """Solve member ``i`` frozen at parameter ``t``; never mixes t values."""
    return solve(family.problem(i, t), y, x0, settings)


def solution_family(family, y, x0, settings=NewtonSettings()):
    """Solution maps of both members as adapted families over y.

    Returns (x_c, gamma1, gamma2) where x_c solves the shared t=0 problem
    and each gamma is an AdaptedFamily evaluating y -> x by a Newton solve
    of the frozen-t problem, warm-started at x_c and cached per (i, t).
    Warm-starting from the base critical point keeps every solve on the
    same branch and makes evaluation order irrelevant.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = solve(family.problem(1, 0.0), y, x0, settings)
    x_c = base.x
    caches = ({}, {})

    def make(i):
        cache = caches[i - 1]

        def ev(y_val, t):
            key = float(t)
            if key not in cache:
                if key == 0.0:
                    cache[key] = x_c
                else:
                    cache[key] = solve(
                        family.problem(i, key), y_val, x_c, settings
                    ).x
            return cache[key]

        return AdaptedFamily(in_dim=family.chart.m, out_dim=family.chart.n, eval=ev)

    return x_c, make(1), make(2)


def _data_contact_check(name, fam1, fam2, x, r, h_seq):
    """Check one datum family pair has contact >= r at x.

    Uses exact t-derivatives when both families carry them (lower-order
    derivatives of the difference must vanish), else the slope fit.
    Returns a description dict; raises DataContactViolation on failure.
    """
    analytic_depth = 0
    if fam1.t_derivs is not None and fam2.t_derivs is not None:
        analytic_depth = min(len(fam1.t_derivs), len(fam2.t_derivs))
    if analytic_depth >= r - 1 and r >= 1:
        worst = 0.0
        for k in range(1, r):
            d1 = fam1.t_derivative(k, x, 0.0)
            d2 = fam2.t_derivative(k, x, 0.0)
            worst = max(worst, float(np.max(np.abs(d2 - d1))))
        base_gap = float(np.max(np.abs(fam2.value(x, 0.0) - fam1.value(x, 0.0))))
        worst = max(worst, base_gap)
        if worst > 1e-10:
            raise DataContactViolation(
                f"{name}: derivative of order < {r} does not vanish "
                f"(|d^k diff| = {worst:.3e})"
            )
        return {"name": name, "mode": "analytic", "max_lower_derivative": worst}
    est = contact_estimate(fam1, fam2, x, h_seq=h_seq)
    if est.machine_limited:
        return {"name": name, "mode": "machine_limited", "slope": None}
    if est.r_est < r - DATA_SLOPE_SLACK:
        raise DataContactViolation(
            f"{name}: fitted slope {est.r_est:.3f} below claimed order {r}"
        )
    return {"name": name, "mode": "slope_fit", "slope": est.r_est}


def data_contact_checks(family, x, r, h_seq=None):
    """Check all three data family pairs have contact >= r at x.

    Returns a dict of per-datum descriptions; raises DataContactViolation
    naming the offending datum otherwise.
    """
    if h_seq is None:
        h_seq = default_h_seq()
    return {
        "alpha": _data_contact_check(
            "alpha", family.alpha_families[0], family.alpha_families[1], x, r, h_seq
        ),
        "delta": _data_contact_check(
            "delta", family.delta_families[0], family.delta_families[1], x, r, h_seq
        ),
        "g": _data_contact_check(
            "g", family.g_families[0], family.g_families[1], x, r, h_seq
        ),
    }


def verify_gamma_contact(
    family, y, r, x0, settings=NewtonSettings(), h_seq=None
):
    """Measure the solution-family contact order for a data contact claim.

    Prechecks that alpha, delta, and g family pairs have contact >= r at
    the base critical point (DataContactViolation otherwise), then
    estimates the contact of the two solution families at y and returns
    that estimate.  Callers compare estimate.r_est against r; identical
    members come back machine_limited rather than with a fitted slope.
    """
    if h_seq is None:
        h_seq = default_h_seq()
    x_c, gamma1, gamma2 = solution_family(family, y, x0, settings)
    data_contact_checks(family, x_c, r, h_seq)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return contact_estimate(
        gamma1,
        gamma2,
        y,
        h_seq=h_seq,
        r_claimed=r,
        noise_floor=settings.tol_residual,
    )


@dataclass(frozen=True)
class ResidualSystem:
    """Linear system A u = -b determining the solution residual.

    Rows 1..d come from the one-form equation: the skew-Hessian block
    (times the height stretch gamma_dot) against u, with constants from
    the one-form residual paired with the graph basis plus the descended
    one-form applied to the distribution residual.  Rows d+1..d+m are the
    constraint derivative against u with the constraint residual as
    constant.  gamma_dot is identically 1 for the height-preserving
    families this package builds.
    """

    matrix: np.ndarray
    constant: np.ndarray
    gamma_dot: float
    d: int
    m: int
    condition_number: float


def assemble_residual_system(
    family,
    x_c,
    y_c,
    r,
    h_seq=None,
    index=1,
    gamma_dot_placement="linear",
):
    """Assemble the (d+m) x n system for the solution residual at x_c.

    ``index`` selects which member supplies the linearized blocks (both
    agree at t=0; exposing the choice makes the index-swap property
    checkable).  ``gamma_dot_placement`` selects where the height stretch
    multiplies ("linear" term, "constant" terms, or "constant_pow_r");
    all readings coincide because gamma_dot = 1 here.
    """
    if index not in (1, 2):
        raise ValueError("index must be 1 or 2")
    if gamma_dot_placement not in ("linear", "constant", "constant_pow_r"):
        raise ValueError("unknown gamma_dot_placement")
    if h_seq is None:
        h_seq = default_h_seq()
    x_c = np.asarray(x_c, dtype=float)
    y_c = np.atleast_1d(np.asarray(y_c, dtype=float))
    chart = family.chart
    n, m, d = chart.n, chart.m, chart.d
    w = n - d

    base = family.problem(index, 0.0)
    crit = float(np.max(np.abs(alpha_on_D(base, x_c))))
    crit = max(crit, float(np.max(np.abs(base.g.at(x_c) - y_c))))
    if crit > 1e-8:
        raise ValueError(
            f"x_c is not a skew critical point at y_c (worst defect {crit:.3e}); "
            "the descended pairing would be ill-defined"
        )

    res_alpha = contact_estimate(
        family.alpha_families[0], family.alpha_families[1], x_c, h_seq=h_seq, r_claimed=r
    ).residual
    res_g = contact_estimate(
        family.g_families[0], family.g_families[1], x_c, h_seq=h_seq, r_claimed=r
    ).residual
    res_delta = contact_estimate(
        family.delta_families[0], family.delta_families[1], x_c, h_seq=h_seq, r_claimed=r
    ).residual.reshape((w, d))

    alpha_vals = base.alpha.at(x_c)
    delta0 = base.dist.delta_at(x_c)
    # one-form residual paired with the graph basis vectors
    paired = res_alpha[w:] + delta0.T @ res_alpha[:w]
    # descended one-form applied to the distribution residual columns
    descended = res_delta.T @ alpha_vals[:w]

    gamma_dot = 1.0
    a_block = alpha_on_d_jacobian(base, x_c)
    g_block = base.g.jacobian(x_c)
    b_f = paired + descended
    if gamma_dot_placement == "linear":
        a_block = gamma_dot * a_block
    elif gamma_dot_placement == "constant":
        b_f = gamma_dot * b_f
    else:
        b_f = gamma_dot**r * b_f

    matrix = np.vstack([a_block, g_block])
    constant = np.concatenate([b_f, res_g])
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = float(np.linalg.cond(matrix))
    if not np.isfinite(cond) or cond > SYSTEM_COND_CAP:
        raise DegenerateHessian(
            f"residual system is rank-deficient (condition number {cond:g})"
        )
    return ResidualSystem(
        matrix=matrix,
        constant=constant,
        gamma_dot=gamma_dot,
        d=d,
        m=m,
        condition_number=cond,
    )


def predict_solution_residual(system):
    """Solve the assembled system for the solution residual u."""
    if not np.isfinite(system.condition_number) or (
        system.condition_number > SYSTEM_COND_CAP
    ):
        raise SingularSystem(
            f"residual system condition number {system.condition_number:g}"
        )
    try:
        return np.linalg.solve(system.matrix, -system.constant)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("residual system is singular") from exc


# --- symmetry ----------------------------------------------------------------


@dataclass(frozen=True)
class GroupAction:
    """Finite group acting linearly on the ambient and constraint spaces.

    generators: sequence of (tau_M, tau_N) matrix pairs, tau_M of shape
    (n, n) acting on points and tangents, tau_N of shape (m, m) acting on
    constraint values.
    """

    generators: tuple

    def elements(self, cap=64):
        """BFS closure of the generators; GroupNotClosed beyond ``cap``."""
        mats = [
            (np.asarray(a, dtype=float), np.asarray(b, dtype=float))
            for a, b in self.generators
        ]
        if not mats:
            return []
        n = mats[0][0].shape[0]
        m = mats[0][1].shape[0]
        ident = (np.eye(n), np.eye(m))

        def key(pair):
            return (
                np.round(pair[0], 9).tobytes(),
                np.round(pair[1], 9).tobytes(),
            )

        seen = {key(ident): ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for a, b in frontier:
                for ga, gb in mats:
                    cand = (ga @ a, gb @ b)
                    k = key(cand)
                    if k not in seen:
                        if len(seen) >= cap:
                            raise GroupNotClosed(
                                f"group closure exceeds cap {cap}"
                            )
                        seen[k] = cand
                        nxt.append(cand)
            frontier = nxt
        return list(seen.values())


@dataclass(frozen=True)
class EquivarianceReport:
    generator_discrepancies: tuple
    max_discrepancy: float
    group_order: int
    cloud_size: int


def _graph_transform(a_mat, delta, w):
    """Induced action of a_mat on graph matrices: the fiber-block quotient."""
    top = a_mat[:w, :w] @ delta + a_mat[:w, w:]
    bottom = a_mat[w:, :w] @ delta + a_mat[w:, w:]
    return np.linalg.solve(bottom.T, top.T).T


def _alpha_residual_field(family, h_seq, r):
    def field(x):
        return contact_estimate(
            family.alpha_families[0],
            family.alpha_families[1],
            x,
            h_seq=h_seq,
            r_claimed=r,
        ).residual

    return field


def equivariance_check(
    family,
    action,
    y,
    r,
    x0,
    settings=NewtonSettings(),
    h_seq=None,
    seed=0,
    cloud_size=20,
    invariance_tol=1e-8,
    residual_tol=1e-6,
    closure_cap=64,
):
    """Check the solution residual is equivariant under the group action.

    Prechecks on a seeded sample cloud, per generator: invariance of the
    t=0 data (one-form on tangents, distribution, constraint equivariance)
    and equivariance of the data residuals.  Any failure raises
    HypothesisViolated naming the clause and generator.  The main check
    compares tau_M @ res(y) with res(tau_N @ y) for each generator.
    """
    if h_seq is None:
        h_seq = default_h_seq()
    chart = family.chart
    n, m, d = chart.n, chart.m, chart.d
    w = n - d
    elements = action.elements(cap=closure_cap)

    y = np.atleast_1d(np.asarray(y, dtype=float))
    base1 = family.problem(1, 0.0)
    x_c = solve(base1, y, x0, settings).x

    rng = np.random.default_rng(seed)
    cloud = x_c + rng.uniform(-0.5, 0.5, size=(cloud_size, n))

    res_alpha_field = _alpha_residual_field(family, h_seq, r)

    def res_g_field(x):
        return contact_estimate(
            family.g_families[0], family.g_families[1], x, h_seq=h_seq, r_claimed=r
        ).residual

    def res_delta_field(x):
        return contact_estimate(
            family.delta_families[0],
            family.delta_families[1],
            x,
            h_seq=h_seq,
            r_claimed=r,
        ).residual.reshape((w, d))

    for gen_idx, (a_raw, b_raw) in enumerate(action.generators):
        a_mat = np.asarray(a_raw, dtype=float)
        b_mat = np.asarray(b_raw, dtype=float)
        for x in cloud:
            ax = a_mat @ x
            # one-form invariance on tangents of the zero level
            gap = float(
                np.max(np.abs(a_mat.T @ base1.alpha.at(ax) - base1.alpha.at(x)))
            )
            if gap > invariance_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: one-form invariance fails by {gap:.3e}",
                    kind="alpha invariance",
                    generator=gen_idx,
                )
            # constraint equivariance
            gap = float(np.max(np.abs(base1.g.at(ax) - b_mat @ base1.g.at(x))))
            if gap > invariance_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: constraint equivariance fails by {gap:.3e}",
                    kind="constraint equivariance",
                    generator=gen_idx,
                )
            # distribution invariance, in graph coordinates
            try:
                transformed = _graph_transform(a_mat, base1.dist.delta_at(x), w)
            except np.linalg.LinAlgError:
                raise HypothesisViolated(
                    f"generator {gen_idx}: transformed distribution is not a graph",
                    kind="distribution invariance",
                    generator=gen_idx,
                )
            gap = float(np.max(np.abs(transformed - base1.dist.delta_at(ax))))
            if gap > invariance_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: distribution invariance fails by {gap:.3e}",
                    kind="distribution invariance",
                    generator=gen_idx,
                )
            # data-residual equivariance: one-form residual
            gap = float(
                np.max(np.abs(a_mat.T @ res_alpha_field(ax) - res_alpha_field(x)))
            )
            if gap > residual_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: one-form residual equivariance "
                    f"fails by {gap:.3e}",
                    kind="data-residual equivariance (alpha)",
                    generator=gen_idx,
                )
            # constraint residual
            gap = float(np.max(np.abs(res_g_field(ax) - b_mat @ res_g_field(x))))
            if gap > residual_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: constraint residual equivariance "
                    f"fails by {gap:.3e}",
                    kind="data-residual equivariance (g)",
                    generator=gen_idx,
                )
            # distribution residual, pushed through the graph-transform
            # derivative at the base graph matrix
            r_here = res_delta_field(x)
            delta0 = base1.dist.delta_at(x)
            s = 1e-6
            pushed = (
                _graph_transform(a_mat, delta0 + s * r_here, w)
                - _graph_transform(a_mat, delta0 - s * r_here, w)
            ) / (2.0 * s)
            gap = float(np.max(np.abs(pushed - res_delta_field(ax))))
            if gap > residual_tol:
                raise HypothesisViolated(
                    f"generator {gen_idx}: distribution residual equivariance "
                    f"fails by {gap:.3e}",
                    kind="data-residual equivariance (delta)",
                    generator=gen_idx,
                )

    # main check: solution residual equivariance per generator
    discrepancies = []
    _, gamma1, gamma2 = solution_family(family, y, x0, settings)
    res_at_y = contact_estimate(
        gamma1, gamma2, y, h_seq=h_seq, r_claimed=r, noise_floor=settings.tol_residual
    ).residual
    for a_raw, b_raw in action.generators:
        a_mat = np.asarray(a_raw, dtype=float)
        b_mat = np.asarray(b_raw, dtype=float)
        y_img = b_mat @ y
        _, gamma1_i, gamma2_i = solution_family(
            family, y_img, a_mat @ x_c, settings
        )
        res_img = contact_estimate(
            gamma1_i,
            gamma2_i,
            y_img,
            h_seq=h_seq,
            r_claimed=r,
            noise_floor=settings.tol_residual,
        ).residual
        discrepancies.append(float(np.max(np.abs(a_mat @ res_at_y - res_img))))
    return EquivarianceReport(
        generator_discrepancies=tuple(discrepancies),
        max_discrepancy=max(discrepancies) if discrepancies else 0.0,
        group_order=len(elements),
        cloud_size=cloud_size,
    )
