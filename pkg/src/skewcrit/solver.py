"""Newton solver and warm-started continuation for skew critical problems.

The root map is F(x) = (alpha paired with the graph basis, g(x)) with
target (0, y).  Each Newton step inverts DF through the two-block formula:
first move along the complement of ker Dg to match the constraint part,
then correct inside ker Dg through the restricted derivative block.  That
block is exactly the skew Hessian matrix, so degeneracy surfaces as
DegenerateHessian rather than a generic linear-algebra failure.

All functions are pure: problems and settings are immutable and results
are fresh objects, so concurrent use needs no locking.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import BranchJump, DegenerateHessian, MaxIterExceeded
from .geometry import (
    NONDEGENERACY_TOL,
    SkewHessianReport,
    alpha_on_D,
    alpha_on_d_jacobian,
    skew_hessian,
)
from .numerics import kernel_split

__all__ = [
    "NewtonSettings",
    "SolveResult",
    "ContinuationResult",
    "newton_step",
    "solve",
    "continuation",
]


@dataclass(frozen=True)
class NewtonSettings:
    """Iteration controls.

    damping scales the first trial step; with armijo=True the step is
    halved (up to 20 times) until the max-norm residual decreases.
    """

    tol_residual: float = 1e-12
    max_iter: int = 50
    damping: float = 1.0
    armijo: bool = True

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must be in (0, 1]")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_history: tuple[float, ...]
    hessian: Optional[SkewHessianReport]


@dataclass(frozen=True)
class ContinuationResult:
    """samples: list of (y, SolveResult); failures: list of (y, error)."""

    samples: tuple
    failures: tuple


def _residual(problem, x, y):
    f_alpha, f_g = alpha_on_D(problem, x), problem.g.at(x)
    return np.concatenate([f_alpha, f_g - y])


def newton_step(problem, x, y, hessian_tol=NONDEGENERACY_TOL):
    """One undamped Newton update u with F(x + u) ~ (0, y) to first order.

    Solves DF(x) u = (0, y) - F(x) by the block inversion: the constraint
    part through the complement of ker Dg, the skew part through the
    restricted block on ker Dg.

    Raises:
        DegenerateHessian: restricted block singular or condition number
            at/above ``hessian_tol``.
        RankDeficient: Dg(x) is not a submersion at x.
    """
    c = problem.chart
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w1 = -alpha_on_D(problem, x)
    w2 = y - problem.g.at(x)

    dg = problem.g.jacobian(x)
    split = kernel_split(dg)
    # constraint stage: u_tilde solves Dg u = w2 inside the complement
    u_tilde = split.complement_basis @ np.linalg.solve(
        dg @ split.complement_basis, w2
    )
    # skew stage: correct within ker Dg through the restricted block
    a_jac = alpha_on_d_jacobian(problem, x)
    block = a_jac @ split.kernel_basis
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = float(np.linalg.cond(block))
    if not (np.isfinite(cond) and cond < hessian_tol):
        raise DegenerateHessian(
            f"restricted block condition number {cond:g} exceeds {hessian_tol:g}"
        )
    rhs = w1 - a_jac @ u_tilde
    return u_tilde + split.kernel_basis @ np.linalg.solve(block, rhs)


def solve(problem, y, x0, settings=NewtonSettings()):
    """Newton iteration for F(x) = (0, y) from ``x0``.

    Returns a converged SolveResult whose Hessian report is re-stamped
    at_critical_point="verified".  Non-convergence raises MaxIterExceeded
    carrying the partial result.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    history = [float(np.max(np.abs(_residual(problem, x, y))))]
    iterations = 0
    while history[-1] > settings.tol_residual:
        if iterations >= settings.max_iter:
            partial = SolveResult(
                x=x,
                converged=False,
                iterations=iterations,
                residual_history=tuple(history),
                hessian=None,
            )
            raise MaxIterExceeded(
                f"no convergence in {settings.max_iter} iterations "
                f"(last residual {history[-1]:.3e})",
                result=partial,
            )
        u = newton_step(problem, x, y)
        lam = settings.damping
        if settings.armijo:
            best_x, best_norm = None, np.inf
            accepted = False
            for _ in range(21):
                trial = x + lam * u
                norm = float(np.max(np.abs(_residual(problem, trial, y))))
                if norm < best_norm:
                    best_x, best_norm = trial, norm
                if norm < (1.0 - 1e-4 * lam) * history[-1]:
                    x = trial
                    history.append(norm)
                    accepted = True
                    break
                lam *= 0.5
            if not accepted:
                # no halving achieved a decrease; take the best trial and let the
                # iteration cap decide whether this counts as divergence
                x = best_x
                history.append(best_norm)
        else:
            x = x + lam * u
            history.append(float(np.max(np.abs(_residual(problem, x, y)))))
        iterations += 1
    report = skew_hessian(problem, x)
    report = replace(report, at_critical_point="verified")
    return SolveResult(
        x=x,
        converged=True,
        iterations=iterations,
        residual_history=tuple(history),
        hessian=report,
    )


def continuation(
    problem,
    y_path,
    x0,
    settings=NewtonSettings(),
    jump_cap=None,
    predictor="previous",
):
    """Warm-started path following over constraint values ``y_path``.

    Per-point failures (including branch jumps past the cap and solutions
    with a degenerate Hessian) are recorded without aborting; successful
    samples continue to warm-start later points.

    Args:
        jump_cap: maximal allowed ||x_c(k+1) - x_c(k)||_inf; None derives
            10 * path spacing * a secant slope estimate (floored at 1).
        predictor: "previous" (last solution) or "secant" (linear
            extrapolation of the last two solutions).
    """
    if predictor not in ("previous", "secant"):
        raise ValueError("predictor must be 'previous' or 'secant'")
    samples = []
    failures = []
    xs = [np.asarray(x0, dtype=float)]
    ys = []
    for y in y_path:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if predictor == "secant" and len(xs) >= 3:
            start = xs[-1] + (xs[-1] - xs[-2])
        else:
            start = xs[-1]
        try:
            result = solve(problem, y, start, settings)
        except (MaxIterExceeded, DegenerateHessian) as exc:
            failures.append((y, exc))
            continue
        if len(ys) >= 1:
            step = float(np.max(np.abs(result.x - xs[-1])))
            cap = jump_cap
            if cap is None:
                spacing = float(np.max(np.abs(y - ys[-1])))
                if len(ys) >= 2:
                    prev_dx = float(np.max(np.abs(xs[-1] - xs[-2])))
                    prev_dy = float(np.max(np.abs(ys[-1] - ys[-2])))
                    slope = prev_dx / prev_dy if prev_dy > 0 else 1.0
                else:
                    slope = 1.0
                cap = 10.0 * spacing * max(slope, 1.0)
            if step > cap:
                failures.append(
                    (y, BranchJump(f"step {step:g} exceeds jump cap {cap:g}"))
                )
                continue
        if not result.hessian.nondegenerate:
            failures.append(
                (
                    y,
                    DegenerateHessian(
                        "converged but the skew Hessian is degenerate "
                        f"(cond {result.hessian.condition_number:g})"
                    ),
                )
            )
            continue
        samples.append((y, result))
        xs.append(result.x)
        ys.append(y)
    return ContinuationResult(samples=tuple(samples), failures=tuple(failures))
