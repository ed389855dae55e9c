"""Contact-order estimation and residual calculus for adapted families.

A family is a map f(x, t) whose domain carries the distinguished height
coordinate t (the last one); two families with f2 = f1 + O(t^r) have
contact of order r, and the residual is the coefficient
(1/r!) * d^r/dt^r (f2 - f1) at t = 0.  The residual transforms as a
tangent vector of the codomain, which is what the chart-transform check
verifies.

Numeric residuals divide the difference by t^r before extrapolating, which
amplifies roundoff at small t.  Extraction therefore runs on a noise-aware
window: only steps with h^r >= noise_floor * 1e7 are used (at most 7, with
a 3-point fallback), and slope fits drop errors below
max(1e-14, 30 * noise_floor).  ``noise_floor`` defaults to 1e-15 and
should be raised to the solver tolerance when the family values come from
Newton solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BaseMismatch,
    BelowFloor,
    InversionFailed,
    MissingTargetH,
    NotDiagonal,
    NotHCompatible,
    NotInZeroSection,
    PsiInversionFailed,
)
from .numerics import DEFAULT_STEP_SCALE, fd_jacobian, richardson_limit, slope_fit

__all__ = [
    "AdaptedFamily",
    "ContactEstimate",
    "ComposeReport",
    "InverseReport",
    "GraphBumpReport",
    "default_h_seq",
    "contact_estimate",
    "residual_chart_transform_check",
    "hat_divide",
    "hat_contact_drop_check",
    "fdot",
    "compose_residual_check",
    "inverse_residual_check",
    "graph_to_map",
    "graph_symmetry_bump_check",
    "distribution_residual",
]

BASE_MATCH_TOL = 1e-12
AMBIGUITY_SLOPE = 0.2
AMBIGUITY_R2 = 0.999


def default_h_seq(h0=0.1, count=11):
    """Geometric step sequence h0 * 2^-k, k = 0..count-1."""
    return tuple(h0 * 2.0**-k for k in range(count))


@dataclass(frozen=True)
class AdaptedFamily:
    """A t-family of maps in adapted charts.

    Fields:
        in_dim, out_dim: dimensions of the non-height coordinates.
        eval: (x, t) -> out_dim vector.
        t_derivs: optional tuple; entry k evaluates the (k+1)-th
            t-derivative at (x, t).
        target_h: height of the codomain composed with the family,
            (x, t) -> float; None when the codomain carries no height.
        target_h_dot: optional analytic t-derivative of target_h.
    """

    in_dim: int
    out_dim: int
    eval: Callable[[np.ndarray, float], np.ndarray]
    t_derivs: Optional[tuple] = None
    target_h: Optional[Callable[[np.ndarray, float], float]] = None
    target_h_dot: Optional[Callable[[np.ndarray, float], float]] = None

    def value(self, x, t):
        out = np.atleast_1d(np.asarray(self.eval(np.asarray(x, dtype=float), float(t)), dtype=float))
        if out.shape != (self.out_dim,):
            raise ValueError(
                f"family returned shape {out.shape}, expected ({self.out_dim},)"
            )
        return out

    def t_derivative(self, order, x, t):
        """Analytic t-derivative of the given order, or None if unavailable."""
        if self.t_derivs is None or order < 1 or order > len(self.t_derivs):
            return None
        out = self.t_derivs[order - 1](np.asarray(x, dtype=float), float(t))
        return np.atleast_1d(np.asarray(out, dtype=float))


@dataclass(frozen=True)
class ContactEstimate:
    """Outcome of a contact-order measurement.

    r_est is the fitted log-log slope (inf when every difference sits
    below the noise floor, method "machine_limited").  order_exponent is
    the reported integer exponent in the O(h^r) sense: the claimed order
    if one was given, else round(r_est) when the fit is unambiguous
    (|r_est - round| < 0.2 and r2 > 0.999), else None.  ``residual`` is
    exact (from t_derivs) when method == "analytic".
    """

    r_est: float
    r_claimed: Optional[int]
    residual: np.ndarray
    fit_r2: float
    h_seq: tuple
    method: str  # "analytic" | "slope_fit" | "machine_limited"
    order_exponent: Optional[int]
    errs: tuple

    @property
    def machine_limited(self):
        return self.method == "machine_limited"


def _residual_window(h_seq, r, noise_floor, max_points=7):
    kept = [h for h in h_seq if h**r >= noise_floor * 1e7]
    if len(kept) < 2:
        kept = list(h_seq[:3])
    return kept[:max_points]


def contact_estimate(f1, f2, x, h_seq=None, r_claimed=None, noise_floor=1e-15):
    """Measure the contact order of f2 against f1 at base point ``x``.

    The slope of log||f2 - f1||_inf against log h gives r_est.  The
    residual is computed analytically from t_derivs when both families
    carry them to the needed order, otherwise by Richardson extrapolation
    of (f2 - f1)/h^r over a noise-aware window.

    Raises:
        BaseMismatch: families disagree at t=0 beyond 1e-12.
    """
    if f1.out_dim != f2.out_dim or f1.in_dim != f2.in_dim:
        raise BaseMismatch("families have different dimensions")
    x = np.asarray(x, dtype=float)
    if h_seq is None:
        h_seq = default_h_seq()
    h_seq = tuple(float(h) for h in h_seq)

    base1 = f1.value(x, 0.0)
    base2 = f2.value(x, 0.0)
    if float(np.max(np.abs(base2 - base1))) > BASE_MATCH_TOL:
        raise BaseMismatch(
            f"families differ at t=0 by {float(np.max(np.abs(base2 - base1))):.3e}"
        )

    diffs = {h: f2.value(x, h) - f1.value(x, h) for h in h_seq}
    errs = tuple(float(np.max(np.abs(diffs[h]))) for h in h_seq)

    floor = max(1e-14, 30.0 * noise_floor)
    machine_limited = False
    try:
        # fit over the middle window: drop the 2 largest steps, floor the rest
        r_est, fit_r2 = slope_fit(list(zip(h_seq[2:], errs[2:])), floor=floor)
    except BelowFloor:
        machine_limited = True
        r_est, fit_r2 = math.inf, float("nan")

    if machine_limited:
        return ContactEstimate(
            r_est=r_est,
            r_claimed=r_claimed,
            residual=np.zeros(f1.out_dim),
            fit_r2=fit_r2,
            h_seq=h_seq,
            method="machine_limited",
            order_exponent=None,
            errs=errs,
        )

    rounded = max(1, round(r_est))
    unambiguous = abs(r_est - round(r_est)) < AMBIGUITY_SLOPE and fit_r2 > AMBIGUITY_R2
    if r_claimed is not None:
        order_exponent = int(r_claimed)
        r_used = int(r_claimed)
    else:
        order_exponent = rounded if unambiguous else None
        r_used = rounded

    d1 = f1.t_derivative(r_used, x, 0.0)
    d2 = f2.t_derivative(r_used, x, 0.0)
    if d1 is not None and d2 is not None:
        residual = (d2 - d1) / math.factorial(r_used)
        method = "analytic"
    else:
        window = _residual_window(h_seq, r_used, noise_floor)
        samples = [(h, diffs[h] / h**r_used) for h in window]
        residual = richardson_limit(samples, order_gap=1)
        method = "slope_fit"

    return ContactEstimate(
        r_est=float(r_est),
        r_claimed=r_claimed,
        residual=np.asarray(residual, dtype=float),
        fit_r2=float(fit_r2),
        h_seq=h_seq,
        method=method,
        order_exponent=order_exponent,
        errs=errs,
    )


def residual_chart_transform_check(f1, f2, x, r, phi, phi_jac=None, h_seq=None):
    """Verify the residual transforms as a codomain tangent vector.

    Returns (pushforward, transformed_residual): Dphi at the base value
    applied to res(f2, f1), versus the residual of (phi . f2, phi . f1).
    The two agree within discretization error for a diffeomorphism phi.
    """
    x = np.asarray(x, dtype=float)
    est = contact_estimate(f1, f2, x, h_seq=h_seq, r_claimed=r)
    base = f1.value(x, 0.0)
    if phi_jac is not None:
        dphi = np.asarray(phi_jac(base), dtype=float)
    else:
        dphi = fd_jacobian(lambda v: np.atleast_1d(np.asarray(phi(v), dtype=float)), base)
    pushforward = dphi @ est.residual

    def composed(fam):
        def ev(z, t):
            return np.atleast_1d(np.asarray(phi(fam.value(z, t)), dtype=float))

        return AdaptedFamily(in_dim=fam.in_dim, out_dim=dphi.shape[0], eval=ev)

    est2 = contact_estimate(composed(f1), composed(f2), x, h_seq=h_seq, r_claimed=r)
    return pushforward, est2.residual


def hat_divide(f, zero_tol=1e-12):
    """Divide a family vanishing at t=0 by t.

    Returns the family f^(x, t) = f(x, t)/t for t != 0 and the first
    t-derivative at t = 0, with t-derivatives of one order less derived
    from f's when present.  Evaluation raises NotInZeroSection wherever
    |f(x, 0)| exceeds ``zero_tol``.
    """

    def check_zero(x):
        v = f.value(x, 0.0)
        if float(np.max(np.abs(v))) > zero_tol:
            raise NotInZeroSection(
                f"family does not vanish at t=0 (|f| = {float(np.max(np.abs(v))):.3e})"
            )

    def first_deriv_at_zero(x):
        d = f.t_derivative(1, x, 0.0)
        if d is not None:
            return d
        # one-sided extrapolated difference quotient
        small = default_h_seq(h0=1e-2, count=6)
        samples = [(h, f.value(x, h) / h) for h in small]
        return richardson_limit(samples, order_gap=1)

    def hat_eval(x, t):
        check_zero(x)
        if t == 0.0:
            return first_deriv_at_zero(x)
        return f.value(x, t) / t

    hat_derivs = None
    if f.t_derivs is not None and len(f.t_derivs) >= 2:

        def make(order):
            def deriv(x, t):
                if t == 0.0:
                    # k-th derivative of f/t at 0 is f^(k+1)(0)/(k+1)
                    return f.t_derivative(order + 1, x, 0.0) / (order + 1.0)
                # finite Leibniz sum for d^k (f * t^-1)
                total = np.zeros(f.out_dim)
                for j in range(order + 1):
                    if j == 0:
                        fj = f.value(x, t)
                    else:
                        fj = f.t_derivative(j, x, t)
                    k_j = order - j
                    coeff = (
                        math.comb(order, j)
                        * (-1.0) ** k_j
                        * math.factorial(k_j)
                        * t ** (-(k_j + 1))
                    )
                    total = total + coeff * fj
                return total

            return deriv

        hat_derivs = tuple(make(k) for k in range(1, len(f.t_derivs)))

    return AdaptedFamily(
        in_dim=f.in_dim,
        out_dim=f.out_dim,
        eval=hat_eval,
        t_derivs=hat_derivs,
        target_h=f.target_h,
        target_h_dot=f.target_h_dot,
    )


@dataclass(frozen=True)
class HatDropReport:
    original: ContactEstimate
    hatted: ContactEstimate
    discrepancy: float
    passed: bool


def hat_contact_drop_check(f1, f2, x, r, h_seq=None, tol=1e-8):
    """Check res^{r-1}(f2/t, f1/t) equals res^r(f2, f1) for r >= 2."""
    if r < 2:
        raise ValueError("hat_contact_drop_check needs r >= 2")
    x = np.asarray(x, dtype=float)
    est = contact_estimate(f1, f2, x, h_seq=h_seq, r_claimed=r)
    est_hat = contact_estimate(
        hat_divide(f1), hat_divide(f2), x, h_seq=h_seq, r_claimed=r - 1
    )
    disc = float(np.max(np.abs(est.residual - est_hat.residual)))
    return HatDropReport(
        original=est, hatted=est_hat, discrepancy=disc, passed=disc <= tol
    )


def fdot(f, x, zero_tol=1e-12):
    """Height stretch of the family at (x, 0).

    The scalar multiplying the domain height form in d(h_N . f); equals 1
    for height-preserving families.  Analytic when target_h_dot is given,
    otherwise a central difference in t.

    Raises:
        MissingTargetH: the family has no codomain height map.
        NotHCompatible: the family does not send the zero level into the
            codomain zero level.
    """
    if f.target_h is None:
        raise MissingTargetH("family carries no codomain height map")
    x = np.asarray(x, dtype=float)
    h0 = float(f.target_h(x, 0.0))
    if abs(h0) > zero_tol:
        raise NotHCompatible(
            f"family leaves the zero level: target height {h0:.3e} at t=0"
        )
    if f.target_h_dot is not None:
        return float(f.target_h_dot(x, 0.0))
    step = DEFAULT_STEP_SCALE
    return (float(f.target_h(x, step)) - float(f.target_h(x, -step))) / (2.0 * step)


@dataclass(frozen=True)
class ComposeReport:
    predicted: np.ndarray
    measured: np.ndarray
    discrepancy: float
    passed: bool
    estimate: ContactEstimate


def compose_residual_check(
    f1, f2, g1, g2, x, r, h_seq=None, tol=1e-6, use_index_swap=False
):
    """Verify the composition rule for residuals.

    res^r(g2.f2, g1.f1)(x) should equal
    fdot(f2, x)^r * res^r(g2, g1)(n) + Dg1(n) @ res^r(f2, f1)(x)
    with n the common base value f(x, 0).  With ``use_index_swap`` (valid
    for r >= 2) the other index placement (Dg2, fdot(f1)) is used.

    The measured side composes the families and re-estimates, so it is a
    genuinely independent construction from the predicted side.
    """
    x = np.asarray(x, dtype=float)
    if use_index_swap and r < 2:
        raise ValueError("index swap needs r >= 2")
    n0 = f1.value(x, 0.0)

    res_f = contact_estimate(f1, f2, x, h_seq=h_seq, r_claimed=r).residual
    res_g = contact_estimate(g1, g2, n0, h_seq=h_seq, r_claimed=r).residual

    f_for_dot = f1 if use_index_swap else f2
    g_for_jac = g2 if use_index_swap else g1
    stretch = fdot(f_for_dot, x)
    dg = fd_jacobian(lambda v: g_for_jac.value(v, 0.0), n0)
    predicted = stretch**r * res_g + dg @ res_f

    def composed(f, g):
        def ev(z, t):
            return g.value(f.value(z, t), float(f.target_h(z, t)))

        target_h = None
        if g.target_h is not None:

            def target(z, t):
                return float(g.target_h(f.value(z, t), float(f.target_h(z, t))))

            target_h = target
        return AdaptedFamily(
            in_dim=f.in_dim, out_dim=g.out_dim, eval=ev, target_h=target_h
        )

    est = contact_estimate(composed(f1, g1), composed(f2, g2), x, h_seq=h_seq, r_claimed=r)
    disc = float(np.max(np.abs(predicted - est.residual)))
    rel = disc / (1.0 + float(np.max(np.abs(est.residual))))
    return ComposeReport(
        predicted=predicted,
        measured=est.residual,
        discrepancy=rel,
        passed=rel <= tol,
        estimate=est,
    )


def _newton_invert(func, target, x0, tol=1e-12, max_iter=50, error=InversionFailed):
    """Solve func(x) = target by Newton with fd Jacobian."""
    x = np.asarray(x0, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    for _ in range(max_iter):
        res = np.atleast_1d(func(x)) - target
        if float(np.max(np.abs(res))) <= tol:
            return x
        jac = fd_jacobian(lambda z: np.atleast_1d(func(z)), x)
        try:
            x = x - np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise error(f"singular derivative during inversion at {x}") from exc
    raise error(f"no convergence inverting to target {target}")


@dataclass(frozen=True)
class InverseReport:
    predicted: np.ndarray
    measured: np.ndarray
    discrepancy: float
    passed: bool
    estimate: ContactEstimate


def inverse_residual_check(f1, f2, x, r, h_seq=None, tol=1e-5):
    """Verify the inverse-family residual formula.

    For height-preserving invertible families with f2 = f1 + O(t^r), the
    inverses satisfy res^r(f2^-1, f1^-1)(n) = -Df1(x,0)^{-1} res^r(f2,f1)(x)
    at n = f(x, 0).  Height preservation makes the inverse's height
    stretch exactly 1; NotHCompatible is raised when |target_h - t| is
    beyond tolerance at probe points.
    """
    x = np.asarray(x, dtype=float)
    if h_seq is None:
        h_seq = default_h_seq()
    for f in (f1, f2):
        if f.target_h is None:
            raise MissingTargetH("inverse check needs codomain heights")
        for t_probe in (0.0, h_seq[0], h_seq[len(h_seq) // 2]):
            if abs(float(f.target_h(x, t_probe)) - t_probe) > 1e-10:
                raise NotHCompatible(
                    "inverse residual formula implemented for height-"
                    "preserving families only (target_h must equal t)"
                )

    n0 = f1.value(x, 0.0)
    res_f = contact_estimate(f1, f2, x, h_seq=h_seq, r_claimed=r).residual
    df1 = fd_jacobian(lambda z: f1.value(z, 0.0), x)
    predicted = -np.linalg.solve(df1, res_f)

    def inverse(fam):
        def ev(y, t):
            return _newton_invert(lambda z: fam.value(z, t), y, x)

        return AdaptedFamily(
            in_dim=fam.out_dim,
            out_dim=fam.in_dim,
            eval=ev,
            target_h=lambda y, t: t,
        )

    est = contact_estimate(
        inverse(f1), inverse(f2), n0, h_seq=h_seq, r_claimed=r, noise_floor=1e-12
    )
    disc = float(np.max(np.abs(predicted - est.residual)))
    rel = disc / (1.0 + float(np.max(np.abs(est.residual))))
    return InverseReport(
        predicted=predicted,
        measured=est.residual,
        discrepancy=rel,
        passed=rel <= tol,
        estimate=est,
    )


def graph_to_map(gamma, box, samples=9, newton_tol=1e-12, newton_max_iter=50):
    """Convert a graph family over R x R into a map family.

    ``gamma`` must have in_dim 1 and out_dim 2 (components pi1, pi2) and
    restrict at t=0 to a diffeomorphism onto the diagonal; ``box`` is the
    (lo, hi) working interval checked at ``samples`` points.

    The returned family evaluates f(m, t) = pi2(gamma(x*, t)) where x*
    solves pi1(gamma(x*, t)) = m by Newton from m.

    Raises:
        NotDiagonal: gamma at t=0 misses the diagonal or has a critical
            projection derivative in the box.
        PsiInversionFailed: Newton on the projection does not converge.
    """
    if gamma.in_dim != 1 or gamma.out_dim != 2:
        raise ValueError("graph_to_map expects in_dim=1, out_dim=2")
    lo, hi = float(box[0]), float(box[1])
    if not lo < hi:
        raise ValueError("box must be (lo, hi) with lo < hi")
    for s in np.linspace(lo, hi, samples):
        v = gamma.value(np.array([s]), 0.0)
        if abs(v[0] - v[1]) > 1e-10:
            raise NotDiagonal(
                f"gamma(., 0) is off the diagonal at {s:g}: {v[0]!r} vs {v[1]!r}"
            )
        step = DEFAULT_STEP_SCALE * max(1.0, abs(s))
        d = (
            gamma.value(np.array([s + step]), 0.0)[0]
            - gamma.value(np.array([s - step]), 0.0)[0]
        ) / (2.0 * step)
        if abs(d) < 1e-8:
            raise NotDiagonal(
                f"projection of gamma(., 0) is critical at {s:g} (slope {d:.2e})"
            )

    def ev(m, t):
        m = np.asarray(m, dtype=float)
        xstar = _newton_invert(
            lambda z: gamma.value(z, t)[:1],
            m[:1],
            m[:1],
            tol=newton_tol,
            max_iter=newton_max_iter,
            error=PsiInversionFailed,
        )
        return gamma.value(xstar, t)[1:]

    return AdaptedFamily(in_dim=1, out_dim=1, eval=ev)


@dataclass(frozen=True)
class GraphBumpReport:
    """Outcome of the graph symmetry/bump comparison.

    gamma_residual is res^r of the graph pair (components pi1, pi2);
    symmetric is True when the two components agree within tolerance; the
    induced map families then gain one contact order, otherwise their
    residual equals the component difference (pi2 - pi1).
    """

    gamma_estimate: ContactEstimate
    map_estimate: ContactEstimate
    symmetric: bool
    component_difference: float
    expected_map_residual: np.ndarray


def graph_symmetry_bump_check(gamma1, gamma2, x, r, box=None, h_seq=None, sym_tol=1e-10):
    """Compare graph-family contact with the induced map-family contact."""
    x = np.asarray(x, dtype=float)
    if box is None:
        box = (float(x[0]) - 0.5, float(x[0]) + 0.5)
    est_gamma = contact_estimate(gamma1, gamma2, x, h_seq=h_seq, r_claimed=r)
    diff = float(est_gamma.residual[1] - est_gamma.residual[0])
    symmetric = abs(diff) <= max(
        sym_tol, sym_tol * float(np.max(np.abs(est_gamma.residual)))
    )
    f1 = graph_to_map(gamma1, box)
    f2 = graph_to_map(gamma2, box)
    m0 = gamma1.value(x, 0.0)[:1]
    map_claim = None if symmetric else r
    est_map = contact_estimate(
        f1, f2, m0, h_seq=h_seq, r_claimed=map_claim, noise_floor=1e-12
    )
    return GraphBumpReport(
        gamma_estimate=est_gamma,
        map_estimate=est_map,
        symmetric=symmetric,
        component_difference=diff,
        expected_map_residual=np.array([diff]),
    )


def distribution_residual(dist1, dist2, x, r, shape, h_seq=None, noise_floor=1e-15):
    """Residual of two graph-distribution families as a matrix.

    ``dist1``/``dist2`` are AdaptedFamily objects over the flattened
    (row-major) delta entries; ``shape`` restores the (n-d, d) layout.
    The result maps the fiber block into the complement block, which is
    the graph-chart realization of a Grassmann tangent vector; verticality
    is automatic in this chart.
    """
    est = contact_estimate(
        dist1, dist2, x, h_seq=h_seq, r_claimed=r, noise_floor=noise_floor
    )
    return est.residual.reshape(shape)
