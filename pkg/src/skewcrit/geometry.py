"""Problem geometry: charts, one-forms, graph distributions, skew Hessians.

Coordinate convention (fixed package-wide): ambient points are
``x = (w, e)`` where the trailing ``d`` coordinates ``e`` span the model
fiber of the distribution and the leading ``n - d`` coordinates ``w`` span
its complement.  A graph distribution has fiber
``{(delta(x) @ e, e) : e in R^d}`` at ``x``; the j-th graph basis vector is
``(delta(x)[:, j], e_j)``.

One-forms are stored by their components against the coordinate basis:
``pairing(alpha(x), v) = alpha(x) @ v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteEvaluation,
    NonGraph,
    NotSquare,
)
from .numerics import fd_jacobian

__all__ = [
    "AmbientChart",
    "OneForm",
    "GraphDistribution",
    "Constraint",
    "SkewProblem",
    "SkewHessianReport",
    "alpha_on_D",
    "alpha_on_d_jacobian",
    "F_map",
    "skew_hessian",
]

#: condition-number threshold above which a skew Hessian counts as degenerate
NONDEGENERACY_TOL = 1e8


def _vec(value, n, what):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise DimensionMismatch(f"{what}: expected shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluation(f"{what}: non-finite entries")
    return arr


def _mat(value, shape, what):
    arr = np.asarray(value, dtype=float)
    if arr.shape != shape:
        raise DimensionMismatch(f"{what}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluation(f"{what}: non-finite entries")
    return arr


@dataclass(frozen=True)
class AmbientChart:
    """Dimensions of the ambient space and its splitting.

    n ambient coordinates, m constraint equations, d = fiber dimension of
    the distribution.  Skew Hessians are square only when d = n - m; this
    is the equation/unknown balance, enforced here at construction.
    """

    n: int
    m: int
    d: int

    def __post_init__(self):
        if min(self.n, self.m, self.d) < 1:
            raise DimensionMismatch("chart dimensions must be positive")
        if self.m >= self.n:
            raise DimensionMismatch("need m < n for a proper constraint")
        if self.d != self.n - self.m:
            raise NotSquare(
                f"fiber dimension d={self.d} != n-m={self.n - self.m}: "
                "skew Hessian would not be square"
            )


@dataclass(frozen=True)
class OneForm:
    """A one-form on R^n given by its coefficient field.

    ``eval(x)`` returns the n components; optional ``jac(x)`` returns the
    n x n matrix with rows = components: jac[i][j] = d alpha_i / d x_j
    (same orientation as fd_jacobian).
    """

    n: int
    eval: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def at(self, x):
        return _vec(self.eval(np.asarray(x, dtype=float)), self.n, "one-form value")

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return _mat(self.jac(x), (self.n, self.n), "one-form jacobian")
        return fd_jacobian(lambda z: self.at(z), x)


@dataclass(frozen=True)
class GraphDistribution:
    """Rank-d distribution in graph form over the trailing coordinate block.

    ``delta(x)`` is the (n-d, d) matrix sending fiber coordinates into the
    complement block; optional ``delta_jac(x)`` is the (n-d, d, n) tensor of
    coordinate derivatives, used for analytic Hessians.
    """

    n: int
    d: int
    delta: Callable[[np.ndarray], np.ndarray]
    delta_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not (1 <= self.d < self.n):
            raise DimensionMismatch("need 1 <= d < n")

    def delta_at(self, x):
        shape = (self.n - self.d, self.d)
        return _mat(self.delta(np.asarray(x, dtype=float)), shape, "delta value")

    def basis_at(self, x):
        """Columns are the graph basis vectors (delta(x)[:, j], e_j)."""
        delta = self.delta_at(x)
        return np.vstack([delta, np.eye(self.d)])

    @classmethod
    def from_basis(cls, n, d, basis):
        """Convert a general basis field to graph form.

        ``basis(x)`` returns an (n, d) matrix of fiber-spanning columns.
        The returned distribution solves for delta lazily; evaluation
        raises NonGraph where the trailing block of the basis is singular.
        """

        def delta(x):
            b = _mat(basis(np.asarray(x, dtype=float)), (n, d), "basis field")
            top, bottom = b[: n - d], b[n - d :]
            try:
                sol = np.linalg.solve(bottom.T, top.T).T
            except np.linalg.LinAlgError as exc:
                raise NonGraph(
                    "fiber block of the basis is singular; distribution is "
                    "not a graph over the trailing coordinates here"
                ) from exc
            return sol

        return cls(n=n, d=d, delta=delta)


@dataclass(frozen=True)
class Constraint:
    """Submersion constraint g: R^n -> R^m with optional analytic Jacobian."""

    n: int
    m: int
    eval: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def at(self, x):
        return _vec(self.eval(np.asarray(x, dtype=float)), self.m, "constraint value")

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return _mat(self.jac(x), (self.m, self.n), "constraint jacobian")
        return fd_jacobian(lambda z: self.at(z), x)


@dataclass(frozen=True)
class SkewProblem:
    """A skew critical problem: one-form, graph distribution, constraint."""

    chart: AmbientChart
    alpha: OneForm
    dist: GraphDistribution
    g: Constraint

    def __post_init__(self):
        c = self.chart
        if self.alpha.n != c.n:
            raise DimensionMismatch("one-form dimension does not match chart")
        if (self.dist.n, self.dist.d) != (c.n, c.d):
            raise DimensionMismatch("distribution dimensions do not match chart")
        if (self.g.n, self.g.m) != (c.n, c.m):
            raise DimensionMismatch("constraint dimensions do not match chart")


@dataclass(frozen=True)
class SkewHessianReport:
    """Restricted derivative block and its conditioning.

    ``matrix`` is d x (n-m): rows follow the graph basis of the fiber,
    columns follow the kernel basis of the constraint derivative.
    ``at_critical_point`` stays "unverified" unless a converged solve
    re-stamps it; away from critical points the matrix is still useful as
    a Newton diagnostic but is extension-dependent.
    """

    matrix: np.ndarray
    condition_number: float
    nondegenerate: bool
    tolerance: float
    at_critical_point: str = "unverified"


def alpha_on_D(problem, x):
    """Pair the one-form with the graph basis: d components.

    Component j is pairing(alpha(x), (delta(x)[:, j], e_j)), i.e. the
    fiber component of alpha plus the complement components pushed through
    delta.
    """
    c = problem.chart
    x = _vec(x, c.n, "point")
    a = problem.alpha.at(x)
    delta = problem.dist.delta_at(x)
    w = c.n - c.d
    return a[w:] + delta.T @ a[:w]


def alpha_on_d_jacobian(problem, x):
    """Jacobian (d x n) of x -> alpha_on_D(problem, x).

    Uses analytic Jacobians when both alpha.jac and dist.delta_jac are
    provided; otherwise central differences on alpha_on_D itself.
    """
    c = problem.chart
    x = _vec(x, c.n, "point")
    if problem.alpha.jac is not None and problem.dist.delta_jac is not None:
        a = problem.alpha.at(x)
        ja = problem.alpha.jacobian(x)
        delta = problem.dist.delta_at(x)
        w = c.n - c.d
        djac = np.asarray(problem.dist.delta_jac(x), dtype=float)
        if djac.shape != (w, c.d, c.n):
            raise DimensionMismatch(
                f"delta_jac: expected shape {(w, c.d, c.n)}, got {djac.shape}"
            )
        # row j: d/dx_k [ a_{w+j} + sum_i delta[i,j] a_i ]
        out = ja[w:, :] + delta.T @ ja[:w, :] + np.einsum("ijk,i->jk", djac, a[:w])
        return out
    return fd_jacobian(lambda z: alpha_on_D(problem, z), x)


def F_map(problem, x):
    """The solver's target map: (alpha paired with the graph basis, g(x))."""
    return alpha_on_D(problem, x), problem.g.at(x)


def skew_hessian(problem, x, kernel_basis=None, tolerance=NONDEGENERACY_TOL):
    """Restricted derivative block at ``x`` with a conditioning verdict.

    H[j][k] = pairing(D(alpha_on_D)(x) @ u_k, e_j) with u_k the kernel
    basis of Dg(x) and e_j the graph basis.  Nondegenerate iff the matrix
    is square with 2-norm condition number below ``tolerance``.

    Away from a critical point the value depends on the chosen extension
    of the basis field; the report keeps at_critical_point="unverified".
    """
    from .numerics import kernel_split  # local import keeps module load light

    c = problem.chart
    x = _vec(x, c.n, "point")
    if c.d != c.n - c.m:
        raise NotSquare(f"d={c.d} != n-m={c.n - c.m}")
    if kernel_basis is None:
        kernel_basis = kernel_split(problem.g.jacobian(x)).kernel_basis
    jac = alpha_on_d_jacobian(problem, x)
    matrix = jac @ kernel_basis
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = float(np.linalg.cond(matrix))
    nondegenerate = bool(
        matrix.shape[0] == matrix.shape[1] and np.isfinite(cond) and cond < tolerance
    )
    return SkewHessianReport(
        matrix=matrix,
        condition_number=cond,
        nondegenerate=nondegenerate,
        tolerance=float(tolerance),
    )
