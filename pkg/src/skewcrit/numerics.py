"""Shared numerical kernels: differentiation, kernel splitting, extrapolation.

Conventions fixed here and used everywhere else:

* Jacobians are oriented rows = output components, columns = input
  coordinates, i.e. ``J[i, j] = d f_i / d x_j``.
* Central differences with per-coordinate steps
  ``cbrt(machine eps) * max(1, |x_j|)`` unless an explicit step is given.
* Kernel/complement bases come from the SVD with a deterministic sign
  convention (first nonzero entry of each basis vector positive), so
  repeated calls on the same matrix are bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BelowFloor,
    InsufficientSamples,
    NonFiniteEvaluation,
    RankDeficient,
)

__all__ = [
    "DEFAULT_STEP_SCALE",
    "fd_jacobian",
    "KernelSplit",
    "kernel_split",
    "richardson_limit",
    "slope_fit",
]

#: cube root of double-precision machine epsilon, the classic central
#: difference step scale balancing truncation against roundoff.
DEFAULT_STEP_SCALE = float(np.finfo(float).eps) ** (1.0 / 3.0)


def _require_finite(value, where):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluation(f"non-finite evaluation at {where}")
    return arr


def fd_jacobian(f, x, step=None):
    """Central-difference Jacobian of ``f`` at ``x``.

    Args:
        f: callable mapping a length-a vector to a length-b vector.
        x: evaluation point, length a.
        step: scalar or length-a array of steps; default is
            ``cbrt(eps) * max(1, |x_j|)`` per coordinate.

    Returns:
        (b, a) array with rows = output components.

    Raises:
        NonFiniteEvaluation: if any stencil evaluation is NaN/Inf.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("fd_jacobian expects a 1-d point")
    a = x.size
    if step is None:
        steps = DEFAULT_STEP_SCALE * np.maximum(1.0, np.abs(x))
    else:
        steps = np.broadcast_to(np.asarray(step, dtype=float), (a,)).copy()
        if np.any(steps <= 0):
            raise ValueError("steps must be positive")
    cols = []
    for j in range(a):
        xp = x.copy()
        xm = x.copy()
        xp[j] += steps[j]
        xm[j] -= steps[j]
        fp = _require_finite(f(xp), f"x + h*e_{j}")
        fm = _require_finite(f(xm), f"x - h*e_{j}")
        cols.append((fp - fm) / (2.0 * steps[j]))
    return np.column_stack(cols)


@dataclass(frozen=True)
class KernelSplit:
    """Orthonormal kernel and row-space bases of a full-row-rank matrix.

    ``kernel_basis`` is (n, n-m) and spans ker A; ``complement_basis`` is
    (n, m) and spans the row space, so A @ complement_basis is invertible.
    Together the columns form an orthonormal basis of R^n.
    """

    kernel_basis: np.ndarray
    complement_basis: np.ndarray
    singular_values: np.ndarray


def _fix_signs(columns):
    """Flip column signs so the first nonzero entry of each is positive."""
    out = columns.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        for v in col:
            if v != 0.0:
                if v < 0.0:
                    out[:, j] = -col
                break
    return out


def kernel_split(a, tol=None):
    """Split R^n into ker A and its orthogonal complement via the SVD.

    Args:
        a: (m, n) matrix with m <= n, expected full row rank.
        tol: rank tolerance; default ``1e-10 * largest singular value``.

    Returns:
        KernelSplit with deterministic, sign-fixed orthonormal bases.

    Raises:
        RankDeficient: if the m-th singular value is at or below ``tol``.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("kernel_split expects a matrix")
    m, n = a.shape
    if m > n:
        raise ValueError("kernel_split expects a wide matrix (m <= n)")
    _require_finite(a, "kernel_split input")
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    if tol is None:
        tol = 1e-10 * (s[0] if s.size else 0.0)
    if s.size < m or s[m - 1] <= tol:
        raise RankDeficient(
            f"matrix is rank deficient: singular values {s.tolist()}, tol {tol:g}"
        )
    complement = _fix_signs(vt[:m].T)
    kernel = _fix_signs(vt[m:].T)
    return KernelSplit(
        kernel_basis=kernel,
        complement_basis=complement,
        singular_values=s,
    )


def richardson_limit(samples, order_gap=1):
    """Extrapolate samples (h, value) to h -> 0.

    Assumes value(h) = L + C1*h^g + C2*h^(2g) + ... with g = ``order_gap``
    and runs Neville elimination in the variable h^g.

    Args:
        samples: sequence of (h, value) pairs, h strictly decreasing > 0;
            values may be scalars or vectors (consistent shape).
        order_gap: exponent gap g of the assumed error expansion.

    Returns:
        The deepest extrapolant, same shape as the values.

    Raises:
        InsufficientSamples: fewer than 2 samples.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InsufficientSamples("richardson_limit needs at least 2 samples")
    hs = np.array([float(h) for h, _ in samples])
    if np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("h values must be positive and strictly decreasing")
    if order_gap <= 0:
        raise ValueError("order_gap must be positive")
    xs = hs ** float(order_gap)
    table = [_require_finite(v, "richardson sample") for _, v in samples]
    n = len(table)
    for j in range(1, n):
        for k in range(n - 1, j - 1, -1):
            x_hi, x_lo = xs[k - j], xs[k]
            table[k] = (x_hi * table[k] - x_lo * table[k - 1]) / (x_hi - x_lo)
    return table[-1]


def slope_fit(pairs, floor=1e-14):
    """Least-squares slope of log(err) against log(h).

    Points with err <= ``floor`` are dropped before fitting.

    Args:
        pairs: sequence of (h, err), h > 0, err >= 0.
        floor: noise floor below which errors are discarded.

    Returns:
        (slope, r2) of the log-log fit.

    Raises:
        BelowFloor: fewer than 3 points survive the floor.
    """
    kept = [(float(h), float(e)) for h, e in pairs if float(e) > floor]
    if len(kept) < 3:
        raise BelowFloor(
            f"only {len(kept)} of {len(list(pairs))} points above floor {floor:g}"
        )
    log_h = np.log([h for h, _ in kept])
    log_e = np.log([e for _, e in kept])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    fitted = slope * log_h + intercept
    ss_res = float(np.sum((log_e - fitted) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(r2)
