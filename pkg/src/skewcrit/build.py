"""Constructors turning expression lists into problems and families.

Everything built here carries analytic derivatives generated symbolically:
one-forms and constraints get coordinate Jacobians, distributions get the
full derivative tensor, and adapted families get t-derivatives to a fixed
order.  That keeps solver noise floors at machine precision and lets the
contact machinery use the exact residual path.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import exprlang as el
from .contact import AdaptedFamily
from .errors import DimensionMismatch
from .geometry import AmbientChart, Constraint, GraphDistribution, OneForm, SkewProblem

__all__ = [
    "compile_exprs",
    "one_form_from_exprs",
    "constraint_from_exprs",
    "distribution_from_exprs",
    "skew_problem_from_exprs",
    "adapted_family_from_exprs",
]

#: analytic t-derivative order generated for expression families
T_DERIV_ORDER = 8


def _parse_all(exprs, ctx):
    out = []
    for e in exprs:
        out.append(el.parse(e, ctx) if isinstance(e, str) else e)
    return out


def compile_exprs(exprs, n_vars, allow_t=True):
    """Parse a list of expression sources over x1..xn (and t).

    Returns (trees, eval) where eval(x, t) -> vector of values.
    """
    ctx = el.ExprContext(n_vars=n_vars, allow_t=allow_t)
    trees = _parse_all(exprs, ctx)

    def evaluate(x, t=0.0):
        return np.array([el.evaluate(e, x=x, t=t) for e in trees])

    return trees, evaluate


def _x_jacobian(trees, n_vars):
    rows = [[el.differentiate(e, f"x{j + 1}") for j in range(n_vars)] for e in trees]

    def jac(x, t=0.0):
        return np.array(
            [[el.evaluate(d, x=x, t=t) for d in row] for row in rows]
        )

    return jac


def one_form_from_exprs(exprs, n, t=None):
    """OneForm from n component expressions; ``t`` freezes a family slice."""
    if len(exprs) != n:
        raise DimensionMismatch(f"expected {n} components, got {len(exprs)}")
    trees, ev = compile_exprs(exprs, n)
    jac = _x_jacobian(trees, n)
    t_val = 0.0 if t is None else float(t)
    return OneForm(
        n=n,
        eval=lambda x: ev(x, t_val),
        jac=lambda x: jac(x, t_val),
    )


def constraint_from_exprs(exprs, n, m, t=None):
    if len(exprs) != m:
        raise DimensionMismatch(f"expected {m} components, got {len(exprs)}")
    trees, ev = compile_exprs(exprs, n)
    jac = _x_jacobian(trees, n)
    t_val = 0.0 if t is None else float(t)
    return Constraint(
        n=n,
        m=m,
        eval=lambda x: ev(x, t_val),
        jac=lambda x: jac(x, t_val),
    )


def distribution_from_exprs(rows, n, d, t=None):
    """GraphDistribution from an (n-d) x d nested list of expressions."""
    w = n - d
    if len(rows) != w or any(len(r) != d for r in rows):
        raise DimensionMismatch(f"delta must be {w} x {d} expressions")
    ctx = el.ExprContext(n_vars=n, allow_t=True)
    trees = [_parse_all(r, ctx) for r in rows]
    grads = [
        [[el.differentiate(e, f"x{k + 1}") for k in range(n)] for e in row]
        for row in trees
    ]
    t_val = 0.0 if t is None else float(t)

    def delta(x):
        return np.array(
            [[el.evaluate(e, x=x, t=t_val) for e in row] for row in trees]
        )

    def delta_jac(x):
        return np.array(
            [
                [[el.evaluate(g, x=x, t=t_val) for g in entry] for entry in row]
                for row in grads
            ]
        )

    return GraphDistribution(n=n, d=d, delta=delta, delta_jac=delta_jac)


def skew_problem_from_exprs(chart, alpha_exprs, delta_rows, g_exprs, t=None):
    """Assemble a SkewProblem from expression data (family slice at ``t``)."""
    return SkewProblem(
        chart=chart,
        alpha=one_form_from_exprs(alpha_exprs, chart.n, t=t),
        dist=distribution_from_exprs(delta_rows, chart.n, chart.d, t=t),
        g=constraint_from_exprs(g_exprs, chart.n, chart.m, t=t),
    )


def adapted_family_from_exprs(
    exprs,
    in_dim,
    target_h="t",
    max_order=T_DERIV_ORDER,
):
    """AdaptedFamily from expressions over x1..x_in_dim and t.

    target_h: "t" for height-preserving families, None for a codomain
    without height, or an expression source for a general height map.
    """
    ctx = el.ExprContext(n_vars=in_dim, allow_t=True)
    trees = _parse_all(exprs, ctx)

    levels = [trees]
    for _ in range(max_order):
        levels.append([el.differentiate(e, "t") for e in levels[-1]])

    def make_eval(nodes):
        def ev(x, t):
            return np.array([el.evaluate(e, x=x, t=t) for e in nodes])

        return ev

    t_derivs = tuple(make_eval(levels[k]) for k in range(1, max_order + 1))

    th = None
    th_dot = None
    if target_h == "t":
        th = lambda x, t: float(t)
        th_dot = lambda x, t: 1.0
    elif target_h is not None:
        h_tree = el.parse(target_h, ctx) if isinstance(target_h, str) else target_h
        h_dot_tree = el.differentiate(h_tree, "t")
        th = lambda x, t: float(el.evaluate(h_tree, x=x, t=t))
        th_dot = lambda x, t: float(el.evaluate(h_dot_tree, x=x, t=t))

    return AdaptedFamily(
        in_dim=in_dim,
        out_dim=len(trees),
        eval=make_eval(trees),
        t_derivs=t_derivs,
        target_h=th,
        target_h_dot=th_dot,
    )
