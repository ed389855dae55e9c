"""Acceptance checks: the library's structural claims as pass/fail items.

Each check function returns CheckResult entries with a stable name, the
tolerance it enforced, and a short detail string.  The CLI verify command
and the test suite both run these, so a claim can only pass one way.
Checks are deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .build import adapted_family_from_exprs
from .contact import (
    AdaptedFamily,
    compose_residual_check,
    contact_estimate,
    default_h_seq,
    graph_symmetry_bump_check,
    hat_contact_drop_check,
    hat_divide,
    inverse_residual_check,
)
from .errors import HypothesisViolated, SkewCritError
from .registry import example_config
from .solver import solve
from .variation import (
    assemble_residual_system,
    equivariance_check,
    predict_solution_residual,
    verify_gamma_contact,
)

__all__ = ["CheckResult", "SUITES", "run_suite", "serialize_results"]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class CheckResult:
    name: str
    suite: str
    passed: bool
    tolerance: Optional[float]
    detail: str


def _result(name, suite, passed, tolerance, detail):
    return CheckResult(
        name=name, suite=suite, passed=bool(passed), tolerance=tolerance, detail=detail
    )


def _poly(coeffs, var="x1"):
    """Expression text for sum_k coeffs[k] * var^k with parenthesized numbers."""
    parts = []
    for k, c in enumerate(coeffs):
        if k == 0:
            parts.append(f"({c!r})")
        elif k == 1:
            parts.append(f"({c!r})*{var}")
        else:
            parts.append(f"({c!r})*{var}^{k}")
    return " + ".join(parts)


def _round(v, digits=3):
    return float(np.round(v, digits))


# --- solver suite -------------------------------------------------------------


def check_solver_roots():
    """Known-root solves land within 1e-10 and contract quadratically."""
    tol = 1e-10
    worst = 0.0
    trivial = example_config("trivial").problem()
    for y in (-1.0, 0.0, 0.7, 1.0):
        res = solve(trivial, np.array([y]), np.array([0.5, 0.3]))
        worst = max(worst, float(np.max(np.abs(res.x - np.array([y, 0.0])))))
    skew3d = example_config("skew3d").problem()
    for y in (-0.3, 0.0, 0.4, 1.0):
        res = solve(skew3d, np.array([y]), np.array([y, 0.1, -0.1]))
        worst = max(worst, float(np.max(np.abs(res.x - np.array([y, 0.0, 0.0])))))
    roots_ok = worst <= tol

    far = solve(skew3d, np.array([0.4]), np.array([0.4, 0.5, -0.5]))
    history = far.residual_history
    noise = 32.0 * _EPS * max(1.0, history[0])
    contraction_ok = True
    pairs = 0
    for rk, rk1 in zip(history, history[1:]):
        if rk < 1e-3 and rk1 > noise:
            pairs += 1
            if rk1 > 10.0 * rk * rk:
                contraction_ok = False
    results = [
        _result(
            "solver roots",
            "solver",
            roots_ok,
            tol,
            f"worst root error {worst:.2e} over 8 known-root solves",
        ),
        _result(
            "quadratic contraction",
            "solver",
            contraction_ok,
            None,
            f"{pairs} residual pairs below 1e-3 checked against 10*r^2",
        ),
    ]
    return results


def check_local_uniqueness(seed=0):
    """Seeded starts in a radius-0.2 ball all reach the same root."""
    tol = 1e-8
    rng = np.random.default_rng(seed)
    cases = [
        (example_config("trivial").problem(), np.array([0.7]), np.array([0.7, 0.0])),
        (
            example_config("skew3d").problem(),
            np.array([0.4]),
            np.array([0.4, 0.0, 0.0]),
        ),
    ]
    worst = 0.0
    for problem, y, root in cases:
        n = root.shape[0]
        for _ in range(20):
            direction = rng.normal(size=n)
            direction /= float(np.linalg.norm(direction))
            radius = 0.2 * float(rng.uniform()) ** (1.0 / n)
            start = root + radius * direction
            res = solve(problem, y, start)
            worst = max(worst, float(np.max(np.abs(res.x - root))))
    return [
        _result(
            "local uniqueness",
            "solver",
            worst <= tol,
            tol,
            f"40 ball-sampled starts, worst distance to root {worst:.2e}",
        )
    ]


# --- contact suite ------------------------------------------------------------


def check_contact_calibration():
    """Exact power-law differences t^p * c(x) calibrate slope and residual."""
    x = np.array([0.3])
    c_exprs = ["1 + x1^2", "cos(x1)"]
    c_val = np.array([1.0 + 0.3**2, np.cos(0.3)])
    slope_tol, analytic_tol, richardson_tol = 0.05, 1e-8, 1e-6
    worst_slope, worst_analytic, worst_richardson = 0.0, 0.0, 0.0
    methods_ok = True
    for p in (1, 2, 3, 4):
        f1 = adapted_family_from_exprs(["sin(x1)", "x1^2"], 1, target_h=None)
        f2 = adapted_family_from_exprs(
            [f"sin(x1) + t^{p}*({c_exprs[0]})", f"x1^2 + t^{p}*({c_exprs[1]})"],
            1,
            target_h=None,
        )
        est = contact_estimate(f1, f2, x, r_claimed=p)
        worst_slope = max(worst_slope, abs(est.r_est - p))
        methods_ok = methods_ok and est.method == "analytic"
        worst_analytic = max(worst_analytic, float(np.max(np.abs(est.residual - c_val))))
        stripped = [
            AdaptedFamily(in_dim=f.in_dim, out_dim=f.out_dim, eval=f.eval)
            for f in (f1, f2)
        ]
        est_num = contact_estimate(stripped[0], stripped[1], x, r_claimed=p)
        methods_ok = methods_ok and est_num.method == "slope_fit"
        worst_richardson = max(
            worst_richardson, float(np.max(np.abs(est_num.residual - c_val)))
        )
    return [
        _result(
            "contact slope calibration",
            "contact",
            worst_slope <= slope_tol,
            slope_tol,
            f"orders 1..4, worst slope deviation {worst_slope:.3f}",
        ),
        _result(
            "analytic residual calibration",
            "contact",
            methods_ok and worst_analytic <= analytic_tol,
            analytic_tol,
            f"worst analytic residual error {worst_analytic:.2e}",
        ),
        _result(
            "extrapolated residual calibration",
            "contact",
            methods_ok and worst_richardson <= richardson_tol,
            richardson_tol,
            f"worst extrapolated residual error {worst_richardson:.2e}",
        ),
    ]


def _random_family_pair(rng, r, stretch):
    """Scalar polynomial family pair with contact r and height stretch*t."""
    base = _poly([_round(v) for v in rng.uniform(-1.5, 1.5, 3)])
    shared = _poly([_round(v) for v in rng.uniform(-1.0, 1.0, 2)])
    gap = _poly([_round(v) for v in rng.uniform(0.5, 1.5, 2) * rng.choice([-1, 1], 2)])
    src1 = f"{base} + t*({shared})"
    src2 = f"{src1} + t^{r}*({gap})"
    f1 = adapted_family_from_exprs([src1], 1, target_h=f"({stretch!r})*t")
    f2 = adapted_family_from_exprs([src2], 1, target_h=f"({stretch!r})*t")
    return f1, f2


def check_composition_law(seed=0):
    """Composite residual equals the two-term prediction, including swap."""
    tol = 1e-6
    f1 = adapted_family_from_exprs(["x1 + t^2"], 1, target_h="t")
    f2 = adapted_family_from_exprs(["x1 + 2*t^2"], 1, target_h="t")
    g1 = adapted_family_from_exprs(["x1^2 + t^2"], 1, target_h=None)
    g2 = adapted_family_from_exprs(["x1^2 + 2*t^2"], 1, target_h=None)
    x = np.array([0.5])
    rep = compose_residual_check(f1, f2, g1, g2, x, r=2, tol=tol)
    worked_ok = (
        rep.passed
        and abs(float(rep.predicted[0]) - 2.0) <= 1e-9
        and abs(float(rep.measured[0]) - 2.0) <= tol
    )

    rng = np.random.default_rng(seed)
    worst, worst_swap = 0.0, 0.0
    for i in range(25):
        r = (1, 2, 3)[i % 3]
        stretch = (0.5, 1.0, 2.0)[i % 3]
        fa, fb = _random_family_pair(rng, r, stretch)
        ga, gb = _random_family_pair(rng, r, 1.0)
        x0 = np.array([_round(rng.uniform(-0.7, 0.7))])
        rep_i = compose_residual_check(fa, fb, ga, gb, x0, r=r, tol=tol)
        worst = max(worst, rep_i.discrepancy)
        if r >= 2:
            rep_s = compose_residual_check(
                fa, fb, ga, gb, x0, r=r, tol=tol, use_index_swap=True
            )
            worst_swap = max(worst_swap, rep_s.discrepancy)
    return [
        _result(
            "composition worked example",
            "contact",
            worked_ok,
            tol,
            f"predicted {float(rep.predicted[0])!r}, measured "
            f"{float(rep.measured[0])!r} at base 0.5",
        ),
        _result(
            "composition random suite",
            "contact",
            worst <= tol,
            tol,
            f"25 seeded polynomial pairs, worst relative discrepancy {worst:.2e}",
        ),
        _result(
            "composition index swap",
            "contact",
            worst_swap <= tol,
            tol,
            f"swapped-index prediction, worst relative discrepancy {worst_swap:.2e}",
        ),
    ]


def check_hat_drop():
    """Dividing by the height drops the contact order, preserving residual."""
    tol = 1e-8
    cont_tol = 1e-6
    suites = [
        (["t*x1"], ["t*x1 + t^3"], 3, np.array([0.4])),
        (["t*sin(x1)"], ["t*sin(x1) + t^4*x1^2"], 4, np.array([1.0])),
        (
            ["t*(1 + x1)", "t*x1^2"],
            ["t*(1 + x1) + t^3*(2 + x1)", "t*x1^2 + t^3*(1 - x1)"],
            3,
            np.array([0.25]),
        ),
    ]
    worst, worst_cont = 0.0, 0.0
    for src1, src2, r, x in suites:
        f1 = adapted_family_from_exprs(src1, 1, target_h=None)
        f2 = adapted_family_from_exprs(src2, 1, target_h=None)
        rep = hat_contact_drop_check(f1, f2, x, r=r, tol=tol)
        worst = max(worst, rep.discrepancy)
        for f in (f1, f2):
            hat = hat_divide(f)
            gap = float(np.max(np.abs(hat.value(x, 1e-7) - hat.value(x, 0.0))))
            worst_cont = max(worst_cont, gap)
    return [
        _result(
            "hat residual drop",
            "contact",
            worst <= tol,
            tol,
            f"3 analytic families, worst residual gap {worst:.2e}",
        ),
        _result(
            "hat continuity",
            "contact",
            worst_cont <= cont_tol,
            cont_tol,
            f"divided families near t=0, worst jump {worst_cont:.2e}",
        ),
    ]


def check_inverse_contact(seed=0):
    """Inverse families keep the contact order and the predicted residual."""
    slope_slack = 0.1
    tol = 1e-5
    f1 = adapted_family_from_exprs(["x1 + t"], 1, target_h="t")
    f2 = adapted_family_from_exprs(["x1 + t + t^2"], 1, target_h="t")
    rep_a = inverse_residual_check(f1, f2, np.array([0.3]), r=2, tol=tol)
    ok_a = rep_a.passed and abs(float(rep_a.predicted[0]) + 1.0) <= 1e-9

    f3 = adapted_family_from_exprs(["2*x1"], 1, target_h="t")
    f4 = adapted_family_from_exprs(["2*x1 + t^3"], 1, target_h="t")
    rep_b = inverse_residual_check(f3, f4, np.array([0.3]), r=3, tol=tol)
    ok_b = rep_b.passed and abs(float(rep_b.predicted[0]) + 0.5) <= 1e-9

    rng = np.random.default_rng(seed)
    worst_slope_gap = 0.0
    for i in range(10):
        r = 2 if i % 2 == 0 else 3
        a = _round(rng.uniform(1.0, 2.0))
        b = _round(rng.uniform(0.0, 0.8))
        e = [_round(v) for v in rng.uniform(0.5, 1.5, 2) * rng.choice([-1, 1], 2)]
        src1 = f"({a!r})*x1 + ({b!r})*x1^3"
        src2 = f"{src1} + t^{r}*({_poly(e)})"
        g1 = adapted_family_from_exprs([src1], 1, target_h="t")
        g2 = adapted_family_from_exprs([src2], 1, target_h="t")
        x0 = np.array([_round(rng.uniform(-0.5, 0.5))])
        rep = inverse_residual_check(g1, g2, x0, r=r, tol=tol)
        worst_slope_gap = max(worst_slope_gap, r - rep.estimate.r_est)
    return [
        _result(
            "inverse worked examples",
            "contact",
            ok_a and ok_b,
            tol,
            f"predicted {float(rep_a.predicted[0])!r} and "
            f"{float(rep_b.predicted[0])!r}, both matched",
        ),
        _result(
            "inverse contact slopes",
            "contact",
            worst_slope_gap <= slope_slack,
            slope_slack,
            f"10 seeded monotone families, worst slope shortfall "
            f"{worst_slope_gap:.3f}",
        ),
    ]


def _graph_pair(rng, r, symmetric):
    """Seeded scalar graph pair over the diagonal with a t^r bump."""
    c = [_round(rng.uniform(0.5, 1.5)), _round(rng.uniform(0.5, 1.5))]
    s = [_round(rng.uniform(0.5, 1.5)), _round(rng.uniform(0.5, 1.5))]
    base2 = f"x1 + t*({_poly(c)})"
    gamma1 = adapted_family_from_exprs(["x1", base2], 1, target_h=None)
    bump = f"t^{r}*({_poly(s)})"
    if symmetric:
        src = [f"x1 + {bump}", f"{base2} + {bump}"]
    else:
        src = ["x1", f"{base2} + {bump}"]
    gamma2 = adapted_family_from_exprs(src, 1, target_h=None)
    return gamma1, gamma2, s


def check_graph_bump(seed=0):
    """Symmetric graph bumps gain an order; asymmetric ones report the gap."""
    slope_gain = 0.9
    slope_slack = 0.1
    res_tol = 1e-6
    rng = np.random.default_rng(seed)
    box = (-0.6, 0.6)
    sym_ok, asym_slope_gap, asym_res_gap = True, 0.0, 0.0
    details = []
    for i in range(6):
        r = 2 if i % 2 == 0 else 3
        x = np.array([_round(rng.uniform(-0.3, 0.3))])
        g1, g2, _ = _graph_pair(rng, r, symmetric=True)
        rep = graph_symmetry_bump_check(g1, g2, x, r=r, box=box)
        if not rep.symmetric:
            sym_ok = False
        if not rep.map_estimate.machine_limited and (
            rep.map_estimate.r_est < r + slope_gain
        ):
            sym_ok = False
            details.append(f"sym slope {rep.map_estimate.r_est:.2f} at r={r}")
        g1, g2, s = _graph_pair(rng, r, symmetric=False)
        rep = graph_symmetry_bump_check(g1, g2, x, r=r, box=box)
        if rep.symmetric:
            sym_ok = False
        asym_slope_gap = max(asym_slope_gap, abs(rep.map_estimate.r_est - r))
        asym_res_gap = max(
            asym_res_gap,
            float(
                np.max(np.abs(rep.map_estimate.residual - rep.expected_map_residual))
            ),
        )
    return [
        _result(
            "graph bump symmetric",
            "contact",
            sym_ok,
            slope_gain,
            "6 seeded symmetric bumps all gained an order"
            + ("" if not details else f" except: {'; '.join(details)}"),
        ),
        _result(
            "graph bump asymmetric slope",
            "contact",
            asym_slope_gap <= slope_slack,
            slope_slack,
            f"worst slope deviation {asym_slope_gap:.3f}",
        ),
        _result(
            "graph bump asymmetric residual",
            "contact",
            asym_res_gap <= res_tol,
            res_tol,
            f"worst gap to component difference {asym_res_gap:.2e}",
        ),
    ]


# --- variation suite ----------------------------------------------------------


def _family_case(name):
    cfg = example_config(name)
    fam = cfg.family()
    y = np.asarray(cfg.experiment.y, dtype=float)
    x0 = np.asarray(cfg.experiment.x0, dtype=float)
    return cfg, fam, y, x0


def check_solution_contact():
    """Solution families inherit the contact order of their data."""
    slack = 0.1
    gaps = []
    for name, r in (("trivial-alpha-perturbed", 2), ("skew3d-cubic-perturbed", 3)):
        cfg, fam, y, x0 = _family_case(name)
        est = verify_gamma_contact(fam, y, r, x0, cfg.solver, cfg.h_seq())
        gaps.append((name, float(est.r_est), r))
    ok = all(abs(got - want) <= slack for _, got, want in gaps)
    detail = "; ".join(f"{n}: slope {got:.3f} for order {want}" for n, got, want in gaps)
    return [_result("solution contact", "variation", ok, slack, detail)]


def check_residual_prediction():
    """The assembled linear system predicts the measured solution residual."""
    rel_tol = 1e-4
    swap_tol = 1e-6
    worst = 0.0
    details = []
    for name in (
        "trivial-alpha-perturbed",
        "trivial-g-perturbed",
        "trivial-delta-perturbed",
    ):
        cfg, fam, y, x0 = _family_case(name)
        r = cfg.experiment.r_claimed
        base = solve(fam.problem(1, 0.0), y, x0, cfg.solver)
        system = assemble_residual_system(fam, base.x, y, r, h_seq=cfg.h_seq())
        predicted = predict_solution_residual(system)
        measured = verify_gamma_contact(
            fam, y, r, x0, cfg.solver, cfg.h_seq()
        ).residual
        gap = float(np.max(np.abs(predicted - measured)))
        rel = gap / (1.0 + float(np.max(np.abs(measured))))
        worst = max(worst, rel)
        details.append(f"{name}: relative gap {rel:.2e}")

    cfg, fam, y, x0 = _family_case("trivial-alpha-perturbed")
    base = solve(fam.problem(1, 0.0), y, x0, cfg.solver)
    u1 = predict_solution_residual(
        assemble_residual_system(fam, base.x, y, 2, h_seq=cfg.h_seq(), index=1)
    )
    u2 = predict_solution_residual(
        assemble_residual_system(fam, base.x, y, 2, h_seq=cfg.h_seq(), index=2)
    )
    swap_rel = float(np.max(np.abs(u1 - u2))) / (1.0 + float(np.max(np.abs(u1))))
    return [
        _result(
            "residual prediction",
            "variation",
            worst <= rel_tol,
            rel_tol,
            "; ".join(details),
        ),
        _result(
            "residual prediction index swap",
            "variation",
            swap_rel <= swap_tol,
            swap_tol,
            f"index-1 vs index-2 assembly, relative gap {swap_rel:.2e}",
        ),
    ]


def check_equivariance(seed=0):
    """Reflection symmetry passes; the odd perturbation is rejected early."""
    tol = 1e-8
    cfg, fam, y, x0 = _family_case("reflection-symmetric")
    action = cfg.group_action()
    report = equivariance_check(
        fam, action, y, cfg.experiment.r_claimed, x0, cfg.solver, cfg.h_seq(), seed=seed
    )
    sym_ok = report.max_discrepancy < tol

    cfg2, fam2, y2, x02 = _family_case("odd-perturbed")
    action2 = cfg2.group_action()
    rejected = False
    kind = ""
    try:
        equivariance_check(
            fam2,
            action2,
            y2,
            cfg2.experiment.r_claimed,
            x02,
            cfg2.solver,
            cfg2.h_seq(),
            seed=seed,
        )
    except HypothesisViolated as exc:
        rejected = exc.kind is not None and exc.kind.startswith(
            "data-residual equivariance"
        )
        kind = exc.kind or ""
    return [
        _result(
            "equivariance symmetric family",
            "variation",
            sym_ok,
            tol,
            f"max generator discrepancy {report.max_discrepancy:.2e}, "
            f"group order {report.group_order}",
        ),
        _result(
            "equivariance hypothesis rejection",
            "variation",
            rejected,
            None,
            f"odd perturbation rejected at precheck '{kind}'",
        ),
    ]


# --- assembly -----------------------------------------------------------------

SUITES = {
    "solver": (check_solver_roots, check_local_uniqueness),
    "contact": (
        check_contact_calibration,
        check_composition_law,
        check_hat_drop,
        check_inverse_contact,
        check_graph_bump,
    ),
    "variation": (
        check_solution_contact,
        check_residual_prediction,
        check_equivariance,
    ),
}


def run_suite(suite="all", seed=0):
    """Run one named suite (or all) and return the CheckResult list."""
    if suite == "all":
        names = ("solver", "contact", "variation")
    elif suite in SUITES:
        names = (suite,)
    else:
        raise ValueError(f"unknown suite '{suite}'")
    results = []
    for name in names:
        for fn in SUITES[name]:
            try:
                if "seed" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                    results.extend(fn(seed=seed))
                else:
                    results.extend(fn())
            except SkewCritError as exc:
                results.append(
                    _result(
                        fn.__name__.replace("check_", "").replace("_", " "),
                        name,
                        False,
                        None,
                        f"raised {type(exc).__name__}: {exc}",
                    )
                )
    return results


def serialize_results(results):
    """JSON-ready representation with stable field order."""
    return [
        {
            "name": r.name,
            "suite": r.suite,
            "passed": r.passed,
            "tolerance": r.tolerance,
            "detail": r.detail,
        }
        for r in results
    ]
