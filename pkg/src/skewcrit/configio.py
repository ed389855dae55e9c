"""Strict JSON problem configs: load, validate, serialize, hash.

A config file declares one skew problem (chart + alpha/delta/g expression
lists), optionally a second member (alpha2/delta2/g2) making it a family,
optional solver and experiment settings, an optional finite group action,
and an optional custom map/graph family pair for direct contact sweeps.
Validation is strict: unknown keys, missing dimensions, and unparseable
expressions all raise ConfigError before any numeric work happens.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError, ExprSyntaxError, SkewCritError
from .exprlang import ExprContext, parse
from .geometry import AmbientChart
from .solver import NewtonSettings

__all__ = [
    "ExperimentConfig",
    "CustomConfig",
    "ProblemConfig",
    "load_config",
    "parse_config",
    "serialize_config",
    "config_hash",
    "canonical_json",
]

CONFIG_VERSION = 1

_TOP_KEYS = {
    "version",
    "name",
    "description",
    "chart",
    "alpha",
    "delta",
    "g",
    "alpha2",
    "delta2",
    "g2",
    "solver",
    "experiment",
    "group",
    "custom",
}
_SOLVER_KEYS = {"tol_residual", "max_iter", "damping", "armijo"}
_EXPERIMENT_KEYS = {"h0", "h_count", "r_claimed", "y", "x0", "seed"}
_CUSTOM_KEYS = {"kind", "in_dim", "f1", "f2", "box", "eval_point"}


@dataclass(frozen=True)
class ExperimentConfig:
    h0: float = 0.1
    h_count: int = 11
    r_claimed: Optional[int] = None
    y: Optional[tuple] = None
    x0: Optional[tuple] = None
    seed: int = 0


@dataclass(frozen=True)
class CustomConfig:
    """A directly declared family pair for contact sweeps.

    kind "map_pair": f1/f2 are components of maps (x, t) -> R^k.
    kind "graph_pair": f1/f2 are graph families whose leading in_dim
    components are the domain projection; box bounds the domain patch.
    """

    kind: str
    in_dim: int
    f1: tuple
    f2: tuple
    box: Optional[tuple] = None
    eval_point: Optional[tuple] = None


@dataclass(frozen=True)
class ProblemConfig:
    version: int
    name: str
    chart: Optional[AmbientChart]
    alpha: Optional[tuple]
    delta: Optional[tuple]
    g: Optional[tuple]
    description: str = ""
    alpha2: Optional[tuple] = None
    delta2: Optional[tuple] = None
    g2: Optional[tuple] = None
    solver: NewtonSettings = field(default_factory=NewtonSettings)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    group: Optional[tuple] = None
    custom: Optional[CustomConfig] = None

    @property
    def is_family(self):
        return any(v is not None for v in (self.alpha2, self.delta2, self.g2))

    @property
    def has_problem(self):
        return self.chart is not None

    def problem(self, t=0.0):
        """Member-1 skew problem frozen at parameter t."""
        from .build import skew_problem_from_exprs

        if not self.has_problem:
            raise ConfigError(f"config '{self.name}' declares no problem")
        return skew_problem_from_exprs(
            self.chart,
            list(self.alpha),
            [list(row) for row in self.delta],
            list(self.g),
            t=t,
        )

    def family(self):
        """The two-member problem family (member 2 defaults to member 1)."""
        from .variation import ProblemFamily

        if not self.has_problem:
            raise ConfigError(f"config '{self.name}' declares no problem")

        def rows(mat):
            return None if mat is None else [list(row) for row in mat]

        return ProblemFamily.from_exprs(
            self.chart,
            list(self.alpha),
            [list(row) for row in self.delta],
            list(self.g),
            alpha2=None if self.alpha2 is None else list(self.alpha2),
            delta2=rows(self.delta2),
            g2=None if self.g2 is None else list(self.g2),
        )

    def h_seq(self):
        from .contact import default_h_seq

        return default_h_seq(self.experiment.h0, self.experiment.h_count)

    def group_action(self):
        from .variation import GroupAction

        if self.group is None:
            return None
        return GroupAction(generators=self.group)


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _expr_list(raw, count, n_vars, where):
    _require(isinstance(raw, list), f"{where}: expected a list of expressions")
    _require(
        len(raw) == count, f"{where}: expected {count} expressions, got {len(raw)}"
    )
    ctx = ExprContext(n_vars=n_vars, allow_t=True)
    out = []
    for i, src in enumerate(raw):
        _require(isinstance(src, str), f"{where}[{i}]: expected a string expression")
        try:
            parse(src, ctx)
        except (ExprSyntaxError, SkewCritError) as exc:
            raise ConfigError(f"{where}[{i}]: {exc}") from exc
        out.append(src)
    return tuple(out)


def _expr_matrix(raw, rows, cols, n_vars, where):
    _require(isinstance(raw, list), f"{where}: expected a matrix of expressions")
    _require(len(raw) == rows, f"{where}: expected {rows} rows, got {len(raw)}")
    return tuple(
        _expr_list(row, cols, n_vars, f"{where}[{i}]") for i, row in enumerate(raw)
    )


def _float_list(raw, count, where):
    _require(isinstance(raw, list), f"{where}: expected a list of numbers")
    _require(len(raw) == count, f"{where}: expected {count} numbers, got {len(raw)}")
    for i, v in enumerate(raw):
        _require(
            isinstance(v, (int, float)) and not isinstance(v, bool),
            f"{where}[{i}]: expected a number",
        )
    return tuple(float(v) for v in raw)


def _float_matrix(raw, rows, cols, where):
    _require(isinstance(raw, list), f"{where}: expected a matrix of numbers")
    _require(len(raw) == rows, f"{where}: expected {rows} rows, got {len(raw)}")
    return tuple(
        _float_list(row, cols, f"{where}[{i}]") for i, row in enumerate(raw)
    )


def _check_keys(doc, allowed, where):
    _require(isinstance(doc, dict), f"{where}: expected an object")
    unknown = sorted(set(doc) - allowed)
    _require(not unknown, f"{where}: unknown keys {unknown}")


def _int_field(doc, key, where, default=None, minimum=None):
    if key not in doc:
        _require(default is not None, f"{where}: missing required key '{key}'")
        return default
    v = doc[key]
    _require(
        isinstance(v, int) and not isinstance(v, bool), f"{where}.{key}: expected int"
    )
    if minimum is not None:
        _require(v >= minimum, f"{where}.{key}: must be >= {minimum}")
    return v


def _num_field(doc, key, where, default):
    if key not in doc:
        return default
    v = doc[key]
    _require(
        isinstance(v, (int, float)) and not isinstance(v, bool),
        f"{where}.{key}: expected a number",
    )
    return float(v)


def parse_config(doc):
    """Validate a decoded JSON document into a ProblemConfig."""
    _check_keys(doc, _TOP_KEYS, "config")
    version = _int_field(doc, "version", "config")
    _require(
        version == CONFIG_VERSION,
        f"config.version: expected {CONFIG_VERSION}, got {version}",
    )
    name = doc.get("name", "")
    _require(isinstance(name, str) and name, "config.name: required non-empty string")
    description = doc.get("description", "")
    _require(isinstance(description, str), "config.description: expected string")

    problem_keys = ("chart", "alpha", "delta", "g")
    has_problem = any(k in doc for k in problem_keys)
    _require(
        has_problem or "custom" in doc,
        "config: must declare a problem (chart/alpha/delta/g) or a custom section",
    )
    chart = alpha = delta = g = alpha2 = delta2 = g2 = None
    n = m = None
    if has_problem:
        for key in problem_keys:
            _require(key in doc, f"config: missing required key '{key}'")
        _check_keys(doc["chart"], {"n", "m", "d"}, "config.chart")
        n = _int_field(doc["chart"], "n", "config.chart", minimum=1)
        m = _int_field(doc["chart"], "m", "config.chart", minimum=1)
        d = _int_field(doc["chart"], "d", "config.chart", minimum=1)
        try:
            chart = AmbientChart(n=n, m=m, d=d)
        except SkewCritError as exc:
            raise ConfigError(f"config.chart: {exc}") from exc
        w = n - d

        alpha = _expr_list(doc["alpha"], n, n, "config.alpha")
        delta = _expr_matrix(doc["delta"], w, d, n, "config.delta")
        g = _expr_list(doc["g"], m, n, "config.g")
        alpha2 = (
            _expr_list(doc["alpha2"], n, n, "config.alpha2")
            if "alpha2" in doc
            else None
        )
        delta2 = (
            _expr_matrix(doc["delta2"], w, d, n, "config.delta2")
            if "delta2" in doc
            else None
        )
        g2 = _expr_list(doc["g2"], m, n, "config.g2") if "g2" in doc else None
    else:
        for key in ("alpha2", "delta2", "g2", "group"):
            _require(
                key not in doc, f"config.{key}: requires a problem declaration"
            )

    solver = NewtonSettings()
    if "solver" in doc:
        _check_keys(doc["solver"], _SOLVER_KEYS, "config.solver")
        armijo = doc["solver"].get("armijo", True)
        _require(isinstance(armijo, bool), "config.solver.armijo: expected bool")
        solver = NewtonSettings(
            tol_residual=_num_field(doc["solver"], "tol_residual", "config.solver", 1e-12),
            max_iter=_int_field(doc["solver"], "max_iter", "config.solver", 50, 1),
            damping=_num_field(doc["solver"], "damping", "config.solver", 1.0),
            armijo=armijo,
        )

    experiment = ExperimentConfig()
    if "experiment" in doc:
        exp = doc["experiment"]
        _check_keys(exp, _EXPERIMENT_KEYS, "config.experiment")
        r_claimed = None
        if "r_claimed" in exp:
            r_claimed = _int_field(exp, "r_claimed", "config.experiment", minimum=1)
        for key in ("y", "x0"):
            _require(
                key not in exp or has_problem,
                f"config.experiment.{key}: requires a problem declaration",
            )
        experiment = ExperimentConfig(
            h0=_num_field(exp, "h0", "config.experiment", 0.1),
            h_count=_int_field(exp, "h_count", "config.experiment", 11, 3),
            r_claimed=r_claimed,
            y=_float_list(exp["y"], m, "config.experiment.y") if "y" in exp else None,
            x0=_float_list(exp["x0"], n, "config.experiment.x0")
            if "x0" in exp
            else None,
            seed=_int_field(exp, "seed", "config.experiment", 0, 0),
        )

    group = None
    if "group" in doc:
        _check_keys(doc["group"], {"generators"}, "config.group")
        raw_gens = doc["group"].get("generators")
        _require(isinstance(raw_gens, list) and raw_gens, "config.group.generators: "
                 "expected a non-empty list")
        gens = []
        for i, gen in enumerate(raw_gens):
            where = f"config.group.generators[{i}]"
            _check_keys(gen, {"tau_m", "tau_n"}, where)
            _require("tau_m" in gen and "tau_n" in gen,
                     f"{where}: needs tau_m and tau_n")
            gens.append(
                (
                    _float_matrix(gen["tau_m"], n, n, f"{where}.tau_m"),
                    _float_matrix(gen["tau_n"], m, m, f"{where}.tau_n"),
                )
            )
        group = tuple(gens)

    custom = None
    if "custom" in doc:
        raw = doc["custom"]
        _check_keys(raw, _CUSTOM_KEYS, "config.custom")
        kind = raw.get("kind")
        _require(
            kind in ("map_pair", "graph_pair"),
            "config.custom.kind: expected 'map_pair' or 'graph_pair'",
        )
        in_dim = _int_field(raw, "in_dim", "config.custom", minimum=1)
        _require("f1" in raw and "f2" in raw, "config.custom: needs f1 and f2")
        _require(
            isinstance(raw["f1"], list) and isinstance(raw["f2"], list),
            "config.custom: f1/f2 must be expression lists",
        )
        out_dim = len(raw["f1"])
        _require(
            len(raw["f2"]) == out_dim,
            "config.custom: f1 and f2 must have the same length",
        )
        f1 = _expr_list(raw["f1"], out_dim, in_dim, "config.custom.f1")
        f2 = _expr_list(raw["f2"], out_dim, in_dim, "config.custom.f2")
        box = None
        if "box" in raw:
            box = _float_matrix(raw["box"], in_dim, 2, "config.custom.box")
        eval_point = None
        if "eval_point" in raw:
            eval_point = _float_list(
                raw["eval_point"], in_dim, "config.custom.eval_point"
            )
        if kind == "graph_pair":
            _require(
                in_dim == 1 and out_dim == 2,
                "config.custom: graph_pair supports scalar graphs only "
                "(in_dim 1, two components)",
            )
            _require(box is not None, "config.custom: graph_pair needs a box")
        custom = CustomConfig(
            kind=kind, in_dim=in_dim, f1=f1, f2=f2, box=box, eval_point=eval_point
        )

    return ProblemConfig(
        version=version,
        name=name,
        description=description,
        chart=chart,
        alpha=alpha,
        delta=delta,
        g=g,
        alpha2=alpha2,
        delta2=delta2,
        g2=g2,
        solver=solver,
        experiment=experiment,
        group=group,
        custom=custom,
    )


def load_config(path):
    """Read and validate a config file; ConfigError on any defect."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(doc)


def serialize_config(config):
    """Normalized plain-dict form; parse_config(serialize_config(c)) == c."""
    doc = {
        "version": config.version,
        "name": config.name,
        "description": config.description,
        "solver": {
            "tol_residual": config.solver.tol_residual,
            "max_iter": config.solver.max_iter,
            "damping": config.solver.damping,
            "armijo": config.solver.armijo,
        },
        "experiment": {
            "h0": config.experiment.h0,
            "h_count": config.experiment.h_count,
            "seed": config.experiment.seed,
        },
    }
    if config.has_problem:
        doc["chart"] = {
            "n": config.chart.n,
            "m": config.chart.m,
            "d": config.chart.d,
        }
        doc["alpha"] = list(config.alpha)
        doc["delta"] = [list(row) for row in config.delta]
        doc["g"] = list(config.g)
    if config.alpha2 is not None:
        doc["alpha2"] = list(config.alpha2)
    if config.delta2 is not None:
        doc["delta2"] = [list(row) for row in config.delta2]
    if config.g2 is not None:
        doc["g2"] = list(config.g2)
    if config.experiment.r_claimed is not None:
        doc["experiment"]["r_claimed"] = config.experiment.r_claimed
    if config.experiment.y is not None:
        doc["experiment"]["y"] = list(config.experiment.y)
    if config.experiment.x0 is not None:
        doc["experiment"]["x0"] = list(config.experiment.x0)
    if config.group is not None:
        doc["group"] = {
            "generators": [
                {
                    "tau_m": [list(row) for row in a],
                    "tau_n": [list(row) for row in b],
                }
                for a, b in config.group
            ]
        }
    if config.custom is not None:
        c = {
            "kind": config.custom.kind,
            "in_dim": config.custom.in_dim,
            "f1": list(config.custom.f1),
            "f2": list(config.custom.f2),
        }
        if config.custom.box is not None:
            c["box"] = [list(row) for row in config.custom.box]
        if config.custom.eval_point is not None:
            c["eval_point"] = list(config.custom.eval_point)
        doc["custom"] = c
    return doc


def canonical_json(doc):
    """Stable compact encoding used for hashing and determinism checks."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config):
    """sha256 of the canonical serialized form."""
    payload = canonical_json(serialize_config(config)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()
