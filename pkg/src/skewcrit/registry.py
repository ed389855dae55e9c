"""Built-in example configs: small named problems used by the CLI and suite.

Every entry is a plain JSON-style dict validated through configio, so the
registry doubles as a fixture set: the solver examples have closed-form
roots, the perturbed families have hand-computable residuals, and the two
bump examples show the symmetric/asymmetric split for graph families.
"""

from __future__ import annotations

from .configio import parse_config
from .errors import ConfigError

__all__ = ["example_names", "example_config", "example_description", "example_raw"]

_TRIVIAL_BASE = {
    "version": 1,
    "chart": {"n": 2, "m": 1, "d": 1},
    "alpha": ["x1", "x2"],
    "delta": [["0"]],
    "g": ["x1"],
    "experiment": {"y": [0.7], "x0": [0.5, 0.3], "r_claimed": 2},
}

_SKEW3D_BASE = {
    "version": 1,
    "chart": {"n": 3, "m": 1, "d": 2},
    "alpha": ["x2", "x3", "x2 + x3"],
    "delta": [["x3", "0"]],
    "g": ["x1"],
    "experiment": {"y": [0.4], "x0": [0.4, 0.1, -0.1], "r_claimed": 3},
}

_REFLECTION_GROUP = {
    "generators": [{"tau_m": [[-1.0, 0.0], [0.0, 1.0]], "tau_n": [[-1.0]]}]
}


def _copy(value):
    if isinstance(value, dict):
        return {k: _copy(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_copy(v) for v in value]
    return value


def _merge(base, name, description, **extra):
    doc = {k: _copy(v) for k, v in base.items()}
    doc["name"] = name
    doc["description"] = description
    for k, v in extra.items():
        if k == "experiment":
            doc["experiment"] = {**doc.get("experiment", {}), **v}
        else:
            doc[k] = v
    return doc


_EXAMPLES = {
    "trivial": _merge(
        _TRIVIAL_BASE,
        "trivial",
        "gradient of |x|^2/2 constrained to x1 = y; root (y, 0)",
    ),
    "skew3d": _merge(
        _SKEW3D_BASE,
        "skew3d",
        "3-dimensional skew problem with state-dependent graph; root (y, 0, 0)",
    ),
    "trivial-alpha-perturbed": _merge(
        _TRIVIAL_BASE,
        "trivial-alpha-perturbed",
        "trivial family with one-form perturbed by t^2 in the fiber component",
        alpha2=["x1", "x2 + t^2"],
    ),
    "trivial-g-perturbed": _merge(
        _TRIVIAL_BASE,
        "trivial-g-perturbed",
        "trivial family with constraint shifted by 0.5 t^2",
        g2=["x1 + 0.5*t^2"],
    ),
    "trivial-delta-perturbed": _merge(
        _TRIVIAL_BASE,
        "trivial-delta-perturbed",
        "trivial family with graph slope perturbed by t^2",
        delta2=[["t^2"]],
    ),
    "trivial-identical": _merge(
        _TRIVIAL_BASE,
        "trivial-identical",
        "family whose two members coincide; contact is machine-limited",
        alpha2=["x1", "x2"],
    ),
    "skew3d-cubic-perturbed": _merge(
        _SKEW3D_BASE,
        "skew3d-cubic-perturbed",
        "3-dimensional family with a t^3 x1 one-form perturbation",
        alpha2=["x2", "x3 + t^3*x1", "x2 + x3"],
    ),
    "reflection-symmetric": _merge(
        _TRIVIAL_BASE,
        "reflection-symmetric",
        "perturbed trivial family with a reflection action fixing the data",
        alpha2=["x1", "x2 + t^2"],
        group=_REFLECTION_GROUP,
    ),
    "odd-perturbed": _merge(
        _TRIVIAL_BASE,
        "odd-perturbed",
        "perturbation odd under the reflection; residual equivariance fails",
        alpha2=["x1", "x2 + t^2*x1"],
        group=_REFLECTION_GROUP,
    ),
    "degenerate": _merge(
        _TRIVIAL_BASE,
        "degenerate",
        "one-form annihilating the graph fibers everywhere; Newton degenerates",
        alpha=["x2", "0"],
        experiment={"y": [0.7], "x0": [0.3, 0.2]},
    ),
    "bump-symmetric": {
        "version": 1,
        "name": "bump-symmetric",
        "description": "graph pair with equal residual components; the "
        "induced map contact gains an order",
        "custom": {
            "kind": "graph_pair",
            "in_dim": 1,
            "f1": ["x1", "x1"],
            "f2": ["x1 + t^2*(1 + x1)", "x1 + t^2*(1 + x1) + t^3*x1"],
            "box": [[-0.5, 0.5]],
            "eval_point": [0.1],
        },
        "experiment": {"r_claimed": 2},
    },
    "bump-asymmetric": {
        "version": 1,
        "name": "bump-asymmetric",
        "description": "graph pair with unequal residual components; the "
        "map residual equals their difference",
        "custom": {
            "kind": "graph_pair",
            "in_dim": 1,
            "f1": ["x1", "x1"],
            "f2": ["x1 + t^2", "x1 + t^2*(1 + x1)"],
            "box": [[-0.5, 0.5]],
            "eval_point": [0.1],
        },
        "experiment": {"r_claimed": 2},
    },
}


def example_names():
    """Registry names in a stable, documented order."""
    return list(_EXAMPLES)


def example_raw(name):
    """The raw JSON-style document for one example (a fresh copy)."""
    if name not in _EXAMPLES:
        raise ConfigError(
            f"unknown example '{name}'; known: {', '.join(_EXAMPLES)}"
        )
    return _copy(_EXAMPLES[name])


def example_config(name):
    """Validated ProblemConfig for one example."""
    return parse_config(example_raw(name))


def example_description(name):
    return example_raw(name)["description"]
