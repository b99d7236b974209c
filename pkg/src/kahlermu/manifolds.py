"""Built-in manifold registry and JSON chart loading.

Conventions: the chart potential P gives omega = dd^c P, so the flat chart
uses P = (x^2 + y^2)/4 (unit Euclidean metric, omega = dx ^ dy) and CP^n
carries the Fubini-Study potential log(1 + |z|^2)/4, for which

    vol(CP^n) = pi^n / n!,   Scal = 4 n (n + 1),   Ric = 2(n+1) g.

Coordinates are interleaved: (x1, y1, ..., xn, yn) with z_j = x_{2j-1} + i y_j.
"""

from __future__ import annotations

import json

import numpy as np

from .charts import CompactificationSpec, KahlerChartSpec, squared_distance_jet
from .errors import SpecParseError
from .expr import Expression, real_variables
from .jets import Jet


def _flat_potential(xs):
    return 0.25 * squared_distance_jet(xs)


def _fubini_study_potential(xs):
    return 0.25 * (1.0 + squared_distance_jet(xs)).log()


def _product_fs_potential(xs):
    # one Fubini-Study factor per complex coordinate
    acc = None
    for j in range(len(xs) // 2):
        r2 = squared_distance_jet(xs, axes=(2 * j, 2 * j + 1))
        term = 0.25 * (1.0 + r2).log()
        acc = term if acc is None else acc + term
    return acc


def flat_chart(complex_dim: int = 1, halfwidth: float = 2.0) -> KahlerChartSpec:
    return KahlerChartSpec(
        name=f"flat{complex_dim}" if complex_dim > 1 else "flat",
        complex_dim=complex_dim,
        potential=_flat_potential,
        compactification=CompactificationSpec(preset="box", factors=(complex_dim,),
                                              box_halfwidth=halfwidth),
        sample_radius=0.9 * halfwidth,
    )


def cpn_chart(n: int) -> KahlerChartSpec:
    name = "cp" + str(n)
    return KahlerChartSpec(
        name=name,
        complex_dim=n,
        potential=_fubini_study_potential,
        compactification=CompactificationSpec(preset="radial_tan", factors=(n,)),
        sample_radius=1.5,
        fs_product=True,
        base_potential=_fubini_study_potential,
    )


def cp1xcp1_chart() -> KahlerChartSpec:
    return KahlerChartSpec(
        name="cp1xcp1",
        complex_dim=2,
        potential=_product_fs_potential,
        compactification=CompactificationSpec(preset="radial_tan", factors=(1, 1)),
        sample_radius=1.5,
        fs_product=True,
        base_potential=_product_fs_potential,
    )


# recommended quadrature nodes per axis per built-in manifold (CLI default)
RECOMMENDED_NODES = {"flat": 24, "flat2": 10, "cp1": 48, "cp2": 14, "cp1xcp1": 14}


def builtin_manifold(name: str) -> KahlerChartSpec:
    if name == "flat":
        return flat_chart(1)
    if name == "flat2":
        return flat_chart(2)
    if name == "cp1":
        return cpn_chart(1)
    if name == "cp2":
        return cpn_chart(2)
    if name == "cp1xcp1":
        return cp1xcp1_chart()
    raise SpecParseError(f"unknown manifold {name!r}; choose from {sorted(MANIFOLDS)} "
                         "or pass a JSON spec file")


MANIFOLDS = ("flat", "flat2", "cp1", "cp2", "cp1xcp1")


def chart_from_document(doc: dict) -> KahlerChartSpec:
    """Build a chart from a declarative JSON document.

    Schema: {"name": str, "complex_dim": int,
             "potential": expression over x1..x_{2n},
             "chart_domain": {"halfwidth": float} (optional),
             "compactification": "radial_tan" | "box" (optional),
             "factors": [n1, n2, ...] (optional, radial_tan blocks)}
    """
    try:
        name = doc["name"]
        n = int(doc["complex_dim"])
        pot_text = doc["potential"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecParseError(f"manifold document missing field: {exc}") from None
    if n < 1:
        raise SpecParseError("complex_dim must be >= 1")
    expr = Expression(pot_text, real_variables(2 * n))

    def potential(xs, _expr=expr):
        return _expr({f"x{i + 1}": x for i, x in enumerate(xs)})

    preset = doc.get("compactification", "radial_tan")
    if preset not in ("radial_tan", "box"):
        raise SpecParseError(f"unknown compactification preset {preset!r}")
    factors = tuple(int(f) for f in doc.get("factors", [n]))
    if sum(factors) != n:
        raise SpecParseError(f"factors {factors} do not sum to complex_dim {n}")
    halfwidth = float(doc.get("chart_domain", {}).get("halfwidth", 2.0))
    return KahlerChartSpec(
        name=name, complex_dim=n, potential=potential,
        compactification=CompactificationSpec(preset=preset, factors=factors,
                                              box_halfwidth=halfwidth),
        sample_radius=float(doc.get("sample_radius", 1.5)),
    )


def load_manifold(path: str) -> KahlerChartSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise SpecParseError(f"{path}: {exc}") from None
    if "manifold" in doc:
        doc = doc["manifold"]
    return chart_from_document(doc)


def random_chart_points(spec: KahlerChartSpec, count: int, seed: int = 0,
                        radius: float | None = None) -> np.ndarray:
    """Sample points in a ball of the chart for pointwise identity tests."""
    rng = np.random.default_rng(seed)
    r = spec.sample_radius if radius is None else radius
    pts = rng.uniform(-r, r, (count, spec.real_dim))
    return pts
