"""Deterministic quadrature of top-form densities over a compactified chart.

Tensorized Gauss-Legendre nodes over a finite parameter box are pushed onto
the chart; the weight at a node is (GL weight) x |Jacobian| x Pf(omega), so
integrals are taken against the volume form omega^n/n!.  A half-resolution
node set is carried along and the reported error estimate of every integral
is |value(q) - value(q/2)|.  Reductions use math.fsum in a fixed node order,
so results are bit-identical across runs and independent of any internal
parallelism in the density evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charts import KahlerChartSpec, jet_values, point_geometry
from .errors import QuadratureEvaluationError

DEFAULT_NODES = 48
DEFAULT_CHUNK = 4096


def _pfaffian(A: np.ndarray) -> np.ndarray:
    """Pfaffian of antisymmetric matrices with shape (..., 2m, 2m)."""
    m2 = A.shape[-1]
    if m2 == 2:
        return A[..., 0, 1]
    idx = list(range(1, m2))
    total = None
    for pos, j in enumerate(idx):
        rest = [k for k in idx if k != j]
        minor = A[..., rest, :][..., :, rest]
        term = (-1.0) ** pos * A[..., 0, j] * _pfaffian(minor)
        total = term if total is None else total + term
    return total


def volume_density(spec: KahlerChartSpec, points: np.ndarray) -> np.ndarray:
    """Coefficient of omega^n/n! against dx1 dy1 ... at the given points."""
    geom = point_geometry(spec, points, order=2)
    omega = jet_values(geom.omega)
    omega = np.moveaxis(np.moveaxis(omega, 0, -1), 0, -1)
    return _pfaffian(omega)


def _sphere_map(angles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors and area Jacobian for S^{d-1} angles of shape (N, d-1)."""
    d = angles.shape[1] + 1
    u = np.empty((angles.shape[0], d))
    sin_prod = np.ones(angles.shape[0])
    jac = np.ones(angles.shape[0])
    for i in range(d - 1):
        u[:, i] = sin_prod * np.cos(angles[:, i])
        if i < d - 2:
            jac *= np.sin(angles[:, i]) ** (d - 2 - i)
        sin_prod = sin_prod * np.sin(angles[:, i])
    u[:, d - 1] = sin_prod
    return u, jac


def _map_params(spec: KahlerChartSpec, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chart coordinates and |Jacobian| for parameter-box points."""
    comp = spec.compactification
    N = params.shape[0]
    if comp.preset == "box":
        return params.copy(), np.ones(N)
    if comp.preset != "radial_tan":
        raise ValueError(f"unknown compactification preset {comp.preset!r}")
    x = np.empty((N, spec.real_dim))
    jac = np.ones(N)
    p_off = 0
    c_off = 0
    for k in comp.factors:
        d = 2 * k
        theta = params[:, p_off]
        r = np.tan(theta)
        u, sphere_jac = _sphere_map(params[:, p_off + 1: p_off + d])
        x[:, c_off: c_off + d] = r[:, None] * u
        jac *= (1.0 + r * r) * r ** (d - 1) * sphere_jac
        p_off += d
        c_off += d
    return x, jac


def _param_box(spec: KahlerChartSpec) -> list[tuple[float, float]]:
    comp = spec.compactification
    if comp.preset == "box":
        L = comp.box_halfwidth
        return [(-L, L)] * spec.real_dim
    box: list[tuple[float, float]] = []
    for k in comp.factors:
        d = 2 * k
        box.append((0.0, math.pi / 2.0))          # radial tan substitution
        box.extend([(0.0, math.pi)] * (d - 2))    # polar sphere angles
        box.append((0.0, 2.0 * math.pi))          # azimuthal angle
    return box


def _tensor_rule(box, q: int) -> tuple[np.ndarray, np.ndarray]:
    pts_1d, wts_1d = [], []
    for lo, hi in box:
        t, w = np.polynomial.legendre.leggauss(q)
        pts_1d.append(0.5 * (hi - lo) * t + 0.5 * (hi + lo))
        wts_1d.append(0.5 * (hi - lo) * w)
    grids = np.meshgrid(*pts_1d, indexing="ij")
    params = np.stack([g.reshape(-1) for g in grids], axis=-1)
    wgrids = np.meshgrid(*wts_1d, indexing="ij")
    w = wgrids[0]
    for wg in wgrids[1:]:
        w = w * wg
    return params, w.reshape(-1)


@dataclass
class IntegralResult:
    value: float
    error_estimate: float


class QuadratureAtlas:
    """GL rule over the compactification box with omega^n/n! weights."""

    def __init__(self, spec: KahlerChartSpec, nodes_per_axis: int = DEFAULT_NODES,
                 chunk: int = DEFAULT_CHUNK):
        if nodes_per_axis < 4:
            raise ValueError("nodes_per_axis must be >= 4")
        self.spec = spec
        self.nodes_per_axis = nodes_per_axis
        self.chunk = chunk
        box = _param_box(spec)
        self.nodes, self.weights = self._build(box, nodes_per_axis)
        self.nodes_coarse, self.weights_coarse = self._build(box, max(nodes_per_axis // 2, 2))
        self._volume: IntegralResult | None = None

    def _build(self, box, q):
        params, w = _tensor_rule(box, q)
        x, jac = _map_params(self.spec, params)
        dens = np.empty(x.shape[0])
        for lo in range(0, x.shape[0], self.chunk):
            dens[lo: lo + self.chunk] = volume_density(self.spec, x[lo: lo + self.chunk])
        weights = w * jac * dens
        if np.any(weights < 0):
            raise QuadratureEvaluationError(
                f"negative quadrature weight on {self.spec.name}: "
                "volume density is not positive")
        return x, weights

    # -- evaluation and reduction -------------------------------------------

    def evaluate(self, density: Callable[[np.ndarray], np.ndarray],
                 coarse: bool = False) -> np.ndarray:
        nodes = self.nodes_coarse if coarse else self.nodes
        out = None
        for lo in range(0, nodes.shape[0], self.chunk):
            vals = np.asarray(density(nodes[lo: lo + self.chunk]))
            bad = ~np.isfinite(vals)
            if np.any(bad):
                i = int(np.argmax(bad)) + lo
                raise QuadratureEvaluationError(
                    f"density evaluated to a non-finite value at node {i} "
                    f"(chart point {nodes[i].tolist()})")
            if out is None:
                out = np.empty(nodes.shape[0], dtype=vals.dtype)
            out[lo: lo + self.chunk] = vals
        return out

    def reduce(self, values: np.ndarray, coarse: bool = False) -> float:
        weights = self.weights_coarse if coarse else self.weights
        if np.iscomplexobj(values):
            re = math.fsum((weights * values.real).tolist())
            im = math.fsum((weights * values.imag).tolist())
            return complex(re, im)
        return math.fsum((weights * values).tolist())

    def integrate_values(self, fine: np.ndarray, coarse: np.ndarray) -> IntegralResult:
        v = self.reduce(fine)
        vc = self.reduce(coarse, coarse=True)
        return IntegralResult(value=v, error_estimate=abs(v - vc))

    def integrate(self, density: Callable[[np.ndarray], np.ndarray]) -> IntegralResult:
        return self.integrate_values(self.evaluate(density), self.evaluate(density, coarse=True))

    # -- derived services ----------------------------------------------------

    @property
    def volume(self) -> IntegralResult:
        if self._volume is None:
            ones = lambda pts: np.ones(pts.shape[0])
            self._volume = self.integrate(ones)
        return self._volume

    def mean(self, density) -> float:
        return self.integrate(density).value / self.volume.value

    def mean_of_values(self, values: np.ndarray) -> float:
        return self.reduce(values) / self.volume.value


def build_atlas(spec: KahlerChartSpec, nodes_per_axis: int = DEFAULT_NODES,
                chunk: int = DEFAULT_CHUNK) -> QuadratureAtlas:
    return QuadratureAtlas(spec, nodes_per_axis, chunk)


def integrate(atlas: QuadratureAtlas, density) -> IntegralResult:
    return atlas.integrate(density)


def mean_zero_project(atlas: QuadratureAtlas, f) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluator for f minus its atlas mean (the projection to C^inf_0)."""
    shift = atlas.mean(f)

    def projected(points, _f=f, _shift=shift):
        return np.asarray(_f(points)) - _shift

    return projected


def mu_zero(atlas: QuadratureAtlas, p_density) -> float:
    """Mean of the curvature-square density over the atlas (the constant
    subtracted from the moment-map density so it lands in C^inf_0)."""
    return atlas.mean(p_density)
