"""The moment map on the space of symplectic connections.

Density of the moment map at a point:

    mu(nabla) = (nabla^2_{(e_p, e_q)} Ric)(e^p, e^q) + P(nabla) - mu_0,

with {e^l} the symplectic dual frame (omega(e_k, e^l) = delta_k^l) and
P(nabla) the curvature-square density defined by

    P(nabla) omega^n/n! = 1/2 tr(R o^ R) ^ omega^{n-2}/(n-2)!.

For the Levi-Civita connection of Kahler data the double-divergence trace
collapses, by the contracted second Bianchi identity, to

    (nabla^2 Ric)(e^p, e^q) = 1/2 Delta Scal

with Delta the divergence-of-gradient Laplacian of this library (negative
semidefinite).  Writing the density as -1/2 Delta' Scal + P - mu_0 therefore
uses the opposite-sign Laplacian Delta' = LAPLACIAN_SIGN * Delta; the sign
was pinned numerically by the Bianchi residual test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charts import (
    ConnectionField,
    KahlerChartSpec,
    PointGeometry,
    covariant_derivative_tensor,
    curvature,
    jet_array,
    jet_values,
    laplacian,
    point_geometry,
    _truncate_array,
)
from .errors import JetOrderError, KahlermuError
from .forms import omega_power_over_factorial, trace_wedge_endo, FormValue
from .jets import Jet, jet_space
from .quadrature import QuadratureAtlas, IntegralResult, _pfaffian

# Sign relating the Laplacian symbol of the Kahler-simplified density to this
# library's divergence-of-gradient laplacian(); pinned by the requirement
# that the direct and simplified densities agree pointwise.
LAPLACIAN_SIGN = -1.0


@dataclass
class MomentDensity:
    point: np.ndarray
    mu_raw: np.ndarray              # (nabla^2 Ric)-trace + P, before normalisation
    p_density: np.ndarray
    components: dict                # {"div_div_ric", "pontryagin"}
    mu: np.ndarray                  # mu_raw - mu0


@dataclass
class OmegaEPairing:
    value: float
    formula_used: str
    by_formula: dict                # {"endo_wedge": ..., "lambda_triple": ...}
    error_estimate: float


@dataclass
class ThreeTensorValues:
    """Pointwise S^3-type data: endomorphism-valued one-form and its
    omega-lowering (completely symmetric when the field is admissible)."""

    raised: np.ndarray    # A^m_{jk} values, shape (m, m, m, ...)
    lowered: np.ndarray   # A_(jkl) = omega(A(e_j) e_k, e_l)


def dual_frame_trace(values4: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """(T)(e_p, e_q, e^p, e^q) for a (0,4) value array T_{pq;jk}."""
    return np.einsum('jp...,kq...,pqjk...->...', lam, lam, values4)


def pontryagin_density(geom: PointGeometry, curv=None, conn: Optional[ConnectionField] = None) -> np.ndarray:
    """P(nabla): ratio of 1/2 tr(R o^ R) ^ omega^{n-2}/(n-2)! to omega^n/n!.

    Identically zero for n = 1 (no 4-forms on a real 2-manifold).
    """
    batch = geom.point.shape[:-1]
    if geom.n == 1:
        return np.zeros(batch)
    if curv is None:
        curv = curvature(geom, conn if conn is not None else geom.levi_civita())
    m = geom.dim
    Rv = jet_values(curv.R)  # (i, j, k, l, ...)
    # endomorphism-valued 2-form: E[a, b] = matrix (i, j) of R(e_a, e_b)
    E = np.moveaxis(np.moveaxis(Rv, 2, 0), 3, 1)  # (k, l, i, j, ...)
    tr_rr = trace_wedge_endo(E, E)
    omega_vals = geom.omega_values()
    pf_in = np.moveaxis(np.moveaxis(omega_vals, 0, -1), 0, -1)
    pf = _pfaffian(pf_in)
    top = tr_rr.wedge(omega_power_over_factorial(omega_vals, geom.n - 2))
    return 0.5 * top.top_coefficient() / pf


def moment_map_direct(geom: PointGeometry, conn: ConnectionField, mu0: float = 0.0) -> MomentDensity:
    """Pointwise moment-map density for an arbitrary symplectic connection."""
    curv = curvature(geom, conn)
    if curv.nabla2Ric is None:
        raise JetOrderError("moment map needs potential jets of order >= 6")
    lam = geom.lambda_values()
    t1 = dual_frame_trace(curv.nabla2Ric, lam)
    p = pontryagin_density(geom, curv=curv)
    raw = t1 + p
    return MomentDensity(point=geom.point, mu_raw=raw, p_density=p,
                         components={"div_div_ric": t1, "pontryagin": p},
                         mu=raw - mu0)


def moment_map_kahler(geom: PointGeometry, conn: Optional[ConnectionField] = None,
                      mu0: float = 0.0) -> MomentDensity:
    """Kahler-simplified density -1/2 Delta' Scal + P - mu0 (Levi-Civita only)."""
    if conn is not None and conn.perturbation is not None and conn.t != 0.0:
        raise KahlermuError("moment_map_kahler applies to the Levi-Civita "
                            "connection only; use moment_map_direct for "
                            "perturbed connections")
    curv = curvature(geom, geom.levi_civita())
    if curv.Scal is None or curv.Scal.order < 2:
        raise JetOrderError("Kahler moment map needs potential jets of order >= 6")
    t1 = -0.5 * LAPLACIAN_SIGN * laplacian(geom, curv.Scal)
    p = pontryagin_density(geom, curv=curv)
    raw = t1 + p
    return MomentDensity(point=geom.point, mu_raw=raw, p_density=p,
                         components={"div_div_ric": t1, "pontryagin": p},
                         mu=raw - mu0)


# ---------------------------------------------------------------------------
# the fundamental vector field of the Hamiltonian action
# ---------------------------------------------------------------------------

def hamiltonian_vector_jets(geom: PointGeometry, K: Jet) -> np.ndarray:
    """X_K with i(X_K) omega = dK, as jets: X^c = Lambda^{bc} d_b K."""
    m = geom.dim
    order = min(K.order - 1, geom.Lambda[0, 0].order)
    lam = _truncate_array(geom.Lambda, order)
    dK = [K.diff(b).truncated(order) for b in range(m)]
    X = jet_array((m,))
    for c in range(m):
        acc = lam[0, c] * dK[0]
        for b in range(1, m):
            acc = acc + lam[b, c] * dK[b]
        X[c] = acc
    return X


def lie_derivative_connection(geom: PointGeometry, F, conn: Optional[ConnectionField] = None,
                              method: str = "theorem") -> ThreeTensorValues:
    """(L_{X_F} nabla)(Y) Z, the fundamental vector field of the action.

    F is a jet of order >= 3 or a callable producing one from coordinate
    jets.  method "theorem" evaluates nabla^2_{(Y,Z)} X_F + R(X_F, Y) Z;
    method "lie" differentiates the Christoffel field directly (an
    independent cross-check of the same tensor).
    """
    m = geom.dim
    if conn is None:
        conn = geom.levi_civita()
    if callable(F):
        space = jet_space(m, geom.order)
        F = F(Jet.variables(space, geom.point))
    if F.order < 3:
        raise JetOrderError("lie_derivative_connection needs F jets of order >= 3")
    gamma = conn.christoffels()
    X = hamiltonian_vector_jets(geom, F)

    if method == "theorem":
        curv = curvature(geom, conn)
        Rv = jet_values(curv.R)
        Xv = jet_values(X)
        n2x = covariant_derivative_tensor(
            _truncate_array(gamma, X[0].order - 1),
            covariant_derivative_tensor(_truncate_array(gamma, X[0].order - 1), X, "u"), "du")
        n2xv = jet_values(n2x)  # (j, k, m, ...)
        # R(X, e_j) e_k = X^a R^m_{k a j}
        rterm = np.einsum('a...,mkaj...->jkm...', Xv, Rv)
        raised = np.moveaxis(n2xv + rterm, 2, 0)  # -> (m, j, k, ...)
    elif method == "lie":
        w = min(X[0].order, gamma[0, 0, 0].order) - 1
        dgam = np.empty((m, m, m, m), dtype=object)
        gam_w = jet_array((m, m, m))
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    gam_w[i, j, k] = gamma[i, j, k].truncated(w)
                    for a in range(m):
                        dgam[a, i, j, k] = gamma[i, j, k].diff(a).truncated(w)
        Xw = [x.truncated(w) for x in X]
        dX = [[X[a].diff(b).truncated(w) for b in range(m)] for a in range(m)]
        raised_j = jet_array((m, m, m))
        for i in range(m):
            for j in range(m):
                for k in range(j, m):
                    acc = Xw[0] * dgam[0, i, j, k]
                    for a in range(1, m):
                        acc = acc + Xw[a] * dgam[a, i, j, k]
                    for a in range(m):
                        acc = acc - dX[i][a] * gam_w[a, j, k]
                        acc = acc + dX[a][j] * gam_w[i, a, k]
                        acc = acc + dX[a][k] * gam_w[i, j, a]
                    acc = acc + X[i].diff(j).diff(k).truncated(w)
                    raised_j[i, j, k] = acc
                    raised_j[i, k, j] = acc
        raised = jet_values(raised_j)
    else:
        raise ValueError(f"unknown method {method!r}")

    omega_vals = geom.omega_values()
    lowered = np.einsum('mjk...,ml...->jkl...', raised, omega_vals)
    return ThreeTensorValues(raised=raised, lowered=lowered)


# ---------------------------------------------------------------------------
# the symplectic pairing on the space of connections
# ---------------------------------------------------------------------------

def _omega_e_integrands(geom: PointGeometry, lowered_A: np.ndarray, lowered_B: np.ndarray):
    """Pointwise integrands of the two Omega^E formulas."""
    lam = geom.lambda_values()
    omega_vals = geom.omega_values()
    # raise the first slot back: A^m_{jk} = A_(jkl) Lambda^{lm}
    A_r = np.einsum('jkl...,lm...->mjk...', lowered_A, lam)
    B_r = np.einsum('jkl...,lm...->mjk...', lowered_B, lam)
    # endo-wedge: tr(A o^ B) ^ omega^{n-1}/(n-1)! over the volume form
    gamma_jl = np.einsum('mjc...,clm...->jl...', A_r, B_r)
    two_form = FormValue.from_matrix(gamma_jl - np.swapaxes(gamma_jl, 0, 1))
    n = geom.n
    pf_in = np.moveaxis(np.moveaxis(omega_vals, 0, -1), 0, -1)
    pf = _pfaffian(pf_in)
    top = two_form.wedge(omega_power_over_factorial(omega_vals, n - 1))
    endo = top.top_coefficient() / pf
    triple = np.einsum('ad...,be...,cf...,abc...,def...->...',
                       lam, lam, lam, lowered_A, lowered_B)
    return endo, triple


def omega_E_pair(spec: KahlerChartSpec, A_eval: Callable, B_eval: Callable,
                 atlas: QuadratureAtlas, order: int = 2,
                 consistency_tol: float = 1e-6) -> OmegaEPairing:
    """Omega^E(A, B) by both formulas; A_eval/B_eval return lowered
    completely-symmetric tensor values at chart points (shape (m,m,m,B))."""

    def both(points):
        geom = point_geometry(spec, points, order=order)
        a = np.asarray(A_eval(points))
        b = np.asarray(B_eval(points))
        return _omega_e_integrands(geom, a, b)

    fine = both(atlas.nodes) if atlas.nodes.shape[0] <= atlas.chunk else None
    if fine is None:
        endo_parts, triple_parts = [], []
        for lo in range(0, atlas.nodes.shape[0], atlas.chunk):
            e, t = both(atlas.nodes[lo: lo + atlas.chunk])
            endo_parts.append(e)
            triple_parts.append(t)
        fine = (np.concatenate(endo_parts), np.concatenate(triple_parts))
    coarse = both(atlas.nodes_coarse)
    endo = atlas.integrate_values(fine[0], coarse[0])
    triple = atlas.integrate_values(fine[1], coarse[1])
    scale = max(abs(endo.value), abs(triple.value), 1e-12)
    if abs(endo.value - triple.value) / scale > consistency_tol:
        raise KahlermuError(
            f"Omega^E internal consistency failure: endo-wedge {endo.value:.3e} "
            f"vs lambda-triple {triple.value:.3e}")
    return OmegaEPairing(value=endo.value, formula_used="endo_wedge",
                         by_formula={"endo_wedge": endo.value, "lambda_triple": triple.value},
                         error_estimate=endo.error_estimate + abs(endo.value - triple.value))


# ---------------------------------------------------------------------------
# raw moment density sweeps and the moment-map property
# ---------------------------------------------------------------------------

def raw_moment_density(spec: KahlerChartSpec, perturbation=None, t: float = 0.0,
                       order: int = 6) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluator of the un-normalised density (nabla^2 Ric-trace + P)."""

    def density(points):
        geom = point_geometry(spec, points, order=order)
        conn = ConnectionField(geom, perturbation, t)
        return moment_map_direct(geom, conn).mu_raw

    return density


def stable_mu_raw(spec: KahlerChartSpec, points: np.ndarray, order: int = 6) -> np.ndarray:
    """Levi-Civita moment density, chart-swapped at far nodes.

    The sixth-derivative chain of the density amplifies roundoff like r^7 in
    a single affine chart; on Fubini-Study products every far node is
    re-evaluated in its max-coordinate chart (same point, coordinates
    <= sqrt(2)), where the potential takes the identical form.  Falls back
    to the plain single-chart evaluation when the structure is absent.
    """
    from .charts import fs_swap_points

    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1 or not spec.stable_far_field:
        geom = point_geometry(spec, points, order=order)
        return moment_map_direct(geom, geom.levi_civita()).mu_raw
    pattern, mapped = fs_swap_points(spec, points)
    out = np.empty(points.shape[0])
    base = spec.base_chart()
    for pat in np.unique(pattern):
        mask = pattern == pat
        use = spec if pat == 0 else base
        geom = point_geometry(use, mapped[mask], order=order)
        out[mask] = moment_map_direct(geom, geom.levi_civita()).mu_raw
    return out


def moment_property_check(spec: KahlerChartSpec, F: Callable, A_field: Callable,
                          atlas: QuadratureAtlas, t_step: float = 1e-4,
                          order: int = 6, richardson: bool = True) -> dict:
    """Finite-difference check that mu generates the action:
    d/dt|_0 int mu(nabla + tA) F omega^n/n! = Omega^E(L_{X_F} nabla, A)."""

    def f_values(points):
        space = jet_space(spec.real_dim, 2)
        return F(Jet.variables(space, points)).value()

    f_fine = atlas.evaluate(f_values) - atlas.mean(f_values)

    def weighted_integral(t):
        dens = atlas.evaluate(raw_moment_density(spec, A_field, t, order))
        return atlas.reduce(dens * f_fine)

    def central(h):
        return (weighted_integral(h) - weighted_integral(-h)) / (2.0 * h)

    d1 = central(t_step)
    if richardson:
        d2 = central(0.5 * t_step)
        lhs = (4.0 * d2 - d1) / 3.0
    else:
        lhs = d1

    def lhs_field_eval(points):
        geom = point_geometry(spec, points, order=order)
        return lie_derivative_connection(geom, F).lowered

    def a_eval(points):
        space = jet_space(spec.real_dim, 2)
        xs = Jet.variables(space, points)
        return jet_values(A_field(xs))

    pairing = omega_E_pair(spec, lhs_field_eval, a_eval, atlas)
    rhs = pairing.value
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-14)
    return {"lhs": lhs, "rhs": rhs, "rel_err": rel,
            "omega_E": pairing.by_formula, "t_step": t_step}
