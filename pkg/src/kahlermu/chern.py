"""Chern-Weil forms of the (1,0)-tangent bundle and Futaki-type integrands.

The (1,0)-connection is the restriction of the Levi-Civita connection (the
Chern connection of the Kahler metric).  With A = (i/2pi) R^{(1,0)},

    c_1 = tr A,      c_2 = 1/2 ((tr A)^2 - tr(A^2)),

wedge products in the determinant convention.  The curvature-square 4-form
of the real tangent bundle satisfies the pointwise identity

    tr(R o^ R) = 16 pi^2 (c_2 - 1/2 c_1.c_1),

which ties the moment-map density P to the degree-2 Chern polynomials; it is
enforced by the acceptance suite at machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charts import PointGeometry, jet_values, jet_array, _truncate_array
from .errors import InvalidFieldError, UnsupportedPolynomialError
from .forms import FormValue, omega_power_over_factorial, trace_wedge_endo
from .quadrature import _pfaffian

INVARIANT_POLYNOMIALS = ("c1c1", "c2", "c2_minus_half_c1c1", "td2")


def complex_frame(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(CF, DZ): CF[j] = components of d/dz_j, DZ[j] = components of dz^j."""
    CF = np.zeros((n, 2 * n), dtype=complex)
    DZ = np.zeros((n, 2 * n), dtype=complex)
    for j in range(n):
        CF[j, 2 * j] = 0.5
        CF[j, 2 * j + 1] = -0.5j
        DZ[j, 2 * j] = 1.0
        DZ[j, 2 * j + 1] = 1.0j
    return CF, DZ


def curvature_10(geom: PointGeometry, curv) -> np.ndarray:
    """R^{(1,0)}[a, b] = matrix of R(e_a, e_b) acting on the dz-frame."""
    n = geom.n
    CF, DZ = complex_frame(n)
    Rv = jet_values(curv.R)  # R^i_{c a b}
    return np.einsum('ji,icab...,kc->abjk...', DZ, Rv, CF)


@dataclass
class EndoL:
    """Endomorphism L(Z^{(1,0)}) = nabla-bar_{Z^{(1,0)}} - Lie_{Z^{(1,0)}}
    of T^{(1,0)}M, which for a torsion-free connection is W -> nabla_W Z."""

    matrix: np.ndarray       # (n, n, ...) complex values
    trace: np.ndarray        # complex values

    @classmethod
    def zero(cls, n: int, batch=()):
        return cls(matrix=np.zeros((n, n) + batch, dtype=complex),
                   trace=np.zeros(batch, dtype=complex))


def endo_L(geom: PointGeometry, Z10: np.ndarray, holo_residual: float | None = None,
           holo_tol: float = 1e-6) -> EndoL:
    """L for a holomorphic field given by its (1,0)-part jets.

    Z10 is an object array of 2n complex-coefficient jets (real-frame
    components of Z^{(1,0)}), order >= 1.  A caller-supplied holomorphy
    residual above holo_tol is rejected.
    """
    if holo_residual is not None and holo_residual > holo_tol:
        raise InvalidFieldError(
            f"field is not holomorphic: Lie_Z J residual {holo_residual:.3e} "
            f"exceeds {holo_tol:.1e}")
    m = geom.dim
    n = geom.n
    CF, DZ = complex_frame(n)
    gamma_v = jet_values(geom.gamma)
    Zv = jet_values(Z10)
    dZ = np.stack([np.stack([np.asarray(Z10[b].diff(a).value()) for a in range(m)])
                   for b in range(m)])  # (b, a, ...)
    # nabla_a Z^b = d_a Z^b + Gamma^b_{a c} Z^c
    nablaZ = dZ + np.einsum('bac...,c...->ba...', gamma_v, Zv)
    # V[b, k] = components of nabla_{dz_k} Z
    V = np.einsum('ka,ba...->bk...', CF, nablaZ)
    L = np.einsum('jb,bk...->jk...', DZ, V)
    trace = np.einsum('jj...->...', L)
    return EndoL(matrix=L, trace=trace)


def chern_forms(geom: PointGeometry, curv) -> dict:
    """First and second Chern forms of (T^{(1,0)}M, Levi-Civita)."""
    n = geom.n
    R10 = curvature_10(geom, curv)
    pref = 1j / (2.0 * math.pi)
    trR = np.einsum('abjj...->ab...', R10)
    c1 = FormValue.from_matrix(pref * trR)
    if n >= 2:
        A = pref * R10
        trA_wedge_trA = c1.wedge(c1)
        trAA = trace_wedge_endo(A, A)
        c2 = (trA_wedge_trA - trAA).scaled(0.5)
    else:
        c2 = FormValue(4, 2 * n, {})
    return {"c1": c1, "c2": c2}


def ricci_form(geom: PointGeometry, curv) -> FormValue:
    """rho(X, Y) = Ric(JX, Y); equals 2 pi c_1 on Kahler input."""
    ric = jet_values(curv.Ric)
    rho = np.einsum('ca,cb...->ab...', geom.J, ric)
    return FormValue.from_matrix(rho)


def pontryagin_identity_residual(geom: PointGeometry, curv=None) -> float:
    """Max componentwise residual of tr(R o^ R) = 16 pi^2 (c2 - 1/2 c1.c1)."""
    from .charts import curvature as _curvature
    if curv is None:
        curv = _curvature(geom, geom.levi_civita())
    if geom.n < 2:
        return 0.0
    Rv = jet_values(curv.R)
    E = np.moveaxis(np.moveaxis(Rv, 2, 0), 3, 1)
    lhs = trace_wedge_endo(E, E)
    forms = chern_forms(geom, curv)
    rhs = (forms["c2"] - forms["c1"].wedge(forms["c1"]).scaled(0.5)).scaled(16.0 * math.pi ** 2)
    diff = lhs - rhs
    return diff.max_abs() if diff.comps else 0.0


def invariant_polynomial_form(q: str, forms: dict) -> FormValue:
    """Degree-4 form q(R) for the supported degree-2 invariant polynomials."""
    c1, c2 = forms["c1"], forms["c2"]
    if q == "c1c1":
        return c1.wedge(c1)
    if q == "c2":
        return c2
    if q == "c2_minus_half_c1c1":
        return c2 - c1.wedge(c1).scaled(0.5)
    if q == "td2":
        # the adopted normalisation Td2 = c2 + c1.c1
        return c2 + c1.wedge(c1)
    raise UnsupportedPolynomialError(
        f"unsupported invariant polynomial {q!r}; supported: {INVARIANT_POLYNOMIALS}")


def _one_L_component(q: str, L: EndoL, R10: np.ndarray) -> FormValue:
    """Degree-2 part of q(L + R): the polarization with exactly one L."""
    m = R10.shape[0]
    pref2 = (1j / (2.0 * math.pi)) ** 2
    trR = np.einsum('abjj...->ab...', R10)
    trL_trR = FormValue.from_matrix(pref2 * np.einsum('...,ab...->ab...', L.trace, trR))
    if q == "c1c1":
        return trL_trR.scaled(2.0)
    trLR = FormValue.from_matrix(pref2 * np.einsum('jk...,abkj...->ab...', L.matrix, R10))
    if q == "c2":
        return trL_trR - trLR
    if q == "c2_minus_half_c1c1":
        return trLR.scaled(-1.0)
    if q == "td2":
        return trL_trR.scaled(3.0) - trLR
    raise UnsupportedPolynomialError(
        f"unsupported invariant polynomial {q!r}; supported: {INVARIANT_POLYNOMIALS}")


def generalized_futaki_integrand(q: str, geom: PointGeometry, curv, L: EndoL,
                                 u_Z: np.ndarray) -> dict:
    """Pointwise densities of the two terms of the generalized Futaki map
    (ratios against omega^n/n!), for degree-2 invariant polynomials:

      term1 = (n-p+1) u_Z q(R) ^ omega^{n-p}
      term2 = [q(L + R)]_{deg 2} ^ omega^{n-p+1}
    """
    n = geom.n
    p = 2
    if n < p:
        raise UnsupportedPolynomialError(
            f"degree-2 polynomial {q!r} needs complex dimension >= 2, got {n}")
    omega_vals = geom.omega_values()
    pf = _pfaffian(np.moveaxis(np.moveaxis(omega_vals, 0, -1), 0, -1))
    forms = chern_forms(geom, curv)
    qR = invariant_polynomial_form(q, forms)
    om_np = omega_power_over_factorial(omega_vals, n - p).scaled(math.factorial(n - p))
    term1 = (n - p + 1) * u_Z * qR.wedge(om_np).top_coefficient() / pf

    R10 = curvature_10(geom, curv)
    one_L = _one_L_component(q, L, R10)
    om_np1 = omega_power_over_factorial(omega_vals, n - p + 1).scaled(math.factorial(n - p + 1))
    term2 = one_L.wedge(om_np1).top_coefficient() / pf
    return {"term1_density": term1, "term2_density": term2}
