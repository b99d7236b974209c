"""Pointwise Kahler geometry on a holomorphic chart.

All geometry is derived from a single scalar potential on real chart
coordinates (x1, y1, ..., xn, yn), with z_j = x_{2j-1} + i x_{2j} and the
standard constant complex structure J.  The Kahler form is

    omega = d d^c(potential),        d^c F := -dF o J,

so a deformation ``potential + phi`` realises omega + dd^c(phi) in the same
class.  Every derived object (omega, g, Christoffels, curvature, Ricci, ...)
is carried as a jet so that exact derivatives up to the truncation order are
available downstream; a trailing batch axis evaluates whole node sets at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateFormError, JetOrderError, NotKahlerError
from .jets import DEFAULT_ORDER, Jet, jet_space


# ---------------------------------------------------------------------------
# complex structure and jet-tensor helpers
# ---------------------------------------------------------------------------

def standard_complex_structure(complex_dim: int) -> np.ndarray:
    """Constant J with J(d/dx_j) = d/dy_j on interleaved (x1,y1,x2,y2,...)."""
    m = 2 * complex_dim
    J = np.zeros((m, m))
    for j in range(complex_dim):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    return J


def jet_array(shape) -> np.ndarray:
    return np.empty(shape, dtype=object)


def jet_values(arr: np.ndarray) -> np.ndarray:
    """Stack constant terms of an object array of jets; batch axes go last."""
    flat = [j.value() for j in arr.flat]
    stacked = np.stack([np.asarray(v) for v in flat])
    return stacked.reshape(arr.shape + stacked.shape[1:])


def complex_jets(xs: list[Jet]) -> list[Jet]:
    """z_j = x_{2j} + i x_{2j+1} (0-based interleaved layout)."""
    return [xs[2 * j] + (1j * xs[2 * j + 1]) for j in range(len(xs) // 2)]


def _jmat_mul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    m = A.shape[0]
    out = jet_array((m, m))
    for i in range(m):
        for j in range(m):
            acc = A[i, 0] * B[0, j]
            for k in range(1, m):
                acc = acc + A[i, k] * B[k, j]
            out[i, j] = acc
    return out


def _jmat_const_mul(C0: np.ndarray, A: np.ndarray) -> np.ndarray:
    """(per-node constant matrix) @ (jet matrix); C0 has shape batch + (m, m)."""
    m = A.shape[0]
    out = jet_array((m, m))
    for i in range(m):
        for j in range(m):
            acc = A[0, j] * C0[..., i, 0]
            for k in range(1, m):
                acc = acc + A[k, j] * C0[..., i, k]
            out[i, j] = acc
    return out


def jet_matrix_inverse(M: np.ndarray, order: int | None = None) -> np.ndarray:
    """Inverse of a jet-valued matrix via the truncated Neumann series."""
    m = M.shape[0]
    if order is not None and order < M[0, 0].order:
        M = _truncate_matrix(M, order)
    space = M[0, 0].space
    M0 = jet_values(M)
    M0 = np.moveaxis(np.moveaxis(M0, 0, -1), 0, -1)  # batch..., m, m
    inv0 = np.linalg.inv(M0)
    Mplus = jet_array((m, m))
    for i in range(m):
        for j in range(m):
            Mplus[i, j] = M[i, j]._nonconstant()
    N = _jmat_const_mul(inv0, Mplus)
    # P = (I + N)^{-1} truncated via Horner: P = I - N * P
    P = jet_array((m, m))
    for i in range(m):
        for j in range(m):
            P[i, j] = (-N[i, j]) + (1.0 if i == j else 0.0)
    for _ in range(space.order - 1):
        NP = _jmat_mul(N, P)
        for i in range(m):
            for j in range(m):
                P[i, j] = (-NP[i, j]) + (1.0 if i == j else 0.0)
    # P @ inv0  (jet matrix times per-node constant matrix)
    out = jet_array((m, m))
    for i in range(m):
        for j in range(m):
            acc = P[i, 0] * inv0[..., 0, j]
            for k in range(1, m):
                acc = acc + P[i, k] * inv0[..., k, j]
            out[i, j] = acc
    return out


# ---------------------------------------------------------------------------
# chart specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompactificationSpec:
    """How the quadrature box maps onto the chart.

    preset "radial_tan": one tan-radial block per factor listed in
    ``factors`` (complex dimensions, consecutive in the coordinate layout) —
    covers CP^{n1} x ... minus a measure-zero locus.  preset "box": the chart
    domain itself is the finite integration region (open charts, tests).
    """

    preset: str = "radial_tan"
    factors: tuple[int, ...] = (1,)
    box_halfwidth: float = 2.0


@dataclass(frozen=True)
class KahlerChartSpec:
    name: str
    complex_dim: int
    potential: Callable[[list[Jet]], Jet]
    compactification: CompactificationSpec = field(default_factory=CompactificationSpec)
    sample_radius: float = 1.5  # ball for random test points
    # Fubini-Study-product structure: when set, curvature invariants at far
    # nodes are evaluated in the max-coordinate chart, where the same point
    # has coordinates <= sqrt(2) and the potential takes the identical form.
    fs_product: bool = False
    base_potential: Optional[Callable] = None
    deformation_supports: tuple = ()

    @property
    def real_dim(self) -> int:
        return 2 * self.complex_dim

    def potential_jet(self, points, order: int) -> Jet:
        space = jet_space(self.real_dim, order)
        xs = Jet.variables(space, np.asarray(points, dtype=np.float64))
        return self.potential(xs)

    def deformed(self, phi: Callable[[list[Jet]], Jet], amplitude: float,
                 support: Optional[tuple] = None) -> "KahlerChartSpec":
        """Same chart with potential + amplitude * phi (same Kahler class).

        support = (center, radius) declares where phi lives; deformations
        supported inside the unit ball keep the stable far-field evaluation.
        """
        base = self.potential

        def total(xs, _base=base, _phi=phi, _amp=amplitude):
            return _base(xs) + _amp * _phi(xs)

        supports = self.deformation_supports
        if amplitude != 0.0:
            supports = supports + ((support if support is not None else None),)
        return replace(self, name=f"{self.name}+{amplitude}*phi", potential=total,
                       deformation_supports=supports)

    @property
    def stable_far_field(self) -> bool:
        """True when far nodes may be evaluated in a swapped chart: the base
        is a product of Fubini-Study factors and every deformation is
        supported strictly inside the unit coordinate ball."""
        if not self.fs_product:
            return False
        for sup in self.deformation_supports:
            if sup is None:
                return False
            center, radius = sup
            if float(np.linalg.norm(np.asarray(center))) + float(radius) >= 0.99:
                return False
        return True

    def base_chart(self) -> "KahlerChartSpec":
        """The undeformed chart (same compactification and structure)."""
        if self.base_potential is None:
            return self
        return replace(self, potential=self.base_potential, deformation_supports=())


def _is_coordinate_jet(x: Jet, axis: int) -> bool:
    """True when x is exactly (base value) + (the axis variable)."""
    space = x.space
    if space.order < 1:
        return False
    lin = space.index[tuple(1 if k == axis else 0 for k in range(space.num_vars))]
    mask = np.ones(space.ncoef, dtype=bool)
    mask[0] = mask[lin] = False
    if np.any(x.coeffs[mask] != 0):
        return False
    return bool(np.all(x.coeffs[lin] == 1.0))


def squared_distance_jet(xs: list[Jet], center=None, axes=None) -> Jet:
    """sum_{a in axes} (x_a - c_a)^2 as a jet.

    When the inputs are genuine coordinate jets the three nonzero Taylor
    coefficients are assembled directly (cheap at high order); composed
    arguments fall back to jet multiplication.
    """
    space = xs[0].space
    m = space.num_vars
    if axes is None:
        axes = tuple(range(m))
    if center is None:
        center = np.zeros(len(axes))
    center = np.asarray(center, dtype=np.float64)
    if not all(_is_coordinate_jet(xs[a], a) for a in axes):
        acc = None
        for i, a in enumerate(axes):
            d = xs[a] - center[i]
            acc = d * d if acc is None else acc + d * d
        return acc
    vals = [np.asarray(xs[a].value(), dtype=np.float64) for a in axes]
    d0 = [v - center[i] for i, v in enumerate(vals)]
    coeffs = np.zeros((space.ncoef,) + vals[0].shape)
    coeffs[0] = sum(d * d for d in d0)
    for i, a in enumerate(axes):
        lin = tuple(1 if k == a else 0 for k in range(m))
        quad = tuple(2 if k == a else 0 for k in range(m))
        if space.order >= 1:
            coeffs[space.index[lin]] = 2.0 * d0[i]
        if space.order >= 2:
            coeffs[space.index[quad]] = 1.0
    return Jet(space, coeffs)


def radial_bump(center, radius: float, power: int = 8) -> Callable[[list[Jet]], Jet]:
    """Compactly supported C^{power-1} profile (1 - |x-c|^2/r^2)^power."""
    center = np.asarray(center, dtype=np.float64)

    def bump(xs: list[Jet]) -> Jet:
        u = 1.0 - squared_distance_jet(xs, center) * (1.0 / radius ** 2)
        inside = (u.value() > 0).astype(np.float64)
        return (u ** power) * inside

    return bump


def ddc_matrix(fn: Callable[[list[Jet]], Jet], points, complex_dim: int) -> np.ndarray:
    """Pointwise components of dd^c(fn) on the coordinate frame."""
    m = 2 * complex_dim
    J = standard_complex_structure(complex_dim)
    space = jet_space(m, 2)
    xs = Jet.variables(space, np.asarray(points, dtype=np.float64))
    f = fn(xs)
    df = [f.diff(a) for a in range(m)]
    H = np.empty((m, m), dtype=object)
    for a in range(m):
        for b in range(a, m):
            H[a, b] = df[a].diff(b).value()
            H[b, a] = H[a, b]
    Hv = np.array([[H[a, b] for b in range(m)] for a in range(m)])
    # omega_{ab} = H_{bc} J^c_a - H_{ac} J^c_b
    t = np.einsum('bc...,ca->ab...', Hv, J)
    return t - np.einsum('ac...,cb->ab...', Hv, J)


def fs_swap_points(spec: KahlerChartSpec, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-node chart swap for Fubini-Study product charts.

    Returns (pattern, mapped): pattern is an integer id of which factors were
    re-expressed in their max-coordinate chart; mapped are the coordinates in
    that chart (same point of the manifold, all coordinates <= sqrt(2)).
    Pattern 0 means no swap.  The swapped potential is the identical product
    Fubini-Study expression, so any curvature invariant may be evaluated on
    the base chart spec at the mapped coordinates.
    """
    points = np.asarray(points, dtype=np.float64)
    squeeze = points.ndim == 1
    pts = points[None, :] if squeeze else points
    mapped = pts.copy()
    pattern = np.zeros(pts.shape[0], dtype=np.int64)
    offset = 0
    for k in spec.compactification.factors:
        if k > 2:
            raise ValueError("fs_swap_points supports factors of complex dim <= 2")
        d = 2 * k
        z = pts[:, offset:offset + d:2] + 1j * pts[:, offset + 1:offset + d:2]  # (N, k)
        norms = np.abs(z)
        swap = np.einsum('nk,nk->n', norms, norms) > 1.0
        imax = np.argmax(norms, axis=1)
        code = np.where(swap, imax + 1, 0)
        if np.any(swap):
            rows = np.arange(z.shape[0])
            zi = np.where(swap, z[rows, imax], 1.0)
            zeta = np.empty_like(z)
            zeta[:, 0] = 1.0 / zi
            if k == 2:
                zeta[:, 1] = z[rows, 1 - imax] / zi
            mapped[swap, offset:offset + d:2] = np.real(zeta[swap])
            mapped[swap, offset + 1:offset + d:2] = np.imag(zeta[swap])
        pattern = pattern * (k + 1) + code
        offset += d
    if squeeze:
        return pattern[0], mapped[0]
    return pattern, mapped


def bump_three_tensor(center, radius: float, sym: np.ndarray, power: int = 6):
    """Completely symmetric lowered 3-tensor field A_(jkl) = bump * sym_{jkl},
    the shape of admissible compactly-supported connection perturbations."""
    profile = radial_bump(center, radius, power)
    sym = np.asarray(sym, dtype=np.float64)
    sym = (sym + sym.transpose(0, 2, 1) + sym.transpose(1, 0, 2)
           + sym.transpose(1, 2, 0) + sym.transpose(2, 0, 1) + sym.transpose(2, 1, 0)) / 6.0
    m = sym.shape[0]

    def field(xs: list[Jet]) -> np.ndarray:
        b = profile(xs)
        arr = jet_array((m, m, m))
        for j in range(m):
            for k in range(m):
                for l in range(m):
                    arr[j, k, l] = b * sym[j, k, l]
        return arr

    return field


def normalized_potential_bump(complex_dim: int, center, radius: float,
                              power: int = 8, scan: int = 7) -> Callable[[list[Jet]], Jet]:
    """Radial bump rescaled so the induced metric perturbation dd^c(phi) o J
    has unit spectral norm at amplitude 1; amplitudes below the smallest
    metric eigenvalue on the support then keep g positive definite."""
    raw = radial_bump(center, radius, power)
    m = 2 * complex_dim
    center = np.asarray(center, dtype=np.float64)
    axes = [np.linspace(c - radius, c + radius, scan) for c in center]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    omega_pert = ddc_matrix(raw, grid, complex_dim)
    J = standard_complex_structure(complex_dim)
    dg = np.einsum('ac...,cb->...ab', omega_pert, J)
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    norm = float(np.max(np.abs(np.linalg.eigvalsh(dg))))
    scale = 1.0 / norm

    def bump(xs: list[Jet]) -> Jet:
        return raw(xs) * scale

    return bump


# ---------------------------------------------------------------------------
# pointwise geometry
# ---------------------------------------------------------------------------

@dataclass
class PointGeometry:
    """All pointwise data derived from the potential at (a batch of) points."""

    spec: KahlerChartSpec
    point: np.ndarray            # (2n,) or (B, 2n)
    order: int                   # potential jet order used
    J: np.ndarray                # constant complex structure
    potential: Jet
    omega: np.ndarray            # (2n, 2n) jets, order-2
    g: np.ndarray                # (2n, 2n) jets
    Lambda: np.ndarray           # inverse of omega, jets
    g_inv: np.ndarray            # jets
    gamma: Optional[np.ndarray]  # (2n, 2n, 2n) jets Gamma^i_{jk}, order-3; None if order < 3

    @property
    def n(self) -> int:
        return self.spec.complex_dim

    @property
    def dim(self) -> int:
        return 2 * self.spec.complex_dim

    def omega_values(self) -> np.ndarray:
        return jet_values(self.omega)

    def lambda_values(self) -> np.ndarray:
        return jet_values(self.Lambda)

    def levi_civita(self) -> "ConnectionField":
        return ConnectionField(base=self, perturbation=None, t=0.0)


@dataclass
class ConnectionField:
    """A symplectic connection Gamma + t*A on the chart.

    ``perturbation`` supplies the completely symmetric lowered tensor
    A_(jkl); the endomorphism-valued form A^m_{jk} is raised through Lambda
    at construction.  A None perturbation is the Levi-Civita connection.
    """

    base: PointGeometry
    perturbation: Optional[Callable[[list[Jet]], np.ndarray]]
    t: float = 0.0
    _raised: Optional[np.ndarray] = None
    _lowered: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.perturbation is not None and self.base.gamma is not None:
            geom = self.base
            m = geom.dim
            order = geom.gamma[0, 0, 0].order
            space = jet_space(m, order)
            xs = Jet.variables(space, geom.point)
            low = self.perturbation(xs)
            raised = jet_array((m, m, m))
            lam = geom.Lambda
            for j in range(m):
                for k in range(m):
                    for c in range(m):
                        acc = low[j, k, 0] * lam[0, c].truncated(order)
                        for l in range(1, m):
                            acc = acc + low[j, k, l] * lam[l, c].truncated(order)
                        raised[c, j, k] = acc
            self._raised = raised
            self._lowered = low

    @property
    def is_perturbed(self) -> bool:
        return self.perturbation is not None and self.t != 0.0

    def christoffels(self) -> np.ndarray:
        """Gamma^i_{jk} jets of the (possibly perturbed) connection."""
        if self.base.gamma is None:
            raise JetOrderError("potential jet order too low for Christoffel symbols")
        if not self.is_perturbed:
            return self.base.gamma
        m = self.base.dim
        out = jet_array((m, m, m))
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    out[i, j, k] = self.base.gamma[i, j, k] + self.t * self._raised[i, j, k]
        return out

    def lowered_perturbation(self) -> Optional[np.ndarray]:
        return self._lowered


@dataclass
class CurvatureBundle:
    """Curvature data of a connection over (a batch of) points."""

    R: np.ndarray                     # (2n,2n,2n,2n) jets R^i_{jkl}: R(e_k,e_l)e_j = R^i_{jkl} e_i
    Ric: np.ndarray                   # (2n,2n) jets
    Scal: Optional[Jet]               # contraction with g_inv (Levi-Civita diagnostics)
    nabla2Ric: Optional[np.ndarray]   # (2n,2n,2n,2n) values (a,b;j,k), None if order too low


def point_geometry(spec: KahlerChartSpec, p, order: int = DEFAULT_ORDER) -> PointGeometry:
    """Build omega, g, Lambda, g_inv and Levi-Civita Christoffels at p."""
    if order < 2:
        raise JetOrderError("point geometry needs potential jets of order >= 2")
    p = np.asarray(p, dtype=np.float64)
    m = spec.real_dim
    J = standard_complex_structure(spec.complex_dim)
    pot = spec.potential_jet(p, order)

    hess = jet_array((m, m))
    dpot = [pot.diff(a) for a in range(m)]
    for a in range(m):
        for b in range(a, m):
            hess[a, b] = dpot[a].diff(b)
            hess[b, a] = hess[a, b]

    # omega_{ab} = H_{bc} J^c_a - H_{ac} J^c_b  (= dd^c potential on the frame)
    omega = jet_array((m, m))
    for a in range(m):
        for b in range(m):
            t1 = sum_jets(hess[b, c] * J[c, a] for c in range(m) if J[c, a] != 0.0)
            t2 = sum_jets(hess[a, c] * J[c, b] for c in range(m) if J[c, b] != 0.0)
            omega[a, b] = t1 - t2

    omega_vals = np.moveaxis(np.moveaxis(jet_values(omega), 0, -1), 0, -1)
    det = np.linalg.det(omega_vals)
    if np.any(np.abs(det) < 1e-300):
        raise DegenerateFormError(f"omega is singular at a point of {spec.name}")

    g = jet_array((m, m))
    for a in range(m):
        for b in range(m):
            g[a, b] = sum_jets(omega[a, c] * J[c, b] for c in range(m) if J[c, b] != 0.0)

    g_vals = np.moveaxis(np.moveaxis(jet_values(g), 0, -1), 0, -1)
    eig = np.linalg.eigvalsh(0.5 * (g_vals + np.swapaxes(g_vals, -1, -2)))
    if np.any(eig <= 0):
        raise NotKahlerError(
            f"metric not positive definite on {spec.name} "
            f"(min eigenvalue {float(np.min(eig)):.3e})"
        )

    # jets of the inverses are never consumed beyond the Christoffel order
    # (>= 3); capping them there keeps the node sweeps affordable
    inv_order = min(order - 2, max(3, order - 3))
    Lambda = jet_matrix_inverse(omega, order=inv_order)
    g_inv = jet_matrix_inverse(g, order=inv_order)

    gamma = None
    if order >= 3:
        ginv3 = _truncate_matrix(g_inv, order - 3)
        dg = [[[g[l, k].diff(a) for k in range(m)] for l in range(m)] for a in range(m)]
        gamma = jet_array((m, m, m))
        for j in range(m):
            for k in range(j, m):
                s = [dg[j][l][k] + dg[k][l][j] - dg[l][j][k] for l in range(m)]
                for i in range(m):
                    acc = ginv3[i, 0] * s[0]
                    for l in range(1, m):
                        acc = acc + ginv3[i, l] * s[l]
                    gamma[i, j, k] = 0.5 * acc
                    gamma[i, k, j] = gamma[i, j, k]

    return PointGeometry(
        spec=spec, point=p, order=order, J=J, potential=pot,
        omega=omega, g=g, Lambda=Lambda, g_inv=g_inv, gamma=gamma,
    )


def sum_jets(items) -> Jet:
    items = list(items)
    acc = items[0]
    for it in items[1:]:
        acc = acc + it
    return acc


def _truncate_matrix(M: np.ndarray, order: int) -> np.ndarray:
    out = jet_array(M.shape)
    for idx in np.ndindex(M.shape):
        out[idx] = M[idx].truncated(order)
    return out


def _truncate_array(T: np.ndarray, order: int) -> np.ndarray:
    out = jet_array(T.shape)
    for idx in np.ndindex(T.shape):
        out[idx] = T[idx].truncated(order)
    return out


def curvature(geom: PointGeometry, conn: ConnectionField) -> CurvatureBundle:
    """R, Ric, Scal and (when orders allow) the second covariant derivative
    of Ric as pointwise values."""
    gamma = conn.christoffels()
    m = geom.dim
    gorder = gamma[0, 0, 0].order
    if gorder < 1:
        raise JetOrderError("curvature needs Christoffel jets of order >= 1")

    rorder = gorder - 1
    gam_r = _truncate_array(gamma, rorder)
    dgamma = np.empty((m, m, m, m), dtype=object)  # d_a Gamma^i_{jk}
    for a in range(m):
        for i in range(m):
            for j in range(m):
                for k in range(j, m):
                    dgamma[a, i, j, k] = gamma[i, j, k].diff(a)
                    dgamma[a, i, k, j] = dgamma[a, i, j, k]

    R = jet_array((m, m, m, m))
    zero = Jet.constant(jet_space(m, rorder), np.zeros_like(gamma[0, 0, 0].value()))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                R[i, j, k, k] = zero
            for k in range(m):
                for l in range(k + 1, m):
                    acc = dgamma[k, i, l, j] - dgamma[l, i, k, j]
                    for mm in range(m):
                        acc = acc + gam_r[i, k, mm] * gam_r[mm, l, j]
                        acc = acc - gam_r[i, l, mm] * gam_r[mm, k, j]
                    R[i, j, k, l] = acc
                    R[i, j, l, k] = -acc

    Ric = jet_array((m, m))
    for j in range(m):
        for k in range(m):
            Ric[j, k] = sum_jets(R[i, k, i, j] for i in range(m))

    Scal = None
    if geom.order - 2 >= rorder:
        ginv_r = _truncate_matrix(geom.g_inv, rorder)
        Scal = sum_jets(ginv_r[j, k] * Ric[j, k] for j in range(m) for k in range(m))

    nabla2Ric = None
    if rorder >= 2:
        nric = covariant_derivative_tensor(gam_r, Ric, index_types="dd")
        # the second derivative is consumed as values only; stack and einsum
        nric_v = jet_values(nric)              # (b, j, k, ...)
        gam_v = jet_values(gam_r)
        d_a = np.stack([np.stack([np.stack([np.stack([
            np.asarray(nric[b, j, k].diff(a).value()) for k in range(m)])
            for j in range(m)]) for b in range(m)]) for a in range(m)])  # (a,b,j,k,...)
        nabla2Ric = (d_a
                     - np.einsum('mab...,mjk...->abjk...', gam_v, nric_v)
                     - np.einsum('maj...,bmk...->abjk...', gam_v, nric_v)
                     - np.einsum('mak...,bjm...->abjk...', gam_v, nric_v))
    return CurvatureBundle(R=R, Ric=Ric, Scal=Scal, nabla2Ric=nabla2Ric)


def covariant_derivative_tensor(gamma: np.ndarray, T: np.ndarray, index_types: str) -> np.ndarray:
    """One covariant derivative of a jet tensor; new lower slot comes first.

    index_types marks each slot of T as 'u' (vector) or 'd' (covector); the
    output has types 'd' + index_types and jets one order lower.  Iterating
    this is the standard second covariant derivative
    nabla^2_{(X,Y)} = nabla_X nabla_Y - nabla_{nabla_X Y}.
    """
    m = gamma.shape[0]
    order = T[next(iter(np.ndindex(T.shape)))].order
    gam = _truncate_array(gamma, order - 1) if gamma[0, 0, 0].order > order - 1 else gamma
    T_low = _truncate_array(T, order - 1) if index_types else T
    out = jet_array((m,) + T.shape)
    for a in range(m):
        for idx in np.ndindex(T.shape):
            acc = T[idx].diff(a)
            for slot, typ in enumerate(index_types):
                for mm in range(m):
                    swapped = idx[:slot] + (mm,) + idx[slot + 1:]
                    if typ == "u":
                        acc = acc + gam[idx[slot], a, mm] * T_low[swapped]
                    else:
                        acc = acc - gam[mm, a, idx[slot]] * T_low[swapped]
            out[(a,) + idx] = acc
    return out


def covariant_derivative(geom: PointGeometry, conn: ConnectionField, T,
                         times: int = 1, index_types: str = "") -> np.ndarray:
    """times in {1, 2} covariant derivatives of a jet tensor.

    T is a scalar Jet or an object array of jets whose slots are typed by
    index_types ('u' vector slot, 'd' covector slot).
    """
    if times not in (1, 2):
        raise ValueError("times must be 1 or 2")
    gamma = conn.christoffels()
    if isinstance(T, Jet):
        scalar = jet_array(())
        scalar[()] = T
        T = scalar
        index_types = ""
    torder = T[next(iter(np.ndindex(T.shape)))].order
    if torder < times:
        raise JetOrderError(f"tensor jets of order {torder} cannot take {times} derivatives")
    out = covariant_derivative_tensor(gamma, T, index_types)
    if times == 2:
        out = covariant_derivative_tensor(gamma, out, "d" + index_types)
    return out


def laplacian(geom: PointGeometry, f: Jet):
    """Laplace-Beltrami value Delta f = g^{ij}(d_i d_j f - Gamma^k_{ij} d_k f).

    Sign convention: the divergence-of-gradient operator, negative
    semidefinite on compactly supported functions (flat chart: Delta(x^2+y^2)
    = +4 with unit metric).
    """
    if f.order < 2:
        raise JetOrderError("laplacian needs a jet of order >= 2")
    if geom.gamma is None:
        raise JetOrderError("geometry was built with order < 3; Christoffels unavailable")
    m = geom.dim
    ginv = jet_values(geom.g_inv)
    gam = jet_values(geom.gamma)
    df = [f.diff(i) for i in range(m)]
    val = None
    for i in range(m):
        for j in range(m):
            hij = df[i].diff(j).value()
            corr = sum(gam[k, i, j] * df[k].value() for k in range(m))
            term = ginv[i, j] * (hij - corr)
            val = term if val is None else val + term
    return val
