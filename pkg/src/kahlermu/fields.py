"""Holomorphic vector fields and the Futaki-type invariants.

A field enters either through its holomorphic components W (so that
Z^{(1,0)} = sum_j W^j d/dz_j and the real field is Z = W + conj(W)) or
through explicit real components plus Hamiltonian potentials (F, H) with
Z = X_F + J X_H.  For holomorphic components on a chart with potential P the
complex potential comes for free:

    i(Z^{(1,0)}) omega = dbar u_Z,   u_Z = 2i W(P) = F + i H,

which also transports (F, H) to every deformed form omega + dd^c(phi) in the
class.  Every consumer validates the decomposition, holomorphy and dbar-u
residuals before integrating; fields failing validation are rejected, never
silently corrected.

The invariants:

    F_omega(Z)  = int_M H mu(nabla) omega^n/n!
    F_{c_k}(Z)  = (n-k+1) int_M u_Z c_k ^ omega^{n-k}
    F_q(Z)      = (n-p+1) int_M u_Z q(R) ^ omega^{n-p}
                  + int_M q(L(Z^{(1,0)}) + R) ^ omega^{n-p+1}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .charts import (
    ConnectionField,
    KahlerChartSpec,
    PointGeometry,
    complex_jets,
    curvature,
    jet_array,
    jet_values,
    point_geometry,
)
from .chern import EndoL, chern_forms, complex_frame, curvature_10, endo_L, \
    generalized_futaki_integrand, INVARIANT_POLYNOMIALS
from .errors import InvalidFieldError, SpecParseError, UnsupportedPolynomialError
from .expr import Expression, complex_variables, real_variables
from .forms import omega_power_over_factorial
from .jets import Jet, jet_space
from .manifolds import random_chart_points
from .moment import dual_frame_trace, hamiltonian_vector_jets, pontryagin_density, \
    stable_mu_raw
from .quadrature import QuadratureAtlas, IntegralResult, _pfaffian

RESIDUAL_TOL = 1e-7


# ---------------------------------------------------------------------------
# field specification and pointwise jets
# ---------------------------------------------------------------------------

@dataclass
class FieldJets:
    Z: np.ndarray          # real components as jets, shape (2n,)
    Z10: np.ndarray        # complex components of the (1,0)-part, shape (2n,)
    F: Jet
    H: Jet

    @property
    def u(self) -> Jet:
        return self.F + (1j * self.H)


@dataclass
class HolomorphicFieldSpec:
    """A candidate element of the reduced automorphism algebra."""

    name: str
    holomorphic: Optional[Callable] = None      # [z jets] -> list of complex jets
    Z_components: Optional[Callable] = None     # [x jets] -> object array of jets
    F: Optional[Callable] = None                # [x jets] -> jet
    H: Optional[Callable] = None

    def jets(self, spec: KahlerChartSpec, points, order: int,
             potential: Optional[Jet] = None) -> FieldJets:
        m = spec.real_dim
        n = spec.complex_dim
        points = np.asarray(points, dtype=np.float64)
        batch = points.shape[:-1]
        space = jet_space(m, order)
        xs = Jet.variables(space, points)
        CF, _ = complex_frame(n)
        if self.holomorphic is not None:
            zs = complex_jets(xs)
            Ws = self.holomorphic(zs)
            Ws = [(w if isinstance(w, Jet) else Jet.constant(space, complex(w))).broadcast_to(batch)
                  for w in Ws]
            pot = potential if potential is not None else spec.potential(xs)
            pot = pot.truncated(order) if pot.order > order else pot
            wp = None
            for j, w in enumerate(Ws):
                dzj = 0.5 * (pot.diff(2 * j) - 1j * pot.diff(2 * j + 1))
                term = w.truncated(order - 1) * dzj
                wp = term if wp is None else wp + term
            u = 2j * wp
            F_jet, H_jet = u.real, u.imag
            Z = jet_array((m,))
            Z10 = jet_array((m,))
            for j, w in enumerate(Ws):
                Z[2 * j] = w.real
                Z[2 * j + 1] = w.imag
            for a in range(m):
                acc = None
                for j, w in enumerate(Ws):
                    if CF[j, a] != 0:
                        t = w * CF[j, a]
                        acc = t if acc is None else acc + t
                Z10[a] = acc if acc is not None else Jet.constant(space, 0j).broadcast_to(batch)
            return FieldJets(Z=Z, Z10=Z10, F=F_jet, H=H_jet)
        if self.Z_components is None or self.F is None or self.H is None:
            raise SpecParseError(f"field {self.name!r} needs either holomorphic "
                                 "components or explicit (Z, F, H)")
        Z = self.Z_components(xs)
        for a in range(m):
            Z[a] = Z[a].broadcast_to(batch)
        F_jet = self.F(xs)
        H_jet = self.H(xs)
        if isinstance(F_jet, (int, float)):
            F_jet = Jet.constant(space, float(F_jet))
        if isinstance(H_jet, (int, float)):
            H_jet = Jet.constant(space, float(H_jet))
        F_jet = F_jet.broadcast_to(batch)
        H_jet = H_jet.broadcast_to(batch)
        J = np.zeros((m, m))
        for j in range(n):
            J[2 * j + 1, 2 * j] = 1.0
            J[2 * j, 2 * j + 1] = -1.0
        Z10 = jet_array((m,))
        for a in range(m):
            jz = None
            for c in range(m):
                if J[a, c] != 0:
                    t = Z[c] * J[a, c]
                    jz = t if jz is None else jz + t
            Z10[a] = 0.5 * (Z[a] - 1j * jz)
        return FieldJets(Z=Z, Z10=Z10, F=F_jet, H=H_jet)

    def commutator_with(self, other: "HolomorphicFieldSpec") -> "HolomorphicFieldSpec":
        """[Y, Z] for two holomorphic-component fields (re-derives potentials)."""
        if self.holomorphic is None or other.holomorphic is None:
            raise InvalidFieldError(
                "commutators are derived only for holomorphic-component fields")

        def bracket(zs, _a=self.holomorphic, _b=other.holomorphic):
            Wa = _a(zs)
            Wb = _b(zs)
            n = len(zs)
            space = zs[0].space
            out = []
            for j in range(n):
                acc = None
                for k in range(n):
                    wbj = Wb[j] if isinstance(Wb[j], Jet) else Jet.constant(space, complex(Wb[j]))
                    waj = Wa[j] if isinstance(Wa[j], Jet) else Jet.constant(space, complex(Wa[j]))
                    wak = Wa[k] if isinstance(Wa[k], Jet) else Jet.constant(space, complex(Wa[k]))
                    wbk = Wb[k] if isinstance(Wb[k], Jet) else Jet.constant(space, complex(Wb[k]))
                    dbj = 0.5 * (wbj.diff(2 * k) - 1j * wbj.diff(2 * k + 1))
                    daj = 0.5 * (waj.diff(2 * k) - 1j * waj.diff(2 * k + 1))
                    term = wak.truncated(dbj.order) * dbj - wbk.truncated(daj.order) * daj
                    acc = term if acc is None else acc + term
                out.append(acc)
            return out

        return HolomorphicFieldSpec(name=f"[{self.name},{other.name}]", holomorphic=bracket)


def field_from_document(doc: dict, complex_dim: int) -> HolomorphicFieldSpec:
    """Field from JSON: {"name", "W": [n complex exprs]} or
    {"name", "Z": [2n exprs], "F": expr, "H": expr}."""
    try:
        name = doc["name"]
    except KeyError:
        raise SpecParseError("field document missing 'name'") from None
    if "W" in doc:
        exprs = [Expression(t, complex_variables(complex_dim)) for t in doc["W"]]
        if len(exprs) != complex_dim:
            raise SpecParseError(f"field {name!r}: expected {complex_dim} W components")

        def holo(zs, _exprs=exprs):
            bind = {f"z{j + 1}": z for j, z in enumerate(zs)}
            return [e(bind) for e in _exprs]

        return HolomorphicFieldSpec(name=name, holomorphic=holo)
    for key in ("Z", "F", "H"):
        if key not in doc:
            raise SpecParseError(f"field {name!r} missing component {key!r}")
    m = 2 * complex_dim
    z_exprs = [Expression(t, real_variables(m)) for t in doc["Z"]]
    if len(z_exprs) != m:
        raise SpecParseError(f"field {name!r}: expected {m} Z components")
    f_expr = Expression(doc["F"], real_variables(m))
    h_expr = Expression(doc["H"], real_variables(m))

    def zc(xs, _e=z_exprs):
        bind = {f"x{i + 1}": x for i, x in enumerate(xs)}
        arr = jet_array((len(xs),))
        for a, e in enumerate(_e):
            v = e(bind)
            arr[a] = v if isinstance(v, Jet) else Jet.constant(xs[0].space, float(v))
        return arr

    def ff(xs, _e=f_expr):
        return _e({f"x{i + 1}": x for i, x in enumerate(xs)})

    def hh(xs, _e=h_expr):
        return _e({f"x{i + 1}": x for i, x in enumerate(xs)})

    return HolomorphicFieldSpec(name=name, Z_components=zc, F=ff, H=hh)


# built-in fields: holomorphic components on the affine chart
def _w(*comps):
    def holo(zs, _c=comps):
        out = []
        for text in _c:
            if text == "0":
                out.append(0.0)
            elif text == "1":
                out.append(1.0)
            elif text == "-iz1":
                out.append(-1j * zs[0])
            elif text == "-iz2":
                out.append(-1j * zs[1])
            elif text == "z1":
                out.append(zs[0])
            elif text == "z2":
                out.append(zs[1])
            else:
                raise ValueError(text)
        return out

    return holo


FIELD_REGISTRY: dict[str, dict[str, HolomorphicFieldSpec]] = {
    "cp1": {
        "rot": HolomorphicFieldSpec("rot", holomorphic=_w("-iz1")),
        "scale": HolomorphicFieldSpec("scale", holomorphic=_w("z1")),
        "trans": HolomorphicFieldSpec("trans", holomorphic=_w("1")),
    },
    "cp2": {
        "rot1": HolomorphicFieldSpec("rot1", holomorphic=_w("-iz1", "0")),
        "rot2": HolomorphicFieldSpec("rot2", holomorphic=_w("0", "-iz2")),
        "scale1": HolomorphicFieldSpec("scale1", holomorphic=_w("z1", "0")),
        "scale_diag": HolomorphicFieldSpec("scale_diag", holomorphic=_w("z1", "z2")),
        "shear12": HolomorphicFieldSpec("shear12", holomorphic=_w("z2", "0")),
        "trans1": HolomorphicFieldSpec("trans1", holomorphic=_w("1", "0")),
    },
    "cp1xcp1": {
        "rot_a": HolomorphicFieldSpec("rot_a", holomorphic=_w("-iz1", "0")),
        "rot_b": HolomorphicFieldSpec("rot_b", holomorphic=_w("0", "-iz2")),
        "scale_a": HolomorphicFieldSpec("scale_a", holomorphic=_w("z1", "0")),
    },
    "flat": {
        "rot": HolomorphicFieldSpec("rot", holomorphic=_w("-iz1")),
    },
}


def registry_field(manifold: str, name: str) -> HolomorphicFieldSpec:
    try:
        return FIELD_REGISTRY[manifold][name]
    except KeyError:
        known = sorted(FIELD_REGISTRY.get(manifold, {}))
        raise SpecParseError(f"unknown field {name!r} for manifold {manifold!r}; "
                             f"known: {known}") from None


# ---------------------------------------------------------------------------
# residual diagnostics and the Hamiltonian field
# ---------------------------------------------------------------------------

def hamiltonian_field(geom: PointGeometry, K: Jet) -> np.ndarray:
    """X_K with i(X_K) omega = dK (jets)."""
    return hamiltonian_vector_jets(geom, K)


def holomorphic_residuals(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                          points=None, order: int = 4, seed: int = 5) -> dict:
    """Max-norm residuals of the three defining identities at sample points:
    the decomposition Z = X_F + J X_H, holomorphy Lie_Z J = 0, and
    i(Z^{(1,0)}) omega = dbar u_Z with u_Z = F + iH."""
    if points is None:
        points = random_chart_points(spec, 24, seed=seed)
    points = np.asarray(points, dtype=np.float64)
    geom = point_geometry(spec, points, order=order)
    fj = field.jets(spec, points, order)
    m = spec.real_dim
    J = geom.J
    omega_vals = geom.omega_values()

    X_F = jet_values(hamiltonian_vector_jets(geom, fj.F))
    X_H = jet_values(hamiltonian_vector_jets(geom, fj.H))
    Zv = jet_values(fj.Z)
    zpred = X_F + np.einsum('ac,c...->a...', J, X_H)
    decomp = np.einsum('a...,ab...->b...', Zv - zpred, omega_vals)
    decomp_res = float(np.max(np.abs(decomp)))

    dZ = np.stack([np.stack([np.asarray(fj.Z[a].diff(b).value()) for b in range(m)])
                   for a in range(m)])  # (a, b, ...) = d_b Z^a
    lie_j = -np.einsum('cb,ac...->ab...', J, dZ) + np.einsum('ac,cb...->ab...', J, dZ)
    holo_res = float(np.max(np.abs(lie_j)))

    Z10v = jet_values(fj.Z10)
    izo = np.einsum('a...,ab...->b...', Z10v, omega_vals)
    dbar_u = np.zeros_like(izo)
    for k in range(spec.complex_dim):
        du = 0.5 * (fj.u.diff(2 * k) + 1j * fj.u.diff(2 * k + 1)).value()
        dbar_u[2 * k] = du
        dbar_u[2 * k + 1] = -1j * du
    u_res = float(np.max(np.abs(izo - dbar_u)))
    return {"decomp_res": decomp_res, "holo_res": holo_res, "u_res": u_res}


def validate_field(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                   tol: float = RESIDUAL_TOL, seed: int = 5) -> dict:
    res = holomorphic_residuals(field, spec, order=4, seed=seed)
    worst = max(res.values())
    if worst > tol:
        raise InvalidFieldError(
            f"field {field.name!r} rejected on {spec.name}: residuals {res} "
            f"exceed tolerance {tol:.1e}")
    return res


# ---------------------------------------------------------------------------
# density sweeps shared by all invariants
# ---------------------------------------------------------------------------

def _bundle(spec: KahlerChartSpec, field: Optional[HolomorphicFieldSpec],
            points: np.ndarray, order: int, want_q: tuple[str, ...],
            want_ck: tuple[int, ...]) -> dict:
    out: dict[str, np.ndarray] = {"mu_raw": stable_mu_raw(spec, points, order)}
    if field is None:
        return out
    geom = point_geometry(spec, points, order=order)
    conn = geom.levi_civita()
    curv = curvature(geom, conn)
    fj = field.jets(spec, points, order, potential=geom.potential)
    out["H"] = np.asarray(fj.H.value(), dtype=float)
    out["u"] = np.asarray(fj.u.value())
    n = spec.complex_dim
    if want_ck or want_q:
        omega_vals = geom.omega_values()
        pf = _pfaffian(np.moveaxis(np.moveaxis(omega_vals, 0, -1), 0, -1))
        forms = chern_forms(geom, curv)
        for k in want_ck:
            if k > n:
                raise UnsupportedPolynomialError(f"c_{k} needs complex dimension >= {k}")
            ck = forms[f"c{k}"]
            om = omega_power_over_factorial(omega_vals, n - k).scaled(math.factorial(n - k))
            out[f"ck_{k}"] = ck.wedge(om).top_coefficient() / pf
        if want_q:
            L = endo_L(geom, fj.Z10)
            for q in want_q:
                terms = generalized_futaki_integrand(q, geom, curv, L, np.ones_like(out["u"]))
                out[f"qform_{q}"] = terms["term1_density"] / (n - 1)  # q(R)^omega^{n-2} / pf
                out[f"term2_{q}"] = terms["term2_density"]
    return out


def _swept(spec, field, atlas: QuadratureAtlas, order, want_q=(), want_ck=()):
    """Evaluate the density bundle on fine and coarse node sets, chunked."""
    results = []
    for nodes in (atlas.nodes, atlas.nodes_coarse):
        chunks: list[dict] = []
        for lo in range(0, nodes.shape[0], atlas.chunk):
            chunks.append(_bundle(spec, field, nodes[lo: lo + atlas.chunk],
                                  order, want_q, want_ck))
        merged = {k: np.concatenate([c[k] for c in chunks]) for k in chunks[0]}
        results.append(merged)
    return results


def _paired_integral(atlas, fine_a, fine_b, coarse_a, coarse_b) -> IntegralResult:
    """Integral of a product of two mean-zero-projected densities."""
    vol_f = atlas.volume.value
    vol_c = atlas.reduce(np.ones_like(coarse_a, dtype=float), coarse=True)
    fa = fine_a - atlas.reduce(fine_a) / vol_f
    fb = fine_b - atlas.reduce(fine_b) / vol_f
    ca = coarse_a - atlas.reduce(coarse_a, coarse=True) / vol_c
    cb = coarse_b - atlas.reduce(coarse_b, coarse=True) / vol_c
    v = atlas.reduce(fa * fb)
    vc = atlas.reduce(ca * cb, coarse=True)
    return IntegralResult(value=v, error_estimate=abs(v - vc))


def futaki_moment(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                  atlas: QuadratureAtlas, order: int = 6,
                  validate: bool = True) -> IntegralResult:
    """F_omega(Z) = int H mu(nabla) omega^n/n! with atlas normalisations."""
    if validate:
        validate_field(field, spec)
    fine, coarse = _swept(spec, field, atlas, order)
    return _paired_integral(atlas, fine["H"], fine["mu_raw"],
                            coarse["H"], coarse["mu_raw"])


def futaki_chern(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                 atlas: QuadratureAtlas, k: int, order: int = 6,
                 validate: bool = True) -> tuple[complex, float]:
    """F_{c_k}(Z) = (n-k+1) int u_Z c_k ^ omega^{n-k} (the short form)."""
    n = spec.complex_dim
    if k not in (1, 2):
        raise UnsupportedPolynomialError(f"only c_1 and c_2 are supported, got k={k}")
    if k > n:
        raise UnsupportedPolynomialError(f"c_{k} vanishes identically: complex dim {n} < {k}")
    if validate:
        validate_field(field, spec)
    fine, coarse = _swept(spec, field, atlas, order, want_ck=(k,))
    res = _paired_integral(atlas, fine["u"], fine[f"ck_{k}"],
                           coarse["u"], coarse[f"ck_{k}"])
    return (n - k + 1) * res.value, (n - k + 1) * res.error_estimate


def futaki_generalized(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                       atlas: QuadratureAtlas, q: str, order: int = 6,
                       validate: bool = True) -> dict:
    """Both terms of the generalized Futaki invariant for a degree-2 q."""
    n = spec.complex_dim
    if q not in INVARIANT_POLYNOMIALS:
        raise UnsupportedPolynomialError(
            f"unsupported invariant polynomial {q!r}; supported: {INVARIANT_POLYNOMIALS}")
    if n < 2:
        raise UnsupportedPolynomialError(f"degree-2 polynomials need complex dim >= 2, got {n}")
    if validate:
        validate_field(field, spec)
    fine, coarse = _swept(spec, field, atlas, order, want_q=(q,))
    t1 = _paired_integral(atlas, fine["u"], fine[f"qform_{q}"],
                          coarse["u"], coarse[f"qform_{q}"])
    term1 = (n - 1) * t1.value
    t2_f = atlas.reduce(fine[f"term2_{q}"])
    t2_c = atlas.reduce(coarse[f"term2_{q}"], coarse=True)
    return {"term1": term1, "term2": t2_f, "value": term1 + t2_f,
            "error_estimate": (n - 1) * t1.error_estimate + abs(t2_f - t2_c)}


def prop41_combination(field: HolomorphicFieldSpec, spec: KahlerChartSpec,
                       atlas: QuadratureAtlas, order: int = 6,
                       validate: bool = True) -> dict:
    """F_{(8 pi^2/(n-1)!) (c2 - 1/2 c1.c1)} via the generalized formula, whose
    imaginary part reproduces F_omega."""
    n = spec.complex_dim
    scale = 8.0 * math.pi ** 2 / math.factorial(n - 1)
    g = futaki_generalized(field, spec, atlas, "c2_minus_half_c1c1", order, validate)
    return {"value": scale * g["value"],
            "imag": scale * g["value"].imag,
            "error_estimate": scale * g["error_estimate"]}


# ---------------------------------------------------------------------------
# theorem-level harnesses
# ---------------------------------------------------------------------------

def class_invariance_check(spec: KahlerChartSpec, field: HolomorphicFieldSpec,
                           phi: Callable, amplitudes, nodes_per_axis: int,
                           order: int = 6, support: Optional[tuple] = None) -> list[dict]:
    """F^{omega_phi}(Z) across deformation amplitudes of the Kahler form.

    The same field Z is re-decomposed against every omega_phi (its complex
    potential shifts by 2i Z^{(1,0)}(phi)) and re-validated; positivity of
    g_phi is checked at every quadrature node while building the atlas.
    """
    rows = []
    for amp in amplitudes:
        dspec = spec.deformed(phi, amp, support=support) if amp != 0.0 else spec
        atlas = QuadratureAtlas(dspec, nodes_per_axis)
        res = validate_field(field, dspec)
        fom = futaki_moment(field, dspec, atlas, order=order, validate=False)
        rows.append({"amplitude": amp, "F_omega": fom.value,
                     "error_estimate": fom.error_estimate, "residuals": res})
    return rows


def character_check(fieldY: HolomorphicFieldSpec, fieldZ: HolomorphicFieldSpec,
                    spec: KahlerChartSpec, atlas: QuadratureAtlas,
                    order: int = 6) -> dict:
    """F_omega([Y, Z]); the character property of the invariant predicts 0."""
    validate_field(fieldY, spec)
    validate_field(fieldZ, spec)
    bracket = fieldY.commutator_with(fieldZ)
    validate_field(bracket, spec)
    res = futaki_moment(bracket, spec, atlas, order=order, validate=False)
    return {"value": res.value, "error_estimate": res.error_estimate,
            "bracket": bracket.name}


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

@dataclass
class InvariantReport:
    manifold: str
    field: str
    F_omega: float
    F_ck: dict
    F_q: dict
    vol: float
    mu0: float
    quad_error_estimate: float
    residuals: dict = dc_field(default_factory=dict)
    prop41_gap: Optional[float] = None


def compute_invariant_report(spec: KahlerChartSpec, field: HolomorphicFieldSpec,
                             atlas: QuadratureAtlas, order: int = 6) -> InvariantReport:
    residuals = validate_field(field, spec)
    n = spec.complex_dim
    want_ck = tuple(k for k in (1, 2) if k <= n)
    want_q = tuple(INVARIANT_POLYNOMIALS) if n >= 2 else ()
    fine, coarse = _swept(spec, field, atlas, order, want_q=want_q, want_ck=want_ck)

    fom = _paired_integral(atlas, fine["H"], fine["mu_raw"], coarse["H"], coarse["mu_raw"])
    mu0 = atlas.reduce(fine["mu_raw"]) / atlas.volume.value

    F_ck = {}
    err = fom.error_estimate
    for k in want_ck:
        r = _paired_integral(atlas, fine["u"], fine[f"ck_{k}"], coarse["u"], coarse[f"ck_{k}"])
        F_ck[k] = (n - k + 1) * r.value
        err = max(err, (n - k + 1) * r.error_estimate)

    F_q = {}
    prop41_gap = None
    for q in want_q:
        t1 = _paired_integral(atlas, fine["u"], fine[f"qform_{q}"],
                              coarse["u"], coarse[f"qform_{q}"])
        t2 = atlas.reduce(fine[f"term2_{q}"])
        t2c = atlas.reduce(coarse[f"term2_{q}"], coarse=True)
        F_q[q] = (n - 1) * t1.value + t2
        err = max(err, (n - 1) * t1.error_estimate + abs(t2 - t2c))
    if n >= 2:
        scale = 8.0 * math.pi ** 2 / math.factorial(n - 1)
        prop41_gap = abs(scale * F_q["c2_minus_half_c1c1"].imag - fom.value)

    return InvariantReport(
        manifold=spec.name, field=field.name, F_omega=fom.value,
        F_ck=F_ck, F_q=F_q, vol=atlas.volume.value, mu0=mu0,
        quad_error_estimate=err, residuals=residuals, prop41_gap=prop41_gap,
    )
