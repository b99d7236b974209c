"""Chart geometry: metric, connection, curvature, covariant derivatives."""

import numpy as np
import pytest
import sympy as sp

from kahlermu import builtin_manifold, point_geometry, curvature, laplacian, \
    covariant_derivative
from kahlermu.charts import (
    ConnectionField,
    bump_three_tensor,
    fs_swap_points,
    jet_array,
    jet_values,
    normalized_potential_bump,
    radial_bump,
    squared_distance_jet,
    standard_complex_structure,
)
from kahlermu.errors import DegenerateFormError, JetOrderError, NotKahlerError
from kahlermu.jets import Jet, jet_space
from kahlermu.manifolds import random_chart_points


FLAT = builtin_manifold("flat")
CP1 = builtin_manifold("cp1")
CP2 = builtin_manifold("cp2")
P11 = builtin_manifold("cp1xcp1")


def connection_bump(seed=7, dim=2):
    rng = np.random.default_rng(seed)
    sym = rng.uniform(-1, 1, (dim, dim, dim))
    center = np.zeros(dim)
    center[0] = 0.2
    return bump_three_tensor(center, 0.8, sym, power=8)


def test_flat_chart_constant_geometry():
    pts = np.array([[0.3, -0.7], [1.1, 0.4]])
    geom = point_geometry(FLAT, pts, order=6)
    omega = jet_values(geom.omega)
    g = jet_values(geom.g)
    assert np.allclose(omega[0, 1], 1.0) and np.allclose(omega[1, 0], -1.0)
    assert np.allclose(g, np.eye(2)[..., None] * np.ones(2))
    assert np.max(np.abs(jet_values(geom.gamma))) == 0.0


def test_pluriharmonic_term_leaves_omega_unchanged():
    # dd^c kills Re(z^2) = x^2 - y^2
    def pot_plus(xs):
        return FLAT.potential(xs) + (xs[0] * xs[0] - xs[1] * xs[1])

    spec2 = builtin_manifold("flat")
    spec2 = spec2.deformed(lambda xs: xs[0] * xs[0] - xs[1] * xs[1], 1.0)
    pts = np.array([[0.4, 0.2], [-0.3, 0.9]])
    base = point_geometry(FLAT, pts, order=6)
    plus = point_geometry(spec2, pts, order=6)
    assert np.allclose(jet_values(plus.omega)[0, 1], jet_values(base.omega)[0, 1],
                       atol=1e-14)
    assert np.allclose(jet_values(plus.g), jet_values(base.g), atol=1e-14)


def test_fubini_study_origin_against_symbolic_oracle():
    geom = point_geometry(CP1, [0.0, 0.0], order=6)
    assert np.allclose(jet_values(geom.g), np.eye(2), atol=1e-14)
    gam = geom.gamma
    assert np.max(np.abs(jet_values(gam))) < 1e-14

    # symbolic oracle for the Christoffel derivatives at the origin
    x, y = sp.symbols("x y", real=True)
    pot = sp.log(1 + x ** 2 + y ** 2) / 4
    H = sp.Matrix(2, 2, lambda a, b: sp.diff(pot, [x, y][a], [x, y][b]))
    J = sp.Matrix([[0, -1], [1, 0]])
    omega = H.T * 0
    for a in range(2):
        for b in range(2):
            omega[a, b] = sum(H[b, c] * J[c, a] - H[a, c] * J[c, b] for c in range(2))
    g = omega * J
    ginv = g.inv()
    coords = [x, y]
    dgamma_oracle = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                expr = sum(ginv[i, l] * (sp.diff(g[l, k], coords[j])
                                         + sp.diff(g[l, j], coords[k])
                                         - sp.diff(g[j, k], coords[l]))
                           for l in range(2)) / 2
                for a in range(2):
                    dgamma_oracle[a, i, j, k] = float(
                        sp.diff(expr, coords[a]).subs({x: 0, y: 0}))
    dgamma = np.zeros((2, 2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for a in range(2):
                    dgamma[a, i, j, k] = gam[i, j, k].extract(
                        (1, 0) if a == 0 else (0, 1))
    assert np.max(np.abs(dgamma)) > 0.1  # nonzero first derivatives
    assert np.allclose(dgamma, dgamma_oracle, atol=1e-12)


def test_curvature_flat_is_zero():
    geom = point_geometry(FLAT, [0.2, 0.4], order=6)
    cb = curvature(geom, geom.levi_civita())
    assert np.max(np.abs(jet_values(cb.R))) < 1e-14
    assert np.max(np.abs(jet_values(cb.Ric))) < 1e-14
    assert abs(cb.Scal.value()) < 1e-14


def test_fubini_study_scalar_curvature_constant():
    pts = random_chart_points(CP1, 40, seed=1)
    geom = point_geometry(CP1, pts, order=6)
    cb = curvature(geom, geom.levi_civita())
    assert np.allclose(cb.Scal.value(), 8.0, atol=1e-10)
    pts4 = random_chart_points(CP2, 20, seed=2)
    geom4 = point_geometry(CP2, pts4, order=6)
    assert np.allclose(curvature(geom4, geom4.levi_civita()).Scal.value(), 24.0,
                       atol=1e-9)


def test_product_chart_block_diagonal_einstein():
    pts = random_chart_points(P11, 10, seed=3)
    geom = point_geometry(P11, pts, order=6)
    cb = curvature(geom, geom.levi_civita())
    Rv = jet_values(cb.R)
    # mixed blocks vanish: R(e_a, e_b) = 0 when a, b live in different factors
    for i in range(4):
        for j in range(4):
            for k in range(0, 2):
                for l in range(2, 4):
                    assert np.max(np.abs(Rv[i, j, k, l])) < 1e-10
    ric = jet_values(cb.Ric)
    g = jet_values(geom.g)
    assert np.max(np.abs(ric - 4.0 * g)) < 1e-9  # same Einstein constant on both blocks


def test_laplacian_values():
    geom = point_geometry(FLAT, [0.3, -0.1], order=6)
    space = jet_space(2, 6)
    x, y = Jet.variables(space, np.array([0.3, -0.1]))
    assert laplacian(geom, x * x + y * y) == pytest.approx(4.0, abs=1e-12)
    assert laplacian(geom, Jet.constant(space, 5.0)) == pytest.approx(0.0, abs=1e-14)
    pts = random_chart_points(CP1, 10, seed=4)
    gfs = point_geometry(CP1, pts, order=6)
    cb = curvature(gfs, gfs.levi_civita())
    assert np.max(np.abs(laplacian(gfs, cb.Scal))) < 1e-9


def test_covariant_derivative_metricity():
    pts = random_chart_points(CP2, 8, seed=5)
    geom = point_geometry(CP2, pts, order=6)
    lc = geom.levi_civita()
    ng = covariant_derivative(geom, lc, geom.g, times=1, index_types="dd")
    assert np.max(np.abs(jet_values(ng)[..., 0] if jet_values(ng).ndim > 3 else jet_values(ng))) < 1e-9
    # nabla omega = 0 also for perturbed symplectic connections
    conn = ConnectionField(geom, connection_bump(dim=4), t=0.3)
    nom = covariant_derivative(geom, conn, geom.omega, times=1, index_types="dd")
    vals = np.stack([np.asarray(j.value()) for j in nom.flat])
    assert np.max(np.abs(vals)) < 1e-9
    # first derivative of a constant scalar vanishes
    c = Jet.constant(jet_space(4, 6), 2.5)
    dc = covariant_derivative(geom, lc, c)
    assert np.max(np.abs(np.stack([np.asarray(j.value()) for j in dc.flat]))) < 1e-14


def test_first_bianchi_identity():
    pts = random_chart_points(CP2, 10, seed=6)
    geom = point_geometry(CP2, pts, order=6)
    for conn in (geom.levi_civita(), ConnectionField(geom, connection_bump(dim=4), 0.4)):
        Rv = jet_values(curvature(geom, conn).R)
        cyc = (np.einsum('ijkl...->ijkl...', Rv)
               + np.moveaxis(Rv, (1, 2, 3), (2, 3, 1))
               + np.moveaxis(Rv, (1, 2, 3), (3, 1, 2)))
        assert np.max(np.abs(cyc)) < 1e-8


def test_symplectic_dual_frame_reconstruction():
    pts = random_chart_points(CP2, 12, seed=7)
    geom = point_geometry(CP2, pts, order=6)
    lam = geom.lambda_values()
    om = geom.omega_values()
    # e^l = Lambda^{ml} e_m satisfies omega(e_k, e^l) = delta
    delta = np.einsum('km...,ml...->kl...', om, lam)
    target = np.eye(4)[..., None] * np.ones(12)
    assert np.max(np.abs(delta - target)) < 1e-12


def test_chart_independence_across_swap():
    # Scal at a point computed in the affine chart and in the max-coordinate
    # chart of the same point agree (two Fubini-Study charts on the overlap)
    pts = random_chart_points(CP2, 30, seed=8, radius=1.4)
    pat, mapped = fs_swap_points(CP2, pts)
    assert set(np.unique(pat)) > {0}
    g1 = point_geometry(CP2, pts, order=6)
    s1 = curvature(g1, g1.levi_civita()).Scal.value()
    s2 = np.empty_like(s1)
    for p in np.unique(pat):
        mask = pat == p
        g = point_geometry(CP2, mapped[mask], order=6)
        s2[mask] = curvature(g, g.levi_civita()).Scal.value()
    assert np.max(np.abs(s1 - s2)) < 1e-8


def test_chart_independence_cp1_bumped_overlap():
    # deformed potential expressed in both stereographic charts of CP^1;
    # the bump sits in an annulus so both expressions are regular
    bump = radial_bump([0.9, 0.0], 0.35, power=8)

    def pot_z(xs):
        return CP1.potential(xs) + 0.02 * bump(xs)

    def pot_w(xs):
        # z = 1/w: x = u/(u^2+v^2), y = -v/(u^2+v^2)
        u, v = xs
        s = squared_distance_jet(xs)
        inv = s.reciprocal()
        xz = u * inv
        yz = -1.0 * (v * inv)
        return CP1.potential(xs) + 0.02 * bump([xz, yz])

    from dataclasses import replace
    spec_z = replace(CP1, potential=pot_z, fs_product=False)
    spec_w = replace(CP1, potential=pot_w, fs_product=False)
    rng = np.random.default_rng(9)
    zpts = np.column_stack([rng.uniform(0.7, 1.2, 12), rng.uniform(-0.3, 0.3, 12)])
    s = zpts[:, 0] ** 2 + zpts[:, 1] ** 2
    wpts = np.column_stack([zpts[:, 0] / s, -zpts[:, 1] / s])
    gz = point_geometry(spec_z, zpts, order=6)
    gw = point_geometry(spec_w, wpts, order=6)
    sz = curvature(gz, gz.levi_civita()).Scal.value()
    sw = curvature(gw, gw.levi_civita()).Scal.value()
    assert np.max(np.abs(sz - 8.0)) > 1e-3  # the bump actually moved Scal
    assert np.max(np.abs(sz - sw)) < 1e-8


def test_not_kahler_and_degenerate_rejected():
    from dataclasses import replace
    neg = replace(FLAT, potential=lambda xs: -0.25 * squared_distance_jet(xs))
    with pytest.raises(NotKahlerError):
        point_geometry(neg, [0.1, 0.1], order=4)
    ph = replace(FLAT, potential=lambda xs: 0.25 * (xs[0] * xs[0] - xs[1] * xs[1]))
    with pytest.raises(DegenerateFormError):
        point_geometry(ph, [0.1, 0.1], order=4)


def test_order_guards():
    with pytest.raises(JetOrderError):
        point_geometry(FLAT, [0.0, 0.0], order=1)
    g3 = point_geometry(CP1, [0.1, 0.2], order=3)
    with pytest.raises(JetOrderError):
        curvature(g3, g3.levi_civita())
    g6 = point_geometry(CP1, [0.1, 0.2], order=6)
    space = jet_space(2, 1)
    f = Jet.variable(space, 0, 0.1)
    with pytest.raises(JetOrderError):
        laplacian(g6, f)


def test_squared_distance_jet_matches_products():
    space = jet_space(4, 6)
    pts = np.random.default_rng(10).uniform(-1, 1, (5, 4))
    xs = Jet.variables(space, pts)
    direct = squared_distance_jet(xs, center=[0.1, -0.2, 0.3, 0.0])
    built = None
    for a, c in enumerate([0.1, -0.2, 0.3, 0.0]):
        d = xs[a] - c
        built = d * d if built is None else built + d * d
    assert np.allclose(direct.coeffs, built.coeffs, atol=1e-14)


def test_radial_bump_support_and_smoothness():
    space = jet_space(2, 6)
    bump = radial_bump([0.0, 0.0], 1.0, power=8)
    inside = bump(Jet.variables(space, np.array([0.3, 0.1])))
    outside = bump(Jet.variables(space, np.array([1.5, 0.2])))
    assert inside.value() == pytest.approx((1 - 0.1) ** 8)
    assert np.max(np.abs(outside.coeffs)) == 0.0


def test_normalized_bump_keeps_metric_positive():
    bump = normalized_potential_bump(1, [0.3, 0.1], 0.5, power=10)
    spec = CP1.deformed(bump, 0.05, support=([0.3, 0.1], 0.5))
    pts = random_chart_points(spec, 200, seed=11, radius=2.5)
    point_geometry(spec, pts, order=2)  # raises NotKahlerError on failure


def test_complex_structure_squares_to_minus_identity():
    for n in (1, 2, 3):
        J = standard_complex_structure(n)
        assert np.array_equal(J @ J, -np.eye(2 * n))
