"""Quadrature atlas: volumes, convergence, projections, determinism."""

import math

import numpy as np
import pytest

from kahlermu import builtin_manifold, build_atlas, integrate, mean_zero_project, mu_zero
from kahlermu.errors import QuadratureEvaluationError
from kahlermu.moment import stable_mu_raw
from kahlermu.quadrature import QuadratureAtlas


CP1 = builtin_manifold("cp1")


def radial_volume_oracle(n: int, nodes: int = 400) -> float:
    """1-D radial integral of the Fubini-Study volume of CP^n:
    vol(S^{2n-1}) * int r^{2n-1} (1+r^2)^{-(n+1)} dr, via the same tangent
    substitution evaluated on an independent high-order 1-D rule."""
    sphere = 2.0 * math.pi ** n / math.factorial(n - 1)
    t, w = np.polynomial.legendre.leggauss(nodes)
    theta = math.pi / 4 * (t + 1.0)
    r = np.tan(theta)
    jac = (1.0 + r * r) * math.pi / 4
    integrand = r ** (2 * n - 1) * (1.0 + r * r) ** (-(n + 1))
    return sphere * float(np.sum(w * jac * integrand))


@pytest.mark.parametrize("name,n,exact", [
    ("cp1", 1, math.pi),
    ("cp2", 2, math.pi ** 2 / 2),
])
def test_volume_against_closed_form_and_radial_oracle(name, n, exact):
    spec = builtin_manifold(name)
    atlas = build_atlas(spec, 32 if n == 1 else 10)
    vol = atlas.volume
    assert abs(vol.value - exact) <= max(vol.error_estimate, 1e-9)
    assert radial_volume_oracle(n) == pytest.approx(exact, rel=1e-12)


def test_volume_product_manifold():
    atlas = build_atlas(builtin_manifold("cp1xcp1"), 10)
    assert abs(atlas.volume.value - math.pi ** 2) <= max(atlas.volume.error_estimate, 1e-8)


def test_zero_density_and_linearity_and_monotonicity():
    atlas = build_atlas(CP1, 24)
    zero = atlas.integrate(lambda pts: np.zeros(pts.shape[0]))
    assert zero.value == 0.0

    f = lambda pts: np.exp(-pts[:, 0] ** 2 - pts[:, 1] ** 2)
    g = lambda pts: 1.0 / (1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2)
    combo = lambda pts: 2.0 * f(pts) - 0.5 * g(pts)
    lhs = atlas.integrate(combo).value
    rhs = 2.0 * atlas.integrate(f).value - 0.5 * atlas.integrate(g).value
    assert lhs == pytest.approx(rhs, abs=1e-14)
    assert atlas.integrate(f).value > 0.0


def test_odd_density_integrates_to_zero():
    # the imaginary part of u for the translation field is odd under z -> -z
    from kahlermu.fields import registry_field
    atlas = build_atlas(CP1, 32)
    field = registry_field("cp1", "trans")

    def h(pts):
        fj = field.jets(CP1, pts, 2)
        return np.asarray(fj.H.value())

    res = atlas.integrate(h)
    assert abs(res.value) <= max(res.error_estimate, 1e-12)


def test_spectral_convergence_on_smooth_density():
    def dens(pts):
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        return np.exp(pts[:, 0] / (1.0 + r2)) * (1.0 + 0.3 * np.sin(pts[:, 1] / (1 + r2)))

    exact = build_atlas(CP1, 96).integrate(dens).value
    errs = [abs(build_atlas(CP1, q).integrate(dens).value - exact) for q in (16, 24, 32, 48)]
    floor = 1e-14
    assert errs[0] > errs[-1] or errs[0] < floor
    # faster than any fixed polynomial rate; check it beats 6th order over the range
    assert errs[-1] <= max(errs[0] * (16 / 48) ** 6, floor)


def test_mean_zero_project():
    atlas = build_atlas(CP1, 24)
    const = lambda pts: 3.0 * np.ones(pts.shape[0])
    proj = mean_zero_project(atlas, const)
    assert np.max(np.abs(proj(atlas.nodes[:50]))) < 1e-12

    f = lambda pts: pts[:, 0] / (1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2) ** 2
    once = mean_zero_project(atlas, f)
    twice = mean_zero_project(atlas, once)
    sample = atlas.nodes[:100]
    assert np.allclose(once(sample), twice(sample), atol=1e-14)
    shifted = mean_zero_project(atlas, lambda pts: f(pts) + 7.0)
    assert np.allclose(once(sample), shifted(sample), atol=1e-12)


def test_mu_zero_values():
    atlas1 = build_atlas(CP1, 24)
    from kahlermu.moment import pontryagin_density
    from kahlermu.charts import point_geometry

    def p_density(spec):
        def ev(pts, _s=spec):
            geom = point_geometry(_s, pts, order=6)
            return pontryagin_density(geom, conn=geom.levi_civita())
        return ev

    assert mu_zero(atlas1, p_density(CP1)) == pytest.approx(0.0, abs=1e-12)
    flat = builtin_manifold("flat")
    atlas_f = build_atlas(flat, 12)
    assert mu_zero(atlas_f, p_density(flat)) == pytest.approx(0.0, abs=1e-12)
    cp2 = builtin_manifold("cp2")
    atlas2 = build_atlas(cp2, 8)
    # curvature-square density of the Fubini-Study plane is the constant -24
    assert mu_zero(atlas2, p_density(cp2)) == pytest.approx(-24.0, abs=1e-6)


def test_nan_density_names_the_node():
    atlas = build_atlas(CP1, 16)

    def bad(pts):
        vals = np.ones(pts.shape[0])
        vals[3] = np.nan
        return vals

    with pytest.raises(QuadratureEvaluationError, match="node 3"):
        atlas.integrate(bad)


def test_weights_positive_and_deterministic():
    a1 = build_atlas(CP1, 20)
    a2 = build_atlas(CP1, 20)
    assert np.all(a1.weights > 0)
    assert np.array_equal(a1.weights, a2.weights)
    f = lambda pts: np.cos(pts[:, 0]) / (1.0 + pts[:, 1] ** 2)
    assert a1.integrate(f).value == a2.integrate(f).value


def test_integrate_helper_matches_method():
    atlas = build_atlas(CP1, 16)
    f = lambda pts: 1.0 / (1.0 + pts[:, 0] ** 2 + pts[:, 1] ** 2)
    assert integrate(atlas, f).value == atlas.integrate(f).value
