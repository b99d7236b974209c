"""Jet arithmetic against independent polynomial / symbolic oracles."""

import math
import itertools

import numpy as np
import pytest
import sympy as sp

from kahlermu.jets import Jet, jet_space, jet_arith, jet_extract
from kahlermu.errors import JetOrderError, JetShapeError, SingularJetError


# ---------------------------------------------------------------------------
# independent oracle: exact multivariate polynomial algebra on dicts
# ---------------------------------------------------------------------------

def poly_random(rng, num_vars, degree, n_terms=8):
    poly = {}
    for _ in range(n_terms):
        while True:
            alpha = tuple(int(k) for k in rng.integers(0, degree + 1, num_vars))
            if sum(alpha) <= degree:
                break
        poly[alpha] = poly.get(alpha, 0.0) + rng.uniform(-1, 1)
    return poly


def poly_mul(p, q):
    out = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def poly_add(p, q):
    out = dict(p)
    for b, cb in q.items():
        out[b] = out.get(b, 0.0) + cb
    return out


def poly_eval(p, x):
    return sum(c * np.prod([xi ** a for xi, a in zip(x, alpha)]) for alpha, c in p.items())


def poly_taylor_coeff(p, alpha, x0):
    """Taylor coefficient of the polynomial at x0 via exact differentiation."""
    coeff = 0.0
    for beta, c in p.items():
        if any(b < a for a, b in zip(alpha, beta)):
            continue
        term = c
        for a, b, xi in zip(alpha, beta, x0):
            term *= math.comb(b, a) * xi ** (b - a)
        coeff += term
    return coeff


def jet_of_poly(space, p, x0):
    xs = Jet.variables(space, x0)
    total = Jet.constant(space, 0.0)
    for alpha, c in p.items():
        term = Jet.constant(space, c)
        for xi, a in zip(xs, alpha):
            for _ in range(a):
                term = term * xi
        total = total + term
    return total


def test_mul_matches_polynomial_oracle():
    rng = np.random.default_rng(7)
    for num_vars in (1, 2, 4):
        space = jet_space(num_vars, 6)
        for _ in range(10):
            x0 = rng.uniform(-1, 1, num_vars)
            p = poly_random(rng, num_vars, 3)
            q = poly_random(rng, num_vars, 3)
            jet = jet_of_poly(space, p, x0) * jet_of_poly(space, q, x0)
            prod = poly_mul(p, q)
            for i, alpha in enumerate(space.monomials):
                expected = poly_taylor_coeff(prod, alpha, x0)
                assert jet.coeffs[i] == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_spec_example_product_of_variables():
    # f = x*y at (1, 2), order 2
    space = jet_space(2, 2)
    x, y = Jet.variables(space, [1.0, 2.0])
    f = x * y
    assert f.value() == pytest.approx(2.0)
    assert f.extract((1, 0)) == pytest.approx(2.0)
    assert f.extract((0, 1)) == pytest.approx(1.0)
    assert f.extract((1, 1)) == pytest.approx(1.0)
    assert f.extract((2, 0)) == pytest.approx(0.0)
    assert f.extract((0, 2)) == pytest.approx(0.0)


def test_spec_example_log_one_plus_r2():
    space = jet_space(2, 2)
    x, y = Jet.variables(space, [0.0, 0.0])
    f = (1.0 + x * x + y * y).log()
    assert f.value() == pytest.approx(0.0, abs=1e-15)
    assert f.extract((1, 0)) == pytest.approx(0.0, abs=1e-15)
    assert f.extract((0, 1)) == pytest.approx(0.0, abs=1e-15)
    # Hessian diag (2, 2) means Taylor coefficient 1 on each pure square slot
    assert f.coeffs[space.index[(2, 0)]] == pytest.approx(1.0)
    assert f.coeffs[space.index[(0, 2)]] == pytest.approx(1.0)
    assert f.extract((2, 0)) == pytest.approx(2.0)


def test_additive_inverse_is_zero():
    rng = np.random.default_rng(3)
    space = jet_space(3, 4)
    a = Jet(space, rng.uniform(-1, 1, space.ncoef))
    z = a + (-a)
    assert np.allclose(z.coeffs, 0.0)


def test_extract_examples():
    space = jet_space(2, 6)
    x, _ = Jet.variables(space, [0.0, 0.0])
    cube = x * x * x
    assert jet_extract(cube, (3, 0)) == pytest.approx(6.0)
    assert jet_extract(cube, (0, 0)) == pytest.approx(0.0)
    e = x.exp()
    assert e.extract((4, 0)) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(JetOrderError):
        e.extract((7, 0))


@pytest.mark.parametrize("kind", ["exp", "log", "sqrt"])
def test_elementary_functions_match_sympy(kind):
    rng = np.random.default_rng(11)
    xs_sym = sp.symbols("u v")
    space = jet_space(2, 6)
    for _ in range(4):
        x0 = rng.uniform(0.1, 0.6, 2)
        coeffs = rng.uniform(0.2, 0.8, 4)
        expr = 1.5 + coeffs[0] * xs_sym[0] + coeffs[1] * xs_sym[1] \
            + coeffs[2] * xs_sym[0] * xs_sym[1] + coeffs[3] * xs_sym[1] ** 2
        fn = {"exp": sp.exp, "log": sp.log, "sqrt": sp.sqrt}[kind](expr)
        u, v = Jet.variables(space, x0)
        arg = 1.5 + coeffs[0] * u + coeffs[1] * v + coeffs[2] * u * v + coeffs[3] * v * v
        jet = jet_arith(arg, None, kind)
        for alpha in [(0, 0), (1, 0), (2, 1), (3, 3), (0, 6)]:
            expected = sp.diff(fn, xs_sym[0], alpha[0], xs_sym[1], alpha[1])
            expected = float(expected.subs({xs_sym[0]: x0[0], xs_sym[1]: x0[1]}))
            got = jet.extract(alpha)
            assert got == pytest.approx(expected, rel=1e-11, abs=1e-11)


def test_division_and_pow_match_sympy():
    rng = np.random.default_rng(13)
    x_sym, y_sym = sp.symbols("x y")
    space = jet_space(2, 6)
    x0 = rng.uniform(0.1, 0.5, 2)
    num = 1 + x_sym ** 2 + x_sym * y_sym
    den = 2 + y_sym + x_sym ** 2
    x, y = Jet.variables(space, x0)
    jn = 1 + x * x + x * y
    jd = 2 + y + x * x
    ratio = jn / jd
    powed = jd ** 1.7
    ipow = jd ** 3
    subs = {x_sym: x0[0], y_sym: x0[1]}
    for alpha in [(0, 0), (2, 0), (1, 2), (3, 3)]:
        exp_ratio = float(sp.diff(num / den, x_sym, alpha[0], y_sym, alpha[1]).subs(subs))
        exp_pow = float(sp.diff(den ** sp.Float(1.7), x_sym, alpha[0], y_sym, alpha[1]).subs(subs))
        exp_ipow = float(sp.diff(den ** 3, x_sym, alpha[0], y_sym, alpha[1]).subs(subs))
        assert ratio.extract(alpha) == pytest.approx(exp_ratio, rel=1e-11)
        assert powed.extract(alpha) == pytest.approx(exp_pow, rel=1e-11)
        assert ipow.extract(alpha) == pytest.approx(exp_ipow, rel=1e-11)


def test_add_mul_associative_commutative():
    rng = np.random.default_rng(5)
    space = jet_space(3, 5)
    for _ in range(10):
        a = Jet(space, rng.uniform(-1, 1, space.ncoef))
        b = Jet(space, rng.uniform(-1, 1, space.ncoef))
        c = Jet(space, rng.uniform(-1, 1, space.ncoef))
        lhs = ((a * b) * c).coeffs
        rhs = (a * (b * c)).coeffs
        scale = np.max(np.abs(lhs)) + 1.0
        assert np.max(np.abs(lhs - rhs)) / scale < 1e-13
        assert np.max(np.abs((a * b).coeffs - (b * a).coeffs)) < 1e-13
        assert np.max(np.abs((a + b).coeffs - (b + a).coeffs)) < 1e-13


def test_taylor_shift_convergence_order():
    # value predicted at p + h by the jet at p converges at order K+1
    space = jet_space(2, 4)

    def f(jx, jy):
        return (1.0 + jx * jx + jy * jy).log() + (0.3 * jx).exp()

    p = np.array([0.3, -0.2])
    errs = []
    steps = [0.2, 0.1, 0.05]
    for h in steps:
        jp = f(*Jet.variables(space, p))
        hvec = np.array([h, 0.7 * h])
        jq = f(*Jet.variables(space, p + hvec))
        errs.append(abs(jp.eval_shift(hvec) - jq.value()))
    # order >= K+1 = 5: halving the step must shrink error by ~2^5
    assert errs[1] / errs[0] < (steps[1] / steps[0]) ** 4.5
    assert errs[2] / errs[1] < (steps[2] / steps[1]) ** 4.5


def test_batched_coefficients_match_scalar_path():
    rng = np.random.default_rng(17)
    space = jet_space(2, 6)
    pts = rng.uniform(-0.5, 0.5, (7, 2))
    x, y = Jet.variables(space, pts)
    batched = ((1.0 + x * x + y * y).log() + (x * y).exp()) / (2.0 + x)
    for i, p in enumerate(pts):
        xs, ys = Jet.variables(space, p)
        single = ((1.0 + xs * xs + ys * ys).log() + (xs * ys).exp()) / (2.0 + xs)
        assert np.allclose(batched.coeffs[:, i], single.coeffs, rtol=1e-13, atol=1e-14)


def test_diff_against_oracle():
    rng = np.random.default_rng(19)
    space = jet_space(3, 5)
    p = poly_random(rng, 3, 4)
    x0 = rng.uniform(-1, 1, 3)
    jet = jet_of_poly(space, p, x0)
    d0 = jet.diff(0)
    for alpha in itertools.product(range(3), repeat=3):
        if sum(alpha) > 4:
            continue
        bumped = (alpha[0] + 1,) + alpha[1:]
        expected = poly_taylor_coeff(p, bumped, x0) * bumped[0] * math.factorial(alpha[0] + 1) / math.factorial(alpha[0]) / (alpha[0] + 1)
        # d_x f has raw derivative d^alpha (d_x f) = d^(alpha+e_x) f
        raw = d0.extract(alpha)
        exact = poly_taylor_coeff(p, bumped, x0) * math.prod(math.factorial(a) for a in bumped)
        assert raw == pytest.approx(exact, rel=1e-12, abs=1e-12)
        del expected


def test_shape_and_order_errors():
    a = Jet.constant(jet_space(2, 4), 1.0)
    b = Jet.constant(jet_space(2, 3), 1.0)
    c = Jet.constant(jet_space(3, 4), 1.0)
    with pytest.raises(JetShapeError):
        _ = a + b
    with pytest.raises(JetShapeError):
        _ = a * c
    with pytest.raises(JetOrderError):
        a.truncated(5)
    assert a.truncated(2).order == 2


def test_singular_inputs_rejected():
    space = jet_space(2, 4)
    x, _ = Jet.variables(space, [0.0, 0.0])
    with pytest.raises(SingularJetError):
        _ = 1.0 / x
    with pytest.raises(SingularJetError):
        x.log()
    with pytest.raises(SingularJetError):
        (x - 1.0).sqrt()


def test_truncation_never_consults_higher_degree():
    # the order-2 truncation of a product equals the product of truncations
    rng = np.random.default_rng(23)
    s6 = jet_space(2, 6)
    a = Jet(s6, rng.uniform(-1, 1, s6.ncoef))
    b = Jet(s6, rng.uniform(-1, 1, s6.ncoef))
    low = (a.truncated(2) * b.truncated(2)).coeffs
    high = (a * b).truncated(2).coeffs
    assert np.allclose(low, high, rtol=1e-14, atol=1e-15)
