"""Expression parsing for JSON manifold and field documents."""

import math

import numpy as np
import pytest

from kahlermu.errors import SpecParseError
from kahlermu.expr import Expression, complex_variables, real_variables
from kahlermu.jets import Jet, jet_space


def test_potential_expression_matches_builtin():
    expr = Expression("log(1 + x1*x1 + x2*x2) / 4", real_variables(2))
    space = jet_space(2, 6)
    xs = Jet.variables(space, np.array([0.4, -0.6]))
    val = expr({"x1": xs[0], "x2": xs[1]})
    direct = 0.25 * (1.0 + xs[0] * xs[0] + xs[1] * xs[1]).log()
    assert np.allclose(val.coeffs, direct.coeffs, atol=1e-15)


def test_functions_and_constants():
    expr = Expression("exp(x1) + sqrt(1 + x2*x2) + pow(1 + x1*x1, 1.5) - pi", real_variables(2))
    space = jet_space(2, 4)
    xs = Jet.variables(space, np.array([0.2, 0.3]))
    val = expr({"x1": xs[0], "x2": xs[1]})
    expected = xs[0].exp() + (1.0 + xs[1] * xs[1]).sqrt() + (1.0 + xs[0] * xs[0]) ** 1.5 - math.pi
    assert np.allclose(val.coeffs, expected.coeffs, atol=1e-14)


def test_plain_float_evaluation():
    expr = Expression("x1*x1 + 2*x2", real_variables(2))
    assert expr({"x1": 3.0, "x2": 1.0}) == pytest.approx(11.0)


def test_complex_variables_for_fields():
    expr = Expression("-1j*z1 + z2*z2", complex_variables(2))
    space = jet_space(4, 3)
    xs = Jet.variables(space, np.array([0.1, 0.2, 0.3, 0.4]))
    z1 = xs[0] + 1j * xs[1]
    z2 = xs[2] + 1j * xs[3]
    val = expr({"z1": z1, "z2": z2})
    expected = -1j * z1 + z2 * z2
    assert np.allclose(val.coeffs, expected.coeffs, atol=1e-15)


@pytest.mark.parametrize("bad", [
    "import os",
    "__builtins__",
    "x1 + unknown",
    "open('x')",
    "x1 if x2 else 0",
    "[1,2]",
    "x1 @ x2",
])
def test_disallowed_expressions_rejected(bad):
    with pytest.raises(SpecParseError):
        Expression(bad, real_variables(2))


def test_parse_error_reports_expression():
    with pytest.raises(SpecParseError, match="frobnicate"):
        Expression("frobnicate(x1)", real_variables(2))
