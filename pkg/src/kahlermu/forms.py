"""Exterior algebra on pointwise coefficient values.

A FormValue stores the values F(e_{i1}, ..., e_{ik}) on increasing frame
index tuples; wedge products follow the determinant (shuffle) convention,
under which (dx ^ dy)(X, Y) = dx(X) dy(Y) - dx(Y) dy(X) and the top power
omega^n/n! has coefficient Pf(omega).  Coefficients may be real or complex
and carry a trailing batch axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


def _shuffle_sign(positions: tuple[int, ...]) -> int:
    """Sign of the permutation moving the listed positions to the front."""
    sign = 1
    for rank, pos in enumerate(positions):
        if (pos - rank) % 2:
            sign = -sign
    return sign


@dataclass
class FormValue:
    """Antisymmetric k-form by its values on increasing index tuples."""

    degree: int
    dim: int
    comps: dict

    @classmethod
    def from_matrix(cls, M: np.ndarray) -> "FormValue":
        """Degree-2 form from an antisymmetric coefficient array (m, m, ...)."""
        m = M.shape[0]
        comps = {(a, b): M[a, b] for a in range(m) for b in range(a + 1, m)}
        return cls(2, m, comps)

    def __add__(self, other: "FormValue") -> "FormValue":
        if self.degree != other.degree or self.dim != other.dim:
            raise ValueError("cannot add forms of different degree/dimension")
        return FormValue(self.degree, self.dim,
                         {k: self.comps[k] + other.comps[k] for k in self.comps})

    def __sub__(self, other: "FormValue") -> "FormValue":
        return self + other.scaled(-1.0)

    def scaled(self, factor) -> "FormValue":
        return FormValue(self.degree, self.dim,
                         {k: v * factor for k, v in self.comps.items()})

    def wedge(self, other: "FormValue") -> "FormValue":
        p, q = self.degree, other.degree
        dim = self.dim
        out = {}
        for total in itertools.combinations(range(dim), p + q):
            acc = None
            for pos in itertools.combinations(range(p + q), p):
                left = tuple(total[i] for i in pos)
                right = tuple(total[i] for i in range(p + q) if i not in pos)
                term = _shuffle_sign(pos) * self.comps[left] * other.comps[right]
                acc = term if acc is None else acc + term
            out[total] = acc
        return FormValue(p + q, dim, out)

    def top_coefficient(self):
        """Value on (e_1, ..., e_dim); only defined for top-degree forms."""
        if self.degree != self.dim:
            raise ValueError(f"form of degree {self.degree} is not top-degree in dim {self.dim}")
        return self.comps[tuple(range(self.dim))]

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(np.asarray(v)))) for v in self.comps.values())


def omega_power_over_factorial(omega_vals: np.ndarray, k: int) -> FormValue:
    """omega^k / k! from the antisymmetric component array of omega."""
    m = omega_vals.shape[0]
    if k == 0:
        return FormValue(0, m, {(): np.ones_like(omega_vals[0, 1])})
    base = FormValue.from_matrix(omega_vals)
    out = base
    for _ in range(k - 1):
        out = out.wedge(base)
    return out.scaled(1.0 / math.factorial(k))


def trace_wedge_endo(A: np.ndarray, B: np.ndarray) -> FormValue:
    """tr(A o^ B) for endomorphism-valued 2-forms given as arrays
    A[a, b] = matrix of A(e_a, e_b); shape (m, m, d, d, ...)."""
    m = A.shape[0]
    comps = {}
    for quad in itertools.combinations(range(m), 4):
        acc = None
        for pos in itertools.combinations(range(4), 2):
            left = tuple(quad[i] for i in pos)
            right = tuple(quad[i] for i in range(4) if i not in pos)
            sign = _shuffle_sign(pos)
            prod = np.einsum('ij...,ji...->...', A[left[0], left[1]], B[right[0], right[1]])
            term = sign * prod
            acc = term if acc is None else acc + term
        comps[quad] = acc
    return FormValue(4, m, comps)


def two_form_trace_against_volume(form2: FormValue, omega_vals: np.ndarray,
                                  pf: np.ndarray):
    """Coefficient c with  form2 ^ omega^{n-1}/(n-1)! = c * omega^n/n!."""
    m = omega_vals.shape[0]
    n = m // 2
    top = form2.wedge(omega_power_over_factorial(omega_vals, n - 1))
    return top.top_coefficient() / pf
