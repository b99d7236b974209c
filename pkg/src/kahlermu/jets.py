"""Truncated multivariate Taylor ("jet") arithmetic.

A jet stores the coefficients f_alpha = d^alpha f / alpha! of a scalar
function at a base point, densely over all multi-indices |alpha| <= order in
graded-lexicographic layout.  Coefficients may carry a trailing batch axis so
one jet object represents the expansion of the same expression at many base
points simultaneously; every operation is then a fixed sequence of vectorized
numpy calls.

Jets are immutable values: operations return new jets and never mutate their
inputs, so evaluation is safe to fan out across any number of workers.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import JetOrderError, JetShapeError, SingularJetError

MAX_ORDER = 8
MAX_VARS = 8
DEFAULT_ORDER = 6


def _grlex_monomials(num_vars: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with |alpha| <= order, sorted by (degree, lex)."""
    monos = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            monos.append(prefix + (remaining,))
            return
        for k in range(remaining + 1):
            rec(prefix + (k,), remaining - k, slots - 1)

    for deg in range(order + 1):
        block = []
        saved = monos
        monos = block
        rec((), deg, num_vars)
        monos = saved
        monos.extend(sorted(block))
    return monos


class JetSpace:
    """Shared index tables for jets with a fixed (num_vars, order).

    Obtain instances through :func:`jet_space`; the tables are built lazily
    and cached, so repeated pipeline runs pay nothing.
    """

    def __init__(self, num_vars: int, order: int):
        if not 1 <= num_vars <= MAX_VARS:
            raise JetShapeError(f"num_vars must be in [1, {MAX_VARS}], got {num_vars}")
        if not 0 <= order <= MAX_ORDER:
            raise JetOrderError(f"order must be in [0, {MAX_ORDER}], got {order}")
        self.num_vars = num_vars
        self.order = order
        self.monomials = _grlex_monomials(num_vars, order)
        self.ncoef = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        # prefix length of the block with |alpha| <= k, used for truncation
        self.ncoef_upto = [0] * (order + 1)
        for m in self.monomials:
            for k in range(sum(m), order + 1):
                self.ncoef_upto[k] += 1
        self._mul_table = None
        self._diff_tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def mul_table(self):
        """(ia, ib, out_idx, seg_starts): pair index arrays sorted by output."""
        if self._mul_table is None:
            pairs = []
            for i, a in enumerate(self.monomials):
                da = sum(a)
                for j, b in enumerate(self.monomials):
                    if da + sum(b) > self.order:
                        continue
                    out = self.index[tuple(x + y for x, y in zip(a, b))]
                    pairs.append((out, i, j))
            pairs.sort()
            out_idx = np.array([p[0] for p in pairs], dtype=np.intp)
            ia = np.array([p[1] for p in pairs], dtype=np.intp)
            ib = np.array([p[2] for p in pairs], dtype=np.intp)
            # every output index occurs: (alpha, 0) is always a pair
            seg_starts = np.searchsorted(out_idx, np.arange(self.ncoef))
            self._mul_table = (ia, ib, out_idx, seg_starts)
        return self._mul_table

    def diff_table(self, axis: int):
        """(src, factor) mapping coefficients of f to those of d_axis f."""
        if axis not in self._diff_tables:
            target = jet_space(self.num_vars, self.order - 1)
            src = np.empty(target.ncoef, dtype=np.intp)
            fac = np.empty(target.ncoef, dtype=np.float64)
            for i, beta in enumerate(target.monomials):
                shifted = list(beta)
                shifted[axis] += 1
                src[i] = self.index[tuple(shifted)]
                fac[i] = shifted[axis]
            self._diff_tables[axis] = (src, fac)
        return self._diff_tables[axis]


@lru_cache(maxsize=None)
def jet_space(num_vars: int, order: int) -> JetSpace:
    return JetSpace(num_vars, order)


def _factorial_multi(alpha) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


class Jet:
    """Dense truncated Taylor expansion of a scalar at a base point.

    coeffs has shape (ncoef,) or (ncoef, batch); coeffs[i] is the Taylor
    coefficient of the i-th graded-lex monomial (i.e. derivative divided by
    alpha factorial).  Real or complex dtype.
    """

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value)
        coeffs = np.zeros((space.ncoef,) + value.shape, dtype=np.result_type(value, np.float64))
        coeffs[0] = value
        return cls(space, coeffs)

    @classmethod
    def variable(cls, space: JetSpace, axis: int, value) -> "Jet":
        if space.order < 1:
            raise JetOrderError("variable jet needs order >= 1")
        jet = cls.constant(space, value)
        e = tuple(1 if i == axis else 0 for i in range(space.num_vars))
        jet.coeffs[space.index[e]] = 1.0
        return jet

    @classmethod
    def variables(cls, space: JetSpace, point) -> list["Jet"]:
        """Coordinate jets at a base point of shape (num_vars,) or (B, num_vars)."""
        point = np.asarray(point, dtype=np.float64)
        if point.ndim == 1:
            vals = point
        else:
            vals = point.T  # axis -> batch values
        return [cls.variable(space, a, vals[a]) for a in range(space.num_vars)]

    # -- basic queries ------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.space.num_vars

    @property
    def order(self) -> int:
        return self.space.order

    def value(self):
        """Constant term (the function value at the base point)."""
        return self.coeffs[0]

    def extract(self, alpha):
        """Raw partial derivative d^alpha f = alpha! * coeff(alpha)."""
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.num_vars:
            raise JetShapeError(f"multi-index length {len(alpha)} != num_vars {self.num_vars}")
        if any(a < 0 for a in alpha):
            raise JetShapeError("multi-index entries must be nonnegative")
        if sum(alpha) > self.order:
            raise JetOrderError(f"|alpha|={sum(alpha)} exceeds jet order {self.order}")
        return self.coeffs[self.space.index[alpha]] * _factorial_multi(alpha)

    def broadcast_to(self, batch_shape: tuple) -> "Jet":
        """Jet with coefficients broadcast out to a trailing batch shape."""
        target = (self.space.ncoef,) + tuple(batch_shape)
        if self.coeffs.shape == target:
            return self
        coeffs = np.broadcast_to(self.coeffs.reshape(
            self.coeffs.shape + (1,) * (len(target) - self.coeffs.ndim)), target)
        return Jet(self.space, coeffs.copy())

    def truncated(self, order: int) -> "Jet":
        """Down-cast to a lower order (never up-casts)."""
        if order == self.order:
            return self
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} -> {order}")
        target = jet_space(self.num_vars, order)
        return Jet(target, self.coeffs[: target.ncoef].copy())

    def diff(self, axis: int) -> "Jet":
        """Jet of the partial derivative along one coordinate, order - 1."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        src, fac = self.space.diff_table(axis)
        target = jet_space(self.num_vars, self.order - 1)
        fac = fac.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return Jet(target, self.coeffs[src] * fac)

    def eval_shift(self, h):
        """Taylor-sum the jet at base_point + h (h shape (num_vars,))."""
        h = np.asarray(h, dtype=np.float64)
        total = np.zeros_like(self.coeffs[0])
        for i, mono in enumerate(self.space.monomials):
            term = self.coeffs[i]
            for a, p in enumerate(mono):
                if p:
                    term = term * h[a] ** p
            total = total + term
        return total

    # -- arithmetic ---------------------------------------------------------

    def _check_same_space(self, other: "Jet"):
        if other.space.num_vars != self.num_vars or other.space.order != self.order:
            raise JetShapeError(
                f"jet shape mismatch: ({self.num_vars} vars, order {self.order}) vs "
                f"({other.space.num_vars} vars, order {other.space.order})"
            )

    @staticmethod
    def _aligned(a: np.ndarray, b: np.ndarray):
        """Pad batch axes so an unbatched jet broadcasts against a batched one."""
        if a.ndim < b.ndim:
            a = a.reshape(a.shape + (1,) * (b.ndim - a.ndim))
        elif b.ndim < a.ndim:
            b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
        return a, b

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_same_space(other)
            a, b = self._aligned(self.coeffs, other.coeffs)
            return Jet(self.space, a + b)
        out = self.coeffs.copy()
        out = out.astype(np.result_type(out, np.asarray(other)), copy=False)
        out[0] = out[0] + other
        return Jet(self.space, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.coeffs * np.asarray(other))
        self._check_same_space(other)
        ia, ib, out_idx, seg = self.space.mul_table()
        a, b = self._aligned(self.coeffs, other.coeffs)
        space = self.space
        if space.ncoef >= 100:
            # sparse factors (bump powers, log/exp arguments) shrink the table
            nzb = _nonzero_rows(b)
            nza = _nonzero_rows(a)
            if min(nza.sum(), nzb.sum()) * 3 <= space.ncoef:
                keep = nza[ia] & nzb[ib]
                prod = a[ia[keep]] * b[ib[keep]]
                out = np.zeros((space.ncoef,) + prod.shape[1:], dtype=prod.dtype)
                np.add.at(out, out_idx[keep], prod)
                return Jet(space, out)
        prod = a[ia] * b[ib]
        return Jet(self.space, np.add.reduceat(prod, seg, axis=0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.space, self.coeffs / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            return self._int_pow(int(p))
        c = self.coeffs[0]
        if np.any(np.real(c) <= 0):
            raise SingularJetError("real-exponent pow needs a positive constant term")
        series = [c ** (p - k) * _binom(p, k) for k in range(self.order + 1)]
        return self._compose(series)

    def _int_pow(self, p: int) -> "Jet":
        if p < 0:
            return self.reciprocal()._int_pow(-p)
        result = Jet.constant(self.space, np.ones_like(self.coeffs[0]))
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base if p > 1 else base
            p >>= 1
        return result

    # -- elementary functions via univariate series composition -------------

    def _nonconstant(self) -> "Jet":
        out = self.coeffs.copy()
        out[0] = np.zeros_like(out[0])
        return Jet(self.space, out)

    def _compose(self, series) -> "Jet":
        """Horner evaluation of sum_k series[k] * (self - const)^k."""
        u = self._nonconstant()
        result = Jet.constant(self.space, np.asarray(series[-1]) + np.zeros_like(self.coeffs[0]))
        for k in range(len(series) - 2, -1, -1):
            result = result * u
            result = result + series[k]
        return result

    def reciprocal(self) -> "Jet":
        c = self.coeffs[0]
        if np.any(c == 0):
            raise SingularJetError("division by jet with zero constant term")
        series = [(-1.0) ** k / c ** (k + 1) for k in range(self.order + 1)]
        return self._compose(series)

    def exp(self) -> "Jet":
        e = np.exp(self.coeffs[0])
        series = [e / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(series)

    def log(self) -> "Jet":
        c = self.coeffs[0]
        if np.iscomplexobj(c) or np.any(c <= 0):
            raise SingularJetError("log of jet needs a positive real constant term")
        series = [np.log(c)]
        series += [(-1.0) ** (k + 1) / (k * c ** k) for k in range(1, self.order + 1)]
        return self._compose(series)

    def sqrt(self) -> "Jet":
        c = self.coeffs[0]
        if np.iscomplexobj(c) or np.any(c <= 0):
            raise SingularJetError("sqrt of jet needs a positive real constant term")
        r = np.sqrt(c)
        series = [r * _binom(0.5, k) / c ** k for k in range(self.order + 1)]
        return self._compose(series)

    def conj(self) -> "Jet":
        return Jet(self.space, np.conj(self.coeffs))

    @property
    def real(self) -> "Jet":
        return Jet(self.space, np.real(self.coeffs).copy())

    @property
    def imag(self) -> "Jet":
        return Jet(self.space, np.imag(self.coeffs).copy())

    def isfinite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))

    def __repr__(self):
        batch = self.coeffs.shape[1:] or None
        return f"Jet(vars={self.num_vars}, order={self.order}, batch={batch})"


def _binom(p, k: int):
    out = 1.0
    for i in range(k):
        out = out * (p - i) / (i + 1)
    return out


def _nonzero_rows(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.ndim == 1:
        return coeffs != 0
    return np.any(coeffs != 0, axis=tuple(range(1, coeffs.ndim)))


_ARITH_KINDS = ("add", "sub", "mul", "div", "pow", "exp", "log", "sqrt")


def jet_arith(a: Jet, b, kind: str):
    """Dispatch a named arithmetic operation; unary kinds ignore b."""
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        return a / b
    if kind == "pow":
        return a ** b
    if kind == "exp":
        return a.exp()
    if kind == "log":
        return a.log()
    if kind == "sqrt":
        return a.sqrt()
    raise ValueError(f"unknown jet operation {kind!r}; expected one of {_ARITH_KINDS}")


def jet_extract(a: Jet, alpha):
    """Raw partial derivative d^alpha f at the base point."""
    return a.extract(alpha)
