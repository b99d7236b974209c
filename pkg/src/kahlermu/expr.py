"""Safe arithmetic-expression evaluation over jets.

Manifold and field documents carry potentials / components as strings over
named variables with +, -, *, /, **, log, exp, sqrt, pow and numeric
literals.  Expressions are parsed once with :mod:`ast` and evaluated on
whatever objects the caller binds to the variables (jets, floats, complex
jets), so the same string works for pointwise values and full expansions.
"""

from __future__ import annotations

import ast
import math

from .errors import SpecParseError

_ALLOWED_CALLS = ("log", "exp", "sqrt", "pow")
_CONSTANTS = {"pi": math.pi, "e": math.e}


class Expression:
    """A parsed expression; call with a dict of variable bindings."""

    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.variables = tuple(variables)
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise SpecParseError(f"cannot parse expression {text!r}: {exc}") from None
        self._validate(tree.body)
        self._code = compile(ast.Expression(tree.body), "<expression>", "eval")

    def _validate(self, node: ast.AST):
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise SpecParseError(f"operator {type(node.op).__name__} not allowed in {self.text!r}")
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.UAdd, ast.USub)):
                raise SpecParseError(f"unary {type(node.op).__name__} not allowed in {self.text!r}")
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS:
                raise SpecParseError(f"only {_ALLOWED_CALLS} calls allowed in {self.text!r}")
            if node.keywords:
                raise SpecParseError(f"keyword arguments not allowed in {self.text!r}")
            for arg in node.args:
                self._validate(arg)
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTANTS:
                raise SpecParseError(
                    f"unknown name {node.id!r} in {self.text!r}; "
                    f"expected one of {self.variables}"
                )
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float, complex)):
                raise SpecParseError(f"literal {node.value!r} not allowed in {self.text!r}")
        else:
            raise SpecParseError(f"syntax {type(node).__name__} not allowed in {self.text!r}")

    def __call__(self, bindings: dict):
        env = {
            "log": lambda v: v.log() if hasattr(v, "log") else math.log(v),
            "exp": lambda v: v.exp() if hasattr(v, "exp") else math.exp(v),
            "sqrt": lambda v: v.sqrt() if hasattr(v, "sqrt") else math.sqrt(v),
            "pow": lambda v, p: v ** p,
            **_CONSTANTS,
            **bindings,
        }
        return eval(self._code, {"__builtins__": {}}, env)

    def __repr__(self):
        return f"Expression({self.text!r})"


def real_variables(num_vars: int) -> tuple[str, ...]:
    """Names x1..x_{2n}: x_{2j-1}, x_{2j} are Re/Im of the j-th complex coordinate."""
    return tuple(f"x{i + 1}" for i in range(num_vars))


def complex_variables(complex_dim: int) -> tuple[str, ...]:
    return tuple(f"z{j + 1}" for j in range(complex_dim))
