"""Exception types shared across the package."""


class KahlermuError(Exception):
    """Base class for all library errors."""


class JetShapeError(KahlermuError, ValueError):
    """Jets with mismatched num_vars or order were combined."""


class JetOrderError(KahlermuError, ValueError):
    """A derivative or operation beyond the truncation order was requested."""


class SingularJetError(KahlermuError, ValueError):
    """Division/log/sqrt applied to a jet whose constant term is not admissible."""


class NotKahlerError(KahlermuError, ValueError):
    """The candidate metric g = omega(., J.) is not positive definite."""


class DegenerateFormError(KahlermuError, ValueError):
    """The candidate 2-form is singular at the evaluation point."""


class InvalidFieldError(KahlermuError, ValueError):
    """A vector field failed its holomorphy/decomposition residual checks."""


class QuadratureEvaluationError(KahlermuError, ValueError):
    """A density evaluated to NaN/Inf at a quadrature node."""


class UnsupportedPolynomialError(KahlermuError, ValueError):
    """An invariant polynomial outside the implemented degree-2 family."""


class SpecParseError(KahlermuError, ValueError):
    """A manifold/field JSON document could not be parsed or validated."""
