"""Exception hierarchy shared by all fracdelay modules."""

from __future__ import annotations


class FracDelayError(Exception):
    """Base class for every error raised by this package."""


class PoleError(FracDelayError, ValueError):
    """Gamma function evaluated at a non-positive integer."""


class ConvergenceError(FracDelayError, ArithmeticError):
    """A series or iterative scheme could not certify its accuracy target."""


class DomainError(FracDelayError, ValueError):
    """Argument outside the domain where an operator is defined."""


class SingularityError(FracDelayError, ValueError):
    """Non-integrable power singularity (exponent <= -1)."""


class AccuracyError(FracDelayError, ArithmeticError):
    """Numerical differentiation/integration error estimate above tolerance."""


class DegenerateAxisError(FracDelayError, ValueError):
    """Nonlocal axis with alpha_j = 0, beta_j = 0 or |alpha_j| = |beta_j|."""


class IndexDomainError(FracDelayError, ValueError):
    """Mode index outside the admissible set for its axis."""


class AliasError(FracDelayError, ValueError):
    """Grid too coarse for the requested mode truncation."""


class QuadratureError(FracDelayError, ArithmeticError):
    """Convolution quadrature missed its accuracy target."""


class StabilityError(FracDelayError, ArithmeticError):
    """Oracle iterates blew up."""


class FitError(FracDelayError, ArithmeticError):
    """Polynomial fit of a trajectory exceeded its residual tolerance."""


class ParseError(FracDelayError, ValueError):
    """Configuration text could not be parsed."""


class ValidationError(FracDelayError, ValueError):
    """Configuration parsed but violates one or more invariants.

    ``problems`` lists every violation as ``"<field path>: <message>"``.
    """

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
