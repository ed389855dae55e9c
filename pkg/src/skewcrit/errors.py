"""Exception taxonomy shared across the package.

Every failure the library raises on purpose derives from SkewCritError so
callers (and the CLI) can distinguish numeric/structural failures from
programming errors.
"""

from __future__ import annotations

__all__ = [
    "SkewCritError",
    "NonFiniteEvaluation",
    "RankDeficient",
    "InsufficientSamples",
    "BelowFloor",
    "DimensionMismatch",
    "NotSquare",
    "NonGraph",
    "DegenerateHessian",
    "MaxIterExceeded",
    "BranchJump",
    "BaseMismatch",
    "NotInZeroSection",
    "MissingTargetH",
    "NotHCompatible",
    "InversionFailed",
    "NotDiagonal",
    "PsiInversionFailed",
    "DataContactViolation",
    "SingularSystem",
    "HypothesisViolated",
    "GroupNotClosed",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "DimensionError",
    "DomainError",
    "MissingBinding",
    "ConfigError",
]


class SkewCritError(Exception):
    """Base class for all library errors."""


# --- numerics ---------------------------------------------------------------

class NonFiniteEvaluation(SkewCritError):
    """A function evaluation produced NaN or Inf on a stencil point."""


class RankDeficient(SkewCritError):
    """A matrix required to have full row rank does not (below tolerance)."""


class InsufficientSamples(SkewCritError):
    """Too few samples for the requested extrapolation or fit."""


class BelowFloor(SkewCritError):
    """Fewer than three points survive the noise floor in a slope fit."""


# --- geometry ---------------------------------------------------------------

class DimensionMismatch(SkewCritError):
    """Inconsistent dimensions between problem ingredients."""


class NotSquare(SkewCritError):
    """Equation/unknown count mismatch: fiber dimension != n - m."""


class NonGraph(SkewCritError):
    """A basis field cannot be written as a graph over the fiber block."""


class DegenerateHessian(SkewCritError):
    """The restricted derivative block is singular or too ill-conditioned."""


# --- solver -----------------------------------------------------------------

class MaxIterExceeded(SkewCritError):
    """Newton did not converge within the iteration budget.

    Carries the partial result (converged=False) as ``result`` when
    available, so callers can inspect the residual history.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class BranchJump(SkewCritError):
    """Consecutive continuation solutions moved farther than the jump cap."""


# --- contact ----------------------------------------------------------------

class BaseMismatch(SkewCritError):
    """The two families disagree at t=0 at the evaluation point."""


class NotInZeroSection(SkewCritError):
    """Hat-division requires the family to vanish at t=0."""


class MissingTargetH(SkewCritError):
    """The operation needs the codomain height map and none was given."""


class NotHCompatible(SkewCritError):
    """The family does not send the zero level to the zero level."""


class InversionFailed(SkewCritError):
    """Newton inversion of a map family did not converge."""


class NotDiagonal(SkewCritError):
    """At t=0 the graph family is not a diffeomorphism onto the diagonal."""


class PsiInversionFailed(SkewCritError):
    """Newton inversion of the graph projection did not converge."""


# --- variation --------------------------------------------------------------

class DataContactViolation(SkewCritError):
    """The problem-family data do not meet the claimed contact order."""


class SingularSystem(SkewCritError):
    """The assembled residual system is numerically singular."""


class HypothesisViolated(SkewCritError):
    """An equivariance precheck failed.

    ``kind`` names the failed clause (e.g. "alpha invariance"),
    ``generator`` is the index of the offending group generator.
    """

    def __init__(self, message, kind=None, generator=None):
        super().__init__(message)
        self.kind = kind
        self.generator = generator


class GroupNotClosed(SkewCritError):
    """Generated group exceeded the closure cap (not a small finite group)."""


# --- exprlang ---------------------------------------------------------------

class ExprSyntaxError(SkewCritError):
    """Parse failure; message includes the source position."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class UnknownIdentifier(SkewCritError):
    """Identifier is not a declared variable, parameter, t, or function."""


class DimensionError(SkewCritError):
    """Variable or parameter index exceeds the declared dimension."""


class DomainError(SkewCritError):
    """Evaluation left the real domain (log of nonpositive, 0 division, ...)."""


class MissingBinding(SkewCritError):
    """Evaluation environment lacks a value the expression needs."""


# --- cli / config -----------------------------------------------------------

class ConfigError(SkewCritError):
    """Configuration file is malformed or inconsistent."""
