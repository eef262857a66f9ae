"""
Exception hierarchy shared by all modules.
"""

from typing import Any


class SteeringError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(SteeringError, ValueError):
    """Operator shapes or subsystem dimensions do not fit together."""


class NotHermitianError(SteeringError, ValueError):
    """A Hermitian operator was required."""


class InvariantViolation(SteeringError, ValueError):
    """A domain invariant does not hold beyond tolerance."""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant}: {detail}")
        self.invariant = invariant
        self.detail = detail


class StrategyCapExceeded(SteeringError):
    """Too many deterministic strategies to enumerate."""


class RankDeficientProbeError(SteeringError, ValueError):
    """Probe inputs do not span the input operator space."""

    def __init__(self, rank: int, required: int):
        super().__init__(f"probe set has rank {rank}, {required} required")
        self.rank = rank
        self.required = required


class SolverFailure(SteeringError):
    """The SDP solver did not produce a usable answer."""

    def __init__(self, status: str, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(f"solver {status}: {message}")
        self.status = status
        self.diagnostics = diagnostics or {}


class SingularSystemError(SolverFailure):
    """The Newton system could not be solved."""

    def __init__(self, condition: float, iteration: int):
        super().__init__(
            "numerical-error",
            f"singular Newton system at iteration {iteration} (condition ~ {condition:.3e})",
            {"condition": condition, "iteration": iteration},
        )
        self.condition = condition


class TheoremMismatchError(SteeringError):
    """Two computation paths that must agree did not."""
