"""Exception hierarchy shared across the package."""


class ScatternetError(Exception):
    """Base class for all package errors."""


class NetworkFormatError(ScatternetError):
    """Raised on malformed network description text.

    Carries the 1-based line number where parsing failed, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NetworkValidationError(ScatternetError):
    """A parsed network violates a structural invariant."""


class HazardError(ScatternetError):
    """Assembly was attempted on a graph with simultaneity hazards."""

    def __init__(self, hazards):
        self.hazards = list(hazards)
        detail = "; ".join(str(h) for h in self.hazards)
        super().__init__(
            f"graph has simultaneity hazards ({detail}); "
            "apply normalize_loops before assembling"
        )


class DisconnectedGraphError(ScatternetError):
    """The activation front cannot reach every node."""

    def __init__(self, unreachable):
        self.unreachable = sorted(unreachable)
        super().__init__(f"nodes unreachable from the input: {self.unreachable}")


class BlockStructureError(ScatternetError):
    """Assembled operator lacks the expected open/internal block pattern."""


class SingularSystemError(ScatternetError):
    """The steady-state linear system is singular or numerically singular."""

    def __init__(self, condition_estimate: float, detail: str = ""):
        self.condition_estimate = condition_estimate
        msg = (
            "steady-state system is singular "
            f"(condition estimate {condition_estimate:.3e})"
        )
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class ConvergenceError(ScatternetError):
    """Fixed-point iteration failed to converge."""

    def __init__(self, steps: int, last_delta: float):
        self.steps = steps
        self.last_delta = last_delta
        super().__init__(
            f"iteration did not converge in {steps} steps "
            f"(last change {last_delta:.3e}); the internal operator likely has "
            "spectral radius at or near 1"
        )


class ResonanceError(ScatternetError):
    """Star-product cavity denominator vanished."""

    def __init__(self, denominator: complex, index: int | None = None):
        self.denominator = denominator
        self.index = index
        where = "" if index is None else f" at chain position {index}"
        super().__init__(
            f"resonant cavity denominator{where}: |1 - rho*r1| = "
            f"{abs(denominator):.3e}"
        )
