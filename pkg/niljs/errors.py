"""
Exception hierarchy for niljs.

Every error carries the CLI exit code it maps to. InputError and its
structural subclass exit 64, ConditionsError 3, NonConvergence 4 and
NoConvergenceRegion 5; the rest fall back to the base code 1.
"""

from typing import List, Optional


class Nil3Error(Exception):
    """Base exception for all niljs errors"""
    exit_code: int = 1


class InputError(Nil3Error):
    """Malformed input: bad arguments, unreadable or invalid domain files"""
    exit_code = 64


class StructuralError(InputError):
    """Boundary chain does not close or is not a simple curve"""
    pass


class GeometryError(Nil3Error):
    """Geometric precondition violated (self-intersection, open region, curve leaving the domain)"""
    pass


class MeshError(Nil3Error):
    """Mesh cannot be built or is degenerate"""
    pass


class ConditionsError(Nil3Error):
    """Dirichlet existence conditions violated while running in strict mode"""
    exit_code = 3


class NotApplicable(Nil3Error):
    """A check whose precondition does not hold"""
    pass


class NonConvergence(Nil3Error):
    """Newton iteration did not reach the residual tolerance"""
    exit_code = 4

    def __init__(
        self,
        message: str,
        last_iterate=None,
        residual_history: Optional[List[float]] = None,
        flagged_blowup: bool = False,
    ):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_history = list(residual_history or [])
        self.flagged_blowup = flagged_blowup


class NoConvergenceRegion(Nil3Error):
    """The solution sequence diverges at every interior node"""
    exit_code = 5


__all__ = [
    "Nil3Error",
    "InputError",
    "StructuralError",
    "GeometryError",
    "MeshError",
    "ConditionsError",
    "NotApplicable",
    "NonConvergence",
    "NoConvergenceRegion",
]
