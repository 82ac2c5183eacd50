"""
Exception hierarchy for semispec.

Every domain failure derives from SemispecError so that the CLI can map
failures to exit codes in one place. Errors may carry a witness: the phase
point, spectral parameter or config field that triggered the failure.
"""

from __future__ import annotations

from typing import Any


class SemispecError(RuntimeError):
    """Base class for expected numerical and configuration failures."""

    def __init__(self, message: str, witness: Any = None) -> None:
        super().__init__(message)
        self.witness = witness

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"error": self.__class__.__name__, "message": str(self)}
        if self.witness is not None:
            out["witness"] = _plain(self.witness)
        return out


def _plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers to JSON-friendly values."""
    if hasattr(value, "tolist"):
        value = value.tolist()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class ConfigError(SemispecError):
    """Raised for schema violations; the witness is the offending field pointer."""

    def __init__(self, pointer: str, message: str) -> None:
        super().__init__(f"{pointer}: {message}", witness=pointer)
        self.pointer = pointer


class DimensionMismatchError(SemispecError):
    """Raised when a phase point does not match the symbol dimension."""


class EllipticityError(SemispecError):
    """Raised when the flattening precondition (ellipticity on |X| >= R) fails."""


class AssumptionViolationError(SemispecError):
    """Raised when a standing assumption needed by an operation does not hold."""


class OriginNotCriticalError(SemispecError):
    """Raised when p0(0) or dp0(0) does not vanish."""


class FlowDivergenceError(SemispecError):
    """Raised when a Hamiltonian trajectory leaves the ball of radius 1e6."""


class SectorDegenerateError(SemispecError):
    """Raised when the Hamilton map has an eigenvalue pair on the real axis of -i*mu."""


class BasisTooSmallError(SemispecError):
    """Raised when the Hermite basis cannot resolve the requested eigenvalues."""


class UnsupportedSymbolError(SemispecError):
    """Raised when an operation is requested for a symbol form it does not cover."""


class InsufficientDecayError(SemispecError):
    """Raised when a sampled function does not decay at the truncation boundary."""


class SpectralHitError(SemispecError):
    """Raised when the spectral parameter lies numerically on the spectrum."""


class SamplePlanError(SemispecError):
    """Raised when a lambda sample plan is empty or intersects the excluded disks."""


class ConvergenceError(SemispecError):
    """Raised when an iterative solver fails; the witness holds the residuals."""
