"""Continuous-measurement simulation toolkit for a single monitored qubit."""

from __future__ import annotations

__version__ = "0.1.0"

from ._common import ArtifactError, InvalidStateError, NumericalError, ValidationError

__all__ = [
    "ArtifactError",
    "InvalidStateError",
    "NumericalError",
    "ValidationError",
    "__version__",
]
