"""Qubit state representations: Bloch vectors, pure amplitudes and 2x2 density matrices.

Conventions used across the package:

* index 0 is the ground state and carries ``z = +1``;
* ``x = 2 Re rho01``, ``y = -2 Im rho01``, ``z = rho00 - rho11``;
* with ``sigma_z = diag(1, -1)`` a drive ``H = -(Omega/2) sigma_y`` gives
  ``dz/dt = Omega x`` and ``dx/dt = -Omega z``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._common import InvalidStateError, NumericalError

NORM_TOL = 1e-9
CLAMP_TOL = 1e-6
DM_TOL = 1e-12

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# lowering operator: excited (index 1) -> ground (index 0)
SM = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def clamp_bloch(v: np.ndarray, tol: float = CLAMP_TOL) -> np.ndarray:
    """Radially rescale Bloch vectors that overshoot the unit ball by less than ``tol``.

    Works on a single vector or on a stack with the components in the last axis.

    Raises
    ------
    NumericalError
        If any vector exceeds unit norm by more than ``tol``.
    """
    v = np.asarray(v, dtype=float)
    r = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    if np.any(r > 1.0 + tol):
        raise NumericalError(f"Bloch norm {float(r.max()):.9g} exceeds 1 by more than {tol:g}")
    scale = np.where(r > 1.0, 1.0 / np.where(r > 0, r, 1.0), 1.0)
    return v * scale


@dataclass(frozen=True)
class BlochState:
    """Qubit state as a Bloch vector ``(x, y, z)``; ground state is ``z = +1``."""

    x: float = 0.0
    y: float = 0.0
    z: float = 1.0

    def __post_init__(self) -> None:
        v = np.array([self.x, self.y, self.z], dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidStateError("Bloch components must be finite")
        r2 = float(v @ v)
        if r2 > (1.0 + CLAMP_TOL) ** 2:
            raise InvalidStateError(f"Bloch norm {np.sqrt(r2):.9g} outside the unit ball")
        if r2 > 1.0:
            v = v / np.sqrt(r2)
        object.__setattr__(self, "x", float(v[0]))
        object.__setattr__(self, "y", float(v[1]))
        object.__setattr__(self, "z", float(v[2]))

    @classmethod
    def from_array(cls, v) -> "BlochState":
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def purity(self) -> float:
        return 0.5 * (1.0 + self.x**2 + self.y**2 + self.z**2)

    def to_density(self) -> "DensityMatrix2":
        return density_from_bloch(self)

    def to_json(self) -> str:
        return json.dumps({"x": self.x, "y": self.y, "z": self.z})

    @classmethod
    def from_json(cls, text: str) -> "BlochState":
        d = json.loads(text)
        return cls(float(d["x"]), float(d["y"]), float(d["z"]))

    def csv_row(self, t: float) -> str:
        return f"{t!r},{self.x!r},{self.y!r},{self.z!r}"


@dataclass(frozen=True)
class PureQubitState:
    """Pure state ``amp_g |g> + amp_e |e>``, normalized on construction."""

    amp_g: complex = 1.0
    amp_e: complex = 0.0

    def __post_init__(self) -> None:
        n = np.sqrt(abs(self.amp_g) ** 2 + abs(self.amp_e) ** 2)
        if not np.isfinite(n) or n == 0:
            raise InvalidStateError("state vector must be finite and nonzero")
        object.__setattr__(self, "amp_g", complex(self.amp_g) / n)
        object.__setattr__(self, "amp_e", complex(self.amp_e) / n)

    def as_array(self) -> np.ndarray:
        return np.array([self.amp_g, self.amp_e], dtype=complex)

    def to_bloch(self) -> BlochState:
        r01 = self.amp_g * np.conj(self.amp_e)
        z = abs(self.amp_g) ** 2 - abs(self.amp_e) ** 2
        return BlochState(2 * r01.real, -2 * r01.imag, z)


@dataclass(frozen=True)
class DensityMatrix2:
    """Entries of a 2x2 density matrix; validated for hermiticity, trace and positivity."""

    rho00: complex
    rho01: complex
    rho10: complex
    rho11: complex

    def __post_init__(self) -> None:
        m = self.as_array()
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("density matrix entries must be finite")
        if abs(m[1, 0] - np.conj(m[0, 1])) > DM_TOL or abs(m[0, 0].imag) > DM_TOL or abs(m[1, 1].imag) > DM_TOL:
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > DM_TOL:
            raise InvalidStateError(f"trace {np.trace(m).real:.15g} differs from 1")
        if np.linalg.eigvalsh(m).min() < -DM_TOL:
            raise InvalidStateError("density matrix has a negative eigenvalue")

    @classmethod
    def from_array(cls, m) -> "DensityMatrix2":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)


def bloch_from_density(rho: DensityMatrix2) -> BlochState:
    """Bloch components of a validated density matrix.

    Examples
    --------
    >>> bloch_from_density(DensityMatrix2(0.75, 0, 0, 0.25)).z
    0.5
    """
    return BlochState(2 * rho.rho01.real, -2 * rho.rho01.imag, (rho.rho00 - rho.rho11).real)


def density_from_bloch(b: BlochState) -> DensityMatrix2:
    r01 = 0.5 * (b.x - 1j * b.y)
    return DensityMatrix2(0.5 * (1 + b.z), r01, np.conj(r01), 0.5 * (1 - b.z))


def purity(rho: DensityMatrix2 | BlochState) -> float:
    """``Tr rho^2 = (1 + |r|^2) / 2``."""
    b = rho if isinstance(rho, BlochState) else bloch_from_density(rho)
    return b.purity()


def entropy_from_radius(r) -> np.ndarray:
    """Von Neumann entropy (nats) of a qubit with Bloch radius ``r``; vectorized."""
    r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
    p = 0.5 * (1 + r)
    q = 0.5 * (1 - r)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -np.where(p > 0, p * np.log(p), 0.0) - np.where(q > 0, q * np.log(q), 0.0)
    return s


def von_neumann_entropy(rho: DensityMatrix2 | BlochState) -> float:
    b = rho if isinstance(rho, BlochState) else bloch_from_density(rho)
    return float(entropy_from_radius(b.radius))


def rotate_y(x, z, angle):
    """Rotate ``(x, z)`` by ``angle`` under ``H = -(Omega/2) sigma_y`` with ``angle = Omega t``.

    Vectorized; returns the new ``(x, z)``.
    """
    c, s = np.cos(angle), np.sin(angle)
    return x * c - z * s, z * c + x * s
