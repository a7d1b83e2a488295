"""Unmonitored qubit dynamics: Rabi formula, rotating-frame Hamiltonian and Lindblad RK4.

Dephasing uses ``L = sqrt(gamma2/2) sigma_z`` so coherences decay as ``exp(-gamma2 t)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import NumericalError, ValidationError, require
from .qstate import SM, SX, SY, SZ, DensityMatrix2


@dataclass(frozen=True)
class DriveParams:
    """Rotating-frame drive of amplitude ``A`` and detuning ``Delta_d = omega_q - omega_d``."""

    amplitude: float = 0.0
    detuning: float = 0.0
    axis: str = "y"

    def __post_init__(self) -> None:
        require(self.amplitude >= 0, "drive amplitude must be non-negative", "amplitude")
        require(self.axis in ("x", "y"), "drive axis must be 'x' or 'y'", "axis")

    @property
    def omega_r(self) -> float:
        return float(np.hypot(self.amplitude, self.detuning))


@dataclass(frozen=True)
class DecoherenceRates:
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self) -> None:
        require(self.gamma1 >= 0, "gamma1 must be non-negative", "gamma1")
        require(self.gamma2 >= 0, "gamma2 must be non-negative", "gamma2")


@dataclass(frozen=True)
class Trajectory:
    """Time grid with Bloch components; ``rho`` keeps the full matrices when available."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    rho: np.ndarray | None = None

    def to_csv(self) -> str:
        rows = "\n".join(f"{a!r},{b!r},{c!r},{d!r}" for a, b, c, d in zip(self.t, self.x, self.y, self.z))
        return "t,x,y,z\n" + rows + "\n"


def rabi_pe(d: DriveParams, t):
    """Excited population ``A^2/Omega_R^2 sin^2(Omega_R t / 2)`` from the ground state."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("time must be non-negative", "t")
    w = d.omega_r
    if w == 0:
        return np.zeros_like(t)
    return (d.amplitude / w) ** 2 * np.sin(0.5 * w * t) ** 2


def rotating_frame_h(omega_q: float, omega_d: float, A: float) -> tuple[float, float]:
    """Static coefficients ``(hz, hx)`` of ``H = hz sigma_z + hx sigma_x`` in the drive frame."""
    return -0.5 * (omega_q - omega_d), -0.5 * A


def rotating_frame_eigenvalues(omega_q: float, omega_d: float, A: float) -> tuple[float, float]:
    hz, hx = rotating_frame_h(omega_q, omega_d, A)
    e = float(np.hypot(hz, hx))
    return -e, e


def rotating_frame_pe(omega_q: float, omega_d: float, A: float, t):
    """Excited population obtained by diagonalizing the rotating-frame Hamiltonian."""
    hz, hx = rotating_frame_h(omega_q, omega_d, A)
    h = hz * SZ + hx * SX
    w, v = np.linalg.eigh(h)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    psi0 = v.conj().T @ np.array([1.0, 0.0])
    amps = v @ (np.exp(-1j * np.outer(w, t)) * psi0[:, None])
    return np.abs(amps[1]) ** 2


def hamiltonian(d: DriveParams) -> np.ndarray:
    """``-(Delta_d/2) sigma_z - (A/2) sigma_axis``."""
    s = SY if d.axis == "y" else SX
    return -0.5 * d.detuning * SZ - 0.5 * d.amplitude * s


def _lindblad_rhs(h: np.ndarray, ops: list[np.ndarray]):
    lds = [(L, L.conj().T, L.conj().T @ L) for L in ops]

    def f(rho: np.ndarray) -> np.ndarray:
        out = -1j * (h @ rho - rho @ h)
        for L, Ld, LdL in lds:
            out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
        return out

    return f


def bloch_of(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bloch components of a stack of 2x2 matrices (last two axes)."""
    r01 = rho[..., 0, 1]
    return 2 * r01.real, -2 * r01.imag, (rho[..., 0, 0] - rho[..., 1, 1]).real


def lindblad_propagate(
    rho0: DensityMatrix2,
    drive: DriveParams,
    rates: DecoherenceRates,
    t_final: float,
    dt: float,
    check_step: bool = True,
) -> Trajectory:
    """RK4 integration of the Lindblad equation with relaxation and dephasing.

    Parameters
    ----------
    rho0 : DensityMatrix2
    drive : DriveParams
    rates : DecoherenceRates
    t_final, dt : float
        Duration and fixed step; ``dt <= 0.01 / max(Omega_R, gamma1, gamma2)``
        unless ``check_step`` is False.

    Returns
    -------
    Trajectory
        Bloch components and density matrices at ``t = 0, dt, ...``.
    """
    require(dt > 0 and t_final >= 0, "dt must be positive and t_final non-negative", "dt")
    fastest = max(drive.omega_r, rates.gamma1, rates.gamma2)
    if check_step and fastest > 0 and dt > 0.01 / fastest + 1e-15:
        raise NumericalError(f"dt={dt:g} exceeds 0.01/max rate = {0.01 / fastest:g}")
    ops = []
    if rates.gamma1 > 0:
        ops.append(np.sqrt(rates.gamma1) * SM)
    if rates.gamma2 > 0:
        ops.append(np.sqrt(rates.gamma2 / 2) * SZ)
    f = _lindblad_rhs(hamiltonian(drive), ops)
    n = int(round(t_final / dt))
    out = np.empty((n + 1, 2, 2), dtype=complex)
    rho = rho0.as_array()
    out[0] = rho
    for i in range(n):
        k1 = f(rho)
        k2 = f(rho + 0.5 * dt * k1)
        k3 = f(rho + 0.5 * dt * k2)
        k4 = f(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = rho
    x, y, z = bloch_of(out)
    return Trajectory(np.arange(n + 1) * dt, x, y, z, out)


def lindblad_bloch_matrix(omega_r: float, gamma1: float, gamma2_total: float) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch generator ``dr/dt = M r + b`` for a y-axis drive.

    ``gamma2_total`` is the full coherence decay rate on top of ``gamma1/2``.
    """
    g = 0.5 * gamma1 + gamma2_total
    m = np.array([[-g, 0.0, -omega_r], [0.0, -g, 0.0], [omega_r, 0.0, -gamma1]])
    b = np.array([0.0, 0.0, gamma1])
    return m, b


def bloch_exact(r0, omega_r: float, gamma1: float, gamma2_total: float, t) -> np.ndarray:
    """Exact solution of :func:`lindblad_bloch_matrix` via matrix exponentials; rows are ``(x, y, z)``."""
    from scipy.linalg import expm

    m, b = lindblad_bloch_matrix(omega_r, gamma1, gamma2_total)
    aug = np.zeros((4, 4))
    aug[:3, :3] = m
    aug[:3, 3] = b
    v0 = np.append(np.asarray(r0, dtype=float), 1.0)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.array([(expm(aug * ti) @ v0)[:3] for ti in t])
