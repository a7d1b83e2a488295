"""Circuit-QED spectra: transmon ladder, Jaynes-Cummings dressed states, dispersive shift
and Josephson-junction design relations.

Energies follow the units of their inputs (hbar = 1). Junction formulas are SI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy.linalg import eigh_tridiagonal

from ._common import NumericalError, ValidationError, require

H_PLANCK = sc.h
E_CHARGE = sc.e
PHI0 = sc.h / (2 * sc.e)


@dataclass(frozen=True)
class TransmonParams:
    EJ: float
    EC: float
    charge_cutoff: int = 20

    def __post_init__(self) -> None:
        require(self.EJ > 0, "EJ must be positive", "EJ")
        require(self.EC > 0, "EC must be positive", "EC")
        require(self.charge_cutoff >= 10, "charge_cutoff must be >= 10", "charge_cutoff")


@dataclass(frozen=True)
class JCParams:
    omega_c: float
    omega_q: float
    g: float

    def __post_init__(self) -> None:
        require(self.g >= 0, "g must be non-negative", "g")
        require(self.omega_c > 0 and self.omega_q > 0, "frequencies must be positive", "omega")

    @property
    def delta(self) -> float:
        return self.omega_q - self.omega_c


@dataclass(frozen=True)
class JunctionParams:
    """Junction and shunt: ``I0`` [A], ``C`` [F], ``Rn`` [ohm], ``gap0`` [eV]."""

    I0: float
    C: float
    Rn: float
    gap0: float = 170e-6

    def __post_init__(self) -> None:
        for name in ("I0", "C", "Rn", "gap0"):
            require(getattr(self, name) > 0, f"{name} must be positive", name)


def _charge_levels(EJ: float, EC: float, cutoff: int, nlevels: int) -> np.ndarray:
    m = np.arange(-cutoff, cutoff + 1, dtype=float)
    diag = 4 * EC * m**2 + EJ
    off = np.full(2 * cutoff, -EJ / 2)
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, nlevels - 1), eigvals_only=True)


def transmon_levels(p: TransmonParams, nlevels: int = 3) -> np.ndarray:
    """Lowest ``nlevels`` eigenvalues of ``4 EC m^2 + EJ (1 - cos delta)`` in the charge basis.

    Raises
    ------
    NumericalError
        If the top requested level moves by more than 1e-8 (relative to EJ)
        when the cutoff grows by 5.
    """
    require(1 <= nlevels <= 2 * p.charge_cutoff - 1, "nlevels must be in [1, 2*cutoff - 1]", "nlevels")
    e = _charge_levels(p.EJ, p.EC, p.charge_cutoff, nlevels)
    e_big = _charge_levels(p.EJ, p.EC, p.charge_cutoff + 5, nlevels)
    if abs(e_big[-1] - e[-1]) > 1e-8 * max(1.0, p.EJ):
        raise NumericalError(f"charge cutoff {p.charge_cutoff} not converged for {nlevels} levels")
    return e


def transmon_summary(p: TransmonParams) -> tuple[float, float]:
    """``(omega01, anharmonicity E12 - E01)``."""
    e = transmon_levels(p, 3)
    return e[1] - e[0], (e[2] - e[1]) - (e[1] - e[0])


def jc_dressed(p: JCParams, n: int) -> tuple[float, float, float]:
    """Dressed energies ``(E_minus, E_plus)`` and mixing angle of the ``n``-th JC doublet.

    The doublet spans ``|g, n+1>`` and ``|e, n>``; ``theta_n`` lies in ``(-pi/4, pi/4]``.
    """
    require(n >= 0, "photon index must be >= 0", "n")
    d = p.delta
    root = np.sqrt(4 * p.g**2 * (n + 1) + d**2)
    em = (n + 1) * p.omega_c - 0.5 * root
    ep = (n + 1) * p.omega_c + 0.5 * root
    if d == 0:
        theta = np.pi / 4 if p.g > 0 else 0.0
    else:
        theta = 0.5 * np.arctan(2 * p.g * np.sqrt(n + 1) / d)
    return em, ep, float(theta)


def jc_ground(p: JCParams) -> float:
    return -0.5 * p.delta


def jc_transitions(p: JCParams) -> tuple[float, float]:
    """``E_minus - E_g`` and ``E_plus - E_g`` for the first doublet."""
    em, ep, _ = jc_dressed(p, 0)
    return em - jc_ground(p), ep - jc_ground(p)


def dispersive_shift(g: float, delta: float) -> float:
    """``chi = g^2 / Delta``; negative when the qubit sits below the cavity."""
    if delta == 0:
        raise ZeroDivisionError("dispersive shift undefined at zero detuning")
    return g**2 / delta


def stark_shift(chi: float, nbar: float) -> float:
    """Qubit frequency shift ``2 chi nbar`` from cavity photons."""
    return 2 * chi * nbar


def dispersive_doublet(p: JCParams, n: int) -> tuple[float, float]:
    """Dispersive-limit energies of ``|g, n+1>`` and ``|e, n>`` (Lamb shift absorbed).

    Matches :func:`jc_dressed` up to ``O(g^4 / Delta^3)``.
    """
    chi = dispersive_shift(p.g, p.delta)
    mid = (n + 1) * p.omega_c
    half = 0.5 * p.delta + chi * (n + 1)
    return mid - half, mid + half


def squid_critical_current(I0: float, phi_ext: float) -> float:
    """Symmetric SQUID: ``2 I0 |cos(pi phi_ext)|`` with flux in units of the flux quantum."""
    require(I0 > 0, "I0 must be positive", "I0")
    return 2 * I0 * abs(np.cos(np.pi * phi_ext))


def jj_inductance(I: float, I0: float) -> float:
    """Junction inductance in units of ``L_J0``: ``1/sqrt(1 - (I/I0)^2)``."""
    if abs(I) >= I0:
        raise ValidationError("bias current at or above the critical current: junction is normal", "I")
    return 1.0 / np.sqrt(1.0 - (I / I0) ** 2)


def freq_from_resistance(j: JunctionParams) -> tuple[float, float]:
    """Room-temperature estimate ``(f01 [Hz], Ic [A])`` from the normal resistance.

    Raises
    ------
    ValidationError
        If the estimate gives a negative frequency.
    """
    gap_j = j.gap0 * E_CHARGE
    f01 = np.sqrt(gap_j / (H_PLANCK * j.C * j.Rn)) - E_CHARGE**2 / (2 * H_PLANCK * j.C)
    ic = np.pi * j.gap0 / (2 * j.Rn)
    if f01 < 0:
        raise ValidationError("estimated f01 is negative: junction outside the transmon regime", "Rn")
    return float(f01), float(ic)
