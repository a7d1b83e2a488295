"""Single-mode Fock and coherent states: photon statistics and Wigner functions.

Phase-space coordinates are ``q = a + a^dag`` and ``p = -i(a - a^dag)``, so the
vacuum is a unit-variance Gaussian and ``W0(0, 0) = 1/(2 pi)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._common import ValidationError

DEFAULT_HALF_WIDTH = 5.0
DEFAULT_POINTS = 201


class TruncationWarning(UserWarning):
    """Photon-number cutoff keeps less than ``1 - 1e-9`` of the distribution."""


@dataclass(frozen=True)
class CoherentAmplitude:
    alpha: complex

    @property
    def nbar(self) -> float:
        return abs(self.alpha) ** 2


@dataclass(frozen=True)
class WignerGrid:
    """Quasi-probability density ``values[i, j] = W(q_axis[i], p_axis[j])``."""

    q_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.values, self.p_axis, axis=1), self.q_axis))

    def to_csv(self) -> str:
        qq, pp = np.meshgrid(self.q_axis, self.p_axis, indexing="ij")
        rows = np.column_stack([qq.ravel(), pp.ravel(), self.values.ravel()])
        return "q,p,W\n" + "\n".join(f"{a!r},{b!r},{c!r}" for a, b, c in rows) + "\n"


def _alpha(a) -> complex:
    return complex(a.alpha if isinstance(a, CoherentAmplitude) else a)


def coherent_coefficients(alpha: CoherentAmplitude | complex, nmax: int) -> np.ndarray:
    """Fock amplitudes ``c_n = exp(-|a|^2/2) a^n / sqrt(n!)`` for ``n = 0..nmax``.

    Computed in log space so large ``n`` does not overflow. Emits
    :class:`TruncationWarning` when the kept mass is below ``1 - 1e-9``.

    Examples
    --------
    >>> round(abs(coherent_coefficients(0.5, 10)[0]) ** 2, 4)
    0.7788
    """
    if nmax < 0:
        raise ValidationError("nmax must be >= 0", "nmax")
    a = _alpha(alpha)
    n = np.arange(nmax + 1)
    if a == 0:
        c = np.zeros(nmax + 1, dtype=complex)
        c[0] = 1.0
        return c
    logmag = -0.5 * abs(a) ** 2 + n * np.log(abs(a)) - 0.5 * gammaln(n + 1)
    c = np.exp(logmag) * np.exp(1j * n * np.angle(a))
    if 1.0 - np.sum(np.abs(c) ** 2) > 1e-9:
        warnings.warn(f"nmax={nmax} truncates the coherent state with |alpha|={abs(a):.3g}", TruncationWarning)
    return c


def nmax_for(alpha: CoherentAmplitude | complex, tail: float = 1e-12) -> int:
    """Smallest cutoff keeping ``1 - tail`` of the photon-number distribution."""
    nb = abs(_alpha(alpha)) ** 2
    n = int(nb + 10 * np.sqrt(nb) + 10)
    while True:
        p = np.abs(coherent_coefficients(_alpha(alpha), n)) ** 2
        if 1.0 - p.sum() <= tail:
            return n
        n += 10


def quadrature_variances(c: np.ndarray) -> tuple[float, float]:
    """Variances of ``I = (a + a^dag)/2`` and ``Q = (a - a^dag)/(2i)`` for Fock amplitudes ``c``."""
    c = np.asarray(c, dtype=complex)
    n = np.arange(len(c))
    # a|n> = sqrt(n)|n-1>
    a_c = np.sqrt(n[1:]) * c[1:]
    ea = np.vdot(c[:-1], a_c)
    a2_c = np.sqrt(n[2:] * (n[2:] - 1)) * c[2:]
    ea2 = np.vdot(c[:-2], a2_c)
    en = float(np.sum(n * np.abs(c) ** 2))
    # <I^2> = (a^2 + a^dag^2 + 2 a^dag a + 1)/4
    ei2 = (2 * ea2.real + 2 * en + 1) / 4
    eq2 = (-2 * ea2.real + 2 * en + 1) / 4
    return ei2 - ea.real**2, eq2 - ea.imag**2


def evolve_coherent(alpha: CoherentAmplitude | complex, omega_c: float, t: float) -> CoherentAmplitude:
    """Free evolution ``alpha -> exp(-i omega_c t) alpha``."""
    return CoherentAmplitude(np.exp(-1j * omega_c * t) * _alpha(alpha))


def _centre(state) -> tuple[float, float]:
    if isinstance(state, str):
        if state not in ("fock0", "fock1"):
            raise ValidationError(f"unsupported state kind {state!r}", "state")
        return 0.0, 0.0
    a = _alpha(state)
    return 2 * a.real, 2 * a.imag


def default_grid(state="fock0", half_width: float = DEFAULT_HALF_WIDTH, points: int = DEFAULT_POINTS):
    """Square axes of ``points`` samples; ``[-5, 5]`` for Fock states, re-centred on coherent states."""
    q0, p0 = _centre(state)
    return (np.linspace(q0 - half_width, q0 + half_width, points),
            np.linspace(p0 - half_width, p0 + half_width, points))


def wigner(state, q_axis=None, p_axis=None, min_sigma: float = 5.0) -> WignerGrid:
    """Closed-form Wigner function of ``"fock0"``, ``"fock1"`` or a coherent amplitude.

    Parameters
    ----------
    state : {"fock0", "fock1"} or complex or CoherentAmplitude
    q_axis, p_axis : ndarray, optional
        Uniform axes; defaults from :func:`default_grid`.
    min_sigma : float
        Required coverage of the state's centre in vacuum standard deviations.
    """
    q0, p0 = _centre(state)
    if q_axis is None or p_axis is None:
        dq, dp = default_grid(state)
        q_axis = dq if q_axis is None else q_axis
        p_axis = dp if p_axis is None else p_axis
    q_axis = np.asarray(q_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    for ax, c, name in ((q_axis, q0, "q"), (p_axis, p0, "p")):
        if ax.min() > c - min_sigma or ax.max() < c + min_sigma:
            raise ValidationError(f"{name} grid does not cover {min_sigma:g} sigma of the state", name)
        if len(ax) > 2 and not np.allclose(np.diff(ax), ax[1] - ax[0], rtol=1e-9, atol=0):
            raise ValidationError(f"{name} grid must be uniform", name)
    qq, pp = np.meshgrid(q_axis - q0, p_axis - p0, indexing="ij")
    r2 = qq**2 + pp**2
    g = np.exp(-0.5 * r2) / (2 * np.pi)
    vals = (r2 - 1.0) * g if state == "fock1" else g
    return WignerGrid(q_axis, p_axis, vals)
