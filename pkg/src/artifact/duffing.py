"""Classical steady states of the driven Duffing resonator (paramp operating point).

With ``u = dtilde - (Q/8) r^2`` the quadrature balance reads

    d_perp + d_par * u = Q * drive
    -d_par + d_perp * u = 0

so ``r^2 (1 + u^2) = (Q drive)^2``, a cubic in ``r^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._common import NumericalError, require

CRITICAL_DETUNING = float(np.sqrt(3.0))
_BRANCH_NAMES = ("lower", "middle", "upper")


@dataclass(frozen=True)
class DuffingParams:
    Q: float
    delta_tilde: float
    drive: float

    def __post_init__(self) -> None:
        require(self.Q > 0, "Q must be positive", "Q")
        require(self.drive >= 0, "drive must be non-negative", "drive")
        require(np.isfinite(self.delta_tilde), "delta_tilde must be finite", "delta_tilde")


@dataclass(frozen=True)
class SteadyState:
    delta_par: float
    delta_perp: float
    r2: float
    theta: float


def _poly(p: DuffingParams) -> np.ndarray:
    q, d = p.Q / 8.0, p.delta_tilde
    return np.array([q * q, -2 * d * q, 1 + d * d, -(p.Q * p.drive) ** 2])


def residuals(p: DuffingParams, delta_par: float, delta_perp: float) -> tuple[float, float]:
    """Left minus right of the two balance equations."""
    u = p.delta_tilde - p.Q / 8.0 * (delta_par**2 + delta_perp**2)
    return delta_perp + delta_par * u - p.Q * p.drive, -delta_par + delta_perp * u


def _polish(c: np.ndarray, s: float) -> float:
    dc = np.polyder(c)
    for _ in range(6):
        d = np.polyval(dc, s)
        if d == 0:
            break
        step = np.polyval(c, s) / d
        s -= step
        if abs(step) <= 1e-16 * max(1.0, abs(s)):
            break
    return s


def steady_states(p: DuffingParams) -> list[SteadyState]:
    """All physical steady states sorted by increasing ``r^2``.

    Roots come from companion-matrix eigenvalues and are refined by Newton
    steps. Zero drive gives the single state at the origin with ``theta = 0``.
    """
    if p.drive == 0:
        return [SteadyState(0.0, 0.0, 0.0, 0.0)]
    c = _poly(p)
    roots = np.roots(c)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-7 * scale and r.real > 0)
    out: list[SteadyState] = []
    for s in real:
        s = _polish(c, s)
        if out and abs(s - out[-1].r2) <= 1e-9 * max(1.0, s):
            continue  # double root at the fold
        u = p.delta_tilde - p.Q / 8.0 * s
        perp = p.Q * p.drive / (1 + u * u)
        par = u * perp
        out.append(SteadyState(par, perp, par * par + perp * perp, float(np.arctan2(perp, par))))
    if not out:
        raise NumericalError("no positive real steady state found")
    return out


def _fold_discriminant(delta_tilde: float) -> float:
    # discriminant of d/dw [w (1 + (dtilde - w)^2)], w = (Q/8) r^2
    return 16 * delta_tilde**2 - 12 * (1 + delta_tilde**2)


def fold_drives(Q: float, delta_tilde: float) -> tuple[float, float] | None:
    """Drive interval with three steady states, or ``None`` below the onset."""
    require(Q > 0, "Q must be positive", "Q")
    if _fold_discriminant(delta_tilde) <= 0 or delta_tilde <= 0:
        return None
    w = np.roots([3.0, -4 * delta_tilde, 1 + delta_tilde**2]).real
    q = Q / 8.0
    P = w * (1 + (delta_tilde - w) ** 2)
    d = np.sqrt(P / q) / Q
    return float(d.min()), float(d.max())


@dataclass(frozen=True)
class Bifurcation:
    critical_detuning: float
    delta_tilde: np.ndarray
    drive_low: np.ndarray
    drive_high: np.ndarray


def bifurcation_boundary(Q: float, delta_tilde_sweep=None) -> Bifurcation:
    """Onset detuning from a sign scan of the fold discriminant, refined by bracketing.

    The returned curves give the two fold drives for each swept detuning
    (NaN where the response is single valued).
    """
    require(Q > 0, "Q must be positive", "Q")
    sweep = np.linspace(0.0, 3.0, 301) if delta_tilde_sweep is None else np.asarray(delta_tilde_sweep, dtype=float)
    require(sweep.size >= 2 and sweep.min() <= 0 + 1e-12 and sweep.max() >= 3, "sweep must cover [0, 3]", "delta_tilde_sweep")
    sweep = np.sort(sweep)
    disc = np.array([_fold_discriminant(d) for d in sweep])
    idx = np.nonzero((disc[:-1] <= 0) & (disc[1:] > 0))[0]
    if idx.size == 0:
        raise NumericalError("no bistability onset in the sweep")
    i = int(idx[0])
    dc = brentq(_fold_discriminant, sweep[i], sweep[i + 1], xtol=1e-14) if disc[i] < 0 else float(sweep[i])
    lo, hi = np.full(sweep.size, np.nan), np.full(sweep.size, np.nan)
    for j, d in enumerate(sweep):
        f = fold_drives(Q, d)
        if f is not None:
            lo[j], hi[j] = f
    return Bifurcation(float(dc), sweep, lo, hi)


@dataclass(frozen=True)
class TransferCurve:
    """Rows of ``(drive, branch, r2, theta)``; branch is ``single``, ``lower``, ``middle`` or ``upper``."""

    drive: np.ndarray
    branch: np.ndarray
    r2: np.ndarray
    theta: np.ndarray


def transfer_function(Q: float, delta_tilde: float, drives) -> TransferCurve:
    """Phase response versus drive; in the bistable window every branch is listed."""
    rows = []
    for d in np.asarray(drives, dtype=float):
        states = steady_states(DuffingParams(Q, delta_tilde, float(d)))
        if len(states) == 1:
            rows.append((d, "single", states[0].r2, states[0].theta))
        else:
            names = _BRANCH_NAMES if len(states) == 3 else ("lower", "upper")
            rows += [(d, n, s.r2, s.theta) for n, s in zip(names, states)]
    d, b, r, t = zip(*rows) if rows else ((), (), (), ())
    return TransferCurve(np.array(d, dtype=float), np.array(b, dtype=object), np.array(r, dtype=float), np.array(t, dtype=float))
