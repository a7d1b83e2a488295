"""Bayesian state update for sigma_z monitoring, step-wise and in closed form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import InvalidStateError, ValidationError, require
from .monitor_z import ZMonitorConfig
from .qstate import BlochState, rotate_y


@dataclass(frozen=True)
class BayesConfig:
    """Exponent coefficient ``S/dV`` per unit signal, separation ``dV``, dephasing ``gamma``, step ``dt``.

    Build from monitor settings with :meth:`from_monitor`, which uses
    ``S/dV = 8 eta k dt`` and ``gamma = 2 k (1 - eta) + gamma2``.
    """

    S_per_dt: float
    delta_V: float = 2.0
    gamma: float = 0.0
    dt: float = 0.01
    omega_r: float = 0.0

    def __post_init__(self) -> None:
        require(self.delta_V > 0, "delta_V must be positive", "delta_V")
        require(self.gamma >= 0, "gamma must be non-negative", "gamma")
        require(self.dt > 0, "dt must be positive", "dt")

    @classmethod
    def from_monitor(cls, cfg: ZMonitorConfig) -> "BayesConfig":
        return cls(
            S_per_dt=8 * cfg.eta * cfg.k * cfg.dt,
            delta_V=2.0,
            gamma=2 * cfg.k * (1 - cfg.eta) + cfg.gamma2,
            dt=cfg.dt,
            omega_r=cfg.omega_r,
        )

    @classmethod
    def from_snr(cls, S: float, delta_V: float, gamma: float, dt: float) -> "BayesConfig":
        """Alternative parameterization by per-step SNR ``S`` and separation ``delta_V``."""
        return cls(S_per_dt=S / delta_V, delta_V=delta_V, gamma=gamma, dt=dt)


def kraus_z_update(x, y, z, a, damp=1.0):
    """Exact sigma_z Kraus update with log-likelihood ratio ``a`` (ground over excited).

    Equivalent to ``z' = (1+z+(z-1)e^-a)/(1+z-(z-1)e^-a)`` and
    ``x' = x sqrt(1-z'^2)/sqrt(1-z^2)``, written without the pole singularity.
    """
    h = 0.5 * np.clip(a, -700.0, 700.0)
    ch, sh = np.cosh(h), np.sinh(h)
    n = ch + z * sh
    return damp * x / n, damp * y / n, (sh + z * ch) / n


def bayes_update(x, y, z, V, cfg: BayesConfig):
    """Vectorized measurement update (no drive)."""
    return kraus_z_update(x, y, z, V * cfg.S_per_dt, np.exp(-cfg.gamma * cfg.dt))


def bayes_step(state: BlochState, V: float, cfg: BayesConfig) -> BlochState:
    """Posterior after one sample ``V``; the drive, if any, is applied first as an exact rotation.

    Raises
    ------
    InvalidStateError
        For a prior on a pole (``|z| = 1``) that still carries coherence.
    """
    if not np.isfinite(V):
        raise ValidationError("signal sample must be finite", "V")
    x, y, z = state.x, state.y, state.z
    if cfg.omega_r:
        x, z = rotate_y(x, z, cfg.omega_r * cfg.dt)
    if abs(z) >= 1 and (x != 0 or y != 0):
        raise InvalidStateError("prior at |z| = 1 cannot carry coherence")
    x, y, z = bayes_update(x, y, z, V, cfg)
    return BlochState(float(x), float(y), float(z))


def bayes_filter(records, cfg: BayesConfig, init: BlochState):
    """Step-wise filter over records of shape ``(m, n)``; returns x, y, z of shape ``(m, n+1)``."""
    V = np.atleast_2d(np.asarray(records, dtype=float))
    m, n = V.shape
    out = np.empty((3, m, n + 1))
    x, y, z = (np.full(m, c) for c in init.as_array())
    out[:, :, 0] = x, y, z
    for i in range(n):
        if cfg.omega_r:
            x, z = rotate_y(x, z, cfg.omega_r * cfg.dt)
        x, y, z = bayes_update(x, y, z, V[:, i], cfg)
        out[:, :, i + 1] = x, y, z
    return out[0], out[1], out[2]


def bayes_closed_form(V_mean: float, S_total: float, cfg: BayesConfig, T: float, init: BlochState = BlochState(1.0, 0.0, 0.0)) -> BlochState:
    """Posterior from ``x = 1`` after time ``T`` given the averaged signal.

    ``z = tanh(S V_mean / (2 dV))`` and ``x = sech(S V_mean / (2 dV)) exp(-gamma T)``,
    with ``S_total`` the total SNR over ``T``.
    """
    if not (init.x == 1.0 and init.y == 0.0 and init.z == 0.0):
        raise ValidationError("closed form only covers the initial state x = 1", "init")
    a = S_total * V_mean / (2 * cfg.delta_V)
    return BlochState(float(np.exp(-cfg.gamma * T) / np.cosh(a)), 0.0, float(np.tanh(a)))
