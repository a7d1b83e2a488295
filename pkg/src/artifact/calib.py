"""Calibration pipelines on synthetic data: cavity linewidth, dispersive shift,
mixer quadrature settings and quantum efficiency.

Frequencies at this interface are in MHz (cycles per microsecond); rates such
as ``Gamma`` are in inverse microseconds; ``chi`` and ``kappa`` are angular
(rad per microsecond) unless a name ends in ``_mhz``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ._common import NumericalError, ValidationError, require
from .monitor_z import DispersivePhysical, ZMonitorConfig, eta_from_snr, generate_signal_z

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class LorentzianFit:
    f_c: float
    kappa: float
    amplitude: float

    def __call__(self, f):
        return lorentzian(f, self.f_c, self.kappa, self.amplitude)


def lorentzian(f, f_c: float, kappa: float, amplitude: float):
    """``A / ((f - f_c)^2 + kappa^2 / 4)``; ``kappa`` is the full width at half maximum."""
    f = np.asarray(f, dtype=float)
    return amplitude / ((f - f_c) ** 2 + 0.25 * kappa**2)


def fit_lorentzian(freq, power, relative: bool = True) -> LorentzianFit:
    """Least-squares Lorentzian fit (Levenberg-Marquardt, analytic Jacobian).

    With ``relative`` the residuals are ``1 - power / model``, the natural
    weighting for multiplicative noise; otherwise plain residuals scaled by the peak.

    Raises
    ------
    ValidationError
        Fewer than 10 points or a span below three linewidths.
    NumericalError
        The optimizer does not converge.
    """
    f = np.asarray(freq, dtype=float)
    y = np.asarray(power, dtype=float)
    require(f.shape == y.shape and f.size >= 10, "need at least 10 (freq, power) points", "freq")
    i = int(np.argmax(y))
    above = f[y >= 0.5 * y[i]]
    k0 = max(float(above.max() - above.min()), float(np.min(np.diff(np.sort(f)))))
    require(np.ptp(f) >= 3 * k0, "frequency span must cover at least three linewidths", "freq")
    scale = y[i]
    p0 = np.array([f[i], k0, 0.25 * k0 * k0 * y[i]])

    def model_and_grad(p):
        fc, k, a = p
        d = (f - fc) ** 2 + 0.25 * k * k
        return a / d, np.column_stack([2 * a * (f - fc) / d**2, -0.5 * a * k / d**2, 1 / d])

    def resid(p):
        m, _ = model_and_grad(p)
        return 1 - y / m if relative else (m - y) / scale

    def jac(p):
        m, g = model_and_grad(p)
        return g * (y / m**2)[:, None] if relative else g / scale

    res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=10_000)
    if not res.success:
        raise NumericalError(f"Lorentzian fit did not converge: {res.message}")
    fc, k, a = res.x
    return LorentzianFit(float(fc), float(abs(k)), float(a))


def cavity_phase(omega, omega_c: float, kappa: float):
    """Reflection phase ``atan(2 (omega_c - omega) / kappa)``."""
    require(kappa > 0, "kappa must be positive", "kappa")
    return np.arctan(2 * (omega_c - np.asarray(omega, dtype=float)) / kappa)


def q_total(q_int: float, q_ext: float) -> float:
    """``1/Q_tot = 1/Q_int + 1/Q_ext``."""
    require(q_int > 0 and q_ext > 0, "quality factors must be positive", "Q")
    return 1.0 / (1.0 / q_int + 1.0 / q_ext)


@dataclass(frozen=True)
class RamseySweepPoint:
    """Ramsey frequency ``f`` (MHz), decay rate ``Gamma`` (1/us) and mixer control offset."""

    f: float
    Gamma: float
    control: float

    def __post_init__(self) -> None:
        require(self.Gamma >= 0, "Gamma must be non-negative", "Gamma")


@dataclass(frozen=True)
class RamseyFit:
    A: float
    B: float
    f: float
    phi: float
    T2: float

    @property
    def Gamma(self) -> float:
        return 1.0 / self.T2

    def __call__(self, t):
        return ramsey_model(t, self.A, self.B, self.f, self.phi, self.T2)


def ramsey_model(t, A: float, B: float, f: float, phi: float, T2: float):
    """``A + B sin(2 pi f t + phi) exp(-t / T2)``; ``t`` in us, ``f`` in MHz."""
    t = np.asarray(t, dtype=float)
    return A + B * np.sin(TWO_PI * f * t + phi) * np.exp(-t / T2)


def fit_ramsey(t, signal) -> RamseyFit:
    """Damped-sine fit seeded by the FFT peak; the envelope decays as ``exp(-t / T2)``.

    Raises
    ------
    NumericalError
        The optimizer does not converge or returns a non-decaying envelope.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    require(t.shape == y.shape and t.size >= 10, "need at least 10 (t, signal) points", "t")
    dt = float(np.median(np.diff(t)))
    require(dt > 0, "times must increase", "t")
    A0 = float(y.mean())
    spec = np.abs(np.fft.rfft(y - A0))
    freqs = np.fft.rfftfreq(y.size, dt)
    f0 = float(freqs[1 + np.argmax(spec[1:])])
    B0 = float(np.ptp(y)) / 2
    # linear least squares for the phase at the seed frequency and a mid-range decay
    T0 = float(np.ptp(t)) / 2
    env = np.exp(-(t - t[0]) / T0)
    M = np.column_stack([np.sin(TWO_PI * f0 * t) * env, np.cos(TWO_PI * f0 * t) * env])
    (s, c), *_ = np.linalg.lstsq(M, y - A0, rcond=None)
    p0 = np.array([A0, max(np.hypot(s, c), 1e-3 * B0) * np.exp(t[0] / T0), f0, np.arctan2(c, s), T0])

    def resid(p):
        return ramsey_model(t, p[0], p[1], p[2], p[3], abs(p[4])) - y

    res = least_squares(resid, p0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=20_000)
    if not res.success:
        raise NumericalError(f"Ramsey fit did not converge: {res.message}")
    A, B, f, phi, T2 = res.x
    if B < 0:
        B, phi = -B, phi + np.pi
    if f < 0:
        f, phi = -f, np.pi - phi
    return RamseyFit(float(A), float(B), float(f), float(np.angle(np.exp(1j * phi))), float(abs(T2)))


@dataclass(frozen=True)
class ChiCalibration:
    """``K`` are the parabola coefficients ``f = K0 + K1 v + K2 v^2`` of frequency versus control."""

    chi: float
    f_min: float
    K0: float
    K1: float
    K2: float
    slope: float
    intercept: float

    @property
    def chi_mhz(self) -> float:
        return self.chi / TWO_PI


def extract_chi(sweep, kappa: float) -> ChiCalibration:
    """Dispersive shift from a Ramsey sweep.

    ``Gamma`` versus angular frequency ``2 pi f`` is a line of slope
    ``4 chi / kappa``; ``f`` versus control is a parabola whose extremum is ``f_min``.
    """
    pts = list(sweep)
    require(len(pts) >= 5, "need at least 5 sweep points", "sweep")
    require(kappa > 0, "kappa must be positive", "kappa")
    f = np.array([p.f for p in pts], dtype=float)
    g = np.array([p.Gamma for p in pts], dtype=float)
    v = np.array([p.control for p in pts], dtype=float)
    if np.ptp(f) == 0 or np.unique(v).size < 3:
        raise NumericalError("degenerate Ramsey sweep")
    order = np.lexsort((g, f, v))
    f, g, v = f[order], g[order], v[order]
    slope, intercept = np.polyfit(TWO_PI * f, g, 1)
    K2, K1, K0 = np.polyfit(v, f, 2)
    if K2 == 0:
        raise NumericalError("frequency does not depend quadratically on the control")
    chi = slope * kappa / 4
    return ChiCalibration(float(chi), float(K0 - K1 * K1 / (4 * K2)), float(K0), float(K1), float(K2), float(slope), float(intercept))


def ramsey_forward(chi: float, kappa: float, f_min: float, control, v0: float = 0.0, c: float = 1.0) -> list[RamseySweepPoint]:
    """Synthetic sweep with ``nbar = c (v - v0)^2``, ``Gamma = 8 chi^2 nbar / kappa``, ``f = f_min + 2 chi nbar / 2 pi``."""
    out = []
    for v in np.asarray(control, dtype=float):
        nbar = c * (v - v0) ** 2
        out.append(RamseySweepPoint(f_min + 2 * chi * nbar / TWO_PI, 8 * chi * chi * nbar / kappa, float(v)))
    return out


@dataclass(frozen=True)
class MixerChannel:
    """Parabola ``f = K0 + K1 v + K2 v^2`` of one mixer channel."""

    K1: float
    K2: float
    K0: float = 0.0

    def __post_init__(self) -> None:
        require(self.K2 > 0, "K2 must be positive", "K2")

    @property
    def v_min(self) -> float:
        return -self.K1 / (2 * self.K2)


def mixer_settings(f_k: float, theta_deg: float, ch3: MixerChannel, ch4: MixerChannel) -> tuple[float, float]:
    """Channel offsets producing phasor length ``f_k`` (MHz) at angle ``theta`` (degrees)."""
    if f_k < 0:
        raise ValidationError("f_k must be non-negative", "f_k")
    th = np.deg2rad(theta_deg)
    return (
        float(np.sqrt(f_k / ch3.K2) * np.cos(th) + ch3.v_min),
        float(np.sqrt(f_k / ch4.K2) * np.sin(th) + ch4.v_min),
    )


def mixer_forward(v3: float, v4: float, ch3: MixerChannel, ch4: MixerChannel) -> tuple[float, float]:
    """``(f_k, theta_deg)`` from channel offsets."""
    a = np.sqrt(ch3.K2) * (v3 - ch3.v_min)
    b = np.sqrt(ch4.K2) * (v4 - ch4.v_min)
    return float(a * a + b * b), float(np.rad2deg(np.arctan2(b, a)))


@dataclass(frozen=True)
class EtaEstimate:
    eta: float
    snr: float
    separation: float
    sigma: float


def weak_histograms(phys: DispersivePhysical, eta: float, T: float, nshots: int, rng: np.random.Generator, dt: float | None = None):
    """Time-averaged signals for ``nshots`` ground and ``nshots`` excited preparations.

    Raw (unscaled) records with means ``+-1``; each shot integrates ``T / dt`` samples.
    """
    k = phys.k
    require(k > 0, "measurement strength must be positive", "chi")
    n = max(1, int(round(T / (dt if dt else min(T / 10, 0.05 / k)))))
    cfg = ZMonitorConfig(k=k, eta=eta, dt=T / n)
    g = generate_signal_z(np.ones((nshots, n)), cfg, rng).mean(axis=1)
    e = generate_signal_z(-np.ones((nshots, n)), cfg, rng).mean(axis=1)
    return g, e


def eta_pipeline(true_eta: float, phys: DispersivePhysical, T: float, nshots: int, rng: np.random.Generator) -> EtaEstimate:
    """Round trip: synthesize histograms, ``S = (separation / sigma)^2``, then ``eta = S kappa / (64 chi^2 nbar T)``."""
    require(nshots >= 10_000, "nshots must be at least 1e4", "nshots")
    require(T > 0, "T must be positive", "T")
    g, e = weak_histograms(phys, true_eta, T, nshots, rng)
    sep = g.mean() - e.mean()
    sigma = np.sqrt(0.5 * (g.var(ddof=1) + e.var(ddof=1)))
    se = sigma * np.sqrt(2.0 / nshots)
    if abs(sep) < 3 * se:
        raise NumericalError("ground and excited histograms are not resolved")
    S = (sep / sigma) ** 2
    return EtaEstimate(float(eta_from_snr(S, phys, T)), float(S), float(sep), float(sigma))
