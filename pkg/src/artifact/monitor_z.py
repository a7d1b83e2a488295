"""Dispersive sigma_z monitoring: signal synthesis, single-shot statistics, SSE and SME.

The scaled homodyne record is ``V = z + w / sqrt(4 k eta dt)`` with ground at ``+1``.
Rates and times share one unit system (for example 1/us and us). The drive is
``H = -(omega_R/2) sigma_y``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._common import NumericalError, ValidationError, chunked_map, require, spawn, stacked_normals
from .qstate import CLAMP_TOL, BlochState, DensityMatrix2, PureQubitState, rotate_y

SCHEMES = ("single", "two_step")


@dataclass(frozen=True)
class ZMonitorConfig:
    """Measurement strength ``k``, efficiency ``eta``, step ``dt``, drive and extra dephasing.

    ``k * dt <= 0.1`` is enforced unless ``allow_strong`` is set.
    """

    k: float
    eta: float = 1.0
    dt: float = 0.01
    omega_r: float = 0.0
    gamma2: float = 0.0
    seed: int | None = None
    allow_strong: bool = False

    def __post_init__(self) -> None:
        require(self.k > 0, "k must be positive", "k")
        require(0 < self.eta <= 1, "eta must lie in (0, 1]", "eta")
        require(self.dt > 0, "dt must be positive", "dt")
        require(self.gamma2 >= 0, "gamma2 must be non-negative", "gamma2")
        require(self.allow_strong or self.k * self.dt <= 0.1 + 1e-12, "k*dt exceeds the weak-measurement guard 0.1", "dt")

    @property
    def sigma(self) -> float:
        """Per-sample standard deviation ``1/sqrt(4 k eta dt)``."""
        return 1.0 / np.sqrt(4 * self.k * self.eta * self.dt)

    @property
    def tau(self) -> float:
        """Characteristic measurement time ``1/(4 k eta)``."""
        return 1.0 / (4 * self.k * self.eta)


@dataclass(frozen=True)
class MeasurementRecord:
    dt: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(s)):
            raise ValidationError("record samples must be finite", "samples")
        object.__setattr__(self, "samples", s)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


@dataclass(frozen=True)
class DispersivePhysical:
    """Dispersive shift ``chi``, linewidth ``kappa`` (both angular) and photon number ``nbar``."""

    chi: float
    kappa: float
    nbar: float

    def __post_init__(self) -> None:
        require(self.kappa > 0, "kappa must be positive", "kappa")
        require(self.nbar >= 0, "nbar must be non-negative", "nbar")

    @property
    def k(self) -> float:
        """Measurement strength ``4 chi^2 nbar / kappa``."""
        return 4 * self.chi**2 * self.nbar / self.kappa


def generate_signal_z(z_true, cfg: ZMonitorConfig, rng: np.random.Generator):
    """Noisy estimate of ``z_true``: one sample per element, variance ``1/(4 k eta dt)``."""
    z_true = np.asarray(z_true, dtype=float)
    return z_true + rng.standard_normal(z_true.shape) * cfg.sigma


def single_shot_pdf(rho: DensityMatrix2 | BlochState, cfg: ZMonitorConfig, T: float, V):
    """Density of the time-averaged signal after integrating for ``T``.

    Mixture ``rho00 N(+1, s^2) + rho11 N(-1, s^2)`` with ``s^2 = 1/(4 k eta T)``.
    """
    require(T > 0, "integration time must be positive", "T")
    p0, p1 = _populations(rho)
    V = np.asarray(V, dtype=float)
    a = 2 * cfg.k * cfg.eta * T
    norm = np.sqrt(a / np.pi)
    return norm * (p0 * np.exp(-a * (V - 1) ** 2) + p1 * np.exp(-a * (V + 1) ** 2))


def gaussian_approx_pdf(z: float, cfg: ZMonitorConfig, T: float, V):
    """Weak-limit replacement of :func:`single_shot_pdf`: one Gaussian centred at ``z``."""
    a = 2 * cfg.k * cfg.eta * T
    V = np.asarray(V, dtype=float)
    return np.sqrt(a / np.pi) * np.exp(-a * (V - z) ** 2)


def _populations(rho) -> tuple[float, float]:
    if isinstance(rho, BlochState):
        return 0.5 * (1 + rho.z), 0.5 * (1 - rho.z)
    return float(rho.rho00.real), float(rho.rho11.real)


# ---------------------------------------------------------------- SSE


@dataclass(frozen=True)
class SSETrajectory:
    t: np.ndarray
    amps: np.ndarray
    record: np.ndarray

    def bloch(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b = self.amps[:, 0], self.amps[:, 1]
        r01 = a * np.conj(b)
        return 2 * r01.real, -2 * r01.imag, np.abs(a) ** 2 - np.abs(b) ** 2


def sse_step(psi: np.ndarray, V: float, cfg: ZMonitorConfig) -> np.ndarray:
    """One normalized SSE update driven by the scaled sample ``V`` (efficient detection)."""
    a, b = psi
    if cfg.omega_r:
        c, s = np.cos(0.5 * cfg.omega_r * cfg.dt), np.sin(0.5 * cfg.omega_r * cfg.dt)
        a, b = c * a + s * b, -s * a + c * b
    z = abs(a) ** 2 - abs(b) ** 2
    dt, k = cfg.dt, cfg.k
    dw = 2 * np.sqrt(k) * (V - z) * dt
    a = a * (1 - 0.5 * k * (1 - z) ** 2 * dt + np.sqrt(k) * (1 - z) * dw)
    b = b * (1 - 0.5 * k * (1 + z) ** 2 * dt - np.sqrt(k) * (1 + z) * dw)
    n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return np.array([a / n, b / n])


def sse_propagate(
    psi0: PureQubitState,
    cfg: ZMonitorConfig,
    nsteps: int | None = None,
    record=None,
    rng: np.random.Generator | None = None,
) -> SSETrajectory:
    """Stochastic Schroedinger trajectory; uses ``record`` if given, else samples one from ``rng``.

    Raises
    ------
    ValidationError
        If ``cfg.eta < 1``; inefficient detection needs the SME.
    """
    if cfg.eta != 1:
        raise ValidationError("SSE propagation requires eta = 1", "eta")
    if record is None:
        require(nsteps is not None and nsteps >= 0, "nsteps required without a record", "nsteps")
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        noise = rng.standard_normal(nsteps)
    else:
        record = np.asarray(record, dtype=float)
        nsteps = len(record)
    psi = psi0.as_array()
    amps = np.empty((nsteps + 1, 2), dtype=complex)
    amps[0] = psi
    vs = np.empty(nsteps)
    for i in range(nsteps):
        if record is None:
            a, b = psi
            if cfg.omega_r:
                c, s = np.cos(0.5 * cfg.omega_r * cfg.dt), np.sin(0.5 * cfg.omega_r * cfg.dt)
                a, b = c * a + s * b, -s * a + c * b
            vs[i] = abs(a) ** 2 - abs(b) ** 2 + noise[i] * cfg.sigma
        else:
            vs[i] = record[i]
        psi = sse_step(psi, vs[i], cfg)
        amps[i + 1] = psi
    return SSETrajectory(np.arange(nsteps + 1) * cfg.dt, amps, vs)


# ---------------------------------------------------------------- SME


def _finish(x, y, z, overshoot: str):
    r2 = x * x + y * y + z * z
    if overshoot == "raise":
        if np.any(r2 > (1 + CLAMP_TOL) ** 2):
            raise NumericalError("SME step left the Bloch ball: reduce dt")
    elif not np.all(np.isfinite(r2)):
        raise NumericalError("SME step produced non-finite values")
    s = np.where(r2 > 1.0, 1.0 / np.sqrt(np.where(r2 > 0, r2, 1.0)), 1.0)
    return x * s, y * s, z * s


def _measure_terms(x, y, z, V, cfg: ZMonitorConfig):
    m = 4 * cfg.eta * cfg.k * (V - z) * cfg.dt
    dec = (2 * cfg.k + cfg.gamma2) * cfg.dt
    return x - dec * x - m * x * z, y - dec * y - m * y * z, z + m * (1 - z * z)


def sme_update(x, y, z, V, cfg: ZMonitorConfig, scheme: str = "two_step", overshoot: str = "clamp"):
    """Vectorized SME step on Bloch arrays.

    ``single`` follows the discretization in which the x update already uses
    the new z for its drive term; ``two_step`` rotates exactly by
    ``omega_R dt`` and then applies the measurement and dephasing terms.
    ``overshoot`` selects ``"clamp"`` (radial projection) or ``"raise"``.
    """
    dt, om = cfg.dt, cfg.omega_r
    if scheme == "two_step":
        if om:
            x, z = rotate_y(x, z, om * dt)
        x, y, z = _measure_terms(x, y, z, V, cfg)
    elif scheme == "single":
        m = 4 * cfg.eta * cfg.k * (V - z) * dt
        dec = (2 * cfg.k + cfg.gamma2) * dt
        zn = z + om * x * dt + m * (1 - z * z)
        x, y, z = x - om * zn * dt - dec * x - m * x * z, y - dec * y - m * y * z, zn
    else:
        raise ValidationError(f"unknown scheme {scheme!r}", "scheme")
    return _finish(x, y, z, overshoot)


def sme_step(state: BlochState, V: float, cfg: ZMonitorConfig, scheme: str = "two_step", overshoot: str = "clamp") -> BlochState:
    """Single-state wrapper of :func:`sme_update`."""
    if not np.isfinite(V):
        raise ValidationError("signal sample must be finite", "V")
    x, y, z = sme_update(state.x, state.y, state.z, V, cfg, scheme, overshoot)
    return BlochState(float(x), float(y), float(z))


def _measured_z(x, z, cfg: ZMonitorConfig, scheme: str):
    """The z the measurement term sees: rotated first under the two-step scheme."""
    if scheme == "two_step" and cfg.omega_r:
        return rotate_y(x, z, cfg.omega_r * cfg.dt)[1]
    return z


def sme_filter(records, cfg: ZMonitorConfig, init: BlochState, scheme: str = "two_step", overshoot: str = "clamp"):
    """Filter given records (shape ``(m, n)`` or ``(n,)``) from ``init``; returns x, y, z of shape ``(m, n+1)``."""
    V = np.atleast_2d(np.asarray(records, dtype=float))
    m, n = V.shape
    out = np.empty((3, m, n + 1))
    x, y, z = (np.full(m, c) for c in init.as_array())
    out[:, :, 0] = x, y, z
    for i in range(n):
        x, y, z = sme_update(x, y, z, V[:, i], cfg, scheme, overshoot)
        out[:, :, i + 1] = x, y, z
    return out[0], out[1], out[2]


@dataclass(frozen=True)
class ZEnsemble:
    """Self-consistent trajectories: ``V`` is ``(ntraj, nsteps)``, Bloch arrays ``(ntraj, nsteps+1)``."""

    t: np.ndarray
    V: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def mean(self) -> np.ndarray:
        return np.array([self.x.mean(0), self.y.mean(0), self.z.mean(0)])

    def trajectory_csv(self, i: int) -> str:
        rows = [f"{self.t[0]!r},nan,{self.x[i, 0]!r},{self.y[i, 0]!r},{self.z[i, 0]!r}"]
        for j in range(self.V.shape[1]):
            rows.append(f"{self.t[j + 1]!r},{self.V[i, j]!r},{self.x[i, j + 1]!r},{self.y[i, j + 1]!r},{self.z[i, j + 1]!r}")
        return "t,V,x,y,z\n" + "\n".join(rows) + "\n"

    def summary_csv(self) -> str:
        m = self.mean()
        s = np.array([self.x.std(0), self.y.std(0), self.z.std(0)])
        rows = "\n".join(
            f"{self.t[j]!r},{m[0, j]!r},{m[1, j]!r},{m[2, j]!r},{s[0, j]!r},{s[1, j]!r},{s[2, j]!r}"
            for j in range(len(self.t))
        )
        return "t,x_mean,y_mean,z_mean,x_std,y_std,z_std\n" + rows + "\n"


def simulate_z(
    cfg: ZMonitorConfig,
    nsteps: int,
    ntraj: int,
    init: BlochState = BlochState(0.0, 0.0, 1.0),
    scheme: str = "two_step",
    threads: int = 1,
    overshoot: str = "clamp",
) -> ZEnsemble:
    """Generate records from the trajectories themselves and propagate them with the SME.

    Trajectory ``i`` draws its noise from substream ``i`` of ``cfg.seed``, so
    results do not depend on ``threads``.
    """
    require(ntraj >= 1, "ntraj must be >= 1", "ntraj")
    require(nsteps >= 1, "nsteps must be >= 1", "nsteps")
    seqs = spawn(cfg.seed, ntraj)

    def work(sl: slice):
        w = stacked_normals(seqs[sl], (nsteps,))
        m = w.shape[0]
        out = np.empty((3, m, nsteps + 1))
        vs = np.empty((m, nsteps))
        x, y, z = (np.full(m, c) for c in init.as_array())
        out[:, :, 0] = x, y, z
        for i in range(nsteps):
            vs[:, i] = _measured_z(x, z, cfg, scheme) + w[:, i] * cfg.sigma
            x, y, z = sme_update(x, y, z, vs[:, i], cfg, scheme, overshoot)
            out[:, :, i + 1] = x, y, z
        return vs, out

    parts = chunked_map(work, ntraj, threads)
    V = np.concatenate([p[0] for p in parts])
    arr = np.concatenate([p[1] for p in parts], axis=1)
    return ZEnsemble(np.arange(nsteps + 1) * cfg.dt, V, arr[0], arr[1], arr[2])


# ---------------------------------------------------------------- rates


def mid_rate(phys: DispersivePhysical) -> float:
    """Measurement-induced dephasing ``8 chi^2 nbar / kappa`` (equals ``2 k``)."""
    return 8 * phys.chi**2 * phys.nbar / phys.kappa


def snr_and_eta(phys: DispersivePhysical, eta: float, T: float) -> tuple[float, float]:
    """Signal-to-noise ``S = 64 chi^2 nbar eta T / kappa`` and ``tau = 1/(4 k eta)``."""
    require(T > 0, "T must be positive", "T")
    require(0 < eta <= 1, "eta must lie in (0, 1]", "eta")
    s = 64 * phys.chi**2 * phys.nbar * eta * T / phys.kappa
    k = phys.k
    tau = np.inf if k == 0 else 1.0 / (4 * k * eta)
    return s, tau


def eta_from_snr(S: float, phys: DispersivePhysical, T: float) -> float:
    """Inverse of :func:`snr_and_eta`: ``eta = S kappa / (64 chi^2 nbar T)``."""
    return S * phys.kappa / (64 * phys.chi**2 * phys.nbar * T)


def with_seed(cfg: ZMonitorConfig, seed: int | None) -> ZMonitorConfig:
    return replace(cfg, seed=seed)
