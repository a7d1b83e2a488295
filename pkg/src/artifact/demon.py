"""Maxwell-demon feedback protocol and fluctuation-theorem estimators.

One run: thermal preparation, projective outcome ``X``, monitored drive for a
duration ``tau`` while the demon filters the record from the thermal prior,
feedback rotation of the demon's estimate onto ``+z``, projective outcome ``Z``.

Energies are in qubit quanta (ground 0, excited 1), so work is ``Z - X``.
The unobserved ``(1 - eta)`` channel and extra dephasing are modelled as a
hidden efficient detector of strength ``k (1 - eta) + gamma2 / 2``; its record
``a`` gives the full-information state used for the gain/loss split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._common import ValidationError, chunked_map, require, spawn
from .bayes import kraus_z_update
from .monitor_z import ZMonitorConfig, sme_update
from .qstate import DensityMatrix2, bloch_from_density, entropy_from_radius, rotate_y

LOG_FLOOR = np.log(1e-15)


@dataclass(frozen=True)
class DemonConfig:
    """Protocol settings.

    ``measure`` switches the monitoring off (drive only). ``filter`` picks the
    demon's update: ``"kraus"`` (exact Bayesian) or ``"sme"`` (two-step SME).
    """

    beta: float
    monitor: ZMonitorConfig
    tau_list: tuple[float, ...] = (1.0,)
    ntraj: int = 10_000
    feedback: bool = True
    measure: bool = True
    filter: str = "kraus"
    seed: int | None = None

    def __post_init__(self) -> None:
        require(np.isfinite(self.beta), "beta must be finite", "beta")
        require(self.ntraj >= 1, "ntraj must be >= 1", "ntraj")
        require(all(t >= 0 for t in self.tau_list), "tau values must be non-negative", "tau_list")
        require(self.filter in ("kraus", "sme"), "filter must be 'kraus' or 'sme'", "filter")

    @property
    def p_excited(self) -> float:
        return float(1.0 / (1.0 + np.exp(self.beta)))


@dataclass(frozen=True)
class ProtocolRecord:
    X: int
    Z: int
    trajectory: np.ndarray
    feedback_angle: float


@dataclass(frozen=True)
class TransitionStats:
    """Empirical initial populations and ``P[x, z] = P(Z = z | X = x)``; NaN rows flag missing strata."""

    P0_init: float
    P1_init: float
    Pmn: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def missing(self) -> list[int]:
        return [i for i in (0, 1) if self.counts[i].sum() == 0]


@dataclass(frozen=True)
class DemonRun:
    """Vectorized results of ``ntraj`` protocol runs at one duration.

    ``lam_Z`` is the demon's eigenvalue carrying the label of the final outcome;
    ``S_demon`` and ``S_full`` are entropies of the filtered and full-information states.
    """

    beta: float
    tau: float
    X: np.ndarray
    Z: np.ndarray
    angle: np.ndarray
    demon_xz: np.ndarray
    lam_Z: np.ndarray
    S_demon: np.ndarray
    S_full: np.ndarray
    p_excited: float
    trajectories: np.ndarray | None = None

    @property
    def work(self) -> np.ndarray:
        return (self.Z - self.X).astype(float)

    @property
    def info(self) -> np.ndarray:
        """Per-record ``I_{Z,X} = ln lambda_Z - ln P_X(rho0)``."""
        p = np.where(self.X == 1, self.p_excited, 1 - self.p_excited)
        return np.maximum(np.log(np.maximum(self.lam_Z, 1e-300)), LOG_FLOOR) - np.maximum(np.log(p), LOG_FLOOR)

    def records(self) -> list[ProtocolRecord]:
        traj = self.trajectories if self.trajectories is not None else self.demon_xz[:, None, :]
        return [ProtocolRecord(int(self.X[i]), int(self.Z[i]), traj[i], float(self.angle[i])) for i in range(len(self.X))]


def thermal_z(beta: float) -> float:
    """Bloch ``z`` of the thermal state: ``tanh(beta / 2)``."""
    return float(np.tanh(0.5 * beta))


def beta_from_z(z_in: float) -> float:
    """Inverse of :func:`thermal_z`."""
    require(0 <= z_in < 1, "z_in must lie in [0, 1)", "z_in")
    return float(2 * np.arctanh(z_in))


def _simulate(cfg: DemonConfig, tau: float, u: np.ndarray, w: np.ndarray, keep: bool):
    """Core propagation. ``u``: uniforms ``(m, nsteps + 2)``; ``w``: normals ``(m, 2 nsteps)``."""
    mon = cfg.monitor
    dt = mon.dt
    n = int(round(tau / dt))
    m = u.shape[0]
    p1 = cfg.p_excited
    X = (u[:, 0] < p1).astype(int)
    tx, tz = np.zeros(m), np.where(X == 1, -1.0, 1.0)
    z0 = thermal_z(cfg.beta)
    dx, dz = np.zeros(m), np.full(m, z0)
    fx, fz = np.zeros(m), np.full(m, z0)
    kv = mon.k * mon.eta
    kh = mon.k * (1 - mon.eta) + 0.5 * mon.gamma2
    hidden_damp = np.exp(-2 * kh * dt)
    traj = np.empty((m, n + 1, 2)) if keep else None
    if keep:
        traj[:, 0, 0], traj[:, 0, 1] = dx, dz
    zeros = np.zeros(m)
    for i in range(n):
        if mon.omega_r:
            ang = mon.omega_r * dt
            tx, tz = rotate_y(tx, tz, ang)
            fx, fz = rotate_y(fx, fz, ang)
            if cfg.filter == "kraus" or not cfg.measure:
                dx, dz = rotate_y(dx, dz, ang)
        if cfg.measure:
            branch = np.where(u[:, 1 + i] < 0.5 * (1 + tz), 1.0, -1.0)
            V = branch + w[:, 2 * i] / np.sqrt(4 * kv * dt)
            av = 8 * kv * dt * V
            if kh > 0:
                A = branch + w[:, 2 * i + 1] / np.sqrt(4 * kh * dt)
                ah = 8 * kh * dt * A
            else:
                ah = 0.0
            tx, _, tz = kraus_z_update(tx, zeros, tz, av + ah)
            fx, _, fz = kraus_z_update(fx, zeros, fz, av + ah)
            if cfg.filter == "kraus":
                dx, _, dz = kraus_z_update(dx, zeros, dz, av, hidden_damp)
            else:
                dx, _, dz = sme_update(dx, zeros, dz, V, mon, "two_step")
        if keep:
            traj[:, i + 1, 0], traj[:, i + 1, 1] = dx, dz
    r_d = np.sqrt(dx * dx + dz * dz)
    r_f = np.sqrt(fx * fx + fz * fz)
    if cfg.feedback:
        phi = np.arctan2(dx, dz)
        tx, tz = rotate_y(tx, tz, phi)
        angle = np.where(phi == np.pi, np.pi, -phi)
        # after the rotation the demon's larger eigenvalue sits on Z = 0
        lam0 = 0.5 * (1 + r_d)
    else:
        angle = np.zeros(m)
        lam0 = 0.5 * (1 + r_d)
    Z = (u[:, n + 1] >= 0.5 * (1 + tz)).astype(int)
    lam_Z = np.where(Z == 0, lam0, 1 - lam0)
    S_d = entropy_from_radius(r_d)
    S_f = entropy_from_radius(r_f)
    return X, Z, angle, np.column_stack([dx, dz]), lam_Z, S_d, S_f, traj


def run_protocol(cfg: DemonConfig, rng: np.random.Generator, tau: float | None = None) -> ProtocolRecord:
    """One protocol run at duration ``tau`` (default: first of ``cfg.tau_list``)."""
    tau = cfg.tau_list[0] if tau is None else tau
    n = int(round(tau / cfg.monitor.dt))
    u = rng.random((1, n + 2))
    w = rng.standard_normal((1, 2 * n))
    X, Z, angle, _, _, _, _, traj = _simulate(cfg, tau, u, w, keep=True)
    return ProtocolRecord(int(X[0]), int(Z[0]), traj[0], float(angle[0]))


def run_ensemble(cfg: DemonConfig, tau: float, threads: int = 1, keep_trajectories: bool = False) -> DemonRun:
    """``cfg.ntraj`` independent runs; run ``i`` uses substream ``i`` of ``(cfg.seed, tau index)``."""
    n = int(round(tau / cfg.monitor.dt))
    seqs = spawn(cfg.seed, cfg.ntraj)

    def work(sl: slice):
        sub = seqs[sl]
        u = np.empty((len(sub), n + 2))
        w = np.empty((len(sub), 2 * n))
        for j, s in enumerate(sub):
            r = np.random.default_rng(s)
            u[j] = r.random(n + 2)
            w[j] = r.standard_normal(2 * n)
        return _simulate(cfg, tau, u, w, keep_trajectories)

    parts = chunked_map(work, cfg.ntraj, threads)
    cat = [np.concatenate([p[k] for p in parts]) for k in range(7)]
    traj = np.concatenate([p[7] for p in parts]) if keep_trajectories else None
    return DemonRun(cfg.beta, tau, *cat, p_excited=cfg.p_excited, trajectories=traj)


def transition_stats(records) -> TransitionStats:
    """Relative occurrences from a :class:`DemonRun` or a sequence of :class:`ProtocolRecord`."""
    if isinstance(records, DemonRun):
        X, Z = records.X, records.Z
    else:
        X = np.array([r.X for r in records], dtype=int)
        Z = np.array([r.Z for r in records], dtype=int)
    require(len(X) > 0, "no records", "records")
    counts = np.zeros((2, 2))
    np.add.at(counts, (X, Z), 1)
    rows = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(rows > 0, counts / np.where(rows > 0, rows, 1), np.nan)
    p0 = counts[0].sum() / len(X)
    return TransitionStats(float(p0), float(1 - p0), P, counts)


def jarzynski_lhs(stats: TransitionStats, beta: float) -> float:
    """``<exp(-beta W)>`` from two-point statistics with ``W = E_Z - E_X``.

    Written as ``1 + P0 P01 (e^-beta - 1) + P1 P10 (e^beta - 1)``, which uses
    unit row sums and is exactly 1 at ``beta = 0``.
    """
    P = np.nan_to_num(stats.Pmn)
    return float(1.0 + stats.P0_init * P[0, 1] * np.expm1(-beta) + stats.P1_init * P[1, 0] * np.expm1(beta))


def jarzynski_with_error(run: DemonRun) -> tuple[float, float]:
    """Mean of ``exp(-beta W)`` over records and its standard error."""
    w = np.exp(-run.beta * run.work)
    return float(w.mean()), float(w.std(ddof=1) / np.sqrt(len(w))) if len(w) > 1 else 0.0


def generalized_jarzynski(run: DemonRun) -> tuple[float, float]:
    """Mean of ``exp(-beta W - I)`` over records and its standard error."""
    w = np.exp(-run.beta * run.work - run.info)
    return float(w.mean()), float(w.std(ddof=1) / np.sqrt(len(w))) if len(w) > 1 else 0.0


def information_exchange(rho0: DensityMatrix2, rho_t: DensityMatrix2) -> tuple[np.ndarray, float]:
    """``I[z', z] = ln P_z'(rho_t) - ln P_z(rho0)`` and ``S(rho0) - S(rho_t)``.

    ``P_z'`` are the eigenvalues of ``rho_t`` (label 0: the larger one, along the
    Bloch vector); ``rho0`` must be diagonal in sigma_z.
    """
    b0 = bloch_from_density(rho0)
    if abs(b0.x) > 1e-12 or abs(b0.y) > 1e-12:
        raise ValidationError("rho0 must be diagonal in the sigma_z basis", "rho0")
    bt = bloch_from_density(rho_t)
    p0 = np.array([0.5 * (1 + b0.z), 0.5 * (1 - b0.z)])
    lt = np.array([0.5 * (1 + bt.radius), 0.5 * (1 - bt.radius)])
    with np.errstate(divide="ignore"):
        lp = np.maximum(np.log(p0), LOG_FLOOR)
        ll = np.maximum(np.log(lt), LOG_FLOOR)
    I = ll[:, None] - lp[None, :]
    itraj = float(entropy_from_radius(abs(b0.z)) - entropy_from_radius(bt.radius))
    return I, itraj


def information_average(run: DemonRun) -> tuple[float, float]:
    """Direct estimate ``<I_{Z,X}>`` with standard error."""
    i = run.info
    return float(i.mean()), float(i.std(ddof=1) / np.sqrt(len(i))) if len(i) > 1 else 0.0


def info_gain_loss(run: DemonRun) -> dict[str, float]:
    """Gain/loss split of the average information exchange.

    ``I_gain = S(rho0) - <S(rho_{t|r,a})>``, ``I_loss = <S(rho_{t|r})> - <S(rho_{t|r,a})>``
    and ``I_traj = S(rho0) - <S(rho_{t|r})> = I_gain - I_loss``.
    """
    s0 = float(entropy_from_radius(abs(thermal_z(run.beta))))
    n = len(run.S_full)
    se = lambda a: float(a.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0  # noqa: E731
    gain = s0 - run.S_full
    loss = run.S_demon - run.S_full
    return {
        "i_gain": float(gain.mean()),
        "i_gain_stderr": se(gain),
        "i_loss": float(loss.mean()),
        "i_loss_stderr": se(loss),
        "i_traj": float(s0 - run.S_demon.mean()),
        "i_traj_stderr": se(run.S_demon),
    }


def summary(run: DemonRun) -> dict[str, float]:
    je, je_se = jarzynski_with_error(run)
    g, g_se = generalized_jarzynski(run)
    i, i_se = information_average(run)
    out = {"tau": run.tau, "jarzynski": je, "jarzynski_stderr": je_se, "gje": g, "gje_stderr": g_se,
           "i_avg": i, "i_avg_stderr": i_se}
    out.update(info_gain_loss(run))
    return out
