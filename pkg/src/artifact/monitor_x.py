"""Homodyne monitoring of spontaneous emission (measurement operator ``sqrt(gamma1) sigma_-``).

Signal per step: ``V = sqrt(eta) gamma1 x dt + sqrt(gamma1) dW``. The innovation
``V - sqrt(eta) gamma1 x dt`` drives the Bloch SME; decay pulls ``z`` toward ``+1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._common import ValidationError, chunked_map, require, spawn, stacked_normals
from .monitor_z import _finish
from .qstate import BlochState, rotate_y


@dataclass(frozen=True)
class XMonitorConfig:
    """Decay rate ``gamma1``, efficiency ``eta``, step ``dt`` and Rabi drive; ``gamma1 dt <= 0.05``."""

    gamma1: float
    eta: float = 1.0
    dt: float = 0.001
    omega_r: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        require(self.gamma1 > 0, "gamma1 must be positive", "gamma1")
        require(0 <= self.eta <= 1, "eta must lie in [0, 1]", "eta")
        require(self.dt > 0, "dt must be positive", "dt")
        require(self.gamma1 * self.dt <= 0.05 + 1e-12, "gamma1*dt exceeds the guard 0.05", "dt")


def generate_signal_x(state_x, cfg: XMonitorConfig, rng: np.random.Generator):
    """Scaled homodyne sample(s) for Bloch component(s) ``state_x``; variance ``gamma1 dt``."""
    x = np.asarray(state_x.x if isinstance(state_x, BlochState) else state_x, dtype=float)
    return np.sqrt(cfg.eta) * cfg.gamma1 * x * cfg.dt + np.sqrt(cfg.gamma1 * cfg.dt) * rng.standard_normal(x.shape)


def povm_operator(V: float, gamma1: float, dt: float) -> np.ndarray:
    """Kraus operator ``N(V) (|g><g| + sqrt(1 - gamma1 dt) |e><e| + V |g><e|)``.

    The Gaussian weight is chosen so that ``Omega^dag Omega`` carries a
    variance ``gamma1 dt`` density, which makes the set complete.
    """
    s2 = gamma1 * dt
    w = np.exp(-V * V / (4 * s2)) / (2 * np.pi * s2) ** 0.25
    return w * np.array([[1.0, V], [0.0, np.sqrt(1 - s2)]])


def povm_x_completeness(gamma1: float, dt: float, V_grid=None) -> float:
    """Max elementwise deviation of ``sum Omega^dag Omega dV`` from the identity.

    Raises
    ------
    ValidationError
        If the grid spans less than ``+-6 sqrt(gamma1 dt)``.
    """
    s = np.sqrt(gamma1 * dt)
    if V_grid is None:
        V_grid = np.linspace(-12 * s, 12 * s, 4001)
    V_grid = np.asarray(V_grid, dtype=float)
    if V_grid.min() > -6 * s or V_grid.max() < 6 * s:
        raise ValidationError("V grid must span at least 6 sqrt(gamma1 dt) each side", "V_grid")
    ops = np.array([povm_operator(v, gamma1, dt) for v in V_grid])
    dens = np.einsum("vji,vjk->vik", ops.conj(), ops)
    total = np.trapezoid(dens, V_grid, axis=0)
    return float(np.abs(total - np.eye(2)).max())


def povm_posterior(rho: np.ndarray, V: float, gamma1: float, dt: float) -> np.ndarray:
    om = povm_operator(V, gamma1, dt)
    out = om @ rho @ om.conj().T
    return out / np.trace(out).real


def sme_x_update(x, y, z, V, cfg: XMonitorConfig):
    """Vectorized Euler-Maruyama step with exact decay drift.

    The drive is applied first as an exact rotation; the relaxation part is
    integrated exactly (``1 - z`` decays as ``exp(-gamma1 dt)``, coherences as
    ``exp(-gamma1 dt / 2)``), which agrees with the Euler drift to first order
    and makes ``eta = 0`` reproduce Lindblad decay exactly.
    """
    dt, g = cfg.dt, cfg.gamma1
    if cfg.omega_r:
        x, z = rotate_y(x, z, cfg.omega_r * dt)
    se = np.sqrt(cfg.eta)
    inn = V - se * g * x * dt
    e1, e2 = np.exp(-g * dt), np.exp(-0.5 * g * dt)
    zn = 1 - (1 - z) * e1 + se * x * (1 - z) * inn
    xn = x * e2 + se * (1 - z - x * x) * inn
    yn = y * e2 - se * x * y * inn
    return xn, yn, zn


def kraus_x_update(x, y, z, V, cfg: XMonitorConfig):
    """Exact POVM step: read channel ``Omega_V`` at rate ``eta gamma1``, unread decay at ``(1 - eta) gamma1``.

    Positivity is exact and ``eta = 1`` keeps pure states pure.
    """
    dt, g, eta = cfg.dt, cfg.gamma1, cfg.eta
    if cfg.omega_r:
        x, z = rotate_y(x, z, cfg.omega_r * dt)
    # unread amplitude damping channel
    e1, e2 = np.exp(-(1 - eta) * g * dt), np.exp(-0.5 * (1 - eta) * g * dt)
    x, y, z = x * e2, y * e2, 1 - (1 - z) * e1
    # read channel: Omega ~ |g><g| + c |e><e| + v |g><e| (Gaussian weight cancels)
    s2 = eta * g * dt
    c = np.sqrt(1 - s2)
    v = np.sqrt(eta) * V
    rgg, ree = 0.5 * (1 + z), 0.5 * (1 - z)
    rge = 0.5 * (x - 1j * y)
    ngg = rgg + 2 * v * np.real(rge) + v * v * ree
    nge = c * (rge + v * ree)
    nee = c * c * ree
    tr = ngg + nee
    return 2 * np.real(nge) / tr, -2 * np.imag(nge) / tr, (ngg - nee) / tr


def sme_x_step(state: BlochState, V: float, cfg: XMonitorConfig, overshoot: str = "clamp") -> BlochState:
    x, y, z = sme_x_update(state.x, state.y, state.z, V, cfg)
    x, y, z = _finish(np.asarray(x), np.asarray(y), np.asarray(z), overshoot)
    return BlochState(float(x), float(y), float(z))


@dataclass(frozen=True)
class XEnsemble:
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


def simulate_x(
    cfg: XMonitorConfig,
    nsteps: int,
    ntraj: int,
    init: BlochState = BlochState(0.0, 0.0, -1.0),
    threads: int = 1,
    overshoot: str = "clamp",
    scheme: str = "sme",
) -> XEnsemble:
    """Self-consistent sigma_- trajectories with per-trajectory RNG substreams.

    ``scheme`` is ``"sme"`` (Euler-Maruyama Bloch SME) or ``"kraus"`` (exact POVM update).
    """
    require(scheme in ("sme", "kraus"), "scheme must be 'sme' or 'kraus'", "scheme")
    update = sme_x_update if scheme == "sme" else kraus_x_update
    require(ntraj >= 1, "ntraj must be >= 1", "ntraj")
    require(nsteps >= 1, "nsteps must be >= 1", "nsteps")
    seqs = spawn(cfg.seed, ntraj)
    se, g, dt = np.sqrt(cfg.eta), cfg.gamma1, cfg.dt

    def work(sl: slice):
        w = stacked_normals(seqs[sl], (nsteps,))
        m = w.shape[0]
        out = np.empty((3, m, nsteps + 1))
        vs = np.empty((m, nsteps))
        x, y, z = (np.full(m, c) for c in init.as_array())
        out[:, :, 0] = x, y, z
        for i in range(nsteps):
            xr = rotate_y(x, z, cfg.omega_r * dt)[0] if cfg.omega_r else x
            vs[:, i] = se * g * xr * dt + np.sqrt(g * dt) * w[:, i]
            x, y, z = _finish(*update(x, y, z, vs[:, i], cfg), overshoot)
            out[:, :, i + 1] = x, y, z
        return vs, out

    parts = chunked_map(work, ntraj, threads)
    V = np.concatenate([p[0] for p in parts])
    arr = np.concatenate([p[1] for p in parts], axis=1)
    return XEnsemble(np.arange(nsteps + 1) * dt, V, arr[0], arr[1], arr[2])


def excitation_probability_first_step(cfg: XMonitorConfig) -> float:
    """Probability that one step from ``+x`` lowers ``z``: ``Phi(-sqrt(gamma1 dt / eta))``."""
    if cfg.eta == 0:
        return 0.0
    return float(norm.cdf(-np.sqrt(cfg.gamma1 * cfg.dt / cfg.eta)))


@dataclass(frozen=True)
class BackactionMap:
    """Mean displacement per herald cell, split by the sign of the window signal.

    Arrays are indexed ``[sign, ix, iz]`` with sign 0 for ``dV > 0`` and 1 for
    ``dV < 0``. Cells with fewer than ``min_count`` windows hold NaN and are
    reported as empty rather than interpolated.
    """

    x_centres: np.ndarray
    z_centres: np.ndarray
    dx: np.ndarray
    dz: np.ndarray
    counts: np.ndarray
    min_count: int

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.dx, self.dz)

    @property
    def populated(self) -> np.ndarray:
        return self.counts >= self.min_count

    def to_csv(self) -> str:
        rows = []
        for s, label in ((0, "+"), (1, "-")):
            for a, xc in enumerate(self.x_centres):
                for b, zc in enumerate(self.z_centres):
                    rows.append(f"{xc!r},{zc!r},{label},{self.dx[s, a, b]!r},{self.dz[s, a, b]!r},{int(self.counts[s, a, b])}")
        return "x_i,z_i,sign,dx_mean,dz_mean,n\n" + "\n".join(rows) + "\n"


def herald_windows(
    cfg: XMonitorConfig,
    nwindows: int,
    herald_steps_max: int,
    window_steps: int,
    init: BlochState = BlochState(0.0, 0.0, -1.0),
    threads: int = 1,
):
    """Herald states along decay trajectories and follow each for one extra window.

    Trajectory ``i`` runs for a herald time drawn uniformly from
    ``1..herald_steps_max`` steps, then for ``window_steps`` more steps whose
    signal is summed. Returns ``(x_i, z_i, x_f, z_f, dV)``.
    """
    require(nwindows >= 1 and herald_steps_max >= 1 and window_steps >= 1, "counts must be >= 1", "nwindows")
    seqs = spawn(cfg.seed, nwindows)
    se, g, dt = np.sqrt(cfg.eta), cfg.gamma1, cfg.dt
    total = herald_steps_max + window_steps

    def work(sl: slice):
        sub = seqs[sl]
        m = len(sub)
        th = np.empty(m, dtype=int)
        w = np.empty((m, total))
        for j, sq in enumerate(sub):
            r = np.random.default_rng(sq)
            th[j] = r.integers(1, herald_steps_max + 1)
            w[j] = r.standard_normal(total)
        x, y, z = (np.full(m, c) for c in init.as_array())
        xi, zi, xf, zf, dv = (np.zeros(m) for _ in range(5))
        for i in range(int(th.max()) + window_steps):
            xr = rotate_y(x, z, cfg.omega_r * dt)[0] if cfg.omega_r else x
            v = se * g * xr * dt + np.sqrt(g * dt) * w[:, i]
            inw = (i >= th) & (i < th + window_steps)
            dv[inw] += v[inw]
            x, y, z = _finish(*sme_x_update(x, y, z, v, cfg), "clamp")
            h = (i + 1) == th
            xi[h], zi[h] = x[h], z[h]
            f = (i + 1) == th + window_steps
            xf[f], zf[f] = x[f], z[f]
        return xi, zi, xf, zf, dv

    parts = chunked_map(work, nwindows, threads)
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(5))


def backaction_map(
    cfg: XMonitorConfig,
    nwindows: int,
    herald_steps_max: int,
    window_steps: int,
    ncells: int = 10,
    min_count: int = 100,
    threads: int = 1,
) -> BackactionMap:
    """Bin heralded windows on an ``ncells x ncells`` grid over the X-Z square."""
    xi, zi, xf, zf, dv = herald_windows(cfg, nwindows, herald_steps_max, window_steps, threads=threads)
    edges = np.linspace(-1.0, 1.0, ncells + 1)
    centres = 0.5 * (edges[1:] + edges[:-1])
    ix = np.clip(np.digitize(xi, edges) - 1, 0, ncells - 1)
    iz = np.clip(np.digitize(zi, edges) - 1, 0, ncells - 1)
    dx = np.full((2, ncells, ncells), np.nan)
    dz = np.full((2, ncells, ncells), np.nan)
    counts = np.zeros((2, ncells, ncells), dtype=int)
    for s, mask in enumerate((dv > 0, dv < 0)):
        flat = ix[mask] * ncells + iz[mask]
        n = np.bincount(flat, minlength=ncells * ncells)
        sx = np.bincount(flat, weights=(xf - xi)[mask], minlength=ncells * ncells)
        sz = np.bincount(flat, weights=(zf - zi)[mask], minlength=ncells * ncells)
        counts[s] = n.reshape(ncells, ncells)
        ok = n >= min_count
        dx[s].flat[ok] = (sx[ok] / n[ok])
        dz[s].flat[ok] = (sz[ok] / n[ok])
    return BackactionMap(centres, centres, dx, dz, counts, min_count)
