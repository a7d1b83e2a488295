"""Command-line front end.

Units at the command line: times in seconds, rates (``k``, ``gamma*``) in
1/us (MHz), drive and detuning as cyclic frequencies in Hz. Outputs use
microseconds for time columns.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from ._common import NumericalError, ValidationError, require

ENV_OUTPUT_DIR = "ARTIFACT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "artifact_output"
MANIFEST = "manifest.json"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
US = 1e6  # seconds -> microseconds
TWO_PI = 2 * math.pi


# ------------------------------------------------------------------ parameters


@dataclass(frozen=True)
class Param:
    type: Callable[[str], Any]
    default: Any
    help: str = ""
    choices: tuple | None = None


def _floats(s) -> tuple[float, ...]:
    if isinstance(s, (list, tuple)):
        return tuple(float(v) for v in s)
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _onoff(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"expected on/off, got {s!r}")


COMMON = {
    "seed": Param(int, 0, "master RNG seed"),
    "format": Param(str, "csv", "tabular output format", ("csv", "json")),
}

PARAMS: dict[str, dict[str, Param]] = {
    "simulate-z": {
        "k": Param(float, 1.0, "measurement strength (1/us)"),
        "eta": Param(float, 1.0, "quantum efficiency"),
        "dt": Param(float, 20e-9, "time step (s)"),
        "omega-r": Param(float, 0.0, "Rabi frequency Omega_R/2pi (Hz)"),
        "gamma2": Param(float, 0.0, "extra dephasing (1/us)"),
        "tfinal": Param(float, 2e-6, "duration (s)"),
        "ntraj": Param(int, 100, "number of trajectories"),
        "init": Param(str, "x", "initial Bloch state: x, -x, y, -y, z, -z or 'x,y,z'"),
        "filter": Param(str, "sme", "state estimator", ("bayes", "sme", "both")),
        "scheme": Param(str, "two_step", "SME discretization", ("two_step", "single")),
    },
    "simulate-x": {
        "gamma1": Param(float, 1.0, "decay rate (1/us)"),
        "eta": Param(float, 1.0, "quantum efficiency"),
        "dt": Param(float, 1e-9, "time step (s)"),
        "omega-r": Param(float, 0.0, "Rabi frequency Omega_R/2pi (Hz)"),
        "tfinal": Param(float, 2e-6, "duration (s)"),
        "ntraj": Param(int, 100, "number of trajectories or windows"),
        "init": Param(str, "-z", "initial Bloch state"),
        "mode": Param(str, "trajectories", "output kind", ("trajectories", "backaction", "excitation")),
        "scheme": Param(str, "sme", "trajectory update", ("sme", "kraus")),
        "herald-max": Param(float, 3e-6, "longest herald time (s), backaction mode"),
        "window": Param(float, 40e-9, "window length (s), backaction mode"),
        "cells": Param(int, 10, "grid cells per axis, backaction mode"),
        "min-count": Param(int, 100, "minimum windows per reported cell"),
    },
    "demon": {
        "beta": Param(float, 1.0, "inverse temperature in qubit quanta"),
        "tau-list": Param(_floats, (1e-6,), "comma separated durations (s)"),
        "ntraj": Param(int, 10_000, "runs per duration"),
        "eta": Param(float, 0.35, "quantum efficiency"),
        "k": Param(float, 1.0, "measurement strength (1/us)"),
        "omega-r": Param(float, 0.6e6, "Rabi frequency Omega_R/2pi (Hz)"),
        "gamma2": Param(float, 0.0, "extra dephasing (1/us)"),
        "dt": Param(float, 20e-9, "time step (s)"),
        "feedback": Param(_onoff, True, "feedback rotation on/off"),
        "measure": Param(_onoff, True, "continuous monitoring on/off"),
        "filter": Param(str, "kraus", "demon estimator", ("kraus", "sme")),
    },
    "spectra": {
        "mode": Param(str, "transmon", "model", ("transmon", "jc", "junction")),
        "ej": Param(float, 20.0, "Josephson energy (GHz)"),
        "ec": Param(float, 0.5, "charging energy (GHz)"),
        "charge-cutoff": Param(int, 20, "charge basis cutoff"),
        "nlevels": Param(int, 3, "transmon levels"),
        "omega-c": Param(float, 7.0, "cavity frequency (GHz)"),
        "omega-q": Param(float, 5.5, "qubit frequency (GHz)"),
        "g": Param(float, 0.1, "coupling (GHz)"),
        "nmax": Param(int, 5, "highest photon index for dressed doublets"),
        "rn": Param(float, 18e3, "normal resistance (ohm)"),
        "c": Param(float, 0.057e-12, "shunt capacitance (F)"),
        "gap0": Param(float, 170e-6, "superconducting gap (eV)"),
    },
    "dynamics": {
        "mode": Param(str, "lindblad", "model", ("lindblad", "rabi")),
        "amplitude": Param(float, 1e6, "drive amplitude A/2pi (Hz)"),
        "detuning": Param(float, 0.0, "detuning Delta_d/2pi (Hz)"),
        "gamma1": Param(float, 0.0, "relaxation rate (1/us)"),
        "gamma2": Param(float, 0.0, "dephasing rate (1/us)"),
        "tfinal": Param(float, 2e-6, "duration (s)"),
        "dt": Param(float, 1e-9, "time step (s)"),
        "init": Param(str, "z", "initial Bloch state"),
    },
    "duffing": {
        "q": Param(float, 20.0, "quality factor"),
        "dtilde-min": Param(float, 0.0, "lowest reduced detuning"),
        "dtilde-max": Param(float, 3.0, "highest reduced detuning"),
        "dtilde-n": Param(int, 31, "detuning samples"),
        "drive-min": Param(float, 0.0, "lowest drive ratio"),
        "drive-max": Param(float, 0.1, "highest drive ratio"),
        "drive-n": Param(int, 101, "drive samples"),
    },
    "calibrate": {
        "mode": Param(str, "lorentzian", "pipeline", ("lorentzian", "chi", "eta", "mixer")),
        "input": Param(str, "", "input CSV (lorentzian: freq,power; chi: f,Gamma,control)"),
        "kappa": Param(float, 5.0, "cavity linewidth kappa/2pi (MHz)"),
        "chi": Param(float, 0.5, "dispersive shift chi/2pi (MHz), eta mode"),
        "nbar": Param(float, 1.0, "mean photon number, eta mode"),
        "true-eta": Param(float, 0.35, "efficiency used to synthesize data, eta mode"),
        "t-int": Param(float, 100e-9, "integration time (s), eta mode"),
        "nshots": Param(int, 100_000, "shots per preparation, eta mode"),
        "fk": Param(float, 0.5, "phasor length (MHz), mixer mode"),
        "theta": Param(float, 0.0, "phasor angle (deg), mixer mode"),
        "k1-ch3": Param(float, -0.11, "linear coefficient, channel 3"),
        "k2-ch3": Param(float, 1.0, "quadratic coefficient, channel 3"),
        "k1-ch4": Param(float, 0.05, "linear coefficient, channel 4"),
        "k2-ch4": Param(float, 1.2, "quadratic coefficient, channel 4"),
    },
    "validate": {
        "k": Param(float, 1.0, "measurement strength (1/us)"),
        "eta": Param(float, 1.0, "quantum efficiency"),
        "dt": Param(float, 20e-9, "time step (s)"),
        "omega-r": Param(float, 0.6e6, "Rabi frequency Omega_R/2pi (Hz)"),
        "gamma2": Param(float, 0.0, "extra dephasing (1/us)"),
        "tfinal": Param(float, 1e-6, "duration (s)"),
        "ntraj": Param(int, 20_000, "ensemble size"),
        "init": Param(str, "x", "initial Bloch state"),
        "component": Param(str, "z", "validated Bloch component", ("x", "z")),
        "window": Param(float, 0.02, "post-selection half width"),
        "stride": Param(int, 5, "steps between verification times"),
        "flip": Param(float, 0.0, "readout flip probability"),
    },
    "wigner": {
        "state": Param(str, "fock0", "state", ("fock0", "fock1", "coherent")),
        "alpha-re": Param(float, 0.0, "coherent amplitude, real part"),
        "alpha-im": Param(float, 0.0, "coherent amplitude, imaginary part"),
        "half-width": Param(float, 5.0, "grid half width"),
        "points": Param(int, 201, "grid points per axis"),
    },
}


def _norm_key(k: str) -> str:
    return k.strip().replace("_", "-")


def read_config_file(path: str | Path, command: str) -> tuple[dict[str, Any], str | None]:
    """Parse a ``key = value`` file or a previous run's manifest.

    Returns the raw values and, for manifests, the recorded subcommand.
    """
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ValidationError(f"cannot read config: {e}", "config") from None
    schema = {**COMMON, **PARAMS[command]}
    raw: dict[str, Any] = {}
    origin = None
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"manifest is not valid JSON: {e}", "config") from None
        origin = data.get("subcommand")
        raw = dict(data.get("params", {}))
    else:
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line {n}: expected key = value", "config")
            k, v = line.split("=", 1)
            raw[_norm_key(k)] = v.strip()
    for k in raw:
        if _norm_key(k) not in schema:
            raise ValidationError(f"unknown config key {k!r} for {command}", _norm_key(k))
    return {_norm_key(k): v for k, v in raw.items()}, origin


def resolve_params(command: str, flags: dict[str, Any], config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    schema = {**COMMON, **PARAMS[command]}
    out: dict[str, Any] = {}
    for key, p in schema.items():
        val = p.default
        if config and key in config:
            val = config[key]
        if flags.get(key) is not None:
            val = flags[key]
        try:
            val = p.type(val) if not isinstance(val, bool) or p.type is _onoff else val
        except (TypeError, ValueError) as e:
            raise ValidationError(f"bad value for {key}: {e}", key) from None
        if p.choices is not None and val not in p.choices:
            raise ValidationError(f"{key} must be one of {', '.join(p.choices)}", key)
        out[key] = val
    return out


# ------------------------------------------------------------------ output


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def dump_json(obj: dict) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


@dataclass
class Outputs:
    command: str
    fmt: str
    files: dict[str, str] = field(default_factory=dict)

    def table(self, name: str, columns: list[str], rows, kind: str | None = None) -> None:
        schema = f"artifact/{self.command}/{kind or name}/1"
        if self.fmt == "json":
            self.files[f"{name}.json"] = dump_json({"schema": schema, "columns": columns, "rows": [list(r) for r in rows]})
        else:
            body = "".join(",".join(_num(v) for v in r) + "\n" for r in rows)
            self.files[f"{name}.csv"] = f"# schema: {schema}\n" + ",".join(columns) + "\n" + body

    def json(self, name: str, obj: dict) -> None:
        self.files[f"{name}.json"] = dump_json({"schema": f"artifact/{self.command}/{name}/1", **obj})


def _bloch_init(s: str):
    from .qstate import BlochState

    named = {"x": (1, 0, 0), "-x": (-1, 0, 0), "y": (0, 1, 0), "-y": (0, -1, 0), "z": (0, 0, 1), "-z": (0, 0, -1)}
    s = s.strip()
    if s in named:
        return BlochState(*map(float, named[s]))
    try:
        v = _floats(s)
    except ValueError:
        raise ValidationError(f"cannot parse initial state {s!r}", "init") from None
    require(len(v) == 3, "initial state needs three components", "init")
    return BlochState(*v)


def _nsteps(tfinal: float, dt: float, key: str = "tfinal") -> int:
    require(dt > 0, "dt must be positive", "dt")
    require(tfinal > 0, f"{key} must be positive", key)
    return max(1, int(round(tfinal / dt)))


# ------------------------------------------------------------------ commands


def cmd_simulate_z(p: dict, out: Outputs, threads: int) -> None:
    from .bayes import BayesConfig, bayes_filter
    from .monitor_z import ZMonitorConfig, simulate_z

    require(p["ntraj"] >= 1, "ntraj must be >= 1", "ntraj")
    cfg = ZMonitorConfig(k=p["k"], eta=p["eta"], dt=p["dt"] * US, omega_r=TWO_PI * p["omega-r"] / US,
                         gamma2=p["gamma2"], seed=p["seed"])
    n = _nsteps(p["tfinal"], p["dt"])
    init = _bloch_init(p["init"])
    ens = simulate_z(cfg, n, p["ntraj"], init, p["scheme"], threads)
    cols, blocks = ["t_us", "V"], []
    if p["filter"] in ("sme", "both"):
        cols += ["x_sme", "y_sme", "z_sme"]
        blocks.append((ens.x, ens.y, ens.z))
    if p["filter"] in ("bayes", "both"):
        bx, by, bz = bayes_filter(ens.V, BayesConfig.from_monitor(cfg), init)
        cols += ["x_bayes", "y_bayes", "z_bayes"]
        blocks.append((bx, by, bz))
    width = len(str(p["ntraj"] - 1))
    V = np.concatenate([np.full((ens.V.shape[0], 1), np.nan), ens.V], axis=1)
    for i in range(p["ntraj"]):
        rows = [[ens.t[j], V[i, j], *(b[c][i, j] for b in blocks for c in range(3))] for j in range(len(ens.t))]
        out.table(f"traj_{i:0{width}d}", cols, rows, "trajectory")
    scols, srows = ["t_us"], [[t] for t in ens.t]
    for b, tag in zip(blocks, [c.split("_")[1] for c in cols[2::3]]):
        for c, name in enumerate("xyz"):
            scols += [f"{name}_{tag}_mean", f"{name}_{tag}_std"]
            m, s = b[c].mean(0), b[c].std(0)
            for j in range(len(ens.t)):
                srows[j] += [m[j], s[j]]
    out.table("summary", scols, srows)


def cmd_simulate_x(p: dict, out: Outputs, threads: int) -> None:
    from .monitor_x import XMonitorConfig, backaction_map, excitation_probability_first_step, simulate_x

    require(p["ntraj"] >= 1, "ntraj must be >= 1", "ntraj")
    cfg = XMonitorConfig(gamma1=p["gamma1"], eta=p["eta"], dt=p["dt"] * US, omega_r=TWO_PI * p["omega-r"] / US, seed=p["seed"])
    if p["mode"] == "backaction":
        m = backaction_map(cfg, p["ntraj"], _nsteps(p["herald-max"], p["dt"], "herald-max"),
                           _nsteps(p["window"], p["dt"], "window"), p["cells"], p["min-count"], threads)
        rows = []
        for s, label in ((0, "+"), (1, "-")):
            for a, xc in enumerate(m.x_centres):
                for b, zc in enumerate(m.z_centres):
                    rows.append([xc, zc, label, m.dx[s, a, b], m.dz[s, a, b], int(m.counts[s, a, b])])
        out.table("backaction", ["x_i", "z_i", "sign", "dx_mean", "dz_mean", "n"], rows)
        return
    if p["mode"] == "excitation":
        from .qstate import BlochState

        ens = simulate_x(cfg, 1, p["ntraj"], BlochState(1.0, 0.0, 0.0), threads)
        frac = float(np.mean(ens.z[:, 1] < 0))
        se = math.sqrt(frac * (1 - frac) / p["ntraj"])
        out.json("excitation", {"fraction": frac, "stderr": se, "theory": excitation_probability_first_step(cfg),
                                "gamma1_dt_over_eta": cfg.gamma1 * cfg.dt / cfg.eta if cfg.eta else None})
        return
    ens = simulate_x(cfg, _nsteps(p["tfinal"], p["dt"]), p["ntraj"], _bloch_init(p["init"]), threads, scheme=p["scheme"])
    width = len(str(p["ntraj"] - 1))
    for i in range(p["ntraj"]):
        V = np.concatenate([[np.nan], ens.V[i]])
        out.table(f"traj_{i:0{width}d}", ["t_us", "V", "x", "y", "z"],
                  [[ens.t[j], V[j], ens.x[i, j], ens.y[i, j], ens.z[i, j]] for j in range(len(ens.t))], "trajectory")
    m = ens.mean()
    out.table("summary", ["t_us", "x_mean", "y_mean", "z_mean"], [[ens.t[j], *m[:, j]] for j in range(len(ens.t))])


def cmd_demon(p: dict, out: Outputs, threads: int) -> None:
    from .demon import DemonConfig, run_ensemble, summary, transition_stats
    from .monitor_z import ZMonitorConfig

    require(p["ntraj"] >= 1, "ntraj must be >= 1", "ntraj")
    require(len(p["tau-list"]) >= 1, "tau-list must not be empty", "tau-list")
    mon = ZMonitorConfig(k=p["k"], eta=p["eta"], dt=p["dt"] * US, omega_r=TWO_PI * p["omega-r"] / US, gamma2=p["gamma2"])
    taus = tuple(t * US for t in p["tau-list"])
    results, trans, recs = [], [], []
    for i, tau in enumerate(taus):
        cfg = DemonConfig(beta=p["beta"], monitor=mon, tau_list=taus, ntraj=p["ntraj"], feedback=p["feedback"],
                          measure=p["measure"], filter=p["filter"], seed=None if p["seed"] is None else [p["seed"], i])
        run = run_ensemble(cfg, tau, threads)
        st = transition_stats(run)
        s = summary(run)
        s["tau_us"] = s.pop("tau")
        s["P0_init"], s["P1_init"] = st.P0_init, st.P1_init
        s["missing_strata"] = st.missing
        results.append(s)
        for x in (0, 1):
            for z in (0, 1):
                trans.append([tau, x, z, int(st.counts[x, z]), st.Pmn[x, z]])
        info = run.info
        recs += [[tau, j, int(run.X[j]), int(run.Z[j]), run.angle[j], info[j]] for j in range(len(run.X))]
    out.json("summary", {"beta": p["beta"], "feedback": p["feedback"], "results": results})
    out.table("transitions", ["tau_us", "X", "Z", "count", "P"], trans)
    out.table("records", ["tau_us", "run", "X", "Z", "feedback_angle", "I"], recs)


def cmd_spectra(p: dict, out: Outputs, threads: int) -> None:
    from . import spectra as sp

    if p["mode"] == "transmon":
        tp = sp.TransmonParams(p["ej"], p["ec"], p["charge-cutoff"])
        lv = sp.transmon_levels(tp, p["nlevels"])
        w01, anh = sp.transmon_summary(tp)
        out.table("levels", ["n", "E_GHz"], [[i, e - lv[0]] for i, e in enumerate(lv)])
        out.json("transmon", {"omega01_GHz": w01, "anharmonicity_GHz": anh,
                              "omega01_approx_GHz": math.sqrt(8 * p["ej"] * p["ec"]) - p["ec"], "ej_over_ec": p["ej"] / p["ec"]})
    elif p["mode"] == "jc":
        jp = sp.JCParams(p["omega-c"], p["omega-q"], p["g"])
        require(p["nmax"] >= 0, "nmax must be >= 0", "nmax")
        rows = []
        for n in range(p["nmax"] + 1):
            em, ep, th = sp.jc_dressed(jp, n)
            row = [n, em, ep, th]
            if jp.delta != 0:
                row += list(sp.dispersive_doublet(jp, n))
            else:
                row += [float("nan"), float("nan")]
            rows.append(row)
        out.table("dressed", ["n", "E_minus_GHz", "E_plus_GHz", "theta", "E_disp_minus_GHz", "E_disp_plus_GHz"], rows)
        chi = sp.dispersive_shift(jp.g, jp.delta) if jp.delta != 0 else None
        out.json("jc", {"delta_GHz": jp.delta, "chi_GHz": chi, "ground_GHz": sp.jc_ground(jp),
                        "transitions_GHz": list(sp.jc_transitions(jp))})
    else:
        ic = math.pi * p["gap0"] / (2 * p["rn"])
        f01, ic = sp.freq_from_resistance(sp.JunctionParams(ic, p["c"], p["rn"], p["gap0"]))
        out.json("junction", {"f01_Hz": f01, "Ic_A": ic})


def cmd_dynamics(p: dict, out: Outputs, threads: int) -> None:
    from .dynamics import DecoherenceRates, DriveParams, lindblad_propagate, rabi_pe

    drive = DriveParams(TWO_PI * p["amplitude"] / US, TWO_PI * p["detuning"] / US)
    n = _nsteps(p["tfinal"], p["dt"])
    t = np.arange(n + 1) * p["dt"] * US
    if p["mode"] == "rabi":
        pe = rabi_pe(drive, t)
        out.table("rabi", ["t_us", "P_e"], [[a, b] for a, b in zip(t, pe)])
        return
    rates = DecoherenceRates(p["gamma1"], p["gamma2"])
    tr = lindblad_propagate(_bloch_init(p["init"]).to_density(), drive, rates, t[-1], p["dt"] * US)
    out.table("lindblad", ["t_us", "x", "y", "z"], [[a, b, c, d] for a, b, c, d in zip(tr.t, tr.x, tr.y, tr.z)])


def cmd_duffing(p: dict, out: Outputs, threads: int) -> None:
    from .duffing import bifurcation_boundary, transfer_function

    require(p["dtilde-n"] >= 1 and p["drive-n"] >= 1, "sample counts must be >= 1", "drive-n")
    require(p["drive-min"] >= 0 and p["drive-max"] >= p["drive-min"], "drive range must be non-negative and ordered", "drive-min")
    require(p["dtilde-max"] >= p["dtilde-min"], "detuning range must be ordered", "dtilde-min")
    drives = np.linspace(p["drive-min"], p["drive-max"], p["drive-n"])
    rows = []
    for d in np.linspace(p["dtilde-min"], p["dtilde-max"], p["dtilde-n"]):
        tc = transfer_function(p["q"], float(d), drives)
        rows += [[d, a, b, c, math.degrees(e)] for a, b, c, e in zip(tc.drive, tc.branch, tc.r2, tc.theta)]
    out.table("steady_states", ["dtilde", "drive", "branch", "r2", "theta_deg"], rows)
    b = bifurcation_boundary(p["q"], np.linspace(min(0.0, p["dtilde-min"]), max(3.0, p["dtilde-max"]), 301))
    out.json("bifurcation", {"critical_detuning": b.critical_detuning, "Q": p["q"]})


def _read_csv(path: str, ncols: int) -> np.ndarray:
    require(bool(path), "input CSV required for this mode", "input")
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, skiprows=0, dtype=str)
    except OSError as e:
        raise ValidationError(f"cannot read input: {e}", "input") from None
    try:
        float(data[0, 0])
    except ValueError:
        data = data[1:]
    require(data.shape[1] >= ncols, f"input needs {ncols} columns", "input")
    try:
        return data[:, :ncols].astype(float)
    except ValueError as e:
        raise ValidationError(f"non-numeric input: {e}", "input") from None


def cmd_calibrate(p: dict, out: Outputs, threads: int) -> None:
    from . import calib

    mode = p["mode"]
    if mode == "lorentzian":
        d = _read_csv(p["input"], 2)
        fit = calib.fit_lorentzian(d[:, 0], d[:, 1])
        out.json("lorentzian", {"f_c": fit.f_c, "kappa": fit.kappa, "amplitude": fit.amplitude})
    elif mode == "chi":
        d = _read_csv(p["input"], 3)
        sweep = [calib.RamseySweepPoint(*row) for row in d]
        r = calib.extract_chi(sweep, TWO_PI * p["kappa"])
        out.json("chi", {"chi_MHz": r.chi_mhz, "f_min_MHz": r.f_min, "K0": r.K0, "K1": r.K1, "K2": r.K2,
                         "slope": r.slope, "intercept": r.intercept})
    elif mode == "mixer":
        c3 = calib.MixerChannel(p["k1-ch3"], p["k2-ch3"])
        c4 = calib.MixerChannel(p["k1-ch4"], p["k2-ch4"])
        v3, v4 = calib.mixer_settings(p["fk"], p["theta"], c3, c4)
        out.json("mixer", {"ch3": v3, "ch4": v4, "fk": p["fk"], "theta_deg": p["theta"]})
    else:
        from .monitor_z import DispersivePhysical

        phys = DispersivePhysical(TWO_PI * p["chi"], TWO_PI * p["kappa"], p["nbar"])
        est = calib.eta_pipeline(p["true-eta"], phys, p["t-int"] * US, p["nshots"], np.random.default_rng(p["seed"]))
        out.json("eta", {"eta": est.eta, "snr": est.snr, "separation": est.separation, "sigma": est.sigma,
                         "true_eta": p["true-eta"]})


def cmd_validate(p: dict, out: Outputs, threads: int) -> None:
    from ._common import spawn
    from .monitor_z import ZMonitorConfig, simulate_z
    from .tomoval import postselect_reconstruct, projective_readout

    require(p["ntraj"] >= 2, "ntraj must be >= 2", "ntraj")
    require(p["stride"] >= 1, "stride must be >= 1", "stride")
    require(0 <= p["flip"] < 0.5, "flip must lie in [0, 0.5)", "flip")
    cfg = ZMonitorConfig(k=p["k"], eta=p["eta"], dt=p["dt"] * US, omega_r=TWO_PI * p["omega-r"] / US,
                         gamma2=p["gamma2"], seed=p["seed"])
    n = _nsteps(p["tfinal"], p["dt"])
    ens = simulate_z(cfg, n, p["ntraj"], _bloch_init(p["init"]), threads=threads)
    comp = ens.z if p["component"] == "z" else ens.x
    idx = np.arange(0, n + 1, p["stride"])
    ref, pred = comp[0, idx], comp[1:, idx]
    rng = np.random.default_rng(spawn(p["seed"], 1)[0].spawn(1)[0])
    reads = projective_readout(pred, rng, p["flip"])
    rec = postselect_reconstruct(ref, pred, reads, p["window"], ens.t[idx])
    out.table("reconstruction", ["t_us", "ref", "recon", "err", "n"],
              [[a, b, c, d, int(e)] for a, b, c, d, e in zip(rec.t, rec.reference, rec.value, rec.error, rec.n)])
    out.json("validation", {"agreement_3sigma": rec.agreement(3.0), "component": p["component"],
                            "gaps": int(np.sum(rec.n == 0)), "points": int(rec.n.size)})


def cmd_wigner(p: dict, out: Outputs, threads: int) -> None:
    from .cavity import CoherentAmplitude, default_grid, wigner

    require(p["points"] >= 3, "points must be >= 3", "points")
    require(p["half-width"] > 0, "half-width must be positive", "half-width")
    state = CoherentAmplitude(complex(p["alpha-re"], p["alpha-im"])) if p["state"] == "coherent" else p["state"]
    q, pa = default_grid(state, p["half-width"], p["points"])
    g = wigner(state, q, pa)
    qq, pp = np.meshgrid(g.q_axis, g.p_axis, indexing="ij")
    out.table("wigner", ["q", "p", "W"], np.column_stack([qq.ravel(), pp.ravel(), g.values.ravel()]).tolist())
    out.json("wigner_summary", {"integral": g.integral(), "W_origin_centre": float(g.values[len(q) // 2, len(pa) // 2])})


COMMANDS: dict[str, Callable[[dict, Outputs, int], None]] = {
    "simulate-z": cmd_simulate_z,
    "simulate-x": cmd_simulate_x,
    "demon": cmd_demon,
    "spectra": cmd_spectra,
    "dynamics": cmd_dynamics,
    "duffing": cmd_duffing,
    "calibrate": cmd_calibrate,
    "validate": cmd_validate,
    "wigner": cmd_wigner,
}


HELP = {
    "simulate-z": "sigma_z monitoring trajectories with Bayesian and/or SME estimates",
    "simulate-x": "sigma_- (fluorescence) monitoring: trajectories, backaction maps, excitation statistics",
    "demon": "Maxwell's demon feedback runs with Jarzynski and information statistics",
    "spectra": "transmon levels, Jaynes-Cummings doublets and Josephson energy",
    "dynamics": "Lindblad Bloch evolution or Rabi response",
    "duffing": "Duffing steady states, bifurcation boundary and transfer curves",
    "calibrate": "synthetic-data calibration: lorentzian, chi, eta or mixer",
    "validate": "post-selected tomographic validation of trajectories",
    "wigner": "Wigner function of a Fock or coherent state on a grid",
}


# ------------------------------------------------------------------ driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Monitored-qubit simulations and calibrations.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=HELP[name], description=HELP[name])
        sp.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUTPUT_DIR} or ./{DEFAULT_OUTPUT_DIR})")
        sp.add_argument("--config", default=None, help="key = value file or a previous manifest.json")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (outputs do not depend on it)")
        for key, prm in {**COMMON, **PARAMS[name]}.items():
            extra = f"; one of {', '.join(prm.choices)}" if prm.choices else ""
            # choices are checked in resolve_params so errors stay structured
            sp.add_argument(f"--{key}", dest=key.replace("-", "_"), type=str, default=None,
                            help=f"{prm.help} [default: {prm.default}{extra}]")
    return ap


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict
    out_dir: Path
    threads: int = 1

    @property
    def seed(self) -> int:
        return self.params["seed"]

    @property
    def format(self) -> str:
        return self.params["format"]


def run(cfg: RunConfig) -> Outputs:
    """Execute one subcommand and write its files plus ``manifest.json``."""
    require(cfg.threads >= 1, "threads must be >= 1", "threads")
    out = Outputs(cfg.command, cfg.format)
    t0 = time.perf_counter()
    COMMANDS[cfg.command](cfg.params, out, cfg.threads)
    wall = time.perf_counter() - t0
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in out.files.items():
        (cfg.out_dir / name).write_text(text)
    manifest = {
        "schema": "artifact/manifest/1",
        "subcommand": cfg.command,
        "params": cfg.params,
        "seed": cfg.seed,
        "version": __version__,
        "threads": cfg.threads,
        "wall_time_s": wall,
        "outputs": sorted(out.files),
    }
    (cfg.out_dir / MANIFEST).write_text(dump_json(manifest))
    return out


def _error(kind: str, exc: Exception, key: str | None = None) -> None:
    sys.stderr.write(json.dumps({"error": kind, "key": key, "message": str(exc)}) + "\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command
    try:
        flags = {k: getattr(args, k.replace("-", "_")) for k in {**COMMON, **PARAMS[cmd]}}
        config = None
        if args.config:
            config, origin = read_config_file(args.config, cmd)
            if origin is not None and origin != cmd:
                raise ValidationError(f"manifest is for {origin!r}, not {cmd!r}", "config")
        params = resolve_params(cmd, flags, config)
        out_dir = Path(args.out or os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR)
        out = run(RunConfig(cmd, params, out_dir, args.threads))
    except ValidationError as e:
        _error("validation", e, e.key)
        return EXIT_VALIDATION
    except (NumericalError, ZeroDivisionError, FloatingPointError) as e:
        _error("numerical", e)
        return EXIT_NUMERICAL
    n = len(out.files)
    sys.stdout.write(f"wrote {n} file{'' if n == 1 else 's'} and {MANIFEST} to {out_dir}\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
