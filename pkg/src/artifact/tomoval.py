"""Tomographic validation: binomial expectation values, record scaling and
post-selected reconstruction of a reference trajectory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._common import NumericalError, ValidationError, require
from .monitor_z import MeasurementRecord

DEFAULT_WINDOW = 0.02


@dataclass(frozen=True)
class ReadoutTally:
    n_plus: int
    n_minus: int
    basis: str = "z"

    def __post_init__(self) -> None:
        require(self.n_plus >= 0 and self.n_minus >= 0, "counts must be non-negative", "counts")
        require(self.basis in ("x", "y", "z"), "basis must be x, y or z", "basis")


def expectation_with_error(t: ReadoutTally) -> tuple[float, float]:
    """``((N+ - N-)/N, 2 sqrt(N+ N- / N^3))``.

    Examples
    --------
    >>> expectation_with_error(ReadoutTally(50, 50))
    (0.0, 0.1)
    """
    n = t.n_plus + t.n_minus
    if n == 0:
        raise ValidationError("no readouts to estimate from", "counts")
    return (t.n_plus - t.n_minus) / n, 2 * float(np.sqrt(t.n_plus * t.n_minus / n**3))


@dataclass(frozen=True)
class RecordScaling:
    offset: float
    gain: float

    def apply(self, raw) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.offset) * self.gain


def fit_record_scaling(ground_cal, excited_cal) -> RecordScaling:
    """Offset from the pooled calibration mean; gain puts ground at ``+1`` and excited at ``-1``.

    Raises
    ------
    NumericalError
        If the two calibration means are closer than three standard errors.
    """
    g = np.asarray(ground_cal, dtype=float)
    e = np.asarray(excited_cal, dtype=float)
    require(g.size > 0 and e.size > 0, "calibration sets must be non-empty", "calibration")
    mg, me = g.mean(), e.mean()
    se = np.sqrt(g.var() / g.size + e.var() / e.size)
    if abs(mg - me) < 3 * se or mg == me:
        raise NumericalError("calibration histograms are not resolved")
    offset = 0.5 * (mg + me)
    return RecordScaling(offset, 2.0 / (mg - me))


def scale_record(raw, ground_cal, excited_cal, dt: float = 1.0) -> MeasurementRecord:
    """Scaled record with conditional means at ``+-1`` (ground at ``+1``)."""
    s = fit_record_scaling(ground_cal, excited_cal)
    return MeasurementRecord(dt, s.apply(raw))


@dataclass(frozen=True)
class Reconstruction:
    """Per verification step: reference value, reconstruction, binomial error and selection size.

    Gaps (no selected members) carry NaN and ``n = 0``.
    """

    t: np.ndarray
    reference: np.ndarray
    value: np.ndarray
    error: np.ndarray
    n: np.ndarray

    def agreement(self, k: float = 3.0) -> float:
        """Fraction of non-gap steps with ``|value - reference| <= k * error``.

        A zero error (all readouts equal) counts as agreement only when the
        reference lies within one readout quantum of the estimate.
        """
        ok = self.n > 0
        if not np.any(ok):
            return float("nan")
        diff = np.abs(self.value[ok] - self.reference[ok])
        err = self.error[ok]
        quantum = 2.0 / self.n[ok]
        return float(np.mean(np.where(err > 0, diff <= k * err, diff <= quantum)))

    def to_csv(self) -> str:
        rows = "\n".join(
            f"{a!r},{b!r},{c!r},{d!r},{int(e)}" for a, b, c, d, e in zip(self.t, self.reference, self.value, self.error, self.n)
        )
        return "t,ref,recon,err,n\n" + rows + "\n"


def projective_readout(components, rng: np.random.Generator, flip: float = 0.0) -> np.ndarray:
    """``+1`` with probability ``(1 + c)/2`` else ``-1``; optional symmetric flip probability."""
    c = np.asarray(components, dtype=float)
    out = np.where(rng.random(c.shape) < 0.5 * (1 + c), 1, -1)
    if flip > 0:
        out = np.where(rng.random(c.shape) < flip, -out, out)
    return out


def postselect_reconstruct(
    reference,
    predictions,
    readouts,
    window: float = DEFAULT_WINDOW,
    t=None,
) -> Reconstruction:
    """Reconstruct ``reference[j]`` from ensemble members whose prediction is within ``window``.

    Parameters
    ----------
    reference : array, shape (n,)
        Predicted component of the reference trajectory at each verification time.
    predictions : array, shape (m, n)
        Each ensemble member's predicted component at the same times.
    readouts : array, shape (m, n)
        ``+-1`` projective outcome of member ``i`` when stopped at time ``j``.
    window : float
        Half-width of the selection window in Bloch units.
    """
    ref = np.asarray(reference, dtype=float)
    pred = np.atleast_2d(np.asarray(predictions, dtype=float))
    out = np.atleast_2d(np.asarray(readouts))
    require(pred.shape == out.shape and pred.shape[1] == ref.size, "shape mismatch between reference, predictions and readouts", "predictions")
    require(window >= 0, "window must be non-negative", "window")
    sel = np.abs(pred - ref[None, :]) <= window if window > 0 else np.zeros(pred.shape, dtype=bool)
    n = sel.sum(axis=0)
    n_plus = np.sum(sel & (out > 0), axis=0)
    n_minus = n - n_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(n > 0, (n_plus - n_minus) / np.where(n > 0, n, 1), np.nan)
        err = np.where(n > 0, 2 * np.sqrt(n_plus * n_minus / np.where(n > 0, n, 1) ** 3.0), np.nan)
    tt = np.arange(ref.size, dtype=float) if t is None else np.asarray(t, dtype=float)
    return Reconstruction(tt, ref, value, err, n)
