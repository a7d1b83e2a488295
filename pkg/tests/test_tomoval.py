from __future__ import annotations

import numpy as np
import pytest

from artifact import NumericalError, ValidationError
from artifact.monitor_z import ZMonitorConfig, simulate_z
from artifact.qstate import BlochState
from artifact.tomoval import (
    ReadoutTally,
    expectation_with_error,
    fit_record_scaling,
    postselect_reconstruct,
    projective_readout,
    scale_record,
)


@pytest.mark.parametrize(
    "counts, value, error",
    [((100, 0), 1.0, 0.0), ((50, 50), 0.0, 0.1), ((75, 25), 0.5, 2 * np.sqrt(1875 / 1e6))],
)
def test_expectation_with_error(counts, value, error):
    v, e = expectation_with_error(ReadoutTally(*counts))
    assert v == pytest.approx(value, abs=1e-15)
    assert e == pytest.approx(error, abs=1e-15)


def test_empty_tally():
    with pytest.raises(ValidationError):
        expectation_with_error(ReadoutTally(0, 0))
    with pytest.raises(ValidationError):
        ReadoutTally(-1, 3)


def test_binomial_error_matches_spread(rng):
    p, n = 0.3, 400
    vals = [expectation_with_error(ReadoutTally(int(k), n - int(k)))[0] for k in rng.binomial(n, p, 20_000)]
    assert np.std(vals) == pytest.approx(2 * np.sqrt(p * (1 - p) / n), rel=0.02)


def test_calibrations_at_unit_means_are_identity(rng):
    g = 1 + 0.01 * rng.standard_normal(1000)
    e = -1 + 0.01 * rng.standard_normal(1000)
    g, e = g - g.mean() + 1, e - e.mean() - 1
    raw = rng.normal(size=50)
    assert np.allclose(scale_record(raw, g, e).samples, raw, atol=1e-12)


def test_swapped_calibrations_flip_gain(rng):
    g = rng.normal(2.0, 0.5, 2000)
    e = rng.normal(-1.0, 0.5, 2000)
    a = fit_record_scaling(g, e)
    b = fit_record_scaling(e, g)
    assert a.gain > 0 > b.gain
    assert b.apply(e.mean()) == pytest.approx(1.0)


def test_scaling_round_trip(rng):
    offset, gain, n = 0.37, 2.5, 100_000
    # physical voltage u = V / gain + offset with V at +-1 and unit-width noise
    g = rng.normal(1, 1, n) / gain + offset
    e = rng.normal(-1, 1, n) / gain + offset
    s = fit_record_scaling(g, e)
    assert 1 / s.gain == pytest.approx(1 / gain, rel=0.005)
    assert s.offset == pytest.approx(offset, abs=0.005 / gain)


def test_scaling_is_idempotent(rng):
    g, e = rng.normal(3, 1, 5000), rng.normal(1, 1, 5000)
    raw = rng.normal(2, 1, 100)
    once = scale_record(raw, g, e).samples
    twice = scale_record(once, scale_record(g, g, e).samples, scale_record(e, g, e).samples).samples
    assert np.max(np.abs(twice - once)) < 1e-9


def test_unresolved_calibration(rng):
    with pytest.raises(NumericalError):
        fit_record_scaling(rng.normal(0, 1, 100), rng.normal(0, 1, 100) + 1e-3)


def test_projective_readout_statistics(rng):
    out = projective_readout(np.full(200_000, 0.4), rng)
    assert set(np.unique(out)) == {-1, 1}
    assert out.mean() == pytest.approx(0.4, abs=4 * np.sqrt(0.84 / 200_000))
    flipped = projective_readout(np.ones(200_000), rng, flip=0.1)
    assert flipped.mean() == pytest.approx(0.8, abs=0.01)


def test_exact_copies_reconstruct_reference(rng):
    ref = np.cos(np.linspace(0, 3, 40))
    pred = np.repeat(ref[None, :], 5000, axis=0)
    rec = postselect_reconstruct(ref, pred, projective_readout(pred, rng))
    assert np.all(rec.n == 5000)
    assert rec.agreement(4.0) == 1.0


def test_zero_window_is_all_gaps(rng):
    ref = np.zeros(5)
    pred = rng.uniform(-1, 1, (100, 5))
    rec = postselect_reconstruct(ref, pred, projective_readout(pred, rng), window=0.0)
    assert np.all(rec.n == 0) and np.all(np.isnan(rec.value))
    assert np.isnan(rec.agreement())


def test_shape_mismatch():
    with pytest.raises(ValidationError):
        postselect_reconstruct(np.zeros(3), np.zeros((4, 2)), np.zeros((4, 2)))


def _sme_reconstruction(seed: int, ntraj: int, nsteps: int = 100):
    cfg = ZMonitorConfig(k=1.0, eta=0.35, dt=0.02, omega_r=2 * np.pi * 0.6, seed=seed)
    ens = simulate_z(cfg, nsteps, ntraj, BlochState(1.0, 0.0, 0.0))
    ref, pred = ens.z[0], ens.z[1:]
    reads = projective_readout(pred, np.random.default_rng(seed + 1000))
    return postselect_reconstruct(ref, pred, reads, t=ens.t)


def test_sme_ensemble_reconstructs_reference():
    rec = _sme_reconstruction(seed=7, ntraj=10_000)
    assert rec.agreement(3.0) >= 0.95


def test_reconstruction_unbiased():
    errs = np.array([(lambda r: r.value - r.reference)(_sme_reconstruction(seed, 1000, 50)) for seed in range(100)])
    errs = errs[:, 1:]  # t = 0 is the exact initial state for every member
    n = np.sum(np.isfinite(errs), axis=0)
    mean = np.nanmean(errs, axis=0)
    se = np.nanstd(errs, axis=0, ddof=1) / np.sqrt(n)
    ok = n >= 20
    assert np.all(np.abs(mean[ok]) <= 3 * se[ok])
