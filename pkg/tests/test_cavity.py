from __future__ import annotations

import numpy as np
import pytest
from scipy.special import eval_laguerre

from artifact import ValidationError
from artifact.cavity import (
    CoherentAmplitude,
    TruncationWarning,
    coherent_coefficients,
    default_grid,
    evolve_coherent,
    nmax_for,
    quadrature_variances,
    wigner,
)

WIDE = np.linspace(-9, 9, 721)


def wigner_fock_oracle(n, q, p):
    # W_n = (-1)^n exp(-r^2/2) L_n(r^2) / (2 pi) in the q = a + a^dag convention
    r2 = q**2 + p**2
    return (-1) ** n * np.exp(-0.5 * r2) * eval_laguerre(n, r2) / (2 * np.pi)


def test_coherent_poisson_statistics():
    a = 1.3 - 0.4j
    c = coherent_coefficients(a, nmax_for(a))
    p = np.abs(c) ** 2
    n = np.arange(len(p))
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.sum(n * p) == pytest.approx(abs(a) ** 2, rel=1e-10)
    assert np.sum(n**2 * p) - np.sum(n * p) ** 2 == pytest.approx(abs(a) ** 2, rel=1e-9)


def test_large_amplitude_no_overflow():
    c = coherent_coefficients(20.0, nmax_for(20.0))
    assert np.all(np.isfinite(c))
    assert np.sum(np.abs(c) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_truncation_warns():
    with pytest.warns(TruncationWarning):
        coherent_coefficients(3.0, 5)


def test_vacuum_amplitude():
    c = coherent_coefficients(0, 4)
    assert c[0] == 1 and np.all(c[1:] == 0)


@pytest.mark.parametrize("a", [0.0, 0.7, 1 + 2j, -2.5j])
def test_coherent_quadrature_variance_quarter(a):
    vi, vq = quadrature_variances(coherent_coefficients(a, nmax_for(a)))
    assert vi == pytest.approx(0.25, abs=1e-10)
    assert vq == pytest.approx(0.25, abs=1e-10)


def test_free_evolution_phase():
    a = evolve_coherent(CoherentAmplitude(1.0), omega_c=2.0, t=np.pi / 4)
    assert a.alpha == pytest.approx(-1j)
    assert a.nbar == pytest.approx(1.0)


@pytest.mark.parametrize("n,state", [(0, "fock0"), (1, "fock1")])
def test_fock_wigner_matches_laguerre(n, state):
    g = wigner(state, WIDE, WIDE)
    qq, pp = np.meshgrid(WIDE, WIDE, indexing="ij")
    assert np.allclose(g.values, wigner_fock_oracle(n, qq, pp), atol=1e-15)


def test_origin_values():
    g0 = wigner("fock0", WIDE, WIDE)
    g1 = wigner("fock1", WIDE, WIDE)
    i = len(WIDE) // 2
    assert g0.values[i, i] == pytest.approx(1 / (2 * np.pi), abs=1e-15)
    assert g1.values[i, i] == pytest.approx(-1 / (2 * np.pi), abs=1e-15)


@pytest.mark.parametrize("state", ["fock0", "fock1", CoherentAmplitude(1.0 - 0.5j)])
def test_normalization_on_wide_grid(state):
    q, p = default_grid(state, half_width=9.0, points=721)
    assert wigner(state, q, p).integral() == pytest.approx(1.0, abs=1e-6)


def test_coherent_wigner_centre():
    a = 0.8 + 0.3j
    q, p = default_grid(a, 9.0, 721)
    g = wigner(a, q, p)
    qq, pp = np.meshgrid(q, p, indexing="ij")
    norm = g.integral()
    mq = np.trapezoid(np.trapezoid(g.values * qq, p, axis=1), q) / norm
    mp = np.trapezoid(np.trapezoid(g.values * pp, p, axis=1), q) / norm
    assert (mq, mp) == pytest.approx((2 * a.real, 2 * a.imag), abs=1e-8)


def test_grid_must_cover_state():
    with pytest.raises(ValidationError):
        wigner(CoherentAmplitude(3.0), np.linspace(-5, 5, 101), np.linspace(-5, 5, 101))


def test_nonuniform_grid_rejected():
    q = np.concatenate([np.linspace(-6, 0, 50), np.linspace(0.5, 6, 20)])
    with pytest.raises(ValidationError):
        wigner("fock0", q, q)


def test_unknown_state_rejected():
    with pytest.raises(ValidationError):
        wigner("fock2")


def test_csv_shape():
    g = wigner("fock0", np.linspace(-6, 6, 5), np.linspace(-6, 6, 5))
    lines = g.to_csv().splitlines()
    assert lines[0] == "q,p,W" and len(lines) == 26
