from __future__ import annotations

import numpy as np
import pytest

from artifact import NumericalError, ValidationError
from artifact.spectra import (
    JCParams,
    JunctionParams,
    TransmonParams,
    dispersive_doublet,
    dispersive_shift,
    freq_from_resistance,
    jc_dressed,
    jc_transitions,
    jj_inductance,
    squid_critical_current,
    stark_shift,
    transmon_levels,
    transmon_summary,
)


def dense_transmon(EJ, EC, cutoff, ng=0.0):
    m = np.arange(-cutoff, cutoff + 1)
    h = np.diag(4 * EC * (m - ng) ** 2 + EJ) - 0.5 * EJ * (np.eye(len(m), k=1) + np.eye(len(m), k=-1))
    return np.linalg.eigvalsh(h)


def jc_block(p, n):
    # basis |g, n+1>, |e, n>; H = wc a^dag a + wq |e><e| - delta/2 offset convention
    wc, wq, g = p.omega_c, p.omega_q, p.g
    h = np.array([[(n + 1) * wc - 0.5 * (wq - wc), g * np.sqrt(n + 1)], [g * np.sqrt(n + 1), (n + 1) * wc + 0.5 * (wq - wc)]])
    return np.linalg.eigvalsh(h)


def test_transmon_against_dense_diagonalization():
    e = transmon_levels(TransmonParams(30.0, 0.7, 25), 5)
    assert np.allclose(e, dense_transmon(30.0, 0.7, 25)[:5], atol=1e-9)


def test_transmon_frequency_asymptotics():
    w01, _ = transmon_summary(TransmonParams(40 * 0.3, 0.3))
    assert w01 == pytest.approx(np.sqrt(8 * 12.0 * 0.3) - 0.3, rel=0.02)


def test_anharmonicity_approaches_minus_ec():
    # leading-order value -EC; the correction falls off as sqrt(EC/EJ)
    devs = []
    for r in (40, 160, 640, 2560):
        _, anh = transmon_summary(TransmonParams(float(r), 1.0, charge_cutoff=max(20, int(3 * r**0.5))))
        devs.append(abs(anh + 1.0))
    assert all(a > b for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.02
    ratios = np.array(devs[1:]) / np.array(devs[:-1])
    assert np.allclose(ratios[1:], 0.5, atol=0.05)


def test_transmon_cutoff_not_converged():
    with pytest.raises(NumericalError):
        transmon_levels(TransmonParams(2000.0, 0.1, 10), 3)


def test_transmon_invalid_params():
    with pytest.raises(ValidationError):
        TransmonParams(-1.0, 0.2)


def test_polariton_splitting():
    em, ep, th = jc_dressed(JCParams(6.0, 6.0, 0.05), 0)
    assert ep - em == pytest.approx(0.1, abs=1e-12)
    assert th == pytest.approx(np.pi / 4)


@pytest.mark.parametrize("n", [0, 1, 4])
def test_dressed_states_match_block_diagonalization(n):
    p = JCParams(7.0, 5.6, 0.12)
    em, ep, _ = jc_dressed(p, n)
    assert np.allclose([em, ep], jc_block(p, n), atol=1e-12)


def test_sqrt_n_scaling_on_resonance():
    p = JCParams(5.0, 5.0, 0.02)
    for n in range(5):
        em, ep, _ = jc_dressed(p, n)
        assert ep - em == pytest.approx(2 * p.g * np.sqrt(n + 1), abs=1e-12)


def test_transitions_reduce_to_bare_frequencies_at_zero_coupling():
    lo, hi = sorted(jc_transitions(JCParams(7.0, 5.5, 0.0)))
    assert (lo, hi) == pytest.approx((5.5, 7.0))


def test_dispersive_shift_values():
    assert dispersive_shift(0.1, -1.0) == pytest.approx(-0.01)
    assert stark_shift(-0.01, 3) == pytest.approx(-0.06)
    with pytest.raises(ZeroDivisionError):
        dispersive_shift(0.1, 0.0)


def test_dispersive_error_shrinks_with_detuning():
    errs = []
    for d in (0.5, 1.0, 2.0):
        p = JCParams(7.0, 7.0 + d, 0.05)
        exact = np.sort(jc_dressed(p, 2)[:2])
        approx = np.sort(dispersive_doublet(p, 2))
        errs.append(np.max(np.abs(exact - approx)) / abs(dispersive_shift(p.g, p.delta)))
    assert errs[0] > errs[1] > errs[2]
    # relative error scales as (g / delta)^2: halving it per doubling of delta quarters it
    assert errs[1] / errs[0] == pytest.approx(0.25, rel=0.05)


def test_squid_and_inductance():
    assert squid_critical_current(1e-8, 0.0) == pytest.approx(2e-8)
    assert squid_critical_current(1e-8, 0.5) == pytest.approx(0.0, abs=1e-20)
    assert jj_inductance(0.0, 1.0) == 1.0
    assert jj_inductance(0.6, 1.0) == pytest.approx(1.25)
    with pytest.raises(ValidationError):
        jj_inductance(1.0, 1.0)


def test_frequency_from_resistance():
    f01, ic = freq_from_resistance(JunctionParams(1e-8, 0.057e-12, 18e3))
    assert f01 == pytest.approx(5.99e9, rel=2e-3)
    assert ic == pytest.approx(np.pi * 170e-6 / (2 * 18e3))


def test_frequency_from_resistance_rejects_negative():
    with pytest.raises(ValidationError):
        freq_from_resistance(JunctionParams(1e-8, 1e-16, 1e9))
