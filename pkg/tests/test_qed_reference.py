"""Collective-decay reference model tests."""

import numpy as np
import pytest

from spinfoam_oqs.qed_reference import (
    CascadeResult,
    DickeConfig,
    cavity_cascade,
    collective_lowering,
    collective_sz,
    compare_curves,
    dicke_cascade,
    m_values,
    rescale_by_release_time,
)


def test_config_validation():
    with pytest.raises(ValueError):
        DickeConfig(n_qubits=0)
    with pytest.raises(ValueError):
        DickeConfig(n_qubits=2, kappa_over_gamma=-1)
    with pytest.raises(ValueError):
        DickeConfig(n_qubits=2, t_max=0)


def test_collective_operators():
    S = collective_lowering(2)
    # |1,1> -> sqrt(2)|1,0> -> sqrt(2)|1,-1>
    assert S[1, 0] == pytest.approx(np.sqrt(2))
    assert S[2, 1] == pytest.approx(np.sqrt(2))
    assert np.allclose(collective_sz(2), np.diag([1.0, 0.0, -1.0]))
    assert list(m_values(3)) == [1.5, 0.5, -0.5, -1.5]


def test_single_qubit_closed_form_decay():
    cfg = DickeConfig(n_qubits=1, kappa_over_gamma=40.0, t_max=40.0, n_times=200)
    res = dicke_cascade(cfg)
    pops = res.trajectory.populations()
    expected = np.exp(-cfg.gamma_eff * cfg.times())
    assert np.max(np.abs(pops[:, 0] - expected)) < 1e-12


def test_initial_state_outside_ladder_rejected():
    cfg = DickeConfig(n_qubits=2)
    with pytest.raises(ValueError):
        dicke_cascade(cfg, initial_m=0.5)


def test_two_qubit_cascade_onset_order():
    cfg = DickeConfig(n_qubits=2, kappa_over_gamma=40.0, t_max=100.0, n_times=500)
    res = dicke_cascade(cfg)
    pops = res.trajectory.populations()
    onsets = [int(np.argmax(pops[:, k] > 0.02)) for k in range(3)]
    # population flows through the ladder in order
    assert onsets[0] <= onsets[1] <= onsets[2]
    assert onsets[1] < onsets[2]


def test_sz_limit_is_fully_deexcited():
    for m0 in (1.0, 0.0):
        cfg = DickeConfig(n_qubits=2, kappa_over_gamma=40.0, t_max=400.0, n_times=400)
        res = dicke_cascade(cfg, initial_m=m0)
        assert res.sz[-1] == pytest.approx(-1.0, abs=1e-6)


def test_ladder_support_preserved():
    cfg = DickeConfig(n_qubits=3, kappa_over_gamma=40.0, t_max=60.0, n_times=200)
    res = dicke_cascade(cfg)
    for rho in res.trajectory.states[:: 20]:
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-10


def test_release_non_negative_for_downward_cascade():
    cfg = DickeConfig(n_qubits=2, kappa_over_gamma=40.0, t_max=100.0, n_times=400)
    res = dicke_cascade(cfg)
    _taus, release = res.release()
    assert np.all(release > -1e-12)


def test_effective_matches_full_cavity_model():
    cfg = DickeConfig(n_qubits=2, kappa_over_gamma=40.0, t_max=100.0, n_times=300)
    eff = dicke_cascade(cfg)
    full = cavity_cascade(cfg, n_photon_levels=3)
    deviation = np.max(np.abs(eff.sz - full.sz))
    span = cfg.n_qubits  # Sz ranges over [-N/2, N/2]
    assert deviation <= 0.05 * span


def test_compare_curves_identical_and_rescaled():
    x = np.linspace(0.0, 5.0, 200)
    y = np.exp(-x) * x
    assert compare_curves((x, y), (x, y)) == 0.0
    assert compare_curves((x, y), (x, 3.0 * y)) < 1e-14


def test_compare_curves_resamples_different_grids():
    x1 = np.linspace(0.0, 5.0, 200)
    x2 = np.linspace(0.0, 5.0, 337)
    y = lambda x: np.exp(-((x - 2.0) ** 2))
    assert compare_curves((x1, y(x1)), (x2, y(x2))) < 1e-3


def test_compare_curves_rejects_bad_input():
    x = np.linspace(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        compare_curves((x, -np.ones(10)), (x, np.ones(10)))
    with pytest.raises(ValueError):
        compare_curves((x, np.zeros(10)), (x, np.ones(10)))
    with pytest.raises(ValueError):
        compare_curves((x, np.ones(10)), (x + 10.0, np.ones(10)))


def test_rescale_by_release_time():
    x = np.linspace(0.0, 10.0, 500)
    y = np.exp(-2.0 * x)
    xr, yr = rescale_by_release_time(x, y)
    t_mean = np.trapezoid(x * y, x) / np.trapezoid(y, x)
    assert xr[-1] == pytest.approx(10.0 / t_mean)
    # shape-invariance: the same curve at double speed lands on itself
    x2 = np.linspace(0.0, 5.0, 500)
    y2 = np.exp(-4.0 * x2)
    xr2, yr2 = rescale_by_release_time(x2, y2)
    assert compare_curves((xr, yr), (xr2, yr2)) < 1e-3
