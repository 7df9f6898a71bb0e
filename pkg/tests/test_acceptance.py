"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import random
import time
from pathlib import Path

import numpy as np
import pytest

from spinfoam_oqs.amplitudes import (
    AsymptoticParams,
    KappaMatrix,
    TransitionMatrix,
    two_level_rho11,
)
from spinfoam_oqs.bathfit import (
    FitProblem,
    admissible_triple_basis,
    chain_target,
    fit_bath,
    sample_cost_distribution,
    standard_model,
)
from spinfoam_oqs.lindblad import (
    EvolutionConfig,
    evolve_effective,
    kappa_generator,
    pure_state,
    steady_states,
)
from spinfoam_oqs.observables import (
    EnergySpectrum,
    energy_expectations,
    energy_release,
    gibbs_state,
    spectral_temperature,
    temperature_series,
    thermal_flow_check,
)
from spinfoam_oqs.qed_reference import (
    DickeConfig,
    cavity_cascade,
    compare_curves,
    dicke_cascade,
    rescale_by_release_time,
)
from spinfoam_oqs.recoupling import Spin, wigner6j
from spinfoam_oqs.scenario import ScenarioConfig, build_kappa, run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

# Distance between the integral-normalized release curves of the shipped
# 3D cascade scenario and the N=2 bad-cavity reference, both on release-
# time-rescaled axes.  Computed once from this code base; reruns must
# reproduce it.
DICKE_REGRESSION_BASELINE = 1.1692477229848275


def _passed(number: int, message: str) -> None:
    print(f"\n[criterion {number:2d}] PASS - {message}")


def _pick_shared(rng, t1, t2, t3, t4, tjmax):
    lo = max(abs(t1 - t2), abs(t3 - t4))
    hi = min(t1 + t2, t3 + t4, tjmax)
    if (t1 + t2) % 2 != (t3 + t4) % 2 or lo > hi:
        return None
    start = lo if (lo + t1 + t2) % 2 == 0 else lo + 1
    return None if start > hi else rng.choice(range(start, hi + 1, 2))


def test_criterion_1_recoupling_identities():
    started = time.monotonic()
    rng = random.Random(2024)
    tjmax = 8  # j <= 4

    checked = 0
    while checked < 1000:
        ta, tb = rng.randint(0, tjmax), rng.randint(0, tjmax)
        tc, td = rng.randint(0, tjmax), rng.randint(0, tjmax)
        if (tc + td) % 2 != (ta + tb) % 2:
            continue
        tp = _pick_shared(rng, ta, td, tc, tb, tjmax)
        tq = _pick_shared(rng, ta, td, tc, tb, tjmax)
        if tp is None or tq is None:
            continue
        total = 0.0
        for tx in range(abs(ta - tb), ta + tb + 1, 2):
            w1 = wigner6j(*[Spin(t) for t in (ta, tb, tx, tc, td, tp)])
            w2 = wigner6j(*[Spin(t) for t in (ta, tb, tx, tc, td, tq)])
            total += (tx + 1) * (tp + 1) * w1 * w2
        assert abs(total - (1.0 if tp == tq else 0.0)) < 1e-10
        checked += 1

    pentagon = 0
    while pentagon < 1000:
        ta, tb = rng.randint(0, tjmax), rng.randint(0, tjmax)
        tc, td = rng.randint(0, tjmax), rng.randint(0, tjmax)
        te, tf = rng.randint(0, tjmax), rng.randint(0, tjmax)
        if not ((ta + tb) % 2 == (tc + td) % 2 == (te + tf) % 2):
            continue
        tp = _pick_shared(rng, ta, td, tc, tb, tjmax)
        tq = _pick_shared(rng, tc, tf, te, td, tjmax)
        tr = _pick_shared(rng, te, ta, tb, tf, tjmax)
        if None in (tp, tq, tr):
            continue
        phase_sum = ta + tb + tc + td + te + tf + tp + tq + tr
        lhs = 0.0
        for tx in range(0, 2 * tjmax + 2):
            if (ta + tb + tx) % 2:
                continue
            w1 = wigner6j(*[Spin(t) for t in (ta, tb, tx, tc, td, tp)])
            if w1 == 0.0:
                continue
            w2 = wigner6j(*[Spin(t) for t in (tc, td, tx, te, tf, tq)])
            if w2 == 0.0:
                continue
            w3 = wigner6j(*[Spin(t) for t in (te, tf, tx, tb, ta, tr)])
            if w3 == 0.0:
                continue
            sign = -1.0 if ((phase_sum + tx) // 2) % 2 else 1.0
            lhs += sign * (tx + 1) * w1 * w2 * w3
        rhs = wigner6j(*[Spin(t) for t in (tp, tq, tr, te, ta, td)]) * wigner6j(
            *[Spin(t) for t in (tp, tq, tr, tf, tb, tc)]
        )
        assert abs(lhs - rhs) < 1e-10
        pentagon += 1

    elapsed = time.monotonic() - started
    assert elapsed < 30.0
    _passed(1, f"orthogonality and pentagon identities on 1000+1000 instances "
               f"within 1e-10 in {elapsed:.1f}s")


def test_criterion_2_two_level_steady_state():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(1000):
        k12, k21 = rng.uniform(1e-3, 1.0, 2)
        kappa = np.array(
            [[1.0 - k21, k12], [k21, 1.0 - k12]]
        )
        km = KappaMatrix(("1", "2"), kappa, "over_n")
        states = steady_states(kappa_generator(km))
        assert len(states) == 1
        expected = k12 / (k12 + k21)
        worst = max(worst, abs(states[0][0, 0].real - expected))
    assert worst < 1e-10
    _passed(2, f"1000 random two-level balances recovered, worst error {worst:.2e}")


def test_criterion_3_closed_form_two_level_structure():
    started = time.monotonic()
    # exact reproduction of the printed ratio
    rng = np.random.default_rng(5)
    for _ in range(500):
        l1, l2 = rng.uniform(0.3, 5.0, 2)
        alpha = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        p = AsymptoticParams(alpha=alpha)
        a = l1**4 * abs(np.exp(2j * l2) + alpha)
        b = l2**4 * abs(np.exp(2j * l1) + alpha)
        value = two_level_rho11(l1, l2, p)
        assert value == pytest.approx(a / (a + b), abs=2e-16, rel=4e-16)
        assert value + two_level_rho11(l2, l1, p) == 1.0

    # sweep over the (lambda1, lambda2) grid: swapped entries sum to one
    # exactly, and oscillatory switching appears only for alpha != 0
    grid = np.linspace(0.5, 6.0, 80)
    dense = np.linspace(0.5, 6.0, 600)

    def turning_points(curve):
        diffs = np.diff(curve)
        signs = np.sign(diffs[np.abs(diffs) > 1e-12])
        return int(np.sum(signs[1:] != signs[:-1]))

    for alpha, oscillatory in ((0.0, False), (1.0, True), (2.0, True)):
        p = AsymptoticParams(alpha=alpha)
        sheet = np.array(
            [[two_level_rho11(l1, l2, p) for l2 in grid] for l1 in grid]
        )
        assert np.all(sheet + sheet.T == 1.0)
        slice_turns = turning_points(
            np.array([two_level_rho11(l1, 3.0, p) for l1 in dense])
        )
        if oscillatory:
            assert slice_turns >= 2
        else:
            assert slice_turns == 0
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    _passed(3, f"printed two-level formula exact, swap-symmetry exact, "
               f"oscillation present only for alpha != 0 ({elapsed:.1f}s)")


def test_criterion_4_epsilon_squared_scaling():
    from test_lindblad import _three_level_benchmark

    started = time.monotonic()
    eps_values = [10.0**e for e in (-1.0, -1.5, -2.0, -2.5, -3.0)]
    errors = [_three_level_benchmark(eps) for eps in eps_values]
    slope = float(np.polyfit(np.log(eps_values), np.log(errors), 1)[0])
    elapsed = time.monotonic() - started
    assert 1.7 <= slope <= 2.3
    assert elapsed < 120.0
    _passed(4, f"reduced-model error slope {slope:.3f} in [1.7, 2.3] "
               f"({elapsed:.1f}s)")


def _all_scenario_trajectories():
    for name in (
        "cascade_pr3d.json",
        "disconnected_eq20.json",
        "two_level_asymptotic.json",
        "explicit_kappa_identity.json",
    ):
        cfg = ScenarioConfig.from_file(SCENARIOS / name)
        kappa, _W = build_kappa(cfg)
        evo = cfg["evolution"]
        from spinfoam_oqs.scenario import _initial_state

        rho0 = _initial_state(evo["initial"], list(kappa.basis))
        traj = evolve_effective(
            kappa,
            EvolutionConfig(g=float(evo["g"]), steps=int(evo["steps"])),
            rho0,
        )
        yield name, cfg, kappa, traj


def test_criterion_5_cptp_invariants_every_scenario():
    for name, _cfg, _kappa, traj in _all_scenario_trajectories():
        for k, rho in enumerate(traj.states):
            assert abs(np.trace(rho).real - 1.0) < 1e-10, (name, k)
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-12, (name, k)
            assert np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -1e-10, (
                name, k,
            )
    _passed(5, "trace, Hermiticity and positivity hold at every step of "
               "every shipped scenario")


@pytest.fixture(scope="module")
def cascade():
    cfg = ScenarioConfig.from_file(SCENARIOS / "cascade_pr3d.json")
    kappa, W = build_kappa(cfg)
    from spinfoam_oqs.scenario import _initial_state

    rho0 = _initial_state(cfg["evolution"]["initial"], list(kappa.basis))
    traj = evolve_effective(
        kappa,
        EvolutionConfig(
            g=float(cfg["evolution"]["g"]), steps=int(cfg["evolution"]["steps"])
        ),
        rho0,
    )
    spec = EnergySpectrum((Spin(0), Spin(2), Spin(4)))
    return cfg, kappa, traj, spec


def test_criterion_6_cascade_phenomenology(cascade):
    started = time.monotonic()
    cfg, kappa, traj, _spec = cascade
    assert cfg["jmax"] == "2"
    assert kappa.dim <= 8

    # per-transition timescales from the damping matrix: the net drain of
    # each emptying state, widely separated and ordered down the ladder
    drains = 1.0 - np.diag(kappa.entries)
    ratios = drains[1:] / drains[:-1]
    assert np.all(ratios >= 10.0), ratios

    pops = traj.populations()
    # monotone cascade: the dominant label only ever moves to smaller area
    dominant = np.argmax(pops, axis=1)
    assert np.all(np.diff(dominant.astype(int)) <= 0)
    assert dominant[0] == kappa.dim - 1 and dominant[-1] == 0
    # no more than 3 states above 1% at any step
    assert int(np.max(np.sum(pops > 0.01, axis=1))) <= 3
    # trajectory-level timescale separation of the two handoffs
    k_top = int(np.argmax(pops[:, -1] < 0.5))
    mid_peak = int(np.argmax(pops[:, 1]))
    after = pops[mid_peak:, 1]
    k_mid = mid_peak + int(np.argmax(after < 0.5 * after[0]))
    assert k_mid / max(k_top, 1) >= 10.0

    elapsed = time.monotonic() - started
    assert elapsed < 600.0
    _passed(6, f"monotone cascade with drain ratios {np.round(ratios, 1)} "
               f"and at most 3 live states ({elapsed:.1f}s)")


def test_criterion_7_energy_accounting():
    covered = 0
    for name, _cfg, kappa, traj in _all_scenario_trajectories():
        spec = _spectrum_for(kappa.basis)
        if spec is None:
            continue
        release = energy_release(traj, spec)
        total = sum(release.values) * traj.g
        energies = energy_expectations(traj, spec)
        assert abs(total - (energies[0] - energies[-1])) < 1e-8, name
        covered += 1
    assert covered == 4  # every shipped scenario carries a spin-labeled basis
    _passed(7, "release series telescopes to the total energy drop within "
               "1e-8 on every scenario")


def _spectrum_for(basis):
    from spinfoam_oqs.recoupling import as_spin

    try:
        spins = tuple(as_spin(b) for b in basis)
    except (ValueError, TypeError):
        return None
    if len(set(spins)) != len(spins):
        return None
    return EnergySpectrum(spins)


def test_criterion_8_spectral_temperature(cascade):
    # Gibbs recovery at 1e-10 on two-level thermal states
    spec2 = EnergySpectrum((Spin(1), Spin(3)))
    rng = np.random.default_rng(12)
    for _ in range(200):
        beta0 = rng.uniform(-3.0, 3.0)
        beta, _temp = spectral_temperature(gibbs_state(spec2, beta0), spec2)
        assert abs(beta - beta0) < 1e-10

    # sign change along the cascade
    _cfg, _kappa, traj, spec = cascade
    series = temperature_series(traj, spec)
    betas = np.array(series.values)
    assert betas[0] < 0.0
    assert betas[-1] > 0.0
    flips = np.where((betas[:-1] < 0) & (betas[1:] >= 0))[0]
    assert flips.size >= 1
    _passed(8, f"Gibbs recovery at 1e-10; cascade temperature flips sign at "
               f"step {series.steps[int(flips[0]) + 1]}")


def test_criterion_9_thermal_time_diagnostics(cascade):
    _cfg, _kappa, traj, _spec = cascade
    active_steps = 0
    for k in range(traj.steps):
        flow, _comm = thermal_flow_check(traj.states[k + 1], s=1.3)
        assert flow <= 1e-10
        if np.linalg.norm(traj.states[k + 1] - traj.states[k]) > 1e-4:
            active_steps += 1
    assert active_steps >= 100
    _passed(9, f"modular-flow residual <= 1e-10 at every point while "
               f"{active_steps} steps moved by more than 1e-4")


def test_criterion_10_dicke_reference(cascade):
    started = time.monotonic()
    cfg = DickeConfig(n_qubits=2, kappa_over_gamma=40.0, t_max=100.0, n_times=500)
    eff = dicke_cascade(cfg)
    full = cavity_cascade(cfg, n_photon_levels=3)
    deviation = float(np.max(np.abs(eff.sz - full.sz)))
    assert deviation <= 0.05 * cfg.n_qubits

    _cfg, _kappa, traj, spec = cascade
    release = energy_release(traj, spec)
    xg, yg = rescale_by_release_time(
        np.array(release.steps, dtype=float) * traj.g, np.array(release.values)
    )
    xd, yd = rescale_by_release_time(*eff.release())
    distance = compare_curves((xg, yg), (xd, yd))
    assert distance == pytest.approx(DICKE_REGRESSION_BASELINE, abs=1e-6)
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    _passed(10, f"bad-cavity elimination within {deviation / cfg.n_qubits:.2%} "
                f"sup-norm; release-shape distance {distance:.6f} matches the "
                f"stored baseline ({elapsed:.1f}s)")


def test_criterion_11_fit_pipeline():
    started = time.monotonic()
    basis = admissible_triple_basis(10, seed=0)
    model = standard_model(basis)

    # realizable optimum
    rng = np.random.default_rng(3)
    true_params = rng.uniform(-1.0, 1.0, model.n_params)
    from spinfoam_oqs.amplitudes import label_str

    realizable = TransitionMatrix(
        tuple(label_str(b) for b in basis), model.matrix(true_params)
    )
    res = fit_bath(FitProblem(realizable, model, seed=7))
    assert res.cost <= 1e-6

    # foam targets over growing chains
    minima = []
    for vertices in (2, 3, 4):
        target = chain_target(vertices, basis)
        problem = FitProblem(target, model, seed=11)
        fit = fit_bath(problem)
        hist = sample_cost_distribution(problem, 10000)
        assert fit.cost < hist.mean
        assert 0.0 <= hist.minimum <= hist.maximum <= 2.0
        assert len(hist.bin_left) == 20
        assert hist.bin_left[1] - hist.bin_left[0] == pytest.approx(0.1)
        minima.append(fit.cost)
    assert minima[0] >= minima[1] >= minima[2]
    elapsed = time.monotonic() - started
    assert elapsed < 1200.0
    _passed(11, f"realizable fit C={res.cost:.2e}; foam minima "
                f"{[round(m, 4) for m in minima]} non-increasing and below "
                f"the sampled means ({elapsed:.1f}s)")
