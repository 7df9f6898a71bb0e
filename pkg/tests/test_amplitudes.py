"""Amplitude backend tests: foam contraction, analytic vertex, kappa."""

import math

import numpy as np
import pytest

from spinfoam_oqs.amplitudes import (
    AsymptoticParams,
    BoundaryState,
    DegenerateSteadyStateError,
    FactorizedProvider,
    Foam2Complex,
    FoamProvider,
    KappaMatrix,
    MissingBoundaryError,
    ProviderError,
    TransitionMatrix,
    asymptotic_vertex,
    bridged_pair_foam,
    cascade_pair_foam,
    chain_foam,
    disconnected_pair_foam,
    interference_weight,
    kappa_from_W,
    label_str,
    pr_transition,
    pr_vertex,
    single_vertex_foam,
    transition_matrix,
    two_level_rho11,
)
from spinfoam_oqs.recoupling import Spin, as_spin, wigner6j


# --- vertex amplitude -------------------------------------------------------

def test_pr_vertex_all_ones():
    # total spin 6 is even, so the sign is +1
    assert pr_vertex(1, 1, 1, 1, 1, 1) == pytest.approx(wigner6j(1, 1, 1, 1, 1, 1))


def test_pr_vertex_triangle_violation():
    assert pr_vertex(1, 1, 3, 1, 1, 1) == 0


def test_pr_vertex_all_zeros():
    assert pr_vertex(0, 0, 0, 0, 0, 0) == 1.0


def test_pr_vertex_half_integer_total_is_complex():
    value = pr_vertex("1/2", 1, "1/2", 1, "1/2", 1)
    assert abs(value.real) < 1e-15
    assert abs(value.imag) > 0


# --- foam transitions --------------------------------------------------------

def test_single_vertex_delta_pinned_equals_vertex():
    foam = single_vertex_foam()
    pins = BoundaryState.delta({i: 1 for i in range(6)})
    assert pr_transition(foam, pins, j_max=2) == pytest.approx(
        pr_vertex(1, 1, 1, 1, 1, 1)
    )


def test_zero_weight_boundary_term_contributes_nothing():
    foam = single_vertex_foam()
    # a term landing on a triangle-violating assignment vanishes silently
    state = BoundaryState.superposition(
        [
            (1.0, {i: 1 for i in range(6)}),
            (1.0, {0: "1/2", 1: "1/2", 2: "1/2", 3: "1/2", 4: "1/2", 5: "1/2"}),
        ]
    )
    assert pr_transition(foam, state, j_max=2) == pytest.approx(
        pr_vertex(1, 1, 1, 1, 1, 1)
    )


def test_disconnected_factorization():
    pair = disconnected_pair_foam()
    one = single_vertex_foam()
    a = {i: 1 for i in range(6)}
    b = {0: "1/2", 1: "1/2", 2: 1, 3: "1/2", 4: "1/2", 5: 1}
    state = BoundaryState.delta(a).merged(
        BoundaryState.delta({k + 6: v for k, v in b.items()})
    )
    w_pair = pr_transition(pair, state, j_max=2)
    w_a = pr_transition(one, BoundaryState.delta(a), j_max=2)
    w_b = pr_transition(one, BoundaryState.delta(b), j_max=2)
    assert w_pair == pytest.approx(w_a * w_b, abs=1e-14)
    assert abs(w_pair) > 0


def test_chain_contraction_matches_brute_force():
    foam = chain_foam(2, internal_range=(Spin(0), Spin(4)))
    pins = BoundaryState.delta({i: 1 for i in range(6)})
    fast = pr_transition(foam, pins, j_max=2)
    brute = 0j
    phases = (1, 1j, -1, -1j)
    for t1 in range(5):
        for t2 in range(5):
            for t3 in range(5):
                weight = 1.0 + 0j
                for t in (t1, t2, t3):
                    weight *= phases[t % 4] * (t + 1)
                brute += (
                    weight
                    * pr_vertex(1, 1, 1, Spin(t1), Spin(t2), Spin(t3))
                    * pr_vertex(Spin(t1), Spin(t2), Spin(t3), 1, 1, 1)
                )
    assert fast == pytest.approx(brute, abs=1e-12)


def test_missing_boundary_spins_error_lists_faces():
    foam = single_vertex_foam()
    partial = BoundaryState.delta({0: 1, 1: 1, 2: 1})
    with pytest.raises(MissingBoundaryError) as err:
        pr_transition(foam, partial, j_max=2)
    assert "[3, 4, 5]" in str(err.value)


def test_truncation_self_consistency():
    # single vertex, one pinned link, Gaussian bath decaying before cutoff
    foam = single_vertex_foam()
    state = BoundaryState.delta({0: 1}).merged(
        BoundaryState.gaussian({l: 0.5 for l in range(1, 6)})
    )
    w_lo = pr_transition(foam, state, j_max="9/2")
    w_hi = pr_transition(foam, state, j_max=5)
    assert abs(w_hi - w_lo) <= 1e-5 * abs(w_lo)


def test_parallel_reduction_agrees_within_reassociation():
    foam = chain_foam(2, internal_range=(Spin(0), Spin(4)))
    pins = BoundaryState.delta({i: 1 for i in range(6)})
    serial = pr_transition(foam, pins, j_max=2, parallel=False)
    threaded = pr_transition(foam, pins, j_max=2, parallel=True)
    assert threaded == pytest.approx(serial, rel=1e-12)


def test_foam_validation():
    with pytest.raises(ValueError):
        Foam2Complex(((0, 1, 2, 3, 4),), {f: f for f in range(5)}, {})
    with pytest.raises(ValueError):
        Foam2Complex(
            ((0, 1, 2, 3, 4, 5),),
            {f: f for f in range(5)},
            {},
        )
    # boundary face shared by two vertices is rejected
    with pytest.raises(ValueError):
        Foam2Complex(
            ((0, 1, 2, 3, 4, 5), (0, 6, 7, 8, 9, 10)),
            {f: f for f in range(11)},
            {},
        )


# --- transition matrices ----------------------------------------------------

def test_factorized_all_ones():
    W = transition_matrix(FactorizedProvider([1.0, 1.0]), ["1", "2"])
    assert np.allclose(W.entries, np.ones((2, 2)))


def test_factorized_conjugation_structure():
    w = [1.0 + 0.5j, -0.25 + 1.0j, 0.7]
    W = transition_matrix(FactorizedProvider(w), ["a", "b", "c"])
    for n in range(3):
        for m in range(3):
            assert W.entries[n, m] == pytest.approx(np.conj(w[n]) * w[m])


def test_foam_provider_hermitian_modulus_for_symmetric_bath():
    foam = disconnected_pair_foam()
    bath = BoundaryState.gaussian(
        {l: 0.8 for l in list(range(1, 6)) + list(range(7, 12))}
    )
    provider = FoamProvider(foam, in_links=(0,), out_links=(6,), bath=bath, j_max=2)
    W = transition_matrix(provider, ["1/2", "1", "3/2", "2"])
    assert np.allclose(np.abs(W.entries), np.abs(W.entries.T), atol=1e-12)


def test_provider_error_carries_context():
    class Broken:
        def amplitude(self, n, m, labels):
            raise RuntimeError("boom")

    with pytest.raises(ProviderError) as err:
        transition_matrix(Broken(), ["1/2", "1"])
    assert "n=1/2" in str(err.value)


def test_parallel_fill_matches_serial():
    foam = cascade_pair_foam(internal_range=(Spin(0), Spin(4)))
    bath = BoundaryState.gaussian(
        {7: 0.03, 8: 0.03, 1: 0.22, 2: 0.22, 6: 0.22, 4: 0.22, 5: 0.22, 9: 0.22}
    )
    provider = FoamProvider(foam, in_links=(0,), out_links=(3,), bath=bath, j_max=2)
    serial = transition_matrix(provider, ["0", "1", "2"])
    threaded = transition_matrix(provider, ["0", "1", "2"], max_workers=4)
    assert np.array_equal(serial.entries, threaded.entries)


# --- kappa -------------------------------------------------------------------

def test_kappa_all_ones():
    W = TransitionMatrix(("1", "2"), np.ones((2, 2), dtype=complex))
    k = kappa_from_W(W)
    assert np.allclose(k.entries, 0.5)


def test_kappa_diagonal_W_gives_identity():
    W = TransitionMatrix(("1", "2"), np.diag([0.3 + 0j, 2.0]))
    k = kappa_from_W(W)
    assert np.allclose(k.entries, np.eye(2))


def test_kappa_factorized_is_column_independent():
    w = np.array([0.8, 0.3 + 0.2j])
    W = transition_matrix(FactorizedProvider(w), ["1", "2"])
    k = kappa_from_W(W, "over_n")
    expected = np.abs(w) ** 2 / np.sum(np.abs(w) ** 2)
    for m in range(2):
        assert np.allclose(k.entries[:, m], expected)


def test_kappa_columns_sum_to_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        entries = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        k = kappa_from_W(TransitionMatrix(("a", "b", "c", "d"), entries))
        assert np.max(np.abs(k.entries.sum(axis=0) - 1.0)) < 1e-12


def test_kappa_over_m_rows_sum_to_one():
    rng = np.random.default_rng(1)
    entries = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    k = kappa_from_W(TransitionMatrix(("a", "b", "c"), entries), "over_m")
    assert np.max(np.abs(k.entries.sum(axis=1) - 1.0)) < 1e-12


def test_kappa_zero_column_names_state():
    entries = np.array([[1.0, 0.0], [1.0, 0.0]], dtype=complex)
    with pytest.raises(ValueError) as err:
        kappa_from_W(TransitionMatrix(("lo", "hi"), entries))
    assert "hi" in str(err.value)


def test_kappa_matrix_rejects_bad_normalization():
    with pytest.raises(ValueError):
        KappaMatrix(("a", "b"), np.array([[0.5, 0.5], [0.4, 0.5]]), "over_n")


# --- analytic vertex ----------------------------------------------------------

PARAMS = AsymptoticParams(
    gamma_immirzi=1.0, regge_action=1.0, alpha=1.0, n_plus_abs=2.0
)


def test_asymptotic_vertex_alpha_zero_modulus():
    p = AsymptoticParams(alpha=0.0, n_plus_abs=3.0)
    for lam in (0.5, 1.0, 4.0):
        assert abs(asymptotic_vertex(lam, p)) == pytest.approx(3.0 / lam**12)


def test_asymptotic_vertex_interference():
    # lambda gamma S = pi/2 makes the two branches anti-align for alpha=1
    p = AsymptoticParams(
        gamma_immirzi=1.0, regge_action=math.pi / 2, alpha=1.0, n_plus_abs=1.0
    )
    assert abs(asymptotic_vertex(1.0, p)) == pytest.approx(0.0, abs=1e-12)
    assert interference_weight(1.0, p) == pytest.approx(abs(np.exp(1j * math.pi) + 1.0))


def test_asymptotic_vertex_phase_invariance():
    base = AsymptoticParams(alpha=0.3 + 0.1j, n_plus_abs=1.5)
    shifted = AsymptoticParams(
        alpha=0.3 + 0.1j, n_plus_abs=1.5, phase_offset=math.pi, chi_plus_m=1.5
    )
    for lam in (0.7, 2.3):
        assert abs(asymptotic_vertex(lam, base)) == pytest.approx(
            abs(asymptotic_vertex(lam, shifted))
        )


def test_asymptotic_vertex_domain_error():
    with pytest.raises(ValueError):
        asymptotic_vertex(0.0, PARAMS)
    with pytest.raises(ValueError):
        asymptotic_vertex(-1.0, PARAMS)


def test_two_level_equal_scales_is_half():
    assert two_level_rho11(1.3, 1.3, PARAMS) == 0.5


def test_two_level_alpha_zero_closed_form():
    p = AsymptoticParams(alpha=0.0)
    assert two_level_rho11(1.0, 2.0, p) == pytest.approx(1.0 / 17.0, abs=1e-15)


def test_two_level_extreme_ratio():
    p = AsymptoticParams(alpha=0.0)
    assert two_level_rho11(1e-3, 1.0, p) < 1e-10


def test_two_level_complement_exact():
    rng = np.random.default_rng(7)
    for _ in range(200):
        l1, l2 = rng.uniform(0.2, 5.0, 2)
        for alpha in (0.0, 1.0, 0.5 + 0.5j):
            p = AsymptoticParams(alpha=alpha)
            assert two_level_rho11(l1, l2, p) + two_level_rho11(l2, l1, p) == 1.0


def test_two_level_degenerate_error():
    # a vanishing oscillation with alpha = -1 makes f exactly zero
    p = AsymptoticParams(gamma_immirzi=1.0, regge_action=0.0, alpha=-1.0)
    with pytest.raises(DegenerateSteadyStateError):
        two_level_rho11(1.0, 2.0, p)


def test_label_str():
    assert label_str("3/2") == "3/2"
    assert label_str(("1/2", 1, "3/2")) == "(1/2,1,3/2)"
