"""Shared-state construction, steering ensembles, and basis solving."""

import numpy as np
import pytest

from pqclone import qcore
from pqclone.entangle import (
    AliceBasis,
    alice_measure,
    build_shared_state,
    induced_ensemble,
    target_to_basis,
)
from pqclone.errors import BasisError, DimensionError, RankError
from pqclone.qcore import (
    HermitianOperator,
    Ket,
    SeededRng,
    inner_product,
    partial_trace,
    random_ket,
    trace_distance,
)

from oracles import three_sigma_binomial

KET0 = Ket.basis_state(2, 0)
KET1 = Ket.basis_state(2, 1)


def random_basis(n: int, rng: SeededRng) -> AliceBasis:
    return AliceBasis.from_unitary(qcore.haar_unitary(n, rng))


def orthonormal_span(states) -> np.ndarray:
    """Gram-Schmidt orthonormal basis of the span, as matrix columns."""
    vectors = []
    for s in states:
        v = s.amplitudes.astype(complex)
        for u in vectors:
            v = v - np.vdot(u, v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            vectors.append(v / norm)
    return np.column_stack(vectors)


class TestAliceBasis:
    def test_computational_label(self):
        basis = AliceBasis.computational(3)
        assert basis.label == "A1"
        assert basis.dim == 3

    def test_a1_must_be_computational(self):
        with pytest.raises(BasisError):
            AliceBasis((Ket.normalized([1, 1]), Ket.normalized([1, -1])), "A1")

    def test_fourier_is_orthonormal(self):
        basis = AliceBasis.fourier(4)
        mat = np.column_stack([v.amplitudes for v in basis.vectors])
        np.testing.assert_allclose(mat.conj().T @ mat, np.eye(4), atol=1e-12)

    def test_non_orthonormal_rejected(self):
        with pytest.raises(BasisError):
            AliceBasis((KET0, Ket.normalized([1, 1])), "A2")


class TestBuildSharedState:
    def test_bell_state(self):
        shared = build_shared_state([KET0, KET1])
        np.testing.assert_allclose(
            shared.joint.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-12
        )

    def test_duplicate_states_give_product(self):
        shared = build_shared_state([KET0, KET0])
        plus = Ket.normalized([1, 1])
        np.testing.assert_allclose(
            shared.joint.amplitudes,
            np.kron(plus.amplitudes, KET0.amplitudes),
            atol=1e-12,
        )
        assert shared.joint.norm() == pytest.approx(1.0, abs=1e-10)

    def test_reconstruction_from_definition(self):
        rng = SeededRng(200)
        states = [random_ket(3, rng) for _ in range(3)]
        shared = build_shared_state(states)
        rebuilt = np.zeros(9, dtype=complex)
        for n, s in enumerate(states):
            label = np.zeros(3, dtype=complex)
            label[n] = 1.0
            rebuilt += np.kron(label, s.amplitudes)
        rebuilt /= np.sqrt(3)
        assert np.linalg.norm(shared.joint.amplitudes - rebuilt) <= 1e-12

    def test_wrong_dimension_rejected(self):
        with pytest.raises(DimensionError):
            build_shared_state([KET0, Ket.basis_state(3, 0)])


class TestInducedEnsemble:
    def test_a1_reproduces_bob_states_exactly(self):
        rng = SeededRng(201)
        states = [random_ket(3, rng) for _ in range(3)]
        shared = build_shared_state(states)
        ens = induced_ensemble(shared, AliceBasis.computational(3))
        for n, (state, prob) in enumerate(ens.members):
            assert state is states[n]
            assert prob == 1.0 / 3

    def test_fourier_on_bell_gives_plus_minus(self):
        shared = build_shared_state([KET0, KET1])
        ens = induced_ensemble(shared, AliceBasis.fourier(2))
        (s0, p0), (s1, p1) = ens.members
        assert p0 == pytest.approx(0.5, abs=1e-12)
        assert p1 == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(s0.amplitudes, np.array([1, 1]) / np.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(s1.amplitudes, np.array([1, -1]) / np.sqrt(2), atol=1e-12)

    def test_members_lie_in_span(self):
        rng = SeededRng(202)
        # two independent states plus one combination: rank 2 span in dim 3
        states = [random_ket(3, rng) for _ in range(3)]
        shared = build_shared_state(states)
        ens = induced_ensemble(shared, random_basis(3, rng))
        span = orthonormal_span(states)
        for state, prob in ens.members:
            v = state.amplitudes
            residual = np.linalg.norm(v - span @ (span.conj().T @ v))
            assert residual <= 1e-10

    def test_marginal_matches_partial_trace(self):
        # the no-signalling identity at the density-matrix level
        rng = SeededRng(203)
        for n in (2, 3):
            states = [random_ket(n, rng) for _ in range(n)]
            shared = build_shared_state(states)
            reduced = partial_trace(
                HermitianOperator.projector(shared.joint), (n, n), "B"
            )
            for basis in (
                AliceBasis.computational(n),
                AliceBasis.fourier(n),
                random_basis(n, rng),
            ):
                avg = induced_ensemble(shared, basis).average_density()
                assert trace_distance(avg, reduced) <= 1e-12


class TestAliceMeasure:
    def test_a1_frequencies_on_bell(self):
        shared = build_shared_state([KET0, KET1])
        rng = SeededRng(204)
        trials = 100_000
        zeros = sum(
            alice_measure(shared, AliceBasis.computational(2), rng)[0] == 0
            for _ in range(trials)
        )
        assert abs(zeros / trials - 0.5) < three_sigma_binomial(0.5, trials)

    def test_a1_outcome_prepares_matching_state(self):
        rng = SeededRng(205)
        states = [random_ket(3, rng) for _ in range(3)]
        shared = build_shared_state(states)
        basis = AliceBasis.computational(3)
        for _ in range(100):
            outcome, post = alice_measure(shared, basis, rng)
            assert abs(abs(inner_product(post, states[outcome])) - 1.0) < 1e-10

    def test_a2_frequencies_match_induced_probabilities(self):
        rng = SeededRng(206)
        states = [random_ket(3, rng) for _ in range(3)]
        shared = build_shared_state(states)
        basis = random_basis(3, rng)
        expected = [p for _, p in induced_ensemble(shared, basis).members]
        trials = 100_000
        counts = np.zeros(3)
        for _ in range(trials):
            counts[alice_measure(shared, basis, rng)[0]] += 1
        for m in range(3):
            assert abs(counts[m] / trials - expected[m]) < three_sigma_binomial(
                expected[m], trials
            )


class TestTargetToBasis:
    def test_target_equal_to_first_state(self):
        rng = SeededRng(207)
        states = [random_ket(3, rng) for _ in range(3)]
        # force independence for the solve
        while qcore.rank_with_tolerance(states) != 3:
            states = [random_ket(3, rng) for _ in range(3)]
        basis = target_to_basis(states[0], states)
        first = basis.vectors[0].amplitudes
        assert abs(abs(first[0]) - 1.0) < 1e-9
        np.testing.assert_allclose(np.abs(first[1:]), 0.0, atol=1e-9)

    def test_plus_target_on_computational_pair(self):
        basis = target_to_basis(Ket.normalized([1, 1]), [KET0, KET1])
        overlap = abs(np.vdot(basis.vectors[0].amplitudes, np.array([1, 1]) / np.sqrt(2)))
        assert overlap == pytest.approx(1.0, abs=1e-12)

    def test_round_trip_fidelity(self):
        rng = SeededRng(208)
        for _ in range(10):
            states = [random_ket(3, rng) for _ in range(3)]
            if qcore.rank_with_tolerance(states) != 3:
                continue
            target = random_ket(3, rng)
            basis = target_to_basis(target, states)
            shared = build_shared_state(states)
            induced = induced_ensemble(shared, basis).members[0][0]
            assert abs(inner_product(induced, target)) >= 1.0 - 1e-9

    def test_dependent_states_rejected(self):
        with pytest.raises(RankError):
            target_to_basis(KET0, [KET0, KET0])

    def test_second_set_is_linearly_dependent_on_first(self):
        # every alternate-basis preparation stays inside the original span
        rng = SeededRng(209)
        states = [random_ket(4, rng) for _ in range(4)]
        shared = build_shared_state(states)
        span = orthonormal_span(states)
        ens = induced_ensemble(shared, AliceBasis.fourier(4))
        for state, _ in ens.members:
            v = state.amplitudes
            assert np.linalg.norm(v - span @ (span.conj().T @ v)) <= 1e-10
