import numpy as np
import pytest

from qdyn import matcore
from qdyn.errors import (DimensionError, InconsistentEnsembleError, InvalidStateError,
                         IsometryError, ZeroProbabilityError)
from qdyn.sampling import haar_state, haar_unitary, random_density
from qdyn.states import (CompositeState, Ensemble, bipartite, destructive_measurement,
                         eigen_ensemble, hjw_basis, match_ensembles, mix, outcome_probabilities,
                         project, purify, random_ensemble, schmidt, steer,
                         von_neumann_premeasurement)

from conftest import I2, MINUS, PHI_PLUS, PLUS, equator_triple

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PHI = bipartite(PHI_PLUS, 2, 2)
SKEW = bipartite([np.sqrt(0.9), 0, 0, np.sqrt(0.1)], 2, 2)


def random_bipartite(dA, dB, rng):
    return bipartite(haar_state(dA * dB, rng), dA, dB)


class TestMix:
    def test_singleton(self):
        np.testing.assert_array_equal(mix(Ensemble([1.0], [KET0])), np.diag([1, 0]))

    def test_orthogonal_equal(self):
        np.testing.assert_allclose(mix(Ensemble([0.5, 0.5], [KET0, KET1])), I2 / 2)

    def test_non_orthogonal(self):
        # 1/2 |0><0| + 1/2 |+><+| = 1/2 diag(1,0) + 1/4 [[1,1],[1,1]]
        out = mix(Ensemble([0.5, 0.5], [KET0, PLUS]))
        np.testing.assert_allclose(out, [[0.75, 0.25], [0.25, 0.25]], atol=1e-15)

    def test_bad_weights(self):
        with pytest.raises(InconsistentEnsembleError):
            Ensemble([0.5, 0.6], [KET0, KET1])

    def test_unnormalized_state(self):
        with pytest.raises(InvalidStateError):
            Ensemble([1.0], [[1, 1]])

    def test_dict_round_trip(self):
        E = Ensemble([0.25, 0.75], [KET0, PLUS * 1j])
        F = Ensemble.from_dict(E.to_dict())
        np.testing.assert_array_equal(F.states, E.states)
        np.testing.assert_array_equal(F.weights, E.weights)


class TestSchmidt:
    def test_product(self):
        w, _, _ = schmidt(bipartite(np.kron(KET0, KET1), 2, 2))
        np.testing.assert_allclose(w, [1.0])

    def test_bell(self):
        w, _, _ = schmidt(PHI)
        np.testing.assert_allclose(w, [0.5, 0.5])

    def test_skewed(self):
        w, left, right = schmidt(SKEW)
        np.testing.assert_allclose(w, [0.9, 0.1])
        np.testing.assert_allclose(np.abs(left), np.eye(2), atol=1e-15)

    def test_properties(self, rng):
        for dA, dB in [(2, 3), (3, 2), (4, 4), (2, 5)]:
            psi = random_bipartite(dA, dB, rng)
            w, left, right = schmidt(psi)
            np.testing.assert_allclose(left.conj() @ left.T, np.eye(w.size), atol=1e-12)
            np.testing.assert_allclose(right.conj() @ right.T, np.eye(w.size), atol=1e-12)
            recon = sum(np.sqrt(w[i]) * np.kron(left[i], right[i]) for i in range(w.size))
            assert np.linalg.norm(recon - psi.vector) < 1e-10
            lam = np.linalg.eigvalsh(psi.reduced(0))[::-1][: w.size]
            np.testing.assert_allclose(w, lam, atol=1e-10)


class TestPurify:
    def test_pure_gives_product(self):
        psi = purify(np.diag([0.0, 1.0]))
        assert psi.dims == (2, 1)
        np.testing.assert_allclose(np.abs(psi.vector), [0, 1], atol=1e-15)

    def test_maximally_mixed(self):
        psi = purify(I2 / 2)
        np.testing.assert_allclose(schmidt(psi).weights, [0.5, 0.5])

    def test_diag(self):
        psi = purify(np.diag([0.9, 0.1]))
        np.testing.assert_allclose(psi.vector, [np.sqrt(0.9), 0, 0, np.sqrt(0.1)], atol=1e-15)

    def test_random(self, rng):
        for d, r in [(3, 3), (4, 2), (2, 1)]:
            rho = random_density(d, rng, rank=r)
            psi = purify(rho)
            assert psi.dims == (d, r)
            np.testing.assert_allclose(psi.reduced(0), rho, atol=1e-12)


class TestSteer:
    def test_product_any_basis(self, rng):
        a = haar_state(3, rng)
        psi = bipartite(np.kron(a, haar_state(2, rng)), 3, 2)
        E = steer(psi, haar_unitary(2, rng).T)
        for _, s in E:
            assert abs(np.vdot(a, s)) == pytest.approx(1, abs=1e-12)

    def test_bell_computational(self):
        E = steer(PHI, np.eye(2))
        np.testing.assert_allclose(E.weights, [0.5, 0.5])
        np.testing.assert_allclose(np.abs(E.states), np.eye(2), atol=1e-15)
        assert E.labels == (0, 1)

    def test_schmidt_basis_gives_eigen_ensemble(self, rng):
        psi = random_bipartite(3, 3, rng)
        w, left, right = schmidt(psi)
        E = steer(psi, right)
        np.testing.assert_allclose(E.weights, w, atol=1e-12)
        np.testing.assert_allclose(np.abs(np.sum(E.states.conj() * left, axis=1)), 1, atol=1e-12)

    def test_drops_null_outcomes(self):
        psi = bipartite(np.kron(KET0, KET1), 2, 2)
        E = steer(psi, np.eye(2))
        assert E.labels == (1,)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(InvalidStateError):
            steer(PHI, [[1, 0], [1, 0]])

    def test_no_signalling(self, rng):
        for _ in range(20):
            dA, dB = rng.integers(2, 5, size=2)
            psi = random_bipartite(dA, dB, rng)
            E = steer(psi, haar_unitary(dB, rng).T)
            np.testing.assert_allclose(mix(E), psi.reduced(0), atol=1e-9)
            assert outcome_probabilities(psi, np.eye(dB)).sum() == pytest.approx(1, abs=1e-10)


class TestHJW:
    def test_eigen_ensemble_gives_schmidt_basis(self):
        E = eigen_ensemble(SKEW.reduced(0))
        basis, state = hjw_basis(SKEW, E)
        _, _, right = schmidt(SKEW)
        np.testing.assert_allclose(np.abs(basis.conj() @ right.T), np.eye(2), atol=1e-12)
        assert state.dims == (2, 2)

    def test_plus_minus(self):
        E = Ensemble([0.5, 0.5], [PLUS, MINUS])
        basis, state = hjw_basis(PHI, E)
        # Phi+ = (|++> + |-->)/sqrt 2, so the basis must be {|+>, |->} up to phases
        overlaps = np.abs(basis.conj() @ np.array([PLUS, MINUS]).T)
        np.testing.assert_allclose(np.sort(overlaps.max(axis=1)), [1, 1], atol=1e-12)
        m = match_ensembles(steer(state, basis), E)
        assert m.max_weight_error < 1e-12 and m.min_overlap > 1 - 1e-12

    def test_equator_triple_enlarges(self):
        E = Ensemble(np.full(3, 1 / 3), equator_triple())
        basis, state = hjw_basis(PHI, E)
        assert state.dims == (2, 4)
        assert basis.shape == (4, 4)
        probs = outcome_probabilities(state, basis)
        np.testing.assert_allclose(probs, [1 / 3, 1 / 3, 1 / 3, 0], atol=1e-12)
        steered = steer(state, basis)
        assert len(steered) == 3
        m = match_ensembles(steered, E)
        assert m.max_weight_error < 1e-12 and m.min_overlap > 1 - 1e-12

    def test_random_round_trip(self, rng):
        for _ in range(20):
            d = int(rng.integers(2, 5))
            rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
            psi = purify(rho)
            E = random_ensemble(rho, int(rng.integers(len(eigen_ensemble(rho)), 7)), rng)
            basis, state = hjw_basis(psi, E)
            m = match_ensembles(steer(state, basis), E)
            assert m.max_weight_error <= 1e-8
            assert m.min_overlap >= 1 - 1e-8

    def test_inconsistent(self):
        with pytest.raises(InconsistentEnsembleError):
            hjw_basis(SKEW, Ensemble([0.5, 0.5], [KET0, KET1]))

    def test_deterministic(self):
        E = Ensemble(np.full(3, 1 / 3), equator_triple())
        np.testing.assert_array_equal(hjw_basis(PHI, E).basis, hjw_basis(PHI, E).basis)


class TestMeasurement:
    def test_premeasurement_product(self):
        psi = bipartite(np.kron(KET1, KET0), 2, 2)
        out = von_neumann_premeasurement(psi, np.eye(2), 2)
        expected = np.kron(np.kron(KET1, KET0), KET0)
        np.testing.assert_allclose(out.vector, expected)

    def test_premeasurement_bell(self):
        out = von_neumann_premeasurement(PHI, np.eye(2), 2)
        expected = np.zeros(8)
        expected[0b000] = expected[0b111] = 1 / np.sqrt(2)
        np.testing.assert_allclose(out.vector, expected, atol=1e-15)
        assert out.dims == (2, 2, 2)
        assert np.linalg.norm(out.vector) == pytest.approx(1)

    def test_premeasurement_apparatus_too_small(self):
        with pytest.raises(DimensionError):
            von_neumann_premeasurement(PHI, np.eye(2), 1)

    def test_destructive(self):
        out = destructive_measurement(PHI, np.eye(2), 3)
        expected = np.zeros(6)
        expected[0] = expected[4] = 1 / np.sqrt(2)
        np.testing.assert_allclose(out.vector, expected, atol=1e-15)

    def test_destructive_keeps_reduced_state(self, rng):
        psi = random_bipartite(3, 2, rng)
        out = destructive_measurement(psi, haar_unitary(2, rng).T, 2)
        np.testing.assert_allclose(out.reduced(0), psi.reduced(0), atol=1e-12)

    def test_destructive_product(self):
        psi = bipartite(np.kron(PLUS, KET1), 2, 2)
        out = destructive_measurement(psi, np.eye(2), 2)
        assert schmidt(out).weights.size == 1

    def test_project_identity(self, rng):
        psi = random_bipartite(2, 3, rng)
        p, out = project(psi, np.eye(3), 1)
        assert p == pytest.approx(1)
        np.testing.assert_allclose(out.vector, psi.vector)

    def test_project_pointer(self):
        # |Psi~> = sum_k sqrt(w_k)|psi_k>|phi_k>|A_k>; P_{A_k} selects branch k with probability w_k
        tilde = von_neumann_premeasurement(SKEW, np.eye(2), 3)
        for k, w in enumerate([0.9, 0.1]):
            p, out = project(tilde, np.diag(np.eye(3)[k]), 2)
            assert p == pytest.approx(w, abs=1e-12)
            branch = np.kron(np.kron(np.eye(2)[k], np.eye(2)[k]), np.eye(3)[k])
            np.testing.assert_allclose(out.vector, branch, atol=1e-12)

    def test_project_zero_probability(self):
        tilde = von_neumann_premeasurement(SKEW, np.eye(2), 3)
        with pytest.raises(ZeroProbabilityError):
            project(tilde, np.diag([0, 0, 1]), 2)

    def test_project_complete_family_sums_to_one(self, rng):
        psi = CompositeState(haar_state(12, rng), (2, 3, 2))
        U = haar_unitary(3, rng)
        total = 0.0
        for k in range(3):
            try:
                total += project(psi, np.outer(U[:, k], U[:, k].conj()), 1)[0]
            except ZeroProbabilityError:
                pass
        assert total == pytest.approx(1, abs=1e-10)

    def test_project_rejects_non_projector(self):
        with pytest.raises(InvalidStateError):
            project(PHI, [[1, 1], [0, 0]], 0)


class TestRandomEnsemble:
    def test_pure(self, rng):
        v = haar_state(3, rng)
        E = random_ensemble(np.outer(v, v.conj()), 4, rng)
        np.testing.assert_allclose(np.abs(E.states.conj() @ v), 1, atol=1e-12)

    def test_maximally_mixed_qubit(self):
        E = random_ensemble(I2 / 2, 2, seed=11)
        assert abs(np.vdot(E.states[0], E.states[1])) < 1e-12
        np.testing.assert_allclose(E.weights, [0.5, 0.5], atol=1e-12)

    def test_round_trip_and_determinism(self, rng):
        rho = random_density(3, rng)
        E = random_ensemble(rho, 5, seed=3)
        assert matcore.trace_distance(mix(E), rho) < 1e-9
        np.testing.assert_array_equal(E.states, random_ensemble(rho, 5, seed=3).states)

    def test_too_small(self):
        with pytest.raises(ValueError):
            random_ensemble(I2 / 2, 1, seed=0)
