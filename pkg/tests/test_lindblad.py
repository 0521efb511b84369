import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdyn import matcore
from qdyn.errors import DimensionError, IntegrationMismatchError
from qdyn.lindblad import (LindbladGenerator, amplitude_damping, cptp_certificate, dephasing,
                           liouvillian, propagate, propagator, purity)
from qdyn.maps import unvec, vec
from qdyn.sampling import ginibre, random_density, random_hermitian

from conftest import PLUS, SZ

EXCITED = np.diag([0.0, 1.0]).astype(complex)
PLUS_DM = np.outer(PLUS, PLUS.conj())


def random_generator(d, rng, n_jumps=2, scale=3.0):
    H = random_hermitian(d, rng, norm=scale * rng.random())
    jumps = []
    for _ in range(n_jumps):
        L = ginibre(d, d, rng)
        jumps.append(scale * rng.random() * L / np.linalg.norm(L, 2))
    return LindbladGenerator(H, tuple(jumps))


class TestLiouvillian:
    def test_zero(self):
        G = LindbladGenerator(np.zeros((2, 2)))
        np.testing.assert_array_equal(liouvillian(G).superop, 0)

    def test_rotation(self):
        G = LindbladGenerator(SZ / 2)
        expected = -1j * (SZ / 2 @ PLUS_DM - PLUS_DM @ SZ / 2)
        # by hand: -i[sz/2, |+><+|] = [[0, -i/2], [i/2, 0]]
        np.testing.assert_allclose(expected, [[0, -0.5j], [0.5j, 0]])
        np.testing.assert_allclose(liouvillian(G)(PLUS_DM), expected, atol=1e-15)

    def test_damping_on_excited(self):
        gamma = 0.7
        out = liouvillian(amplitude_damping(gamma))(EXCITED)
        np.testing.assert_allclose(out, gamma * np.diag([1, -1]), atol=1e-15)

    def test_matches_direct_rhs(self, rng):
        for d in (2, 3, 4):
            G = random_generator(d, rng)
            rho = random_density(d, rng)
            np.testing.assert_allclose(liouvillian(G)(rho), G.rhs(rho), atol=1e-12, rtol=0)
            assert abs(np.trace(liouvillian(G)(rho))) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            LindbladGenerator(np.eye(2), (np.eye(3),))

    def test_file_round_trip(self, rng):
        G = random_generator(3, rng)
        H = LindbladGenerator.from_dict(G.to_dict())
        np.testing.assert_array_equal(liouvillian(H).superop, liouvillian(G).superop)


class TestPropagate:
    def test_t_zero(self, rng):
        rho = random_density(2, rng)
        np.testing.assert_array_equal(propagate(amplitude_damping(1.0), rho, 0.0), rho)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.5])
    def test_damping_population(self, t):
        gamma = 0.8
        rho = propagate(amplitude_damping(gamma), EXCITED, t)
        assert rho[1, 1].real == pytest.approx(np.exp(-gamma * t), abs=1e-7)

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.5])
    def test_dephasing_coherence(self, t):
        gamma = 0.4
        rho = propagate(dephasing(gamma), PLUS_DM, t)
        assert rho[0, 1].real == pytest.approx(0.5 * np.exp(-2 * gamma * t), abs=1e-7)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            propagate(amplitude_damping(1.0), EXCITED, -0.1)

    def test_coarse_rk4_is_an_error(self):
        with pytest.raises(IntegrationMismatchError):
            propagate(amplitude_damping(5.0), EXCITED, 1.0, dt=0.5)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(2, 4), st.floats(0.0, 5.0), st.integers(0, 2**32 - 1))
    def test_density_invariants(self, d, t, seed):
        rng = np.random.default_rng(seed)
        G = random_generator(d, rng)
        rho = propagate(G, random_density(d, rng), t)
        assert abs(np.trace(rho) - 1) < 1e-9
        assert matcore.is_hermitian(rho)
        assert np.linalg.eigvalsh(rho)[0] >= -1e-8

    def test_semigroup(self, rng):
        for d in (2, 3):
            G = random_generator(d, rng)
            rho = random_density(d, rng)
            s, t = 0.7, 1.3
            two_step = propagate(G, propagate(G, rho, s), t)
            np.testing.assert_allclose(two_step, propagate(G, rho, s + t), atol=1e-8)

    def test_unitary_limit_keeps_purity(self, rng):
        G = LindbladGenerator(random_hermitian(3, rng, norm=2.0))
        rho = random_density(3, rng)
        for t in np.linspace(0, 5, 6):
            assert purity(propagate(G, rho, t)) == pytest.approx(purity(rho), abs=1e-9)

    def test_dephasing_purity_non_increasing(self):
        values = [purity(propagate(dephasing(0.5), PLUS_DM, t)) for t in np.linspace(0, 4, 21)]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


class TestCertificate:
    def test_t_zero_exact(self):
        (entry,) = cptp_certificate(amplitude_damping(1.0), [0.0])
        assert entry.passed and entry.trace_defect == 0

    def test_damping(self):
        entries = cptp_certificate(amplitude_damping(1.3, omega=1.0), [0.0, 0.5, 1.0, 5.0, 20.0])
        assert all(e.passed for e in entries)
        assert min(e.min_choi_eigenvalue for e in entries) >= -1e-9

    def test_negative_time(self):
        with pytest.raises(ValueError):
            cptp_certificate(amplitude_damping(1.0), [-1.0])

    def test_propagator_matches_propagate(self, rng):
        G = random_generator(3, rng)
        rho = random_density(3, rng)
        np.testing.assert_allclose(propagator(G, 0.9)(rho), propagate(G, rho, 0.9), atol=1e-12)


class TestPurity:
    def test_pure(self):
        assert purity(PLUS_DM) == pytest.approx(1)

    def test_maximally_mixed(self):
        assert purity(np.eye(4) / 4) == pytest.approx(0.25)

    def test_damped_half(self):
        gamma = 1.0
        rho = propagate(amplitude_damping(gamma), EXCITED, np.log(2) / gamma)
        np.testing.assert_allclose(rho, np.diag([0.5, 0.5]), atol=1e-12)
        assert purity(rho) == pytest.approx(0.5, abs=1e-12)
