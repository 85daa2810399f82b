import numpy as np
import pytest
from math import comb, factorial, sqrt

import oracles
from mlsr import photonic as ph
from mlsr.dynamics import LevelScheme
from mlsr.photonic import (
    ModeIndependence,
    PhotonicMixture,
    PhotonicPureState,
    fla_final_mixture,
    g_recursion_value,
    mixture_density_matrix,
    mode_independence_check,
    path_populations,
    superposition_amplitudes,
    v_final_state,
)

FLA = LevelScheme.fla(
    omega0=10.0, omega_plus=12.0, omega_minus=8.0,
    gamma=[[1.0, 1.0], [1.0, 1.0]], gamma_plus=1.0, gamma_minus=1.0,
)


def random_pair(rng):
    z = rng.normal(size=2) + 1j * rng.normal(size=2)
    z /= np.linalg.norm(z)
    return complex(z[0]), complex(z[1])


class TestAmplitudes:
    def test_normalization_uses_squared_binomials(self):
        a = superposition_amplitudes(3, 0.6, 0.8)
        raw = [comb(3, n) * 0.6**n * 0.8 ** (3 - n) for n in range(4)]
        norm = sqrt(sum(abs(x) ** 2 for x in raw))
        assert np.allclose(a, np.array(raw) / norm)
        assert np.vdot(a, a).real == pytest.approx(1.0)

    def test_rejects_unnormalized_excitation(self):
        with pytest.raises(ValueError):
            superposition_amplitudes(2, 1.0, 1.0)


class TestImprint:
    def test_path_populations_equal_initial_weights(self):
        rng = np.random.default_rng(42)
        for n_atoms in range(1, 7):
            for _ in range(5):
                alpha, beta = random_pair(rng)
                want = np.abs(superposition_amplitudes(n_atoms, alpha, beta)) ** 2
                got = path_populations(n_atoms, alpha, beta)
                assert np.abs(got - want).max() < 1e-10

    def test_populations_do_not_depend_on_channel_weights(self):
        base = path_populations(4, 0.6, 0.8)
        for w1, w2 in [(0.1, 100.0), (7.3, 0.4), (100.0, 100.0)]:
            swept = path_populations(4, 0.6, 0.8, w1=w1, w2=w2)
            assert np.abs(swept - base).max() < 1e-10

    def test_ordering_sum_matches_closed_form(self):
        for n_atoms in range(0, 9):
            for n in range(n_atoms + 1):
                for w1, w2 in [(1.0, 1.0), (0.7, 1.9)]:
                    got = g_recursion_value(n_atoms, n, w1, w2)
                    want = 1.0 / (
                        factorial(n) * factorial(n_atoms - n) * w1**n * w2 ** (n_atoms - n)
                    )
                    assert abs(got - want) <= 1e-12 * want


class TestVFinalState:
    def test_amplitudes_are_imprinted_on_photon_numbers(self):
        state = v_final_state(3, 0.6, 0.8)
        a = superposition_amplitudes(3, 0.6, 0.8)
        for n in range(4):
            i = state.basis.index_of((n, 3 - n))
            assert state.amplitudes[i] == pytest.approx(a[n])

    def test_factors_all_parallel(self):
        state = v_final_state(4, 0.6, 0.8j)
        assert len(state.factors) == 4
        assert all(f == state.factors[0] for f in state.factors)

    def test_norm_is_enforced(self):
        basis = v_final_state(2, 0.6, 0.8).basis
        with pytest.raises(ValueError):
            PhotonicPureState(basis=basis, amplitudes=np.array([1.0, 1.0, 0.0]))


class TestFlaMixture:
    def test_single_atom_components(self):
        # One atom, alpha on e1: the two equally likely components are
        # alpha|1 w-> + beta|1 w0>   (atom ends in g2)
        # alpha|1 w0> + beta|1 w+>   (atom ends in g1)
        mix = fla_final_mixture(FLA, 1, 0.6, 0.8)
        assert len(mix.components) == 2
        (p0, c0), (p1, c1) = mix.components
        assert p0 == pytest.approx(0.5, abs=1e-12)
        assert p1 == pytest.approx(0.5, abs=1e-12)
        b = c0.basis
        assert c0.amplitudes[b.index_of((1, 0, 0))] == pytest.approx(0.6)
        assert c0.amplitudes[b.index_of((0, 1, 0))] == pytest.approx(0.8)
        assert c1.amplitudes[b.index_of((0, 1, 0))] == pytest.approx(0.6)
        assert c1.amplitudes[b.index_of((0, 0, 1))] == pytest.approx(0.8)

    def test_two_atom_components(self):
        # Normalized component amplitudes are built from the initial
        # superposition weights a_n; the middle component splits its
        # two-omega0 paths as a1/sqrt(2) on |101> and |020>.
        alpha, beta = 0.6, 0.8
        a0, a1, a2 = superposition_amplitudes(2, alpha, beta)
        mix = fla_final_mixture(FLA, 2, alpha, beta)
        assert [p for p, _ in mix.components] == pytest.approx([1 / 3] * 3, abs=1e-12)
        comps = [c for _, c in mix.components]
        b = comps[0].basis

        def amp(c, occ):
            return c.amplitudes[b.index_of(occ)]

        # component with both atoms in g2: photons only at w- and w0
        assert amp(comps[0], (2, 0, 0)) == pytest.approx(a2)
        assert amp(comps[0], (1, 1, 0)) == pytest.approx(a1)
        assert amp(comps[0], (0, 2, 0)) == pytest.approx(a0)
        # mixed component
        assert amp(comps[1], (1, 1, 0)) == pytest.approx(a2)
        assert amp(comps[1], (1, 0, 1)) == pytest.approx(a1 / sqrt(2))
        assert amp(comps[1], (0, 2, 0)) == pytest.approx(a1 / sqrt(2))
        assert amp(comps[1], (0, 1, 1)) == pytest.approx(a0)
        # component with both atoms in g1: photons only at w0 and w+
        assert amp(comps[2], (0, 2, 0)) == pytest.approx(a2)
        assert amp(comps[2], (0, 1, 1)) == pytest.approx(a1)
        assert amp(comps[2], (0, 0, 2)) == pytest.approx(a0)

    def test_random_excitations_reproduce_component_structure(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            alpha, beta = random_pair(rng)
            a = superposition_amplitudes(2, alpha, beta)
            mix = fla_final_mixture(FLA, 2, alpha, beta)
            comps = [c for _, c in mix.components]
            b = comps[0].basis
            assert abs(comps[0].amplitudes[b.index_of((1, 1, 0))] - a[1]) < 1e-12
            assert abs(comps[1].amplitudes[b.index_of((1, 0, 1))] - a[1] / sqrt(2)) < 1e-12
            assert abs(comps[2].amplitudes[b.index_of((0, 0, 2))] - a[0]) < 1e-12

    @pytest.mark.parametrize("n_atoms", [1, 2, 3])
    def test_matches_time_domain_cascade_oracle(self, n_atoms):
        alpha, beta = sqrt(0.35), -1j * sqrt(0.65)
        a = superposition_amplitudes(n_atoms, alpha, beta)
        want = oracles.tagged_cascade_populations(n_atoms, a)
        mix = fla_final_mixture(FLA, n_atoms, alpha, beta)
        got: dict = {}
        for p, c in mix.components:
            for k, occ in enumerate(c.basis.states):
                got[occ] = got.get(occ, 0.0) + p * abs(c.amplitudes[k]) ** 2
        for occ in set(want) | set(got):
            assert abs(want.get(occ, 0.0) - got.get(occ, 0.0)) < 1e-6

    def test_rejects_unequal_rates_with_pointer_to_integration(self):
        uneven = LevelScheme.fla(
            omega0=10.0, omega_plus=12.0, omega_minus=8.0,
            gamma=[[1.0, 1.0], [1.0, 1.0]], gamma_plus=0.5, gamma_minus=1.0,
        )
        with pytest.raises(ValueError, match="integrating the master equation"):
            fla_final_mixture(uneven, 2, 0.6, 0.8)

    def test_density_matrix_is_a_state(self):
        rho = mixture_density_matrix(fla_final_mixture(FLA, 2, 0.6, 0.8))
        assert rho.trace() == pytest.approx(1.0, abs=1e-12)
        report = rho.validate()
        assert report["min_eigenvalue"] > -1e-12


class TestModeIndependence:
    def test_v_states_always_admit_separating_basis(self):
        rng = np.random.default_rng(6)
        for n_atoms in range(1, 7):
            alpha, beta = random_pair(rng)
            report = mode_independence_check(v_final_state(n_atoms, alpha, beta))
            assert report.classification is ModeIndependence.SEPARABLE_BASIS_EXISTS
            assert report.witness is None

    @pytest.mark.parametrize("n_atoms", [1, 2, 3])
    def test_fla_mixtures_with_both_amplitudes_are_mode_independent(self, n_atoms):
        report = mode_independence_check(fla_final_mixture(FLA, n_atoms, 0.6, 0.8))
        assert report.classification is ModeIndependence.MODE_INDEPENDENT_ENTANGLED
        # witness overlap |beta * conj(alpha)| between the two dressed lines
        assert report.witness[2] == pytest.approx(0.6 * 0.8, abs=1e-12)

    @pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.0, 0.0)])
    def test_single_excited_level_limits_are_separable(self, alpha, beta):
        report = mode_independence_check(fla_final_mixture(FLA, 2, alpha, beta))
        assert report.classification is ModeIndependence.SEPARABLE_BASIS_EXISTS

    def test_fallback_reconstructs_direction_without_metadata(self):
        ref = v_final_state(3, 0.6, 0.8)
        bare = PhotonicPureState(basis=ref.basis, amplitudes=ref.amplitudes)
        report = mode_independence_check(bare)
        assert report.classification is ModeIndependence.SEPARABLE_BASIS_EXISTS

    def test_fallback_rejects_non_product_state(self):
        basis = v_final_state(2, 0.6, 0.8).basis
        # |2,0> + |0,2| superposition is not a symmetric power of one mode
        amps = np.zeros(len(basis), dtype=np.complex128)
        amps[basis.index_of((2, 0))] = 1 / sqrt(2)
        amps[basis.index_of((0, 2))] = 1 / sqrt(2)
        bare = PhotonicPureState(basis=basis, amplitudes=amps)
        with pytest.raises(ValueError):
            mode_independence_check(bare)


class TestMixtureValidation:
    def test_probabilities_must_sum_to_one(self):
        mix = fla_final_mixture(FLA, 1, 0.6, 0.8)
        (p0, c0), (p1, c1) = mix.components
        with pytest.raises(ValueError):
            PhotonicMixture(components=((0.7, c0), (0.7, c1)))
