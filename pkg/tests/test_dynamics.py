import numpy as np
import pytest

import oracles
from mlsr import dynamics as dyn
from mlsr.dynamics import (
    DensityTensor,
    InvariantViolation,
    LevelScheme,
    TimeSeries,
    build_generator,
    coherence_spectrum,
    default_step,
    detect_peak,
    ground_sector_state,
    integrate,
    intensities,
    steady_state_time,
    symmetric_init,
)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


V_NONDEG = LevelScheme.v_nondegenerate(omega1=1.0, omega2=0.625, gamma1=1.0, gamma2=0.25)
FLA_EQUAL = LevelScheme.fla(
    omega0=10.0, omega_plus=12.0, omega_minus=8.0,
    gamma=[[1.0, 1.0], [1.0, 1.0]], gamma_plus=1.0, gamma_minus=1.0,
)


# Oracle channel tables: (rate, src, tgt, other_src, other_tgt) with level
# order (e2, e1, g) for V schemes and (e2, e1, g2, g1) for the four-level one.
def v_nondeg_channels(s):
    return [(s.gamma1, 1, 2, 1, 2), (s.gamma2, 0, 2, 0, 2)]


def v_deg_channels(s):
    jumps = {1: (1, 2), 2: (0, 2)}
    g = s.gamma
    return [(g[l - 1][m - 1], *jumps[l], *jumps[m]) for l in (1, 2) for m in (1, 2)]


def fla_channels(s):
    jumps = {1: (1, 3), 2: (0, 2)}
    g = s.gamma
    out = [(g[l - 1][m - 1], *jumps[l], *jumps[m]) for l in (1, 2) for m in (1, 2)]
    out += [(s.gamma_plus, 0, 3, 0, 3), (s.gamma_minus, 1, 2, 1, 2)]
    return out


class TestLevelScheme:
    def test_rejects_negative_rates(self):
        with pytest.raises(ValueError):
            LevelScheme.v_nondegenerate(omega1=1.0, omega2=0.5, gamma1=-1.0, gamma2=0.25)

    def test_rejects_asymmetric_cross_rates(self):
        with pytest.raises(ValueError):
            LevelScheme.v_degenerate(omega0=1.0, gamma=[[1.0, 0.5], [0.4, 1.0]])

    def test_rejects_cross_rate_above_geometric_mean(self):
        # |Gamma_12| <= sqrt(Gamma_11 Gamma_22) is required for positivity.
        with pytest.raises(ValueError):
            LevelScheme.v_degenerate(omega0=1.0, gamma=[[1.0, 1.2], [1.2, 1.0]])

    def test_rejects_asymmetric_fla_comb(self):
        with pytest.raises(ValueError):
            LevelScheme.fla(
                omega0=10.0, omega_plus=12.0, omega_minus=9.0,
                gamma=[[1.0, 1.0], [1.0, 1.0]], gamma_plus=1.0, gamma_minus=1.0,
            )

    def test_fla_delta_is_level_splitting(self):
        assert FLA_EQUAL.delta == pytest.approx(2.0)


class TestGeneratorAgainstProductSpace:
    """The symmetrized generator must match a dense product-space Lindblad."""

    @pytest.mark.parametrize("n_atoms", [1, 2, 3])
    def test_v_nondegenerate(self, n_atoms):
        gen = build_generator(V_NONDEG, n_atoms)
        rho = random_density(len(gen.basis), seed=10 + n_atoms)
        ref = oracles.collective_product_rhs(
            V_NONDEG.level_energies, v_nondeg_channels(V_NONDEG), n_atoms, gen.basis, rho
        )
        got = np.asarray(gen(DensityTensor(gen.basis, rho)))
        assert np.abs(got - ref).max() < 1e-13

    @pytest.mark.parametrize("n_atoms", [1, 2, 3])
    def test_v_degenerate_with_cross_rates(self, n_atoms):
        s = LevelScheme.v_degenerate(omega0=1.0, gamma=[[1.0, 0.8], [0.8, 0.64]])
        gen = build_generator(s, n_atoms)
        rho = random_density(len(gen.basis), seed=20 + n_atoms)
        ref = oracles.collective_product_rhs(
            s.level_energies, v_deg_channels(s), n_atoms, gen.basis, rho
        )
        got = np.asarray(gen(DensityTensor(gen.basis, rho)))
        assert np.abs(got - ref).max() < 1e-13

    @pytest.mark.parametrize("n_atoms", [1, 2])
    def test_fla_all_channels(self, n_atoms):
        s = LevelScheme.fla(
            omega0=10.0, omega_plus=12.0, omega_minus=8.0,
            gamma=[[1.0, 0.7], [0.7, 0.9]], gamma_plus=0.6, gamma_minus=1.3,
        )
        gen = build_generator(s, n_atoms)
        rho = random_density(len(gen.basis), seed=30 + n_atoms)
        ref = oracles.collective_product_rhs(
            s.level_energies, fla_channels(s), n_atoms, gen.basis, rho
        )
        got = np.asarray(gen(DensityTensor(gen.basis, rho)))
        assert np.abs(got - ref).max() < 1e-13

    def test_generator_annihilates_ground_projector(self):
        gen = build_generator(FLA_EQUAL, 2)
        b = gen.basis
        rho = np.zeros((len(b), len(b)), dtype=np.complex128)
        i = b.index_of((0, 0, 2, 0))
        rho[i, i] = 1.0
        assert np.abs(np.asarray(gen(DensityTensor(b, rho)))).max() == 0.0

    def test_rhs_is_linear_in_rates(self):
        # Doubling both decay rates doubles the dissipator; phases are
        # rate-independent, so test with phases switched off.
        s1 = LevelScheme.v_nondegenerate(omega1=1.0, omega2=0.625, gamma1=0.3, gamma2=0.7)
        s2 = LevelScheme.v_nondegenerate(omega1=1.0, omega2=0.625, gamma1=0.6, gamma2=1.4)
        g1 = build_generator(s1, 2, include_phases=False)
        g2 = build_generator(s2, 2, include_phases=False)
        rho = random_density(len(g1.basis), seed=4)
        a = np.asarray(g1(DensityTensor(g1.basis, rho)))
        b = np.asarray(g2(DensityTensor(g2.basis, rho)))
        assert np.abs(2.0 * a - b).max() < 1e-13


class TestSymmetricInit:
    def test_binomial_squared_weights(self):
        alpha, beta = 0.6, 0.8
        rho = symmetric_init(V_NONDEG, 2, alpha, beta)
        # population of n atoms in e1 is C(2,n)^2 |alpha|^(2n) |beta|^(2(2-n)),
        # normalized; the binomial enters squared.
        raw = np.array([1 * 0.8**4, 4 * 0.6**2 * 0.8**2, 1 * 0.6**4])
        want = raw / raw.sum()
        got = [rho.element((2 - n, n, 0), (2 - n, n, 0)).real for n in range(3)]
        assert np.allclose(got, want, atol=1e-14)
        assert rho.trace() == pytest.approx(1.0)

    def test_rejects_unnormalized_pair(self):
        with pytest.raises(ValueError):
            symmetric_init(V_NONDEG, 2, 1.0, 1.0)


class TestIntegration:
    def test_single_atom_matches_dense_superoperator_exponential(self):
        # Assemble the dense superoperator column by column from the
        # textbook single-atom RHS, exponentiate it, and compare.
        s = V_NONDEG
        energies = s.level_energies
        channels = v_nondeg_channels(s)
        dim = 3
        basis_mats = []
        for i in range(dim):
            for j in range(dim):
                e = np.zeros((dim, dim), dtype=np.complex128)
                e[i, j] = 1.0
                basis_mats.append(e)
        sup = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
        for col, e in enumerate(basis_mats):
            sup[:, col] = oracles.single_atom_lindblad_rhs(energies, channels, e).reshape(-1)

        gen = build_generator(s, 1)
        rho0 = symmetric_init(s, 1, 0.6, 0.8)
        t_end = 2.0
        series = integrate(gen, rho0, t_end, sample_dt=t_end)
        from scipy.linalg import expm

        want = (expm(sup * t_end) @ np.asarray(rho0.data).reshape(-1)).reshape(dim, dim)
        got = np.asarray(series.values[-1].data)
        assert np.abs(got - want).max() < 1e-9

    def test_compiled_and_python_backends_agree(self):
        gen = build_generator(FLA_EQUAL, 2)
        rho0 = symmetric_init(FLA_EQUAL, 2, 0.6, 0.8)
        fast = integrate(gen, rho0, 1.0, sample_dt=0.5)
        slow = integrate(gen, rho0, 1.0, sample_dt=0.5, force_python_backend=True)
        for a, b in zip(fast.values, slow.values):
            assert np.abs(np.asarray(a.data) - np.asarray(b.data)).max() < 1e-12

    def test_kernel_matches_dense_rk4(self):
        from mlsr._backend import make_stepper

        rng = np.random.default_rng(11)
        import scipy.sparse as sp

        a = sp.random(30, 30, density=0.2, random_state=7, dtype=np.float64)
        a = (a + 1j * sp.random(30, 30, density=0.2, random_state=8)).tocsr()
        y0 = rng.normal(size=30) + 1j * rng.normal(size=30)
        step = make_stepper(a)
        got = step(y0.copy(), 0.01, 50)
        want = oracles.rk4_dense_reference(a, y0, 0.01, 50)
        assert np.abs(got - want).max() < 1e-12

    def test_samples_validate_invariants(self):
        gen = build_generator(V_NONDEG, 3)
        rho0 = symmetric_init(V_NONDEG, 3, 1 / np.sqrt(2), 1 / np.sqrt(2))
        series = integrate(gen, rho0, 2.0, sample_dt=0.25)
        for rho in series.values:
            report = rho.validate()
            assert report["trace_error"] < 1e-9
            assert report["hermiticity_error"] < 1e-10
            assert report["min_eigenvalue"] > -1e-8

    def test_validation_rejects_trace_loss(self):
        b = dyn.build_generator(V_NONDEG, 1).basis
        rho = DensityTensor(b, np.eye(3, dtype=np.complex128) * 0.5)
        with pytest.raises(InvariantViolation):
            rho.validate()

    def test_final_time_is_hit_exactly(self):
        gen = build_generator(V_NONDEG, 1)
        rho0 = symmetric_init(V_NONDEG, 1, 0.6, 0.8)
        series = integrate(gen, rho0, 0.7303, sample_dt=0.7303)
        assert series.times[-1] == pytest.approx(0.7303, abs=0)


class TestObservables:
    def test_single_atom_intensity_is_exponential(self):
        gen = build_generator(V_NONDEG, 1)
        rho0 = symmetric_init(V_NONDEG, 1, 1.0, 0.0)  # all weight in e1
        series = integrate(gen, rho0, 1.0, sample_dt=0.25)
        inten = intensities(series, V_NONDEG)
        got = np.asarray(inten.column("I_w1").values, dtype=float)
        assert np.allclose(got, np.exp(-series.times), atol=1e-9)
        assert np.abs(np.asarray(inten.column("I_w2").values, dtype=float)).max() < 1e-12

    def test_initial_intensities_weigh_modes_by_omega_gamma(self):
        gen = build_generator(V_NONDEG, 1)
        rho0 = symmetric_init(V_NONDEG, 1, 1 / np.sqrt(2), 1 / np.sqrt(2))
        series = integrate(gen, rho0, 0.01, sample_dt=0.01)
        inten = intensities(series, V_NONDEG)
        i1 = float(np.asarray(inten.column("I_w1").values)[0])
        i2 = float(np.asarray(inten.column("I_w2").values)[0])
        assert i1 == pytest.approx(0.5)
        assert i2 == pytest.approx(0.5 * (2 * 0.625 * 0.25) / (2 * 1.0 * 1.0))

    def test_degenerate_total_includes_interference(self):
        s = LevelScheme.v_degenerate(omega0=1.0, gamma=[[1.0, 1.0], [1.0, 1.0]])
        gen = build_generator(s, 2)
        rho0 = symmetric_init(s, 2, 1 / np.sqrt(2), 1 / np.sqrt(2))
        series = integrate(gen, rho0, 0.5, sample_dt=0.1)
        inten = intensities(series, s)
        cols = {lab: np.asarray(inten.column(lab).values, dtype=float) for lab in inten.labels}
        total = cols["I_1"] + cols["I_2"] + cols["C_12"] + cols["C_21"]
        assert np.allclose(cols["I_total"], total, atol=1e-12)

    def test_detect_peak_refines_quadratic(self):
        t = np.linspace(0.0, 2.0, 21)
        series = TimeSeries(times=t, values=3.0 - (t - 0.73) ** 2)
        t_peak, v_peak = detect_peak(series)
        assert t_peak == pytest.approx(0.73, abs=1e-12)
        assert v_peak == pytest.approx(3.0, abs=1e-12)

    def test_detect_peak_warns_on_boundary(self):
        t = np.linspace(0.0, 1.0, 11)
        series = TimeSeries(times=t, values=np.exp(-t))
        with pytest.warns(RuntimeWarning):
            t_peak, v_peak = detect_peak(series)
        assert t_peak == 0.0
        assert v_peak == pytest.approx(1.0)

    def test_steady_state_time_finds_first_settled_sample(self):
        gen = build_generator(V_NONDEG, 1)
        rho0 = symmetric_init(V_NONDEG, 1, 1.0, 0.0)
        series = integrate(gen, rho0, 20.0, sample_dt=0.05)
        t0 = steady_state_time(series, threshold=1e-4)
        # excited population e^{-t} crosses 1e-4 at t = ln(1e4) ~ 9.21
        assert t0 == pytest.approx(np.log(1e4), abs=0.1)

    def test_steady_state_time_none_when_never_settled(self):
        gen = build_generator(V_NONDEG, 1)
        rho0 = symmetric_init(V_NONDEG, 1, 1.0, 0.0)
        series = integrate(gen, rho0, 1.0, sample_dt=0.25)
        assert steady_state_time(series, threshold=1e-4) is None

    def test_coherence_spectrum_recovers_synthetic_tone(self):
        gen = build_generator(FLA_EQUAL, 1)
        b = gen.basis
        # Window length a multiple of the tone period, so the tone sits
        # exactly on an FFT bin and the amplitude comes back unattenuated.
        n = 4000
        t = np.arange(n) * (10.0 * np.pi / n)
        vals = []
        for ti in t:
            rho = np.zeros((len(b), len(b)), dtype=np.complex128)
            rho[b.index_of((0, 0, 1, 0)), b.index_of((0, 0, 0, 1))] = 0.25 * np.exp(-1j * 2.0 * ti)
            vals.append(DensityTensor(b, rho))
        series = TimeSeries(times=t, values=vals)
        (omega, amp), = coherence_spectrum(series, [((0, 0, 1, 0), (0, 0, 0, 1))])
        assert omega == pytest.approx(2.0, abs=1e-9)
        assert amp == pytest.approx(0.25, rel=1e-9)

    def test_ground_sector_extraction(self):
        gen = build_generator(FLA_EQUAL, 2)
        rho0 = symmetric_init(FLA_EQUAL, 2, 0.6, 0.8)
        series = integrate(gen, rho0, 30.0, sample_dt=30.0)
        ground = ground_sector_state(series.values[-1])
        assert ground.basis.levels == 2
        assert ground.trace() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            ground_sector_state(rho0)  # fully excited: no ground weight


class TestStepControl:
    def test_default_step_shrinks_with_rates_and_size(self):
        slow = default_step(V_NONDEG, 1)
        fast = default_step(
            LevelScheme.v_nondegenerate(omega1=1.0, omega2=0.625, gamma1=50.0, gamma2=0.25),
            4,
        )
        assert fast < slow <= 1e-3
