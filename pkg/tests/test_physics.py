import numpy as np
import pytest

from rhlab.errors import ConfigError, DomainError, ParameterError
from rhlab.grid import AngularQuadrature, FrequencyGrid
from rhlab.physics import (CoefficientModel, EquationOfState, PhysicalConstants,
                           ViscosityParams, compton_model, constant_model,
                           pressure, validate_emission_regularity,
                           validate_kernel_integrability,
                           validate_sigma_regularity, zero_model)


class TestViscosityParams:
    def test_valid(self):
        v = ViscosityParams(mu=2.0, lam=-1.0)
        assert v.mu == 2.0

    def test_mu_positive(self):
        with pytest.raises(ParameterError):
            ViscosityParams(mu=0.0, lam=1.0)

    def test_ellipticity_constraint(self):
        # mu=3, lam=-3 gives lam + 2mu/3 = -1 < 0
        with pytest.raises(ParameterError, match=r"lambda \+ \(2/3\) mu"):
            ViscosityParams(mu=3.0, lam=-3.0)

    def test_boundary_case(self):
        ViscosityParams(mu=3.0, lam=-2.0)  # lam + 2mu/3 = 0 is admissible


class TestPhysicalConstants:
    def test_positive_c(self):
        with pytest.raises(ParameterError):
            PhysicalConstants(c=0.0)


class TestEquationOfState:
    def test_polytropic_zero_density(self):
        eos = EquationOfState.polytropic(1.0, 2.0)
        assert np.all(eos(np.zeros(8)) == 0.0)

    def test_polytropic_direct(self):
        eos = EquationOfState.polytropic(1.0, 2.0)
        assert np.all(eos(np.full(8, 3.0)) == 9.0)

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            EquationOfState.polytropic(-1.0, 2.0)
        with pytest.raises(ParameterError):
            EquationOfState.polytropic(1.0, 1.0)

    def test_table_matches_power_law(self):
        rho_s = np.linspace(0.0, 4.0, 50)
        eos = EquationOfState.barotropic_table(rho_s, rho_s ** 1.4)
        assert float(eos(np.array(2.0))) == pytest.approx(2.0 ** 1.4, abs=1e-3)

    def test_table_validation(self):
        with pytest.raises(ParameterError):
            EquationOfState.barotropic_table([0.0, 1.0, 1.0, 2.0], [0, 1, 2, 3])
        with pytest.raises(ParameterError):
            EquationOfState.barotropic_table([0.0, 1.0, 2.0, 3.0], [0, 2, 1, 3])

    def test_pressure_negative_density(self, grid128, eos):
        rho = np.ones(128)
        rho[17] = -0.5
        with pytest.raises(DomainError, match=r"cell \(17,\)"):
            pressure(eos, rho, grid128)

    @pytest.mark.parametrize("eos_obj", [
        EquationOfState.polytropic(0.7, 1.4),
        EquationOfState.barotropic_table(np.linspace(0, 3, 40),
                                         np.linspace(0, 3, 40) ** 1.4),
    ])
    def test_pressure_monotone(self, eos_obj):
        rho = np.linspace(0.0, 3.0, 200)
        p = eos_obj(rho)
        assert np.all(np.diff(p) >= -1e-12)


class TestComptonModel:
    def test_peak_value(self):
        # at v = v0 the exponent vanishes: sigma = D1 theta^(-1/2)
        m = compton_model(D1=2.0, D2=3.0, v0=1.5, theta=4.0)
        rho = np.ones(4)
        val = m.sigma(1.5, None, 0.0, None, rho)
        assert np.all(val == 2.0 * 4.0 ** -0.5)

    def test_gaussian_tail(self):
        m = compton_model(D1=1.0, D2=500.0, v0=1.0, theta=1.0)
        val = m.sigma(2.0, None, 0.0, None, np.ones(2))
        assert np.all(val < 1e-100)

    def test_direct_evaluation(self):
        m = compton_model(D1=1.0, D2=1.0, v0=1.0, theta=1.0)
        val = m.sigma(2.0, None, 0.0, None, np.ones(1))
        assert float(val[0]) == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_nonpositive_parameters(self):
        with pytest.raises(ParameterError):
            compton_model(D1=0.0, D2=1.0, v0=1.0, theta=1.0)
        with pytest.raises(ParameterError):
            compton_model(D1=1.0, D2=1.0, v0=-1.0, theta=1.0)

    def test_maximized_at_line_frequency(self):
        m = compton_model(D1=1.3, D2=2.0, v0=2.0, theta=0.5)
        rho = np.ones(1)
        vals = [float(m.sigma(v, None, 0.0, None, rho)[0])
                for v in np.linspace(0.1, 5.0, 101)]
        peak = float(m.sigma(2.0, None, 0.0, None, rho)[0])
        assert peak >= max(vals)

    def test_reverse_kernel_swaps_arguments(self):
        def profile(v_from, v_to, mu):
            return np.asarray(mu * 0.0 + v_from + 10.0 * v_to)

        m = compton_model(1.0, 1.0, 1.0, 1.0, sigma_s_profile=profile)
        mu = np.array(0.5)
        assert float(m.sigma_s_bar(2.0, 3.0, mu)) == pytest.approx(32.0)
        assert float(m.sigma_s_bar_prime(2.0, 3.0, mu)) == pytest.approx(23.0)


class TestCoefficientNonnegativity:
    @pytest.mark.parametrize("model", [
        zero_model(),
        constant_model(0.5, 0.2, 0.1),
        compton_model(1.0, 2.0, 1.0, 1.0,
                      sigma_s_profile=lambda vf, vt, mu: 0.1 * (1.0 + np.asarray(mu) ** 2)),
    ])
    def test_random_phase_space_samples(self, model, rng):
        n = 10_000
        v = rng.uniform(0.1, 5.0, n)
        mu = rng.uniform(-1.0, 1.0, n)
        rho = rng.uniform(0.0, 3.0, n)
        t = rng.uniform(0.0, 1.0, n)
        for i in range(0, n, 500):
            sl = slice(i, i + 500)
            assert np.all(model.sigma(v[i], None, t[i], None, rho[sl]) >= 0.0)
            assert np.all(np.asarray(model.sigma_s_bar(v[i], v[(i + 7) % n], mu[sl])) >= 0.0)
            assert np.all(np.asarray(model.sigma_s_bar_prime(v[i], v[(i + 7) % n], mu[sl])) >= 0.0)
            assert np.all(np.asarray(model.emission(v[i], None, t[i], None)) >= 0.0)


class TestKernelIntegrability:
    def test_zero_kernels_pass(self, bands4, slab8):
        rep = validate_kernel_integrability(zero_model(), bands4, slab8)
        assert rep.passed
        assert all(e.value == 0.0 for e in rep.entries)

    def test_single_term_hand_value(self):
        # one band, one ordinate pair of unit weights, kernel = 1, lambda1 = 1:
        # the integral collapses to (v/v')^2 at the band centers, which is 1
        ang = AngularQuadrature(np.array([[-1.0], [1.0]]), np.array([1.0, 1.0]),
                                2.0, slab=True)
        freq = FrequencyGrid.from_edges([1.0, 1.5])
        model = constant_model(0.0, 1.0, 0.0)
        rep = validate_kernel_integrability(model, freq, ang, lambda1=1.0)
        entry = rep.entry("in_kernel_weighted_square")
        # two ordinates of weight 1 and one band of weight 0.5:
        # inner = sum w' * 1 = 2 * 0.5 = 1, outer = sum w * inner = 1
        assert entry.value == pytest.approx(1.0, rel=1e-12)

    def test_nan_kernel_fails_with_location(self, bands4, slab8):
        def bad_kernel(v_from, v_to, mu):
            out = np.ones_like(np.asarray(mu, dtype=float))
            if v_from == v_to:
                out = out * np.nan
            return out

        model = CoefficientModel(
            sigma=lambda v, o, t, x, rho: np.zeros_like(rho),
            sigma_s_bar=bad_kernel, sigma_s_bar_prime=bad_kernel,
            emission=lambda v, o, t, x: 0.0)
        rep = validate_kernel_integrability(model, bands4, slab8)
        assert not rep.passed
        failing = [e for e in rep.entries if not e.passed]
        assert failing and failing[0].location is not None

    def test_unbounded_kernel_fails(self, slab8):
        # sigma_s_bar growing in v: iterated integral blows past the cap once
        # the band range is wide
        freq = FrequencyGrid.from_edges(np.linspace(1.0, 100.0, 12))
        model = constant_model(0.0, 0.0, 0.0)
        model.sigma_s_bar = lambda vf, vt, mu: np.full_like(np.asarray(mu, float),
                                                            vt ** 2)
        model.sigma_s_bar_prime = lambda vf, vt, mu: np.full_like(np.asarray(mu, float),
                                                                  vt ** 2)
        rep = validate_kernel_integrability(model, freq, slab8, cap=1e4)
        assert not rep.passed
        assert not rep.entry("in_kernel_weighted_square").passed

    def test_exponent_validation(self, bands4, slab8):
        with pytest.raises(ParameterError):
            validate_kernel_integrability(zero_model(), bands4, slab8, lambda1=0.7)
        with pytest.raises(ParameterError):
            validate_kernel_integrability(zero_model(), bands4, slab8, lambda2=3.0)


class TestSigmaRegularity:
    def test_zero_sigma_passes(self, grids128, settings):
        model = zero_model()
        rep = validate_sigma_regularity(model, np.ones(128), np.zeros(128),
                                        settings, grids128)
        assert rep.passed
        assert rep.entry("sigma_mixed_sup").value == 0.0

    def test_constant_sigma_measure(self, grids128, settings):
        # sigma = 1 independent of rho: gradient entries vanish and the L2
        # part of the mixed norm equals the square root of the phase measure
        model = constant_model(sigma0=1.0)
        rep = validate_sigma_regularity(model, np.ones(128), np.zeros(128),
                                        settings, grids128)
        measure = grids128.freq.band_weights.sum() * grids128.ang.weights.sum()
        expected = np.sqrt(measure) + 1.0  # L2 + Linf over phase space
        assert rep.entry("sigma_mixed_sup").value == pytest.approx(expected, rel=1e-12)
        assert rep.entry("grad_sigma_L2").value == 0.0
        assert rep.entry("sigma_t_mixed").value == 0.0

    def test_pass_depends_on_majorant(self, grids128, settings):
        loose = constant_model(sigma0=1.0)
        loose.majorant = lambda s: 100.0 * (1.0 + s)
        assert validate_sigma_regularity(loose, np.ones(128), np.zeros(128),
                                         settings, grids128).passed
        tight = constant_model(sigma0=1.0)
        tight.majorant = lambda s: 1.0
        rep = validate_sigma_regularity(tight, np.ones(128), np.zeros(128),
                                        settings, grids128)
        assert not rep.passed

    def test_compton_with_bump_scale_found(self, grids128, settings):
        # the validator reports the scale C making M(s) = C (1 + s) work
        grid = grids128.spatial
        x = grid.axis_coords(0)
        rho = 1.0 + 0.5 * np.exp(-((x - 0.5) / 0.1) ** 2)
        rho_t = 0.1 * np.sin(2 * np.pi * x)
        probe = compton_model(1.0, 1.0, 1.0, 1.0)
        probe.majorant = lambda s: 1.0 + s
        rep = validate_sigma_regularity(probe, rho, rho_t, settings, grids128)
        assert all(np.isfinite(e.value) for e in rep.entries)
        scale = rep.suggested_scale
        tuned = compton_model(1.0, 1.0, 1.0, 1.0)
        tuned.majorant = lambda s: 1.01 * scale * (1.0 + s)
        assert validate_sigma_regularity(tuned, rho, rho_t, settings,
                                         grids128).passed

    def test_missing_majorant_is_config_error(self, grids128, settings):
        model = constant_model(sigma0=1.0)
        model.majorant = None
        with pytest.raises(ConfigError):
            validate_sigma_regularity(model, np.ones(128), np.zeros(128),
                                      settings, grids128)


class TestEmissionHook:
    def make_rho_dependent(self, scale=10.0):
        model = constant_model(0.0, 0.0, 0.0)
        model.emission = lambda v, omega, t, x, rho: 0.1 * rho
        model.emission_depends_rho = True
        model.majorant = lambda s: scale * (1.0 + s)
        return model

    def test_emission_bm_uses_density(self, grids128, rng):
        model = self.make_rho_dependent()
        rho = rng.random(128) + 0.1
        S = model.emission_bm(grids128, 0.0, rho)
        assert np.allclose(S, 0.1 * rho[None, None, :])

    def test_emission_bm_requires_density(self, grids128):
        model = self.make_rho_dependent()
        with pytest.raises(ConfigError):
            model.emission_bm(grids128, 0.0)

    def test_validator_passes_with_generous_majorant(self, grids128, settings):
        grid = grids128.spatial
        x = grid.axis_coords(0)
        rho = 1.0 + 0.3 * np.sin(2 * np.pi * x)
        rep = validate_emission_regularity(self.make_rho_dependent(30.0), rho,
                                           np.zeros(128), settings, grids128)
        assert rep.passed

    def test_validator_rejects_density_independent(self, grids128, settings):
        with pytest.raises(ConfigError):
            validate_emission_regularity(constant_model(0.0, 0.0, 0.1),
                                         np.ones(128), np.zeros(128),
                                         settings, grids128)

    def test_validator_scale_mechanism(self, grids128, settings):
        grid = grids128.spatial
        x = grid.axis_coords(0)
        rho = 1.0 + 0.3 * np.sin(2 * np.pi * x)
        probe = self.make_rho_dependent(scale=1.0)
        rep = validate_emission_regularity(probe, rho, 0.2 * np.cos(2 * np.pi * x),
                                           settings, grids128)
        tuned = self.make_rho_dependent(scale=1.01 * rep.suggested_scale)
        assert validate_emission_regularity(tuned, rho,
                                            0.2 * np.cos(2 * np.pi * x),
                                            settings, grids128).passed
