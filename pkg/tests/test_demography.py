import numpy as np
import pytest

from agedyn import demography as dem
from agedyn import models
from agedyn.errors import ViabilityError
from agedyn.quadrature import AgeRule

EX1 = models.make_model("example1")
EX2 = models.make_model("example2")
NOSEN = models.make_model("example1_no_senescence")
KISDI = models.make_model("example1_age_logistic_kisdi")


def ex1_mass(x, c=0.001):
    return (x * (4 - x) - 1.25) / (c * (4 - x))


class TestGridAndDensity:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            dem.AgeGrid(-1.0, 100)
        with pytest.raises(ValueError):
            dem.AgeGrid(10.0, 8)

    def test_density_nonnegative(self):
        g = dem.AgeGrid(5.0, 50)
        with pytest.raises(ValueError):
            dem.AgeDensity(g, np.full(51, -1.0))
        d = dem.AgeDensity.from_function(g, lambda a: np.exp(-a))
        assert d.mass() == pytest.approx(1.0 - np.exp(-5.0), rel=2e-3)


class TestStationaryEquilibria:
    def test_example1_closed_values(self):
        eq = dem.stationary_equilibrium(EX1, 2.0)
        assert eq.mass == pytest.approx(1375.0, abs=1e-10)
        assert eq.meta["decay"] == pytest.approx(3.0)
        assert eq.density0 == pytest.approx(4125.0)
        eq0 = dem.stationary_equilibrium(EX1, 0.552)
        assert eq0.mass == pytest.approx(189.47, abs=0.005)

    def test_example1_outside_window_trivial(self):
        eq = dem.stationary_equilibrium(EX1, 0.2)
        assert eq.trivial and eq.mass == 0.0

    def test_no_senescence_mass(self):
        eq = dem.stationary_equilibrium(NOSEN, 2.0)
        assert eq.mass == pytest.approx(1875.0, abs=1e-9)

    def test_example2_gaussian_profile_identity(self):
        # equilibrium self-consistency: integral (1+e^-a) U(x,x) m^ da == Ehat(x)
        for x in [0.7, 2.0, 3.2]:
            eq = dem.stationary_equilibrium(EX2, x)
            ehat = eq.meta["ehat"]
            assert ehat == pytest.approx(0.5 * np.pi * (x * (4 - x)) ** 2, rel=1e-14)
            rule = AgeRule(eq.density.grid.a_max, panels=64, order=12)
            u_self = float(EX2.interaction.trait_kernel.u0(x, x))
            val = rule.integrate((1 + np.exp(-rule.nodes)) * u_self
                                 * eq.density_fn(rule.nodes))
            assert abs(val - ehat) / ehat < 1e-6
            assert eq.mass == pytest.approx(
                eq.density0 * dem.gauss_linear_tail(0.0, ehat), rel=1e-12)

    def test_kisdi_age_logistic_balance_root(self):
        eq = dem.stationary_equilibrium(KISDI, 2.0)
        # plug the mass back into the scalar balance equation
        gam = eq.meta["gamma"]
        beta = 2.0 * 2.0
        assert beta * dem.gauss_linear_tail(1.25, gam) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("model,x", [(EX1, 0.552), (EX1, 2.0), (EX1, 3.3),
                                         (NOSEN, 2.0), (KISDI, 1.0), (KISDI, 2.9),
                                         (EX2, 0.8), (EX2, 3.2)])
    def test_balance_condition_everywhere(self, model, x):
        eq = dem.stationary_equilibrium(model, x)
        assert dem.balance_residual(model, eq) < 1e-6

    @pytest.mark.parametrize("model,x", [(EX1, 2.0), (EX2, 1.5)])
    def test_density_shape_is_exponential_of_cumulative_death(self, model, x):
        eq = dem.stationary_equilibrium(model, x)
        frozen = dem.frozen_death_rate(model, eq)
        ages = np.linspace(0.0, eq.density.grid.a_max, 200)
        expected = eq.density0 * np.exp(-frozen.cumulative(x, ages))
        assert np.allclose(eq.density_fn(ages), expected, rtol=1e-10, atol=1e-12)

    def test_generic_path_matches_closed_forms(self):
        eq_gen = dem.stationary_equilibrium(EX1, 2.0, method="pde")
        assert abs(eq_gen.mass - 1375.0) / 1375.0 < 0.005
        assert dem.balance_residual(EX1, eq_gen) < 1e-6
        exact = dem.stationary_equilibrium(EX1, 2.0)
        nodes = eq_gen.density.grid.nodes
        l1 = np.trapezoid(np.abs(eq_gen.density.values - exact.density_fn(nodes)), nodes)
        assert l1 / exact.mass < 0.005

    def test_generic_path_example2(self):
        grid = dem.AgeGrid(4.0, 1600)
        eq_gen = dem.stationary_equilibrium(EX2, 2.0, grid=grid, method="pde")
        exact = dem.stationary_equilibrium(EX2, 2.0)
        assert abs(eq_gen.mass - exact.mass) / exact.mass < 0.005


class TestNetReproduction:
    def test_example1_closed_form(self):
        assert dem.net_reproduction_rate(EX1, 2.0) == pytest.approx(3.2, rel=1e-10)
        xs = np.linspace(0.1, 3.9, 13)
        for x in xs:
            assert dem.net_reproduction_rate(EX1, x) == pytest.approx(
                4 * x * (4 - x) / 5, rel=1e-9)

    def test_zero_birth(self):
        m = models.build_constant_rates(b=0.0, d=1.0, u=0.1)
        assert dem.net_reproduction_rate(m, 1.0) == 0.0

    def test_no_age_ratio(self):
        m = models.build_constant_rates(b=3.0, d=2.0, u=0.1)
        assert dem.net_reproduction_rate(m, 1.0) == pytest.approx(1.5, rel=1e-12)

    def test_example2_divergent(self):
        assert dem.net_reproduction_rate(EX2, 2.0) == np.inf

    def test_viability_window_example1(self):
        lo, hi = dem.viability_window(EX1)
        assert lo == pytest.approx(2 - np.sqrt(11) / 2, abs=1e-6)
        assert hi == pytest.approx(2 + np.sqrt(11) / 2, abs=1e-6)


class TestFrozenDeathRate:
    def test_example1_age_independent_value(self):
        eq = dem.stationary_equilibrium(EX1, 2.0)
        frozen = dem.frozen_death_rate(EX1, eq)
        ages = np.array([0.0, 1.0, 7.0])
        vals = frozen.rate(2.0, ages)
        assert np.allclose(vals, 3.0, rtol=1e-12)

    def test_example2_separable_form(self):
        nu, kk = EX2.params["nu"], EX2.params["k"]
        x, y = 2.0, 2.6
        eq = dem.stationary_equilibrium(EX2, x)
        frozen = dem.frozen_death_rate(EX2, eq)
        ehat_x = eq.meta["ehat"]
        r = np.exp(-kk * (y - x))
        ehat_yx = ehat_x * (1 + nu) * r / (1 + nu * r)
        ages = np.linspace(0.0, 2.0, 9)
        assert np.allclose(frozen.rate(y, ages), ages * ehat_yx, rtol=1e-12)
        assert np.allclose(frozen.cumulative(y, ages), 0.5 * ages**2 * ehat_yx,
                           rtol=1e-12)

    def test_trivial_resident_rejected(self):
        eq = dem.stationary_equilibrium(EX1, 0.2)
        with pytest.raises(ViabilityError):
            dem.frozen_death_rate(EX1, eq)


class TestTransport:
    def test_zero_init_stays_zero(self):
        grid = dem.AgeGrid(25.0, 500)
        traj = dem.integrate_monomorphic(EX1, 2.0, dem.AgeDensity.zero(grid), 3.0)
        assert np.all(traj.masses == 0.0)

    def test_exponential_decay_oracle(self):
        m = models.build_constant_rates(b=0.0, d=0.7, u=0.0)
        grid = dem.AgeGrid(30.0, 2000)
        init = dem.AgeDensity.from_function(grid, lambda a: np.exp(-0.5 * (a - 3) ** 2))
        traj = dem.integrate_monomorphic(m, 1.0, init, 1.0, grid=grid)
        t = traj.times[-1]
        expected = init.mass() * np.exp(-0.7 * t)
        assert abs(traj.masses[-1] - expected) / expected < 1e-4

    def test_example1_mass_converges(self):
        grid = dem.AgeGrid(25.0, 2000)
        init = dem.AgeDensity.from_function(grid, lambda a: 100 * np.exp(-a))
        traj = dem.integrate_monomorphic(EX1, 2.0, init, 80.0, grid=grid)
        assert abs(traj.masses[-1] - 1375.0) / 1375.0 < 0.005

    def test_stationary_fixed_point(self):
        grid = dem.AgeGrid(25.0, 2000)
        eq = dem.stationary_equilibrium(EX1, 2.0)
        init = dem.AgeDensity.from_function(grid, eq.density_fn)
        traj = dem.integrate_monomorphic(EX1, 2.0, init, 10.0, grid=grid)
        drift = np.max(np.abs(traj.masses - traj.masses[0])) / traj.masses[0]
        assert drift < 1e-6

    def test_dimorphic_reduces_to_monomorphic(self):
        grid = dem.AgeGrid(25.0, 800)
        init = dem.AgeDensity.from_function(grid, lambda a: 40 * np.exp(-a))
        zero = dem.AgeDensity.zero(grid)
        tx, ty = dem.integrate_dimorphic(EX1, (2.0, 3.0), (init, zero), 5.0, grid=grid)
        mono = dem.integrate_monomorphic(EX1, 2.0, init, 5.0, grid=grid)
        assert np.allclose(tx.masses, mono.masses, rtol=1e-12)
        assert np.all(ty.masses == 0.0)

    def test_dimorphic_symmetric_stays_symmetric(self):
        m = models.build_constant_rates(b=2.0, d=1.0, u=0.02)
        grid = dem.AgeGrid(25.0, 800)
        init = dem.AgeDensity.from_function(grid, lambda a: 10 * np.exp(-a))
        tx, ty = dem.integrate_dimorphic(m, (1.0, 3.0), (init, init), 8.0, grid=grid)
        assert np.allclose(tx.masses, ty.masses, rtol=1e-12)

    def test_dimorphic_fixation_example1(self):
        # y = 3 invades x = 1 (within the invasibility window) and fixes
        grid = dem.AgeGrid(25.0, 1000)
        eq_x = dem.stationary_equilibrium(EX1, 1.0)
        init_x = dem.AgeDensity.from_function(grid, eq_x.density_fn)
        init_y = dem.AgeDensity.from_function(grid, lambda a: np.exp(-a))
        tx, ty = dem.integrate_dimorphic(EX1, (1.0, 3.0), (init_x, init_y), 60.0,
                                         grid=grid)
        assert ty.masses[-1] > 100.0
        assert tx.masses[-1] < 1e-6 * eq_x.mass


class TestNonCoexistence:
    def test_example1_directions(self):
        assert dem.check_non_coexistence_logistic(EX1, 1.0, 3.0) == "y-fixes"
        assert dem.check_non_coexistence_logistic(EX1, 3.0, 1.0) == "x-fixes"
        assert dem.check_non_coexistence_logistic(EX1, 2.0, 2.0) == "undetermined"

    def test_non_logistic_rejected(self):
        with pytest.raises(ViabilityError):
            dem.check_non_coexistence_logistic(EX2, 1.0, 2.0)
