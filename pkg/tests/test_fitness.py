import numpy as np
import pytest
from scipy.optimize import brentq

from agedyn import demography as dem
from agedyn import fitness as fit
from agedyn import models
from agedyn.errors import ViabilityError

EX1 = models.make_model("example1")
EX2 = models.make_model("example2")
NOSEN = models.make_model("example1_no_senescence")
KISDI = models.make_model("example1_age_logistic_kisdi")

XSTAR1 = 4.0 - np.sqrt(5.0) / 2.0
XSTAR2 = (9.0 + np.sqrt(521.0)) / 10.0


def grad_ex1_exact(x):
    # sign such that g(x+eps, x) < 1 for invadable upward mutants (x < x*)
    return (4 * x * x - 32 * x + 59) * (x * x - 4 * x - 1) / (4 * x * x * (4 - x) ** 3)


def grad_ex2_exact(x):
    return np.pi * (5 * x * x - 9 * x - 22) / (11 * x * (4 - x))


class TestInvasionIntegral:
    def test_diagonal_is_one(self):
        for model, x in [(EX1, 1.0), (EX1, 2.9), (EX2, 2.2), (NOSEN, 3.0), (KISDI, 2.0)]:
            eq = dem.stationary_equilibrium(model, x)
            assert fit.invasion_integral(model, eq, x) == pytest.approx(1.0, abs=1e-6)

    def test_example1_window(self):
        eq = dem.stationary_equilibrium(EX1, 1.0)
        assert fit.invasion_integral(EX1, eq, 2.0) > 1.0
        assert fit.invasion_integral(EX1, eq, 3.7) < 1.0
        # closed form: beta(y) / (1 + dhat(y, x))
        mx = eq.mass
        for y in [0.8, 2.0, 3.0, 3.7]:
            dhat = 0.25 + 0.001 * (4 - y) * mx
            assert fit.invasion_integral(EX1, eq, y) == pytest.approx(
                y * (4 - y) / (1 + dhat), rel=1e-10)


class TestExtinctionProbability:
    def test_diagonal_z0_is_one(self):
        rng = np.random.default_rng(2)
        for model, lohi in [(EX1, (0.4, 3.6)), (EX2, (0.3, 3.8)),
                            (NOSEN, (0.2, 3.8)), (KISDI, (0.4, 3.6))]:
            for x in rng.uniform(*lohi, size=10):
                eq = dem.stationary_equilibrium(model, x)
                if eq.trivial:
                    continue
                rep = fit.extinction_probability(model, eq, float(x), compute_g=False)
                assert abs(rep.z0 - 1.0) < 1e-8

    def test_monotone_bracketing_structure(self):
        eq = dem.stationary_equilibrium(EX1, 1.3)
        solver = fit.FitnessSolver(EX1, eq)
        ws = solver.workspace(np.array([2.0, 3.9]))
        f0, _ = solver._f_and_fp(ws, np.zeros(2))
        assert np.all(f0 < 0.0)
        zs = np.linspace(0.05, 1.4, 12)
        prev = None
        for z in zs:
            f, _ = solver._f_and_fp(ws, np.full(2, z))
            if prev is not None:
                assert np.all(f > prev)
            prev = f

    def test_no_age_closed_form_reduction(self):
        rng = np.random.default_rng(5)
        for _ in range(12):
            x = rng.uniform(0.3, 3.7)
            y = rng.uniform(0.2, 3.9)
            eq = dem.stationary_equilibrium(NOSEN, x)
            if eq.trivial:
                continue
            rep = fit.extinction_probability(NOSEN, eq, y, compute_g=False)
            beta = y * (4 - y)
            dhat = 0.25 + 0.001 * (4 - y) * eq.mass
            closed = 1.0 - max(0.0, (beta - dhat) / beta) if beta > 0 else 1.0
            assert abs(rep.z0 - closed) < 1e-10

    def test_paper_constant_rate_instance(self):
        # engineered no-senescence pair with b(y) = 2 and frozen death 1.5:
        # survival probability must be (2 - 1.5) / 2 = 0.25
        y = 2.0 + np.sqrt(2.0)
        target_mass = 1.25 / (0.001 * (4.0 - y))
        x = brentq(lambda t: (t * (4 - t) - 0.25) / (0.001 * (4 - t)) - target_mass,
                   1.3, 3.0, xtol=1e-14)
        eq = dem.stationary_equilibrium(NOSEN, x)
        rep = fit.extinction_probability(NOSEN, eq, y)
        assert 1.0 - rep.z0 == pytest.approx(0.25, abs=1e-9)

    def test_invadable_root_solves_F(self):
        eq = dem.stationary_equilibrium(EX1, 1.0)
        solver = fit.FitnessSolver(EX1, eq)
        rep = fit.extinction_probability(EX1, eq, 2.0)
        assert 0.0 < rep.z0 < 1.0 and rep.invadable
        ws = solver.workspace(np.array([2.0]))
        residual, _ = solver._f_and_fp(ws, np.array([rep.z0]))
        assert abs(residual[0]) < 1e-10

    def test_unconstrained_g_above_one(self):
        eq = dem.stationary_equilibrium(NOSEN, 2.0)
        rep = fit.extinction_probability(NOSEN, eq, 1.0)
        # g = dhat / beta for the age-free reduction
        dhat = 0.25 + 0.001 * 3.0 * eq.mass
        assert rep.z0 == 1.0
        assert rep.g_value == pytest.approx(dhat / 3.0, rel=1e-10)


class TestGradient:
    def test_example1_against_exact_closed_form(self):
        for x in [1.0, 2.0, 2.5, 3.2]:
            g = fit.fitness_gradient_generic(EX1, x)
            assert g == pytest.approx(grad_ex1_exact(x), rel=1e-9, abs=1e-12)
        assert fit.fitness_gradient_generic(EX1, 2.0) == pytest.approx(-0.4296875,
                                                                       abs=1e-9)

    def test_example1_zero_at_ess(self):
        assert abs(fit.fitness_gradient_generic(EX1, XSTAR1)) < 1e-8
        root = brentq(lambda x: fit.fitness_gradient_generic(EX1, x), 2.5, 3.2,
                      xtol=1e-12)
        assert abs(root - XSTAR1) < 1e-6

    def test_example2_against_exact_closed_form(self):
        for x in [1.0, 2.0, 3.0, 3.5]:
            g = fit.fitness_gradient_generic(EX2, x)
            assert g == pytest.approx(grad_ex2_exact(x), rel=1e-6)

    def test_example2_against_paper_rounded_form(self):
        # worked closed form has constants printed to two significant digits;
        # allow the half-ulp envelope of rounding each constant
        xs = np.linspace(0.4, 3.6, 40)
        for x in xs:
            g = fit.fitness_gradient_generic(EX2, x)
            rounded = 1.4 * (x + 1.4) * (x - 3.2) / (x * (4 - x))
            envelope = 0.051 * (abs((x + 1.4) * (x - 3.2)) + 1.4 * abs(x - 3.2)
                                + 1.4 * (x + 1.4)) / (x * (4 - x))
            assert abs(g - rounded) <= envelope

    def test_example1_closed_form_consistency_40_grid(self):
        xs = np.linspace(0.45, 3.55, 40)
        for x in xs:
            g = fit.fitness_gradient_generic(EX1, x)
            assert g == pytest.approx(grad_ex1_exact(x), rel=1e-6, abs=1e-10)

    @pytest.mark.parametrize("model,window", [(EX1, (0.5, 3.5)), (EX2, (0.4, 3.7))])
    def test_finite_difference_consistency(self, model, window):
        rng = np.random.default_rng(9)
        eps = 1e-4
        for x in rng.uniform(*window, size=8):
            eq = dem.stationary_equilibrium(model, float(x))
            solver = fit.FitnessSolver(model, eq)
            fd = (solver.g_root(float(x) + eps) - solver.g_root(float(x) - eps)) / (2 * eps)
            grad = fit.fitness_gradient_generic(model, float(x), eq=eq)
            assert abs(fd - grad) <= 1e-4 * max(abs(grad), 1e-3)

    def test_no_senescence_ess(self):
        root = brentq(lambda x: fit.fitness_gradient_generic(NOSEN, x), 3.0, 3.9,
                      xtol=1e-12)
        assert abs(root - 3.5) < 1e-6


class TestClassification:
    def test_example2_branching_point(self):
        rep = fit.classify_singularity(EX2, XSTAR2)
        assert rep.verdict == "branching-point"
        assert rep.curvature_resident < rep.curvature_mutant < 0.0
        # high-precision implicit-differentiation oracle values (half second
        # derivatives of g at the singular point)
        assert rep.curvature_mutant == pytest.approx(-0.3049427336, rel=1e-4)
        assert rep.curvature_resident == pytest.approx(-2.8106863438, rel=1e-4)

    def test_example1_ess(self):
        rep = fit.classify_singularity(EX1, XSTAR1)
        assert rep.verdict == "ESS"
        assert rep.curvature_mutant > 0.0

    def test_quadratic_toy_matches_analytic(self):
        c = 1.7
        g = lambda y, x: 1 + (y - x) ** 2 - 2 * (y - x) * (x - c)
        rep = fit.classify_singularity_from_g(g, c)
        assert rep.verdict == "ESS"
        assert rep.curvature_mutant == pytest.approx(1.0, abs=1e-6)
        assert rep.curvature_resident == pytest.approx(3.0, abs=1e-6)
        g2 = lambda y, x: 1 - (y - x) ** 2 + 3 * (y - x) * (x - c)
        rep2 = fit.classify_singularity_from_g(g2, c)
        assert rep2.verdict == "branching-point"

    def test_non_singular_input_rejected(self):
        with pytest.raises(ViabilityError):
            fit.classify_singularity(EX1, 2.0)


class TestPip:
    def test_example1_boundary_within_one_cell(self):
        grid = np.linspace(0.02, 3.98, 100)
        pg = fit.pip(EX1, grid)
        cell = grid[1] - grid[0]
        assert pg.viable.sum() > 80
        for j, x in enumerate(grid):
            if not pg.viable[j]:
                assert np.all(np.isnan(pg.z0[:, j]))
                continue
            fx = fit.invasion_boundary_example1(x)
            for i, y in enumerate(pg.mutants):
                pred = min(x, fx) < y < max(x, fx)
                obs = pg.z0[i, j] < 1.0
                if pred != obs:
                    assert min(abs(y - x), abs(y - fx)) <= cell

    def test_diagonal_entries_z0_one(self):
        grid = np.linspace(0.5, 3.5, 40)
        pg = fit.pip(EX1, grid)
        diag = np.array([pg.z0[i, i] for i in range(len(grid))])
        assert np.allclose(diag, 1.0, atol=1e-8)

    def test_no_senescence_boundary(self):
        grid = np.linspace(0.1, 3.9, 80)
        pg = fit.pip(NOSEN, grid)
        cell = grid[1] - grid[0]
        for j, x in enumerate(grid):
            if not pg.viable[j]:
                continue
            fx = fit.invasion_boundary_no_senescence(x)
            for i, y in enumerate(pg.mutants):
                pred = min(x, fx) < y < max(x, fx)
                obs = pg.z0[i, j] < 1.0
                if pred != obs:
                    assert min(abs(y - x), abs(y - fx)) <= cell

    def test_example2_criterion_and_mutual_invasibility(self):
        nu, kk = EX2.params["nu"], EX2.params["k"]
        grid = np.linspace(0.3, 3.8, 36)
        pg = fit.pip(EX2, grid)
        for j, x in enumerate(grid):
            for i, y in enumerate(pg.mutants):
                r = np.exp(-kk * (y - x))
                lhs = x * x * (4 - x) ** 2 * (1 + nu) * r / (1 + nu * r)
                rhs = y * y * (4 - y) ** 2
                if abs(lhs - rhs) > 1e-6 * max(rhs, 1.0):
                    assert (pg.z0[i, j] < 1.0) == (lhs < rhs)
        # mutual invasibility near the branching point
        ja = np.argmin(np.abs(grid - 3.05))
        jb = np.argmin(np.abs(grid - 3.35))
        assert pg.z0[jb, ja] < 1.0 and pg.z0[ja, jb] < 1.0


class TestBoundaries:
    def test_fixed_points(self):
        assert fit.invasion_boundary_example1(XSTAR1) == pytest.approx(XSTAR1, rel=1e-14)
        assert fit.invasion_boundary_no_senescence(3.5) == pytest.approx(3.5, rel=1e-14)

    def test_involution(self):
        xs = np.linspace(0.0, 3.9, 25)
        f = fit.invasion_boundary_example1
        assert np.allclose(f(f(xs)), xs, rtol=1e-12, atol=1e-12)

    def test_boundary_domain(self):
        with pytest.raises(ValueError):
            fit.invasion_boundary_example1(4.0)
