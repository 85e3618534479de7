import numpy as np
import pytest
from scipy import stats

from agedyn import demography as dem
from agedyn import ibm
from agedyn import models
from agedyn.errors import ExplosionError

EX1 = models.make_model("example1", competition=1.0)  # desk-scale interaction


def test_empty_population_stays_empty():
    init = ibm.PopulationState(0.0, np.array([]), np.array([]), 100)
    res = ibm.simulate(EX1, init, horizon=5.0, rng_seed=0, snapshot_dt=1.0)
    assert res.final.count == 0
    assert len(res.events) == 0
    assert all(s.count == 0 for s in res.snapshots)


def test_bit_identical_event_logs():
    rng = np.random.default_rng(1)
    init = ibm.initial_population(EX1, 200, 250, rng,
                                  trait_sampler=lambda r, s: r.uniform(1.5, 2.5, s))
    r1 = ibm.simulate(EX1, init, horizon=4.0, rng_seed=77)
    r2 = ibm.simulate(EX1, init, horizon=4.0, rng_seed=77)
    assert np.array_equal(r1.events.times, r2.events.times)
    assert np.array_equal(r1.events.kinds, r2.events.kinds)
    assert np.array_equal(r1.events.subject, r2.events.subject)
    assert np.array_equal(r1.events.displacement, r2.events.displacement)
    r3 = ibm.simulate(EX1, init, horizon=4.0, rng_seed=78)
    assert not np.array_equal(r1.events.times, r3.events.times)


def test_thinning_exactness_constant_rates():
    """With constant rates the compensated inter-event gaps are iid Exp(1)
    and event types split binomially; checked per seed at the 1% level."""
    b, d = 0.8, 0.6
    m = models.build_constant_rates(b=b, d=d, u=0.0)
    ks_ps, bin_ps = [], []
    for seed in range(10):
        init = ibm.initial_population(m, 1, 400, np.random.default_rng(seed))
        res = ibm.simulate(m, init, horizon=1.2, rng_seed=1000 + seed)
        times = np.concatenate([[0.0], res.events.times])
        kinds = res.events.kinds
        deltas = np.where(kinds <= ibm.KIND_MUTANT_BIRTH, 1, -1)
        counts = 400 + np.concatenate([[0], np.cumsum(deltas)])[:-1]
        gaps = np.diff(times) * counts * (b + d)
        ks_ps.append(stats.kstest(gaps, "expon").pvalue)
        births = int((kinds <= ibm.KIND_MUTANT_BIRTH).sum())
        bin_ps.append(stats.binomtest(births, len(kinds), b / (b + d)).pvalue)
    assert np.median(ks_ps) > 0.05
    assert min(ks_ps) > 0.001
    assert np.median(bin_ps) > 0.05


def test_equilibrium_mass_example1():
    eq = dem.stationary_equilibrium(EX1, 2.0)
    assert eq.mass == pytest.approx(1.375)
    reps = []
    for seed in range(4):
        init = ibm.population_from_density(EX1, 1000, 2.0, eq.density,
                                           np.random.default_rng(1000 + seed))
        res = ibm.simulate(EX1, init, horizon=12.0, rng_seed=seed, snapshot_dt=0.25)
        reps.append(np.mean([s.mass for s in res.snapshots if s.time > 4.0]))
    reps = np.array(reps)
    se = reps.std(ddof=1) / np.sqrt(len(reps)) + 1e-4
    assert abs(reps.mean() - 1.375) < 4 * se + 0.02


def test_mutation_scaling_and_displacements():
    rng = np.random.default_rng(3)
    init = ibm.initial_population(EX1, 500, 600, rng,
                                  trait_sampler=lambda r, s: r.uniform(1.8, 2.2, s))
    res0 = ibm.simulate(EX1, init, horizon=3.0, mutation_scale=0.0, rng_seed=5)
    assert not np.any(res0.events.kinds == ibm.KIND_MUTANT_BIRTH)
    res1 = ibm.simulate(EX1, init, horizon=3.0, mutation_scale=1.0, rng_seed=5)
    mut = res1.events.kinds == ibm.KIND_MUTANT_BIRTH
    births = res1.events.kinds <= ibm.KIND_MUTANT_BIRTH
    frac = mut.sum() / births.sum()
    assert abs(frac - 0.13) < 0.02
    assert np.all(res1.events.displacement[mut] != 0.0)
    assert np.all(res1.events.displacement[~mut] == 0.0)


def test_traits_stay_in_box():
    rng = np.random.default_rng(4)
    init = ibm.initial_population(EX1, 300, 400, rng,
                                  trait_sampler=lambda r, s: r.uniform(0.1, 3.9, s))
    res = ibm.simulate(EX1, init, horizon=4.0, rng_seed=9)
    for s in res.snapshots or [res.final]:
        pass
    assert np.all(res.final.traits >= 0.0) and np.all(res.final.traits <= 4.0)
    assert np.all(res.final.birth_times <= res.final.time + 1e-12)


def test_explosion_guard():
    m = models.build_constant_rates(b=3.0, d=0.1, u=0.0)
    init = ibm.initial_population(m, 1, 200, np.random.default_rng(0))
    with pytest.raises(ExplosionError):
        ibm.simulate(m, init, horizon=50.0, rng_seed=0, population_cap=400)


def test_example2_age_weighted_kernel_runs():
    m2 = models.make_model("example2", C=2.0)
    rng = np.random.default_rng(6)
    init = ibm.initial_population(m2, 100, 150, rng,
                                  trait_sampler=lambda r, s: r.uniform(1.5, 2.5, s),
                                  age_sampler=lambda r, s: r.exponential(0.3, s))
    res = ibm.simulate(m2, init, horizon=6.0, rng_seed=11)
    assert res.final.count > 0
    # population settles near the scaled closed-form mass of the mean trait
    eq = dem.stationary_equilibrium(m2, float(res.final.traits.mean()))
    assert 0.4 * eq.mass < res.final.mass < 2.5 * eq.mass


class TestAgeHistogram:
    def test_empty(self):
        state = ibm.PopulationState(0.0, np.array([]), np.array([]), 10)
        h = ibm.age_histogram(state, 0.5)
        assert h.mass() == 0.0

    def test_single_individual(self):
        state = ibm.PopulationState(2.5, np.array([1.0]), np.array([1.0]), 1)
        h = ibm.age_histogram(state, 1.0)
        assert h.mass() == pytest.approx(1.0)
        assert h.values[1] == pytest.approx(1.0)  # age 1.5 in bin [1, 2)
        assert h.values[0] == 0.0

    def test_bin_width_validation(self):
        state = ibm.PopulationState(0.0, np.array([1.0]), np.array([0.0]), 1)
        with pytest.raises(ValueError):
            ibm.age_histogram(state, 0.0)

    def test_stationary_profile_matches_equilibrium_shape(self):
        # empirical age profile at stationarity tracks the e^{-3a} shape
        eq = dem.stationary_equilibrium(EX1, 2.0)
        rng = np.random.default_rng(8)
        init = ibm.population_from_density(EX1, 2000, 2.0, eq.density, rng)
        res = ibm.simulate(EX1, init, horizon=6.0, rng_seed=13)
        h = ibm.age_histogram(res.final, 0.25)
        centers = h.grid.nodes[:-1] + 0.125
        expected = eq.density_fn(centers)
        l1 = np.sum(np.abs(h.values / h.values.sum()
                           - expected / expected.sum()))
        assert l1 < 0.2

    def test_total_mass_equals_scaled_count(self):
        rng = np.random.default_rng(9)
        state = ibm.PopulationState(3.0, rng.uniform(0, 4, 500),
                                    rng.uniform(-2, 3, 500), 250)
        h = ibm.age_histogram(state, 0.3)
        assert h.mass() == pytest.approx(500 / 250)


def test_bounded_lipschitz_distance():
    rng = np.random.default_rng(10)
    a = ibm.PopulationState(1.0, rng.uniform(0, 4, 300), rng.uniform(-1, 1, 300), 100)
    assert ibm.bounded_lipschitz_distance(a, a) == 0.0
    b = ibm.PopulationState(1.0, rng.uniform(0, 4, 900), rng.uniform(-1, 1, 900), 100)
    assert ibm.bounded_lipschitz_distance(a, b) > 1.0
