import numpy as np
import pytest
from scipy.integrate import quad

from agedyn import models
from agedyn.errors import ConfigError

ALL_MODELS = ["example1", "example1_no_senescence", "example1_age_logistic_kisdi",
              "example2"]


def test_registry_resolves_and_rejects():
    for name in ALL_MODELS:
        m = models.make_model(name)
        assert m.model_id == name
    with pytest.raises(ConfigError):
        models.make_model("nope")
    with pytest.raises(ConfigError):
        models.make_model("example1", bogus_param=3)


def test_example1_rates():
    m = models.make_model("example1")
    assert m.birth(2.0, 0.0) == pytest.approx(4.0)
    assert m.birth(0.0, 1.7) == 0.0
    assert m.birth(0.0, 0.0) == 0.0
    # death with the frozen interaction at total mass 1375
    d_total = m.death(2.0, 3.0) + m.interaction(2.0, 3.0, 2.0, 1.0) * 1375.0
    assert d_total == pytest.approx(3.0)


def test_no_senescence_birth_age_independent():
    m = models.make_model("example1_no_senescence")
    assert m.birth(2.0, 10.0) == pytest.approx(4.0)
    assert m.birth(4.0, 0.0) == 0.0


def test_kisdi_kernel_values_and_monotonicity():
    m = models.make_model("example1_age_logistic_kisdi")
    k = m.trait_box and m.interaction.trait_kernel
    assert m.params["C"] == 0.002 and m.params["nu"] == 1.2 and m.params["k"] == 4.0
    assert k.u0(1.3, 1.3) == pytest.approx(0.002 * 1.2 / 2.2, rel=1e-12)
    # strictly decreasing in x - y at fixed y
    xs = np.linspace(0.0, 4.0, 41)
    vals = k.u0(xs, 1.7)
    assert np.all(np.diff(vals) < 0.0)


def test_example2_structure():
    m = models.make_model("example2")
    ages = np.linspace(0, 30, 7)
    assert np.all(np.asarray(m.death(1.3, ages)) == 0.0)
    u0 = m.interaction.trait_kernel.u0(1.0, 2.0)
    assert m.interaction(1.0, 3.0, 2.0, 0.0) == pytest.approx(2.0 * 3.0 * u0)
    # senescence factor tends to 1 as the competitor ages
    assert m.interaction(1.0, 3.0, 2.0, 60.0) == pytest.approx(3.0 * u0, rel=1e-12)


class TestMutationKernel:
    def test_defaults(self):
        m = models.make_model("example1")
        assert m.mutation_kernel.sigma2 == pytest.approx(0.15)
        assert m.mutation_prob == pytest.approx(0.13)

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            models.TruncatedGaussianKernel(-0.1)
        with pytest.raises(ValueError):
            models.TruncatedGaussianKernel(0.0)

    def test_interior_matches_unconditioned(self):
        k = models.TruncatedGaussianKernel(0.01, box=(0.0, 4.0))
        # box edges ~20 sigmas away: renormalization factor -> 1
        x = 2.0
        h = np.array([-0.15, 0.0, 0.2])
        free = np.exp(-h**2 / 0.02) / np.sqrt(2 * np.pi * 0.01)
        assert np.allclose(k.density(x, h), free, rtol=1e-10)

    def test_normalization_quadrature_oracle(self):
        k = models.TruncatedGaussianKernel(0.15)
        rng = np.random.default_rng(7)
        for x in rng.uniform(0.0, 4.0, size=20):
            total, _ = quad(lambda h: k.density(x, h), -x, 4.0 - x, limit=200)
            assert abs(total - 1.0) < 1e-8

    def test_half_moments_quadrature_oracle(self):
        k = models.TruncatedGaussianKernel(0.15)
        for x in [0.3, 2.0, 3.7]:
            neg, pos = k.half_second_moments(x)
            q_pos, _ = quad(lambda h: h * h * k.density(x, h), 0.0, 4.0 - x)
            q_neg, _ = quad(lambda h: h * h * k.density(x, h), -x, 0.0)
            assert neg == pytest.approx(q_neg, abs=1e-10)
            assert pos == pytest.approx(q_pos, abs=1e-10)

    def test_sampler_stays_in_box_and_matches_moments(self):
        k = models.TruncatedGaussianKernel(0.15)
        rng = np.random.default_rng(11)
        for x in [0.1, 2.0, 3.9]:
            h = k.sample(x, rng, size=20_000)
            assert np.all(x + h >= 0.0) and np.all(x + h <= 4.0)
            neg, pos = k.half_second_moments(x)
            assert np.mean(h * h) == pytest.approx(neg + pos, rel=0.05)


@pytest.mark.parametrize("name", ALL_MODELS)
def test_rate_bounds_on_grid(name):
    m = models.make_model(name)
    assert models.spot_check_bounds(m, n_trait=100, n_age=100)["all"]


def test_parameter_override_rebuild():
    m = models.make_model("example1", competition=1.0)
    assert m.params["competition"] == 1.0
    m2 = m.with_params(competition=0.5)
    assert m2.params["competition"] == 0.5
    assert m2.interaction(1.0, 0.0, 2.0, 0.0) == pytest.approx(0.5 * 3.0)
