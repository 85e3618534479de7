"""Model specifications and the registry of concrete population models.

A model bundles the individual rates: birth b(x,a), natural death d(x,a),
pairwise interaction U((x,a),(y,alpha)), a mutation kernel with its
probability, and the rate bounds used for exact thinning.  Rate functions
close over a parameter record so a registry entry can be rebuilt cheaply
with overridden parameters.

Registered models (trait box [0, 4], scalar trait):

``example1``            b = x(4-x)e^{-a},  d = 1/4,  U = c(4-x)  (logistic)
``example1_no_senescence``  same with b = x(4-x)
``example1_age_logistic_kisdi``  U = a * U0(x,y) with Kisdi's kernel
``example2``            b = x(4-x), no natural death, U = a(1+e^{-alpha})U0(x,y)
``constant_rates``      age- and trait-free b, d, u (test model)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError

TRAIT_BOX = (0.0, 4.0)

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _phi(t):
    return np.exp(-0.5 * t * t) / _SQRT2PI


class TruncatedGaussianKernel:
    """Centered Gaussian displacement conditioned to keep x + h inside the box.

    The density is renormalized per resident trait x; normalization and
    truncated moments are exact (Gaussian distribution function), no
    quadrature involved.
    """

    def __init__(self, sigma2: float, box=TRAIT_BOX):
        if sigma2 <= 0:
            raise ValueError("mutation variance must be positive")
        self.sigma2 = float(sigma2)
        self.sigma = float(np.sqrt(sigma2))
        self.box = (float(box[0]), float(box[1]))

    def support(self, x):
        return self.box[0] - x, self.box[1] - x

    def normalization(self, x):
        lo, hi = self.support(x)
        return ndtr(hi / self.sigma) - ndtr(lo / self.sigma)

    def density(self, x, h):
        h = np.asarray(h, dtype=float)
        lo, hi = self.support(x)
        inside = (h >= lo) & (h <= hi)
        vals = _phi(h / self.sigma) / self.sigma / self.normalization(x)
        return np.where(inside, vals, 0.0)

    def sample(self, x, rng: np.random.Generator, size=None):
        lo, hi = self.support(x)
        ulo = ndtr(lo / self.sigma)
        uhi = ndtr(hi / self.sigma)
        u = rng.uniform(ulo, uhi, size=size)
        return self.sigma * ndtri(u)

    def half_second_moments(self, x):
        """(integral of h^2 k over h<0, same over h>0)."""
        z = self.normalization(x)
        lo, hi = self.support(x)

        def piece(bound):
            t = bound / self.sigma
            return self.sigma2 * (ndtr(t) - 0.5 - t * _phi(t))

        return piece(-lo) / z, piece(hi) / z

    def second_moment(self, x):
        neg, pos = self.half_second_moments(x)
        return neg + pos


class KisdiKernel:
    """Asymmetric sigmoid competition in trait: U0(x,y) = C(1 - 1/(1+nu e^{-k(x-y)}))."""

    def __init__(self, C=0.002, nu=1.2, k=4.0):
        self.C = float(C)
        self.nu = float(nu)
        self.k = float(k)

    def u0(self, x, y):
        r = self.nu * np.exp(-self.k * (np.asarray(x, dtype=float) - y))
        return self.C * r / (1.0 + r)

    def du0_dx(self, x, y):
        r = self.nu * np.exp(-self.k * (np.asarray(x, dtype=float) - y))
        return -self.C * self.k * r / (1.0 + r) ** 2

    def max_over(self, box):
        return self.u0(box[0], box[1])

    def min_over(self, box):
        return self.u0(box[1], box[0])


class EtaKernel:
    """Receiver-trait-only 'kernel': U0(x,y) = eta(x) (nonlocal logistic case)."""

    def __init__(self, eta: Callable, deta: Callable, u_min: float, u_max: float):
        self.eta = eta
        self.deta = deta
        self._min = float(u_min)
        self._max = float(u_max)

    def u0(self, x, y):
        return self.eta(x) + 0.0 * np.asarray(y, dtype=float)

    def du0_dx(self, x, y):
        return self.deta(x) + 0.0 * np.asarray(y, dtype=float)

    def max_over(self, box):
        return self._max

    def min_over(self, box):
        return self._min


class SeparableInteraction:
    """Interaction of the form U((x,a),(y,alpha)) = w(a) * s(alpha) * U0(x,y).

    ``age_weight``  w: "one" (w=1) or "linear" (w=a)
    ``senescence``  s: "one" (s=1) or "one_plus_exp" (s = 1+e^{-alpha})
    The separable structure gives O(1) frozen-competition profiles against a
    resident equilibrium and exact cumulative death integrals.
    """

    def __init__(self, age_weight: str, senescence: str, trait_kernel):
        if age_weight not in ("one", "linear"):
            raise ValueError(age_weight)
        if senescence not in ("one", "one_plus_exp"):
            raise ValueError(senescence)
        self.age_weight = age_weight
        self.senescence = senescence
        self.trait_kernel = trait_kernel

    def w(self, a):
        a = np.asarray(a, dtype=float)
        return a if self.age_weight == "linear" else np.ones_like(a)

    def w_cumulative(self, a):
        a = np.asarray(a, dtype=float)
        return 0.5 * a * a if self.age_weight == "linear" else a

    def s(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if self.senescence == "one_plus_exp":
            return 1.0 + np.exp(-alpha)
        return np.ones_like(alpha)

    def __call__(self, x, a, y, alpha):
        return self.w(a) * self.s(alpha) * self.trait_kernel.u0(x, y)

    def dx(self, x, a, y, alpha):
        return self.w(a) * self.s(alpha) * self.trait_kernel.du0_dx(x, y)

    def bound(self, box, age_cap):
        w_hi = age_cap if self.age_weight == "linear" else 1.0
        s_hi = 2.0 if self.senescence == "one_plus_exp" else 1.0
        return w_hi * s_hi * self.trait_kernel.max_over(box)

    def lower_bound(self, box):
        return 0.0 if self.age_weight == "linear" else self.trait_kernel.min_over(box)


class GenericInteraction:
    """Arbitrary interaction kernel; frozen profiles fall back to quadrature."""

    def __init__(self, func, dx=None, u_max=None, u_min=0.0):
        self.func = func
        self._dx = dx
        self.u_max = u_max
        self.u_min = u_min

    def __call__(self, x, a, y, alpha):
        return self.func(x, a, y, alpha)

    def dx(self, x, a, y, alpha, step=4e-5):
        if self._dx is not None:
            return self._dx(x, a, y, alpha)
        return (self.func(x + step, a, y, alpha) - self.func(x - step, a, y, alpha)) / (2 * step)

    def bound(self, box, age_cap):
        if self.u_max is None:
            raise ValueError("generic interaction needs an explicit u_max bound")
        return self.u_max

    def lower_bound(self, box):
        return self.u_min


@dataclass
class ModelSpec:
    """Full model specification; immutable by convention after construction."""

    model_id: str
    params: dict
    birth: Callable
    death: Callable
    interaction: object
    mutation_kernel: TruncatedGaussianKernel
    mutation_prob: float
    trait_box: tuple = TRAIT_BOX
    dim: int = 1
    b_max: float = 4.0
    d_min: float = 0.0
    d_max: float = 0.0
    birth_dx: Optional[Callable] = None
    death_dx: Optional[Callable] = None
    birth_cumulative: Optional[Callable] = None
    death_cumulative: Optional[Callable] = None
    birth_sup: Optional[Callable] = None
    equilibrium_kind: Optional[str] = None
    r0_closed_form: Optional[Callable] = None
    age_cutoff: float = 25.0
    extras: dict = field(default_factory=dict)

    def interaction_bound(self, age_cap):
        return self.interaction.bound(self.trait_box, age_cap)

    def in_box(self, x):
        lo, hi = self.trait_box
        return bool(np.all((np.asarray(x) >= lo) & (np.asarray(x) <= hi)))

    def with_params(self, **overrides):
        """Rebuild this model from its registry entry with overridden parameters."""
        merged = dict(self.params)
        merged.update(overrides)
        return make_model(self.model_id, **merged)


def _quad(x):
    x = np.asarray(x, dtype=float)
    return x * (4.0 - x)


def build_example1(competition=0.001, natural_death=0.25,
                   mutation_prob=0.13, mutation_sigma2=0.15):
    """Logistic senescent model: b = x(4-x)e^{-a}, d = 1/4 + c(4-x) * total mass."""
    c = float(competition)
    d0 = float(natural_death)
    eta = lambda x: c * (4.0 - np.asarray(x, dtype=float))
    deta = lambda x: -c + 0.0 * np.asarray(x, dtype=float)
    inter = SeparableInteraction("one", "one", EtaKernel(eta, deta, 0.0, 4.0 * c))
    return ModelSpec(
        model_id="example1",
        params=dict(competition=c, natural_death=d0,
                    mutation_prob=mutation_prob, mutation_sigma2=mutation_sigma2),
        birth=lambda x, a: _quad(x) * np.exp(-np.asarray(a, dtype=float)),
        death=lambda x, a: d0 + 0.0 * np.asarray(a, dtype=float),
        interaction=inter,
        mutation_kernel=TruncatedGaussianKernel(mutation_sigma2),
        mutation_prob=float(mutation_prob),
        b_max=4.0,
        d_min=d0,
        d_max=d0,
        birth_dx=lambda x, a: (4.0 - 2.0 * np.asarray(x, dtype=float)) * np.exp(-np.asarray(a, dtype=float)),
        death_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_cumulative=lambda x, a: _quad(x) * (1.0 - np.exp(-np.asarray(a, dtype=float))),
        death_cumulative=lambda x, a: d0 * np.asarray(a, dtype=float),
        birth_sup=_quad,
        equilibrium_kind="example1",
        r0_closed_form=lambda x: _quad(x) / (1.0 + d0),
        age_cutoff=25.0,
    )


def build_example1_no_senescence(competition=0.001, natural_death=0.25,
                                 mutation_prob=0.13, mutation_sigma2=0.15):
    """Same logistic population without the e^{-a} senescence factor."""
    c = float(competition)
    d0 = float(natural_death)
    eta = lambda x: c * (4.0 - np.asarray(x, dtype=float))
    deta = lambda x: -c + 0.0 * np.asarray(x, dtype=float)
    inter = SeparableInteraction("one", "one", EtaKernel(eta, deta, 0.0, 4.0 * c))
    return ModelSpec(
        model_id="example1_no_senescence",
        params=dict(competition=c, natural_death=d0,
                    mutation_prob=mutation_prob, mutation_sigma2=mutation_sigma2),
        birth=lambda x, a: _quad(x) + 0.0 * np.asarray(a, dtype=float),
        death=lambda x, a: d0 + 0.0 * np.asarray(a, dtype=float),
        interaction=inter,
        mutation_kernel=TruncatedGaussianKernel(mutation_sigma2),
        mutation_prob=float(mutation_prob),
        b_max=4.0,
        d_min=d0,
        d_max=d0,
        birth_dx=lambda x, a: (4.0 - 2.0 * np.asarray(x, dtype=float)) + 0.0 * np.asarray(a, dtype=float),
        death_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_cumulative=lambda x, a: _quad(x) * np.asarray(a, dtype=float),
        death_cumulative=lambda x, a: d0 * np.asarray(a, dtype=float),
        birth_sup=_quad,
        equilibrium_kind="no_senescence",
        r0_closed_form=lambda x: _quad(x) / d0,
        age_cutoff=30.0,
    )


def build_example1_age_logistic_kisdi(C=0.002, nu=1.2, k=4.0, natural_death=0.25,
                                      mutation_prob=0.13, mutation_sigma2=0.15):
    """Senescent birth with age-logistic Kisdi competition: death 1/4 + a U0(x,y)*mass."""
    d0 = float(natural_death)
    kern = KisdiKernel(C, nu, k)
    inter = SeparableInteraction("linear", "one", kern)
    return ModelSpec(
        model_id="example1_age_logistic_kisdi",
        params=dict(C=C, nu=nu, k=k, natural_death=d0,
                    mutation_prob=mutation_prob, mutation_sigma2=mutation_sigma2),
        birth=lambda x, a: _quad(x) * np.exp(-np.asarray(a, dtype=float)),
        death=lambda x, a: d0 + 0.0 * np.asarray(a, dtype=float),
        interaction=inter,
        mutation_kernel=TruncatedGaussianKernel(mutation_sigma2),
        mutation_prob=float(mutation_prob),
        b_max=4.0,
        d_min=d0,
        d_max=d0,
        birth_dx=lambda x, a: (4.0 - 2.0 * np.asarray(x, dtype=float)) * np.exp(-np.asarray(a, dtype=float)),
        death_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_cumulative=lambda x, a: _quad(x) * (1.0 - np.exp(-np.asarray(a, dtype=float))),
        death_cumulative=lambda x, a: d0 * np.asarray(a, dtype=float),
        birth_sup=_quad,
        equilibrium_kind="kisdi_age_logistic",
        r0_closed_form=lambda x: _quad(x) / (1.0 + d0),
        age_cutoff=25.0,
    )


def build_example2(C=0.002, nu=1.2, k=4.0, mutation_prob=0.13, mutation_sigma2=0.15):
    """No natural death; interaction a(1+e^{-alpha})U0(x,y) with Kisdi's U0."""
    kern = KisdiKernel(C, nu, k)
    inter = SeparableInteraction("linear", "one_plus_exp", kern)

    def r0(x):
        x = np.asarray(x, dtype=float)
        return np.where(_quad(x) > 0.0, np.inf, 0.0)

    return ModelSpec(
        model_id="example2",
        params=dict(C=C, nu=nu, k=k,
                    mutation_prob=mutation_prob, mutation_sigma2=mutation_sigma2),
        birth=lambda x, a: _quad(x) + 0.0 * np.asarray(a, dtype=float),
        death=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        interaction=inter,
        mutation_kernel=TruncatedGaussianKernel(mutation_sigma2),
        mutation_prob=float(mutation_prob),
        b_max=4.0,
        d_min=0.0,
        d_max=0.0,
        birth_dx=lambda x, a: (4.0 - 2.0 * np.asarray(x, dtype=float)) + 0.0 * np.asarray(a, dtype=float),
        death_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_cumulative=lambda x, a: _quad(x) * np.asarray(a, dtype=float),
        death_cumulative=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_sup=_quad,
        equilibrium_kind="example2",
        r0_closed_form=r0,
        age_cutoff=25.0,
    )


def build_constant_rates(b=2.0, d=1.0, u=0.0, mutation_prob=0.0, mutation_sigma2=0.15):
    """Age- and trait-independent rates; the no-age reduction test model."""
    b0, d0, u0 = float(b), float(d), float(u)
    inter = SeparableInteraction(
        "one", "one", EtaKernel(lambda x: u0 + 0.0 * np.asarray(x, dtype=float),
                                lambda x: 0.0 * np.asarray(x, dtype=float), u0, u0))
    return ModelSpec(
        model_id="constant_rates",
        params=dict(b=b0, d=d0, u=u0,
                    mutation_prob=mutation_prob, mutation_sigma2=mutation_sigma2),
        birth=lambda x, a: b0 + 0.0 * np.asarray(a, dtype=float),
        death=lambda x, a: d0 + 0.0 * np.asarray(a, dtype=float),
        interaction=inter,
        mutation_kernel=TruncatedGaussianKernel(mutation_sigma2),
        mutation_prob=float(mutation_prob),
        b_max=b0,
        d_min=d0,
        d_max=d0,
        birth_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        death_dx=lambda x, a: 0.0 * np.asarray(a, dtype=float),
        birth_cumulative=lambda x, a: b0 * np.asarray(a, dtype=float),
        death_cumulative=lambda x, a: d0 * np.asarray(a, dtype=float),
        birth_sup=lambda x: b0 + 0.0 * np.asarray(x, dtype=float),
        equilibrium_kind="no_age",
        r0_closed_form=lambda x: (b0 / d0) + 0.0 * np.asarray(x, dtype=float),
        age_cutoff=max(25.0, 40.0 / d0) if d0 > 0 else 25.0,
    )


REGISTRY = {
    "example1": build_example1,
    "example1_no_senescence": build_example1_no_senescence,
    "example1_age_logistic_kisdi": build_example1_age_logistic_kisdi,
    "example2": build_example2,
    "constant_rates": build_constant_rates,
}


def make_model(model_id: str, **overrides) -> ModelSpec:
    """Resolve a registry tag (plus parameter overrides) to a ModelSpec."""
    try:
        builder = REGISTRY[model_id]
    except KeyError:
        raise ConfigError(f"unknown model id {model_id!r}; known: {sorted(REGISTRY)}") from None
    try:
        return builder(**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad parameter override for {model_id!r}: {exc}") from None


def spot_check_bounds(model: ModelSpec, n_trait=100, n_age=100, age_cap=None, rng=None):
    """Sample rates on a (trait, age) grid and check the declared bounds.

    Returns a dict of booleans; used by tests and by the experiment runner's
    config validation step.
    """
    age_cap = age_cap if age_cap is not None else model.age_cutoff
    lo, hi = model.trait_box
    xs = np.linspace(lo, hi, n_trait)
    ages = np.linspace(0.0, age_cap, n_age)
    b_ok = d_ok = u_ok = True
    u_hi = model.interaction_bound(age_cap)
    u_lo = model.interaction.lower_bound(model.trait_box)
    rng = rng or np.random.default_rng(0)
    pair_traits = rng.uniform(lo, hi, size=16)
    pair_ages = rng.uniform(0.0, age_cap, size=16)
    for x in xs:
        b = np.asarray(model.birth(x, ages), dtype=float)
        d = np.asarray(model.death(x, ages), dtype=float)
        b_ok &= bool(np.all((b >= 0.0) & (b <= model.b_max + 1e-12)))
        d_ok &= bool(np.all((d >= model.d_min - 1e-12) & (d <= model.d_max + 1e-12)))
    for x in xs[:: max(1, n_trait // 10)]:
        for a in ages[:: max(1, n_age // 8)]:
            u = np.asarray(model.interaction(x, a, pair_traits, pair_ages), dtype=float)
            u_ok &= bool(np.all((u >= u_lo - 1e-12) & (u <= u_hi + 1e-12)))
    return {"birth": b_ok, "death": d_ok, "interaction": u_ok,
            "all": b_ok and d_ok and u_ok}
