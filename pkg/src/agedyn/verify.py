"""Independent oracles for the invasion fitness machinery.

Linear age-structured birth-death processes simulated exactly (lifetime by
inverse survival sampling, offspring as an inhomogeneous Poisson process over
the lifetime), the Malthusian exponent, and the generation-tree extinction
probability solved from the offspring generating function.  These three
paths share no code with the F-root solver in ``fitness``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.stats import beta as beta_dist

from .errors import NumericError
from .quadrature import AgeRule

_EXHAUST = 40.0  # survival beyond Dcum = 40 is below 4e-18


@dataclass
class LinearBranchingSpec:
    """One-type linear process: birth rate b(a), death rate delta(a)."""

    birth_rate: Callable
    death_rate: Callable
    birth_cumulative: Optional[Callable] = None
    death_cumulative: Optional[Callable] = None
    label: str = ""

    def tables(self, n=8192):
        """Monotone lookup tables for cumulative rates and their inverses."""
        if getattr(self, "_tables", None) is not None:
            return self._tables
        a_hi = 4.0
        for _ in range(40):
            if self._dcum_scalar(a_hi) >= _EXHAUST:
                break
            a_hi *= 1.5
        else:
            raise NumericError("death rate too weak: no finite lifetime table")
        ages = np.linspace(0.0, a_hi, n)
        dcum = self._cum(self.death_rate, self.death_cumulative, ages)
        bcum = self._cum(self.birth_rate, self.birth_cumulative, ages)
        self._tables = {"ages": ages, "dcum": dcum, "bcum": bcum, "a_hi": a_hi}
        return self._tables

    def _cum(self, rate, cum, ages):
        if cum is not None:
            return np.asarray(cum(ages), dtype=float)
        vals = np.asarray(rate(ages), dtype=float)
        return np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(ages))])

    def _dcum_scalar(self, a):
        if self.death_cumulative is not None:
            return float(self.death_cumulative(a))
        grid = np.linspace(0.0, a, 2048)
        vals = np.asarray(self.death_rate(grid), dtype=float)
        return float(np.trapezoid(vals, grid))

    def sample_lifetime(self, exp_draws):
        t = self.tables()
        return np.interp(exp_draws, t["dcum"], t["ages"], right=t["a_hi"])

    def birth_cum_at(self, a):
        t = self.tables()
        return np.interp(a, t["ages"], t["bcum"])

    def sample_birth_ages(self, upper, count, rng):
        t = self.tables()
        u = rng.uniform(0.0, upper, size=count)
        return np.interp(u, t["bcum"], t["ages"])


def spec_from_invasion(model, resident_eq, y) -> LinearBranchingSpec:
    """The comparison process of the invasion analysis: rates (b(y,.), d^(y,.,x))."""
    from .demography import FrozenDeathRate

    frozen = FrozenDeathRate(model, resident_eq)
    y = float(y)
    return LinearBranchingSpec(
        birth_rate=lambda a: np.asarray(model.birth(y, a), dtype=float),
        death_rate=lambda a: np.asarray(frozen.rate(y, a), dtype=float),
        birth_cumulative=(None if model.birth_cumulative is None
                          else (lambda a: np.asarray(model.birth_cumulative(y, a), dtype=float))),
        death_cumulative=lambda a: np.asarray(frozen.cumulative(y, a), dtype=float),
        label=f"mutant {y} in resident {resident_eq.trait}",
    )


# ---------------------------------------------------------------------------
# Monte-Carlo replication harness
# ---------------------------------------------------------------------------

def clopper_pearson(successes, trials, confidence=0.99):
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta_dist.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def _run_replicate(spec, rng, t_max, pop_cap, sample_times):
    """Exact simulation of one lineage started from a single age-0 individual.

    Events are processed chronologically off a heap; each individual draws an
    exact lifetime and an inhomogeneous-Poisson brood over it at birth.
    Returns (extinct, peak population, population at sample times).
    """
    heap = [(0.0, 0)]  # (time, kind): kind 0 birth, 1 death
    pop = 0
    peak = 0
    samples = np.zeros(len(sample_times))
    sample_idx = 0
    while heap:
        t, kind = heapq.heappop(heap)
        while sample_idx < len(sample_times) and t > sample_times[sample_idx]:
            samples[sample_idx] = pop
            sample_idx += 1
        if kind == 0:
            pop += 1
            peak = max(peak, pop)
            lifetime = float(spec.sample_lifetime(rng.exponential()))
            horizon = t_max - t
            window = min(lifetime, horizon)
            if lifetime <= horizon:
                heapq.heappush(heap, (t + lifetime, 1))
            upper = float(spec.birth_cum_at(window))
            brood = rng.poisson(upper)
            if brood:
                for age in spec.sample_birth_ages(upper, brood, rng):
                    heapq.heappush(heap, (t + float(age), 0))
            if pop >= pop_cap:
                while sample_idx < len(sample_times):
                    samples[sample_idx] = pop
                    sample_idx += 1
                return False, peak, samples
        else:
            pop -= 1
            if pop == 0:
                while sample_idx < len(sample_times):
                    samples[sample_idx] = 0.0
                    sample_idx += 1
                return True, peak, samples
    while sample_idx < len(sample_times):
        samples[sample_idx] = pop
        sample_idx += 1
    return pop == 0, peak, samples


@dataclass
class BranchingReport:
    n_replicates: int
    extinctions: int
    frequency: float
    ci99: tuple
    sample_times: tuple
    survivor_populations: np.ndarray  # (n_survivors, len(sample_times))


def simulate_linear_branching(spec: LinearBranchingSpec, n_replicates, t_max=50.0,
                              rng_seed=0, pop_cap=10_000, sample_times=(),
                              confidence=0.99) -> BranchingReport:
    """Extinction frequency of the linear process with a survival threshold.

    A replicate counts as surviving when it reaches ``pop_cap`` individuals or
    is still alive at ``t_max``; misclassification decays like z0^pop_cap, so
    the default threshold is far below Monte-Carlo resolution.
    """
    if n_replicates < 1:
        raise ValueError("need at least one replicate")
    streams = np.random.SeedSequence(rng_seed).spawn(n_replicates)
    sample_times = tuple(sorted(sample_times))
    extinct = 0
    survivor_rows = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        died, _, samples = _run_replicate(spec, rng, t_max, pop_cap, sample_times)
        if died:
            extinct += 1
        else:
            survivor_rows.append(samples)
    freq = extinct / n_replicates
    return BranchingReport(
        n_replicates=n_replicates, extinctions=extinct, frequency=freq,
        ci99=clopper_pearson(extinct, n_replicates, confidence),
        sample_times=sample_times,
        survivor_populations=(np.array(survivor_rows) if survivor_rows
                              else np.zeros((0, len(sample_times)))),
    )


# ---------------------------------------------------------------------------
# Malthusian exponent
# ---------------------------------------------------------------------------

def _spec_rule(spec: LinearBranchingSpec):
    t = spec.tables()
    rule = AgeRule(t["a_hi"], panels=64, order=10)
    if spec.birth_cumulative is not None:
        bcum = np.asarray(spec.birth_cumulative(rule.nodes), dtype=float)
    else:
        bcum = np.interp(rule.nodes, t["ages"], t["bcum"])
    if spec.death_cumulative is not None:
        dcum = np.asarray(spec.death_cumulative(rule.nodes), dtype=float)
    else:
        dcum = np.interp(rule.nodes, t["ages"], t["dcum"])
    b = np.asarray(spec.birth_rate(rule.nodes), dtype=float)
    d = np.asarray(spec.death_rate(rule.nodes), dtype=float)
    return rule, b, d, bcum, dcum


def malthusian_exponent(spec: LinearBranchingSpec) -> float:
    """Unique lambda > 0 with integral b(a) e^{-lambda a - Dcum(a)} da = 1."""
    rule, b, _, _, dcum = _spec_rule(spec)

    def characteristic(lam):
        return float(rule.integrate(b * np.exp(-lam * rule.nodes - dcum))) - 1.0

    if characteristic(0.0) <= 0.0:
        raise NumericError("subcritical process: no positive Malthusian exponent")
    hi = 1.0
    while characteristic(hi) > 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise NumericError("Malthusian exponent bracket failed")
    return brentq(characteristic, 0.0, hi, xtol=1e-12, rtol=1e-14)


# ---------------------------------------------------------------------------
# generation-tree extinction probability
# ---------------------------------------------------------------------------

def generation_gw_extinction(spec: LinearBranchingSpec) -> float:
    """Smallest fixed point on [0,1] of the offspring generating function.

    G(z) = integral e^{(z-1) Bcum(a)} delta(a) e^{-Dcum(a)} da; when the death
    rate vanishes at age zero the integrated-by-parts form is used instead.
    Solved by bracketing on G(z) - z, independent of the F-root path.
    """
    rule, b, d, bcum, dcum = _spec_rule(spec)
    use_parts = float(np.asarray(spec.death_rate(0.0), dtype=float)) < 1e-12

    def G(z):
        if use_parts:
            vals = (z - 1.0) * b * np.exp((z - 1.0) * bcum - dcum)
            return 1.0 + float(rule.integrate(vals))
        vals = d * np.exp((z - 1.0) * bcum - dcum)
        return float(rule.integrate(vals))

    h = lambda z: G(z) - z
    z_probe = 1.0 - 1e-9
    if h(z_probe) >= 0.0:
        return 1.0
    if h(0.0) <= 0.0:  # G(0) = P(no children) = 0: every line is immortal
        return 0.0
    return brentq(h, 0.0, z_probe, xtol=1e-14, rtol=8.9e-16)
