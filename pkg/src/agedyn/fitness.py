"""Invasion analysis against a frozen resident equilibrium.

The central object is the scalar equation in z

    F(z, y, x) = integral b(y,a) exp((z-1) B(y,a) - D(y,a,x)) da - 1 = 0,

with B the cumulative birth rate and D the cumulative frozen death rate.
F is strictly increasing in z with F(0) < 0, so it has a unique root
g(y, x) on the positive axis; the mutant extinction probability is
z0 = min(g, 1) and the invasion fitness is 1 - z0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demography import (AgeRule, Equilibrium, FrozenDeathRate,
                         net_reproduction_rate, stationary_equilibrium)
from .errors import NumericError, ViabilityError
from .models import ModelSpec
from .quadrature import cumulative_on

_TAIL_EXPONENT = 36.0  # e^-36 ~ 2e-16: quadrature cutoff criterion
_Z_TOL = 1e-12


def _birth_batch(model, ys, ages):
    return np.asarray(model.birth(ys[:, None], ages[None, :]), dtype=float)


def _birth_cum_batch(model, ys, ages):
    if model.birth_cumulative is not None:
        return np.asarray(model.birth_cumulative(ys[:, None], ages[None, :]), dtype=float)
    return np.stack([cumulative_on(ages, lambda a, y=y: model.birth(y, a)) for y in ys])


def _death_cum_batch(frozen: FrozenDeathRate, ys, ages):
    model = frozen.model
    if model.death_cumulative is not None:
        base = np.asarray(model.death_cumulative(ys[:, None], ages[None, :]), dtype=float)
    else:
        base = np.stack([cumulative_on(ages, lambda a, y=y: model.death(y, a)) for y in ys])
    if frozen._sep is not None:
        coef = np.asarray(frozen.competition_coefficient(ys), dtype=float)
        return base + frozen._sep.w_cumulative(ages)[None, :] * coef[:, None]
    return base + np.stack([
        cumulative_on(ages, lambda a, y=y: frozen.rate(y, a)
                      - np.asarray(model.death(y, a), dtype=float))
        for y in ys])


class FitnessSolver:
    """Quadrature workspace plus root-finding for one resident equilibrium."""

    def __init__(self, model: ModelSpec, resident_eq: Equilibrium,
                 panels: int = 32, order: int = 10, z_cap: float = 64.0):
        if resident_eq.trivial:
            raise ViabilityError("fitness analysis needs a nontrivial resident equilibrium")
        self.model = model
        self.eq = resident_eq
        self.frozen = FrozenDeathRate(model, resident_eq)
        self.panels = panels
        self.order = order
        self.z_cap = float(z_cap)

    # -- workspace ---------------------------------------------------------

    def _age_cutoff(self, ys, z_hi):
        """Smallest doubling of the base cutoff where every integrand has
        decayed by e^-36 relative to its peak bound."""
        base = max(self.model.age_cutoff, self.eq.density.grid.a_max, 4.0)
        a = base
        probe = np.linspace(1e-9, 1.0, 8)
        for _ in range(16):
            ages = a * probe
            bcum = _birth_cum_batch(self.model, ys, ages)
            dcum = _death_cum_batch(self.frozen, ys, ages)
            expo = max(0.0, z_hi - 1.0) * bcum - dcum
            decay = expo[:, -1] - expo.max(axis=1)
            if np.all(decay <= -_TAIL_EXPONENT):
                return a
            a *= 1.6
        raise NumericError("fitness quadrature: age cutoff did not converge "
                           f"(z_hi={z_hi}, last a_max={a:.1f})")

    def workspace(self, ys, z_hi=1.0, stretch=1.0):
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        a_max = stretch * self._age_cutoff(ys, z_hi)
        n_panels = max(self.panels, int(np.ceil(a_max / 2.0)))
        rule = AgeRule(a_max, panels=n_panels, order=self.order)
        ages = rule.nodes
        return {
            "ys": ys,
            "rule": rule,
            "b": _birth_batch(self.model, ys, ages),
            "bcum": _birth_cum_batch(self.model, ys, ages),
            "dcum": _death_cum_batch(self.frozen, ys, ages),
        }

    # -- F and its z-derivative --------------------------------------------

    @staticmethod
    def _exponent(ws, z):
        expo = (np.asarray(z, dtype=float)[:, None] - 1.0) * ws["bcum"] - ws["dcum"]
        # clipping keeps divergent-z probes finite: they read as huge positive
        # F, which only tightens the bracket from above
        return np.clip(expo, None, 600.0)

    def _f_and_fp(self, ws, z):
        ex = ws["b"] * np.exp(self._exponent(ws, z))
        w = ws["rule"].weights
        return ex @ w - 1.0, (ex * ws["bcum"]) @ w

    def _tail_decayed(self, ws, z, threshold=25.0):
        expo = self._exponent(ws, z)
        return expo[:, -1] - expo.max(axis=1) <= -threshold

    def invasion_integrals(self, ys):
        """integral b(y,a) e^{-D(y,a,x)} da, vectorized over mutants."""
        ws = self.workspace(ys, z_hi=1.0)
        f, _ = self._f_and_fp(ws, np.ones(ws["ys"].size))
        vals = f + 1.0
        return vals if np.ndim(ys) else float(vals[0])

    # -- roots ---------------------------------------------------------------

    def _solve(self, ws):
        n = ws["ys"].size
        hi = np.ones(n)
        f_hi, _ = self._f_and_fp(ws, hi)
        while np.any(f_hi <= 0.0):
            mask = f_hi <= 0.0
            hi[mask] *= 2.0
            if np.any(hi > self.z_cap):
                raise NumericError(
                    f"no root bracket below z={self.z_cap}; mutants deeply subcritical "
                    f"(min residual {float(f_hi.min()):.3e})")
            f_hi, _ = self._f_and_fp(ws, hi)
        lo = np.zeros(n)
        f_lo, _ = self._f_and_fp(ws, lo)
        if np.any(f_lo >= 0.0):
            raise NumericError("F(0) >= 0: birth rate vanishes identically for some mutant")
        z = np.minimum(np.ones(n), 0.5 * (lo + hi))
        for _ in range(100):
            f, fp = self._f_and_fp(ws, z)
            hi = np.where(f > 0.0, np.minimum(hi, z), hi)
            lo = np.where(f < 0.0, np.maximum(lo, z), lo)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                z_new = z - f / fp
            bad = ~np.isfinite(z_new) | (z_new <= lo) | (z_new >= hi)
            z_new = np.where(bad, 0.5 * (lo + hi), z_new)
            done = (np.abs(z_new - z) < _Z_TOL * (1.0 + np.abs(z_new))) | (hi - lo < _Z_TOL)
            z = z_new
            if np.all(done):
                return z
        raise NumericError(f"g-root iteration did not converge: spread {(hi - lo).max():.2e}")

    def g_roots(self, ys):
        """Unconstrained roots g(y, x) of F = 0, vectorized over mutants.

        The quadrature cutoff is validated at the solved roots; workspaces are
        stretched and the solve repeated if any integrand has not decayed.
        """
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        stretch = 1.0
        for _ in range(5):
            ws = self.workspace(ys, z_hi=1.0, stretch=stretch)
            z = self._solve(ws)
            if np.all(self._tail_decayed(ws, z)):
                return z
            stretch *= 2.0
        raise NumericError("fitness quadrature tail not converged at the solved roots")

    def g_root(self, y):
        return float(self.g_roots([y])[0])

    def z0_batch(self, ys):
        """Extinction probabilities for an array of mutants (roots only where invadable)."""
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        inv = np.atleast_1d(self.invasion_integrals(ys))
        z0 = np.ones(ys.size)
        mask = inv > 1.0
        if np.any(mask):
            roots = self.g_roots(ys[mask])
            z0[mask] = np.minimum(roots, 1.0)
        return z0


@dataclass
class FitnessReport:
    resident: float
    mutant: float
    invasion_integral: float
    z0: float
    invadable: bool
    g_value: float


def invasion_integral(model: ModelSpec, resident_eq: Equilibrium, y) -> float:
    return float(FitnessSolver(model, resident_eq).invasion_integrals(float(y)))


def extinction_probability(model: ModelSpec, resident_eq: Equilibrium, y,
                           compute_g: bool = True) -> FitnessReport:
    """z0(y, x): 1 when the invasion integral is at most 1, else the F-root."""
    solver = FitnessSolver(model, resident_eq)
    y = float(y)
    inv = float(solver.invasion_integrals(y))
    if inv > 1.0:
        g = solver.g_root(y)
        z0 = min(g, 1.0)
    elif compute_g:
        try:
            g = solver.g_root(y)
        except NumericError:  # deeply subcritical: root above the bracket cap
            g = np.inf
        z0 = 1.0
    else:
        g, z0 = 1.0, 1.0
    return FitnessReport(resident=resident_eq.trait, mutant=y, invasion_integral=inv,
                         z0=z0, invadable=inv > 1.0, g_value=g)


# ---------------------------------------------------------------------------
# selection gradient
# ---------------------------------------------------------------------------

def fitness_gradient_generic(model: ModelSpec, x, eq: Equilibrium = None,
                             fd_step=None) -> float:
    """d g/d mutant-trait on the diagonal, from the explicit ratio formula.

    Works for any scalar-trait model with a nontrivial equilibrium; trait
    derivatives of the rates come from the model when available, otherwise
    central differences with step 1e-5 * trait range.
    """
    if model.dim != 1:
        raise ViabilityError("gradient formula is scalar-trait only")
    x = float(x)
    eq = eq or stationary_equilibrium(model, x)
    if eq.trivial:
        raise ViabilityError(f"trait {x} is not viable")
    solver = FitnessSolver(model, eq)
    ws = solver.workspace(np.array([x]), z_hi=1.0)
    ages = ws["rule"].nodes
    w = ws["rule"].weights
    b = ws["b"][0]
    bcum = ws["bcum"][0]
    surv = np.exp(-ws["dcum"][0])

    lo, hi = model.trait_box
    step = fd_step if fd_step is not None else 1e-5 * (hi - lo)
    if model.birth_dx is not None:
        db = np.asarray(model.birth_dx(x, ages), dtype=float)
    else:
        db = (np.asarray(model.birth(x + step, ages), dtype=float)
              - np.asarray(model.birth(x - step, ages), dtype=float)) / (2 * step)

    frozen = solver.frozen
    if model.death_dx is not None:
        dd = np.asarray(model.death_dx(x, ages), dtype=float)
    else:
        dd = (np.asarray(model.death(x + step, ages), dtype=float)
              - np.asarray(model.death(x - step, ages), dtype=float)) / (2 * step)
    dcomp = np.asarray(frozen.dx_competition(ages), dtype=float)
    # cumulative of (d/dy natural death + d/dy competition) along age
    if frozen._sep is not None and model.death_dx is not None and np.all(dd == dd[0]):
        sep = frozen._sep
        pcum = dd[0] * ages + sep.w_cumulative(ages) * float(
            sep.trait_kernel.du0_dx(x, x)) * frozen._smass
    else:
        fine = np.linspace(0.0, ages[-1], 4096)
        if model.death_dx is not None:
            dd_fine = np.asarray(model.death_dx(x, fine), dtype=float)
        else:
            dd_fine = (np.asarray(model.death(x + step, fine), dtype=float)
                       - np.asarray(model.death(x - step, fine), dtype=float)) / (2 * step)
        q = dd_fine + np.asarray(frozen.dx_competition(fine), dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (q[1:] + q[:-1]) * np.diff(fine))])
        pcum = np.interp(ages, fine, cum)

    numerator = float(((db - b * pcum) * surv) @ w)
    denominator = float((b * bcum * surv) @ w)
    if denominator == 0.0:
        raise NumericError("gradient denominator vanished (birth rate identically zero)")
    return -numerator / denominator


# ---------------------------------------------------------------------------
# singularity classification
# ---------------------------------------------------------------------------

@dataclass
class SingularityReport:
    x_star: float
    verdict: str                 # "ESS" | "branching-point" | "other"
    curvature_mutant: float      # quadratic coefficient of eps -> g(x*+eps, x*)
    curvature_resident: float    # quadratic coefficient of eps -> g(x*, x*+eps)
    gradient: float


def _richardson_second(fn, center, h):
    def second(hh):
        return (fn(center + hh) - 2.0 * fn(center) + fn(center - hh)) / (hh * hh)

    d1 = second(h)
    d2 = second(0.5 * h)
    return (4.0 * d2 - d1) / 3.0


def classify_singularity_from_g(g_func, x_star, fd_step=4e-3, grad_tol=1e-4):
    """Classify a singular trait from a fitness-root function g(y, x).

    The returned curvatures follow the worked examples' convention: they are
    the quadratic Taylor coefficients of g along each slot (half the plain
    second derivatives), which is also how the branching thresholds are
    quoted.  Classification: positive mutant curvature means no nearby mutant
    survives (ESS); negative mutant curvature with an even more negative
    resident curvature is a branching point.
    """
    x_star = float(x_star)
    grad = (g_func(x_star + fd_step, x_star) - g_func(x_star - fd_step, x_star)) / (2 * fd_step)
    if abs(grad) > grad_tol * max(1.0, abs(x_star)):
        raise ViabilityError(f"not a singularity: diagonal gradient {grad:.3e} at {x_star}")
    gyy = _richardson_second(lambda y: g_func(y, x_star), x_star, fd_step)
    gxx = _richardson_second(lambda x: g_func(x_star, x), x_star, fd_step)
    c_mut = 0.5 * gyy
    c_res = 0.5 * gxx
    tol = 1e-6
    if c_mut > tol:
        verdict = "ESS"
    elif c_mut < -tol and c_res < c_mut:
        verdict = "branching-point"
    else:
        verdict = "other"
    return SingularityReport(x_star=x_star, verdict=verdict,
                             curvature_mutant=c_mut, curvature_resident=c_res,
                             gradient=float(grad))


def classify_singularity(model: ModelSpec, x_star, fd_step=4e-3, grad_tol=1e-4):
    eq_cache = {}

    def g_func(y, x):
        if x not in eq_cache:
            eq_cache[x] = stationary_equilibrium(model, x)
        return FitnessSolver(model, eq_cache[x]).g_root(y)

    return classify_singularity_from_g(g_func, x_star, fd_step=fd_step, grad_tol=grad_tol)


# ---------------------------------------------------------------------------
# pairwise invasibility plot
# ---------------------------------------------------------------------------

@dataclass
class PipGrid:
    residents: np.ndarray
    mutants: np.ndarray
    z0: np.ndarray               # shape (mutants, residents); NaN where resident not viable
    viable: np.ndarray           # per-resident viability mask
    model_id: str

    @property
    def sign(self):
        """+1 where the mutant invades, -1 where it cannot, NaN where untested."""
        with np.errstate(invalid="ignore"):
            s = np.where(self.z0 < 1.0, 1.0, -1.0)
        s = np.where(np.isnan(self.z0), np.nan, s)
        return s


def pip(model: ModelSpec, residents, mutants=None) -> PipGrid:
    """z0 over the (resident, mutant) grid; non-viable residents marked NaN."""
    residents = np.asarray(residents, dtype=float)
    mutants = residents.copy() if mutants is None else np.asarray(mutants, dtype=float)
    z0 = np.full((mutants.size, residents.size), np.nan)
    viable = np.zeros(residents.size, dtype=bool)
    for j, x in enumerate(residents):
        eq = stationary_equilibrium(model, float(x))
        if eq.trivial:
            continue
        viable[j] = True
        solver = FitnessSolver(model, eq)
        z0[:, j] = solver.z0_batch(mutants)
    return PipGrid(residents=residents, mutants=mutants, z0=z0, viable=viable,
                   model_id=model.model_id)


# ---------------------------------------------------------------------------
# closed-form invasion boundaries (oracles for the PIP)
# ---------------------------------------------------------------------------

def invasion_boundary_example1(x, natural_death=0.25):
    """Non-diagonal boundary of the invadable set for the senescent logistic
    model.  Values below the trait box mean no downward boundary within it."""
    x = np.asarray(x, dtype=float)
    if np.any(x >= 4.0):
        raise ValueError("boundary defined for x < 4")
    return 4.0 - (1.0 + natural_death) / (4.0 - x)


def invasion_boundary_no_senescence(x, natural_death=0.25):
    x = np.asarray(x, dtype=float)
    if np.any(x >= 4.0):
        raise ValueError("boundary defined for x < 4")
    return 4.0 - natural_death / (4.0 - x)
