"""Deterministic large-population demography.

Monomorphic and dimorphic transport equations integrated along
characteristics (time step locked to the age step, so advection is exact),
stationary equilibria with closed forms for the registered models, net
reproduction rate, frozen death rates against a resident equilibrium, and
the logistic non-coexistence diagnosis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.special import erfcx, ndtr

from .errors import NumericError, ViabilityError
from .models import ModelSpec, SeparableInteraction
from .quadrature import AgeRule, cumulative_on

_SQRT_PI_OVER_2 = np.sqrt(np.pi / 2.0)


def gauss_linear_tail(mu, gam):
    """integral over [0, inf) of exp(-mu*a - gam*a^2/2).

    Evaluated through erfcx so it stays accurate when gam -> 0 (where the
    value tends to 1/mu) and when mu/sqrt(gam) is large.
    """
    mu = np.asarray(mu, dtype=float)
    gam = np.asarray(gam, dtype=float)
    out = np.empty(np.broadcast(mu, gam).shape or (1,))
    mu_b, gam_b = np.broadcast_arrays(mu, gam)
    flat_mu = mu_b.ravel()
    flat_gam = gam_b.ravel()
    flat = out.ravel()
    pos = flat_gam > 0
    flat[pos] = (_SQRT_PI_OVER_2 / np.sqrt(flat_gam[pos])
                 * erfcx(flat_mu[pos] / np.sqrt(2.0 * flat_gam[pos])))
    flat[~pos] = 1.0 / flat_mu[~pos]
    if np.ndim(mu) == 0 and np.ndim(gam) == 0:
        return float(flat[0])
    return out.reshape(mu_b.shape)


def gaussian_cdf(t):
    return ndtr(t)


@dataclass(frozen=True)
class AgeGrid:
    a_max: float
    n_cells: int = 2000

    def __post_init__(self):
        if self.a_max <= 0 or self.n_cells < 16:
            raise ValueError("need a_max > 0 and n_cells >= 16")

    @property
    def spacing(self) -> float:
        return self.a_max / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.a_max, self.n_cells + 1)


class AgeDensity:
    """Nonnegative density values on an age grid.

    ``kind='node'`` values live on the grid nodes (trapezoid mass);
    ``kind='cell'`` values are per-cell densities (Riemann mass), used by
    empirical age histograms.
    """

    def __init__(self, grid: AgeGrid, values, kind: str = "node"):
        values = np.asarray(values, dtype=float)
        expected = grid.n_cells + 1 if kind == "node" else grid.n_cells
        if values.shape != (expected,):
            raise ValueError(f"expected {expected} values for kind={kind!r}")
        if np.any(values < -1e-14):
            raise ValueError("density values must be nonnegative")
        self.grid = grid
        self.values = np.maximum(values, 0.0)
        self.kind = kind

    def mass(self) -> float:
        if self.kind == "node":
            return float(np.trapezoid(self.values, dx=self.grid.spacing))
        return float(self.values.sum() * self.grid.spacing)

    @classmethod
    def from_function(cls, grid: AgeGrid, fn):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float))

    @classmethod
    def zero(cls, grid: AgeGrid, kind: str = "node"):
        n = grid.n_cells + 1 if kind == "node" else grid.n_cells
        return cls(grid, np.zeros(n), kind)


@dataclass
class Equilibrium:
    """Stationary state of the monomorphic equation for one trait."""

    trait: float
    mass: float
    density: AgeDensity
    trivial: bool
    model_id: str = ""
    density0: float = 0.0
    density_fn: Optional[Callable] = None
    weighted: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def weighted_mass(self, interaction: SeparableInteraction) -> float:
        """integral of s(alpha) m^(x,alpha) d alpha for the kernel's senescence factor."""
        tag = interaction.senescence
        if tag in self.weighted:
            return self.weighted[tag]
        nodes = self.density.grid.nodes
        val = float(np.trapezoid(interaction.s(nodes) * self.density.values, nodes))
        self.weighted[tag] = val
        return val


class FrozenDeathRate:
    """Death rate of a mutant individual in the frozen resident equilibrium.

    rate(y, a) = d(y, a) + integral of U((y,a),(x,alpha)) m^(x,alpha) d alpha.
    For separable kernels the competition profile is w(a) * U0(y,x) * S with a
    closed cumulative; otherwise it is quadrature against the gridded density.
    """

    def __init__(self, model: ModelSpec, resident_eq: Equilibrium):
        if resident_eq.trivial:
            raise ViabilityError("frozen death rate needs a nontrivial resident equilibrium")
        self.model = model
        self.eq = resident_eq
        self.resident = resident_eq.trait
        inter = model.interaction
        if isinstance(inter, SeparableInteraction):
            self._smass = resident_eq.weighted_mass(inter)
            self._sep = inter
        else:
            self._smass = None
            self._sep = None

    def competition_coefficient(self, y):
        """U0(y, x) * S for separable kernels (the age-free factor)."""
        if self._sep is None:
            raise NumericError("competition coefficient only defined for separable kernels")
        return self._sep.trait_kernel.u0(y, self.resident) * self._smass

    def rate(self, y, ages):
        ages = np.asarray(ages, dtype=float)
        base = np.asarray(self.model.death(y, ages), dtype=float)
        if self._sep is not None:
            return base + self._sep.w(ages) * self.competition_coefficient(y)
        dens = self.eq.density
        alpha = dens.grid.nodes
        comp = np.array([
            np.trapezoid(np.asarray(self.model.interaction(y, a, self.resident, alpha), dtype=float)
                     * dens.values, alpha)
            for a in np.atleast_1d(ages)])
        return base + comp.reshape(np.shape(ages))

    def cumulative(self, y, ages):
        """integral over [0, a] of rate(y, .), vectorized over ages."""
        ages = np.asarray(ages, dtype=float)
        if self.model.death_cumulative is not None:
            base = np.asarray(self.model.death_cumulative(y, ages), dtype=float)
        else:
            base = cumulative_on(np.atleast_1d(ages),
                                 lambda a: self.model.death(y, a)).reshape(np.shape(ages))
        if self._sep is not None:
            return base + self._sep.w_cumulative(ages) * self.competition_coefficient(y)
        comp = cumulative_on(np.atleast_1d(ages),
                             lambda a: self.rate(y, a) - np.asarray(self.model.death(y, a), dtype=float))
        return base + comp.reshape(np.shape(ages))

    def dx_competition(self, ages):
        """d/dy of the competition part at y = resident, per age (for the gradient)."""
        ages = np.asarray(ages, dtype=float)
        x = self.resident
        if self._sep is not None:
            return self._sep.w(ages) * self._sep.trait_kernel.du0_dx(x, x) * self._smass
        dens = self.eq.density
        alpha = dens.grid.nodes
        return np.array([
            np.trapezoid(np.asarray(self.model.interaction.dx(x, a, x, alpha), dtype=float)
                     * dens.values, alpha)
            for a in np.atleast_1d(ages)]).reshape(np.shape(ages))


def frozen_death_rate(model: ModelSpec, resident_eq: Equilibrium) -> FrozenDeathRate:
    return FrozenDeathRate(model, resident_eq)


# ---------------------------------------------------------------------------
# net reproduction rate and viability window
# ---------------------------------------------------------------------------

def net_reproduction_rate(model: ModelSpec, x, a_max=None, panels=48, order=10):
    """R0(x) = integral of b(x,a) exp(-integral_0^a d(x,alpha) d alpha) da.

    Quadrature with an analytic tail bound; returns inf when natural death
    vanishes and the integrand does not decay (Example 2's interior traits).
    """
    a_max = float(a_max if a_max is not None else max(model.age_cutoff, 30.0))
    rule = AgeRule(a_max, panels=panels, order=order)
    b = np.asarray(model.birth(x, rule.nodes), dtype=float)
    if model.death_cumulative is not None:
        dcum = np.asarray(model.death_cumulative(x, rule.nodes), dtype=float)
    else:
        dcum = cumulative_on(rule.nodes, lambda a: model.death(x, a))
    integrand = b * np.exp(-dcum)
    total = float(rule.integrate(integrand))
    # analytic tail: survival at a_max times remaining births
    surv = float(np.exp(-dcum[-1]))
    if model.d_min > 0.0:
        tail = model.b_max * surv / model.d_min
        if tail > 1e-9 * max(total, 1.0):
            if a_max > 2000.0:
                raise NumericError("net reproduction rate: tail bound not converged")
            return net_reproduction_rate(model, x, a_max=2.0 * a_max, panels=panels, order=order)
        return total
    # no positive lower death bound: diverges whenever births persist
    if float(np.max(b[-len(b) // 8:])) * surv > 1e-12:
        return np.inf
    return total


def viability_window(model: ModelSpec, xtol=1e-10):
    """Roots of R0(x) = 1 bracketing the supercritical window."""
    lo, hi = model.trait_box
    xs = np.linspace(lo + 1e-9, hi - 1e-9, 257)
    r0 = np.array([net_reproduction_rate(model, x) for x in xs])
    if np.all(~np.isfinite(r0) | (r0 > 1.0)):
        return lo, hi
    i_max = int(np.nanargmax(np.where(np.isfinite(r0), r0, -np.inf)))
    if not (r0[i_max] > 1.0):
        raise ViabilityError("no viable trait: R0 <= 1 everywhere on the box")
    f = lambda x: net_reproduction_rate(model, x) - 1.0
    below = np.where(r0[: i_max + 1] < 1.0)[0]
    left = brentq(f, xs[below[-1]], xs[i_max], xtol=xtol) if below.size else lo
    above = np.where(r0[i_max:] < 1.0)[0]
    right = brentq(f, xs[i_max], xs[i_max + above[0]], xtol=xtol) if above.size else hi
    return left, right


# ---------------------------------------------------------------------------
# stationary equilibria
# ---------------------------------------------------------------------------

def _density_grid(a_max, n_cells=1024):
    return AgeGrid(float(a_max), n_cells)


def _package(model, x, mass, density0, decay_fn, a_max, weighted=None, meta=None):
    grid = _density_grid(a_max)
    fn = lambda a: density0 * decay_fn(np.asarray(a, dtype=float))
    dens = AgeDensity.from_function(grid, fn)
    return Equilibrium(trait=float(x), mass=float(mass), density=dens, trivial=False,
                       model_id=model.model_id, density0=float(density0), density_fn=fn,
                       weighted=dict(weighted or {}), meta=dict(meta or {}))


def _trivial(model, x, a_max=10.0):
    return Equilibrium(trait=float(x), mass=0.0, density=AgeDensity.zero(_density_grid(a_max)),
                       trivial=True, model_id=model.model_id, density0=0.0,
                       density_fn=lambda a: 0.0 * np.asarray(a, dtype=float))


def _equilibrium_example1(model, x, senescent=True):
    c = model.params["competition"]
    d0 = model.params["natural_death"]
    beta = x * (4.0 - x)
    if senescent:
        if beta <= 1.0 + d0:
            return _trivial(model, x)
        mass = (beta - 1.0 - d0) / (c * (4.0 - x))
        decay = beta - 1.0
    else:
        if beta <= d0:
            return _trivial(model, x)
        mass = (beta - d0) / (c * (4.0 - x))
        decay = beta
    density0 = mass * decay
    a_max = min(40.0 / decay, 400.0)
    return _package(model, x, mass, density0,
                    lambda a: np.exp(-decay * a), a_max,
                    weighted={"one": mass}, meta={"decay": decay})


def _equilibrium_kisdi_age_logistic(model, x):
    d0 = model.params["natural_death"]
    beta = x * (4.0 - x)
    if beta <= 1.0 + d0:  # R0 = beta/(1+d0)
        return _trivial(model, x)
    u_self = float(model.interaction.trait_kernel.u0(x, x))

    def balance(mass):
        return beta * gauss_linear_tail(1.0 + d0, u_self * mass) - 1.0

    hi = 1.0
    while balance(hi) > 0.0:
        hi *= 4.0
        if hi > 1e14:
            raise NumericError("no balance root for the age-logistic equilibrium")
    mass = brentq(balance, 0.0, hi, xtol=1e-12, rtol=1e-14)
    gam = u_self * mass
    density0 = mass / gauss_linear_tail(d0, gam)
    a_max = min(10.0 / np.sqrt(gam) + 5.0, 35.0 / max(d0, 1e-9), 400.0)
    return _package(model, x, mass, density0,
                    lambda a: np.exp(-d0 * a - 0.5 * gam * a * a), a_max,
                    weighted={"one": mass}, meta={"gamma": gam})


def _equilibrium_example2(model, x):
    beta = x * (4.0 - x)
    if beta <= 0.0:
        return _trivial(model, x)
    ehat = 0.5 * np.pi * beta * beta
    u_self = float(model.interaction.trait_kernel.u0(x, x))
    g0 = gauss_linear_tail(0.0, ehat)
    g1 = gauss_linear_tail(1.0, ehat)
    density0 = ehat / (u_self * (g0 + g1))
    mass = density0 * g0
    a_max = 12.0 / np.sqrt(ehat) + 2.0
    return _package(model, x, mass, density0,
                    lambda a: np.exp(-0.5 * ehat * a * a), a_max,
                    weighted={"one": mass, "one_plus_exp": ehat / u_self},
                    meta={"ehat": ehat})


def _equilibrium_no_age(model, x):
    b0, d0, u0 = model.params["b"], model.params["d"], model.params["u"]
    if b0 <= d0:
        return _trivial(model, x)
    if u0 <= 0.0:
        raise NumericError("constant-rate model without competition has no finite equilibrium")
    mass = (b0 - d0) / u0
    density0 = mass * b0
    return _package(model, x, mass, density0,
                    lambda a: np.exp(-b0 * a), min(40.0 / b0, 400.0),
                    weighted={"one": mass}, meta={"decay": b0})


def _equilibrium_generic(model, x, grid=None, t_max=400.0):
    grid = grid or AgeGrid(model.age_cutoff, 2000)
    r = net_reproduction_rate(model, x)
    if np.isfinite(r) and r <= 1.0:
        return _trivial(model, x)
    dens = AgeDensity.from_function(grid, lambda a: np.exp(-a))
    t, rel = 0.0, np.inf
    while t < t_max:
        traj = integrate_monomorphic(model, x, dens, t_end=10.0, grid=grid)
        dens = traj.final
        t += 10.0
        if traj.masses[-1] < 1e-12:
            return _trivial(model, x)
        window = max(2, int(round(5.0 / grid.spacing)))
        rel = float(np.max(np.abs(traj.masses[-window:] - traj.masses[-1]))
                    / traj.masses[-1])
        if t >= 30.0 and rel < 1e-8:
            break
    else:
        raise NumericError(f"no PDE stationarity for x={x} by t={t_max}; "
                           f"last relative mass change {rel:.3e}")
    return _refine_stationary(model, x, dens)


def _refine_stationary(model, x, dens: AgeDensity):
    """Sharpen a near-stationary PDE state to machine-level balance residual.

    Separable kernels reduce to a scalar balance equation in the weighted mass
    S; the density then follows in closed form on a fine grid.
    """
    inter = model.interaction
    if not isinstance(inter, SeparableInteraction):
        mass = dens.mass()
        return Equilibrium(trait=float(x), mass=mass, density=dens, trivial=mass <= 0,
                           model_id=model.model_id,
                           density0=float(dens.values[0]))
    u_self = float(inter.trait_kernel.u0(x, x))
    grid = AgeGrid(dens.grid.a_max, 4096)
    nodes = grid.nodes
    if model.death_cumulative is not None:
        dnat = np.asarray(model.death_cumulative(x, nodes), dtype=float)
    else:
        dnat = cumulative_on(nodes, lambda a: model.death(x, a))
    b = np.asarray(model.birth(x, nodes), dtype=float)
    wcum = inter.w_cumulative(nodes)
    s_fac = inter.s(nodes)

    def balance(smass):
        return simpson(b * np.exp(-dnat - wcum * u_self * smass), x=nodes) - 1.0

    s_guess = float(np.trapezoid(inter.s(dens.grid.nodes) * dens.values, dens.grid.nodes))
    if balance(0.0) <= 0.0:
        return _trivial(model, x)
    lo_s, hi_s = 0.0, max(2.0 * s_guess, 1.0)
    while balance(hi_s) > 0.0:
        hi_s *= 4.0
        if hi_s > 1e14:
            raise NumericError("generic equilibrium refinement: no balance root")
    smass = brentq(balance, lo_s, hi_s, xtol=1e-13, rtol=1e-15)
    shape = np.exp(-dnat - wcum * u_self * smass)
    density0 = smass / simpson(s_fac * shape, x=nodes)
    values = density0 * shape
    mass = simpson(values, x=nodes)
    eq = Equilibrium(trait=float(x), mass=float(mass),
                     density=AgeDensity(grid, values), trivial=False,
                     model_id=model.model_id, density0=float(density0),
                     weighted={inter.senescence: smass})
    return eq


def stationary_equilibrium(model: ModelSpec, x, grid=None, method="auto") -> Equilibrium:
    """Stationary state for trait x; closed form per registered model,
    long-time integration plus refinement otherwise (method='pde' forces it)."""
    if model.dim != 1:
        raise ViabilityError("closed-form equilibria are scalar-trait only")
    x = float(x)
    kind = model.equilibrium_kind if method == "auto" else None
    if kind == "example1":
        return _equilibrium_example1(model, x, senescent=True)
    if kind == "no_senescence":
        return _equilibrium_example1(model, x, senescent=False)
    if kind == "kisdi_age_logistic":
        return _equilibrium_kisdi_age_logistic(model, x)
    if kind == "example2":
        return _equilibrium_example2(model, x)
    if kind == "no_age":
        return _equilibrium_no_age(model, x)
    return _equilibrium_generic(model, x, grid=grid)


def balance_residual(model: ModelSpec, eq: Equilibrium, panels=64, order=12):
    """|integral b(x,a) e^{-integral d^} da - 1| at the equilibrium (Eq-13 check)."""
    if eq.trivial:
        raise ViabilityError("balance residual undefined at the trivial equilibrium")
    frozen = FrozenDeathRate(model, eq)
    a_max = eq.density.grid.a_max
    rule = AgeRule(a_max, panels=panels, order=order)
    b = np.asarray(model.birth(eq.trait, rule.nodes), dtype=float)
    val = rule.integrate(b * np.exp(-frozen.cumulative(eq.trait, rule.nodes)))
    return abs(float(val) - 1.0)


# ---------------------------------------------------------------------------
# transport integration along characteristics
# ---------------------------------------------------------------------------

@dataclass
class PdeTrajectory:
    times: np.ndarray
    masses: np.ndarray
    final: AgeDensity
    snapshots: list
    flags: dict


def _trapz_ec(values, dx):
    """Trapezoid with Euler-Maclaurin end corrections (O(dx^4) on smooth data)."""
    base = np.trapezoid(values, dx=dx)
    d0 = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)
    dn = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)
    return base + dx * dx / 12.0 * (d0 - dn)


def _competition_profile(model, x, nodes, dens_values, other=None):
    """Death-rate competition term at each age node given current densities."""
    dx = nodes[1] - nodes[0]
    inter = model.interaction
    if isinstance(inter, SeparableInteraction):
        smass = _trapz_ec(inter.s(nodes) * dens_values, dx)
        comp = inter.w(nodes) * float(inter.trait_kernel.u0(x, x)) * smass
        if other is not None:
            y, other_vals = other
            smass_o = _trapz_ec(inter.s(nodes) * other_vals, dx)
            comp = comp + inter.w(nodes) * float(inter.trait_kernel.u0(x, y)) * smass_o
        return comp
    comp = np.array([_trapz_ec(np.asarray(model.interaction(x, a, x, nodes), dtype=float)
                               * dens_values, dx) for a in nodes])
    if other is not None:
        y, other_vals = other
        comp += np.array([_trapz_ec(np.asarray(model.interaction(x, a, y, nodes), dtype=float)
                                    * other_vals, dx) for a in nodes])
    return comp


def _renewal(b_nodes, values, dx):
    """Solve the implicit renewal boundary m(0) = integral(b m) on the grid.

    Trapezoid with Euler-Maclaurin end corrections (one-sided O(dx^2) slope
    estimates), so the boundary quadrature is O(dx^4); plain trapezoid would
    pin the stationary mass 1e-4 off.
    """
    f1 = b_nodes[1] * values[1]
    f2 = b_nodes[2] * values[2]
    fm1 = b_nodes[-2] * values[-2]
    fm2 = b_nodes[-3] * values[-3]
    fN = b_nodes[-1] * values[-1]
    partial = dx * (b_nodes[1:-1] @ values[1:-1]) + 0.5 * dx * fN
    dfN = (3.0 * fN - 4.0 * fm1 + fm2) / (2.0 * dx)
    # unknown boundary value enters both the trapezoid weight and the
    # left slope correction: solve the linear relation for values[0]
    # m0 = partial + 0.5*dx*b0*m0 + dx^2/12*(df0 - dfN),
    # df0 = (-3 b0 m0 + 4 f1 - f2)/(2 dx)
    b0 = b_nodes[0]
    const = partial + dx * dx / 12.0 * ((4.0 * f1 - f2) / (2.0 * dx) - dfN)
    coef = 1.0 - 0.5 * dx * b0 + dx / 12.0 * 3.0 * b0 / 2.0
    if coef <= 0.0:
        raise NumericError("age grid too coarse for the renewal boundary")
    return const / coef


def _step(model, x, values, b_nodes, d_nodes, nodes, dx, other=None):
    comp0 = _competition_profile(model, x, nodes, values, other)
    total0 = d_nodes + comp0
    pred = np.empty_like(values)
    pred[1:] = values[:-1] * np.exp(-0.5 * dx * (total0[:-1] + total0[1:]))
    pred[0] = 0.0
    pred[0] = _renewal(b_nodes, pred, dx)
    comp1 = _competition_profile(model, x, nodes, pred, other)
    total1 = d_nodes + comp1
    out = np.empty_like(values)
    out[1:] = values[:-1] * np.exp(-0.5 * dx * (total0[:-1] + total1[1:]))
    out[0] = 0.0
    out[0] = _renewal(b_nodes, out, dx)
    return out


def integrate_monomorphic(model: ModelSpec, x, init: AgeDensity, t_end,
                          grid: AgeGrid = None, snapshot_every=None) -> PdeTrajectory:
    """Integrate the one-trait transport equation up to t_end.

    Time step equals the age step (exact advection); the nonlocal death term
    uses a predictor-corrector evaluation, the renewal boundary is implicit
    on the grid.
    """
    x = float(x)
    grid = grid or init.grid
    if (init.grid.a_max, init.grid.n_cells) != (grid.a_max, grid.n_cells):
        init = AgeDensity(grid, np.interp(grid.nodes, init.grid.nodes, init.values,
                                          right=0.0))
    nodes, dx = grid.nodes, grid.spacing
    b_nodes = np.asarray(model.birth(x, nodes), dtype=float)
    d_nodes = np.asarray(model.death(x, nodes), dtype=float)
    if not (np.all(np.isfinite(b_nodes)) and np.all(np.isfinite(d_nodes))):
        raise NumericError("nonfinite rates on the age grid")
    n_steps = max(1, int(round(t_end / dx)))
    values = init.values.copy()
    times = np.empty(n_steps + 1)
    masses = np.empty(n_steps + 1)
    times[0], masses[0] = 0.0, _trapz_ec(values, dx)
    snapshots = []
    tail_loss = 0.0
    snap_stride = max(1, int(round(snapshot_every / dx))) if snapshot_every else None
    for k in range(1, n_steps + 1):
        tail_loss += values[-1] * dx
        values = _step(model, x, values, b_nodes, d_nodes, nodes, dx)
        if np.any(values < 0.0):
            raise NumericError("negative density produced by the transport step")
        times[k] = k * dx
        masses[k] = _trapz_ec(values, dx)
        if snap_stride and k % snap_stride == 0:
            snapshots.append((times[k], AgeDensity(grid, values.copy())))
    flags = {"tail_loss": tail_loss,
             "tail_overflow": tail_loss > 1e-6 * max(masses.max(), 1.0)}
    return PdeTrajectory(times, masses, AgeDensity(grid, values), snapshots, flags)


def integrate_dimorphic(model: ModelSpec, traits, inits, t_end,
                        grid: AgeGrid = None, snapshot_every=None):
    """Integrate the coupled two-trait system; returns a pair of trajectories."""
    x, y = float(traits[0]), float(traits[1])
    grid = grid or inits[0].grid
    nodes, dx = grid.nodes, grid.spacing
    vx = np.interp(nodes, inits[0].grid.nodes, inits[0].values)
    vy = np.interp(nodes, inits[1].grid.nodes, inits[1].values)
    bx = np.asarray(model.birth(x, nodes), dtype=float)
    by = np.asarray(model.birth(y, nodes), dtype=float)
    dx_nat = np.asarray(model.death(x, nodes), dtype=float)
    dy_nat = np.asarray(model.death(y, nodes), dtype=float)
    n_steps = max(1, int(round(t_end / dx)))
    times = np.empty(n_steps + 1)
    m_x = np.empty(n_steps + 1)
    m_y = np.empty(n_steps + 1)
    times[0] = 0.0
    m_x[0], m_y[0] = _trapz_ec(vx, dx), _trapz_ec(vy, dx)
    snap_stride = max(1, int(round(snapshot_every / dx))) if snapshot_every else None
    snapshots = []
    for k in range(1, n_steps + 1):
        new_x = _step(model, x, vx, bx, dx_nat, nodes, dx, other=(y, vy))
        new_y = _step(model, y, vy, by, dy_nat, nodes, dx, other=(x, vx))
        vx, vy = new_x, new_y
        times[k] = k * dx
        m_x[k], m_y[k] = _trapz_ec(vx, dx), _trapz_ec(vy, dx)
        if snap_stride and k % snap_stride == 0:
            snapshots.append((times[k], AgeDensity(grid, vx.copy()), AgeDensity(grid, vy.copy())))
    traj_x = PdeTrajectory(times, m_x, AgeDensity(grid, vx), snapshots, {})
    traj_y = PdeTrajectory(times, m_y, AgeDensity(grid, vy), snapshots, {})
    return traj_x, traj_y


def check_non_coexistence_logistic(model: ModelSpec, x, y):
    """Sign diagnosis of the logistic non-coexistence conditions.

    Returns 'x-fixes', 'y-fixes' or 'undetermined'.  Requires an
    age-independent interaction (logistic class) and nontrivial equilibria.
    """
    inter = model.interaction
    if not (isinstance(inter, SeparableInteraction)
            and inter.age_weight == "one" and inter.senescence == "one"):
        raise ViabilityError("non-coexistence check is for the logistic interaction class")
    if x == y:
        return "undetermined"
    eq_x = stationary_equilibrium(model, x)
    eq_y = stationary_equilibrium(model, y)
    if eq_x.trivial or eq_y.trivial:
        raise ViabilityError("both equilibria must be nontrivial")
    u = inter.trait_kernel.u0
    det = float(u(x, x) * u(y, y) - u(x, y) * u(y, x))
    if det > 1e-12 * float(u(x, x) * u(y, y)):
        return "undetermined"
    s1 = float(u(x, x)) * eq_x.mass - float(u(x, y)) * eq_y.mass
    s2 = float(u(y, y)) * eq_y.mass - float(u(y, x)) * eq_x.mass
    if s1 < 0.0 < s2:
        return "y-fixes"
    if s2 < 0.0 < s1:
        return "x-fixes"
    return "undetermined"
