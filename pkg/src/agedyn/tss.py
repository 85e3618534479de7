"""Age-structured trait substitution sequence.

A trait-valued jump process whose state carries the full resident
equilibrium age profile.  From a resident x at equilibrium, mutants x + h
appear at rate density

    p * (integral b(x,a) m^(x,a) da) * (1 - z0(x+h, x)) * k(x, h)

in the rescaled evolutionary clock; an accepted mutant replaces the
resident and the state jumps to the mutant's equilibrium.

Simulation uses exact thinning against the bound p * sup_a b(x,.) * M^_x.
The default driver draws candidates in vectorized blocks (identical law,
much faster); ``method='thinning'`` runs the plain one-candidate loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demography import Equilibrium, stationary_equilibrium
from .errors import NumericError, ViabilityError
from .fitness import FitnessSolver
from .models import ModelSpec


@dataclass
class TssState:
    trait: float
    equilibrium: Equilibrium
    time: float


@dataclass
class TssPath:
    model_id: str
    seed: int
    times: np.ndarray            # jump times, starting with 0.0 for the initial state
    traits: np.ndarray
    masses: np.ndarray
    fitness_at_jump: np.ndarray  # 1 - z0 of the accepted mutant (0 for the initial state)
    flags: list                  # per state: "initial" | "ok" | "assumption-violated"
    horizon: float
    stopped_early: bool = False

    @property
    def terminal_trait(self) -> float:
        return float(self.traits[-1])

    @property
    def n_jumps(self) -> int:
        return len(self.traits) - 1

    def trait_at(self, t):
        """Piecewise-constant path value at time t."""
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return self.traits[np.clip(idx, 0, len(self.traits) - 1)]


class EquilibriumCache:
    """Equilibria memoized on a trait lattice; closed-form models bypass it."""

    def __init__(self, model: ModelSpec, resolution: float = 1e-3):
        self.model = model
        self.resolution = resolution
        self._store = {}
        self._closed_form = model.equilibrium_kind is not None

    def get(self, x) -> Equilibrium:
        if self._closed_form:
            return stationary_equilibrium(self.model, float(x))
        key = round(float(x) / self.resolution)
        if key not in self._store:
            self._store[key] = stationary_equilibrium(self.model, key * self.resolution)
        return self._store[key]


def tss_jump_rate_density(model: ModelSpec, state: TssState, h) -> float:
    """Rate density, in the rescaled clock, of a jump by displacement h."""
    h = float(h)
    if h == 0.0:
        return 0.0
    eq = state.equilibrium
    solver = FitnessSolver(model, eq)
    z0 = float(solver.z0_batch(np.array([state.trait + h]))[0])
    k = float(model.mutation_kernel.density(state.trait, h))
    return model.mutation_prob * eq.density0 * (1.0 - z0) * k


def _mutual_invasion_flag(model, solver_new, old_trait):
    """'ok' when the displaced resident cannot re-invade the new equilibrium."""
    try:
        back = float(solver_new.invasion_integrals(old_trait))
    except NumericError:
        return "assumption-violated"
    return "ok" if back <= 1.0 else "assumption-violated"


def simulate_tss(model: ModelSpec, x0, horizon, rng_seed, eps: float = 1.0,
                 bound_inflation: float = 1.0, method: str = "block",
                 block_size: int = 512, stop_when=None, max_jumps: int = 200_000,
                 check_assumption: bool = True) -> TssPath:
    """Simulate the substitution sequence from trait x0 up to the horizon.

    ``eps`` runs the rescaled small-mutation process: displacements eps * h
    with h from the mutation kernel, and the clock sped up by 1/eps^2.
    ``bound_inflation`` multiplies the thinning bound (the path law must not
    depend on it; tested).  ``stop_when(state)`` may end the path early.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence([int(rng_seed), 0x755]))
    cache = EquilibriumCache(model)
    eq = cache.get(x0)
    if eq.trivial:
        raise ViabilityError(f"initial trait {x0} is not viable")
    p = model.mutation_prob
    kernel = model.mutation_kernel

    times = [0.0]
    traits = [float(x0)]
    masses = [eq.mass]
    fitnesses = [0.0]
    flags = ["initial"]
    stopped_early = False

    t = 0.0
    x = float(x0)
    state = TssState(trait=x, equilibrium=eq, time=0.0)
    if stop_when is not None and stop_when(state):
        stopped_early = True
    solver = FitnessSolver(model, eq)
    speed = 1.0 / (eps * eps)

    while not stopped_early and t < horizon and len(traits) - 1 < max_jumps and p > 0.0:
        b_sup = float(np.asarray(model.birth_sup(x), dtype=float)) if model.birth_sup \
            else model.b_max
        bound = p * b_sup * eq.mass * bound_inflation * speed
        flux_ratio = (p * eq.density0 * speed) / bound
        if not 0.0 < flux_ratio <= 1.0 + 1e-12:
            raise NumericError(f"thinning bound violated: flux ratio {flux_ratio}")
        n = 1 if method == "thinning" else block_size
        jumped = False
        while not jumped:
            waits = rng.exponential(1.0 / bound, size=n)
            hs = eps * kernel.sample(x, rng, size=n)
            us = rng.uniform(size=n)
            cand_times = t + np.cumsum(waits)
            live = us < flux_ratio
            accept_idx = None
            fit_val = 0.0
            if np.any(live):
                ys = x + hs[live]
                z0 = solver.z0_batch(ys)
                acc = us[live] < flux_ratio * (1.0 - z0)
                if np.any(acc):
                    pos = np.flatnonzero(live)[np.flatnonzero(acc)[0]]
                    accept_idx = int(pos)
                    fit_val = float(1.0 - z0[np.flatnonzero(acc)[0]])
            if accept_idx is not None and cand_times[accept_idx] <= horizon:
                t = float(cand_times[accept_idx])
                x = float(x + hs[accept_idx])
                eq = cache.get(x)
                if eq.trivial:
                    raise NumericError(
                        f"accepted mutant {x} has a trivial equilibrium; "
                        "invasion-implies-viability failed numerically")
                solver = FitnessSolver(model, eq)
                flag = "ok"
                if check_assumption:
                    flag = _mutual_invasion_flag(model, solver, traits[-1])
                times.append(t)
                traits.append(x)
                masses.append(eq.mass)
                fitnesses.append(fit_val)
                flags.append(flag)
                state = TssState(trait=x, equilibrium=eq, time=t)
                if stop_when is not None and stop_when(state):
                    stopped_early = True
                jumped = True
            else:
                t = float(cand_times[-1])
                if accept_idx is not None or t >= horizon:
                    t = min(t, horizon) if accept_idx is None else horizon
                    jumped = True  # horizon reached before the accepted candidate

    return TssPath(model_id=model.model_id, seed=int(rng_seed),
                   times=np.asarray(times), traits=np.asarray(traits),
                   masses=np.asarray(masses), fitness_at_jump=np.asarray(fitnesses),
                   flags=flags, horizon=float(horizon), stopped_early=stopped_early)
