"""Canonical equation for the dominant trait in the small-mutation limit.

dx/dt = p * (integral b m^) * ( [grad]_- * S+  -  [grad]_+ * S- )

with grad the diagonal fitness-root gradient, S+/- the half second moments
of the mutation kernel, and [u]_-/[u]_+ the negative/positive parts.  The
signed form is integrated; rest points coincide with zeros of the gradient
for kernels charging both directions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .demography import stationary_equilibrium
from .errors import ViabilityError
from .fitness import fitness_gradient_generic
from .models import ModelSpec


def canonical_rhs(model: ModelSpec, x, eq=None) -> float:
    """Signed trait velocity at x; raises for non-viable traits."""
    x = float(x)
    eq = eq or stationary_equilibrium(model, x)
    if eq.trivial:
        raise ViabilityError(f"trait {x} is not viable")
    grad = fitness_gradient_generic(model, x, eq=eq)
    s_minus, s_plus = model.mutation_kernel.half_second_moments(x)
    neg_part = max(-grad, 0.0)
    pos_part = max(grad, 0.0)
    return model.mutation_prob * eq.density0 * (neg_part * s_plus - pos_part * s_minus)


@dataclass
class CanonicalTrajectory:
    times: np.ndarray
    traits: np.ndarray
    rest_point: float | None
    converged: bool
    message: str


def integrate_canonical(model: ModelSpec, x0, t_end, rtol=3e-14, atol=1e-14,
                        rest_rhs_tol=1e-10, max_step=np.inf) -> CanonicalTrajectory:
    """Adaptive RK45 integration of the canonical equation.

    Stops early once |dx/dt| falls below ``rest_rhs_tol`` and reports the
    rest point; exiting the viability window aborts with a diagnostic.
    """
    x0 = float(x0)
    state = {"failed": None}

    def rhs(t, y):
        try:
            return [canonical_rhs(model, float(y[0]))]
        except ViabilityError as exc:
            state["failed"] = str(exc)
            return [0.0]

    def at_rest(t, y):
        if state["failed"]:
            return 0.0
        return abs(rhs(t, y)[0]) - rest_rhs_tol

    at_rest.terminal = True
    at_rest.direction = -1

    sol = solve_ivp(rhs, (0.0, float(t_end)), [x0], method="RK45",
                    rtol=rtol, atol=atol, events=[at_rest], max_step=max_step,
                    dense_output=True)
    if state["failed"]:
        return CanonicalTrajectory(times=sol.t, traits=sol.y[0], rest_point=None,
                                   converged=False,
                                   message=f"left the viability window: {state['failed']}")
    rest = None
    converged = False
    if sol.t_events[0].size:
        rest = float(sol.y_events[0][0][0])
        converged = True
    return CanonicalTrajectory(times=sol.t, traits=sol.y[0], rest_point=rest,
                               converged=converged, message=sol.message)


def rescaled_tss_mean_path(model: ModelSpec, x0, horizon, eps, n_seeds, seed0,
                           time_grid) -> np.ndarray:
    """Mean of eps-rescaled substitution-sequence paths on a common time grid."""
    from .tss import simulate_tss

    time_grid = np.asarray(time_grid, dtype=float)
    acc = np.zeros_like(time_grid)
    for k in range(n_seeds):
        path = simulate_tss(model, x0, horizon, rng_seed=seed0 + k, eps=eps,
                            check_assumption=False)
        acc += path.trait_at(time_grid)
    return acc / n_seeds
