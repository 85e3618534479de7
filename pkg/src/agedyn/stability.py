"""Equilibrium stability via the argument principle (separable-death model).

The linearization of the two-rate transport system around the nontrivial
equilibrium reduces to a scalar complex function Lambda(lambda, x) whose
zeros in the closed right half-plane are the eigenvalues.  Winding numbers
of Lambda around positively oriented Jordan curves count those zeros; an
all-zero scan certifies asymptotic stability.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import wofz

from .demography import stationary_equilibrium
from .errors import NumericError, ViabilityError
from .models import ModelSpec
from .quadrature import AgeRule


def _erfcx(z):
    """Scaled complementary error function for complex arguments (Re z >= 0)."""
    return wofz(1j * np.asarray(z, dtype=complex))


def _gauss_laplace(mu, ehat):
    """integral over [0, inf) of exp(-ehat a^2/2 - mu a), complex mu."""
    s = np.asarray(mu, dtype=complex) / np.sqrt(2.0 * ehat)
    return np.sqrt(np.pi / (2.0 * ehat)) * _erfcx(s)


def lambda_function(model: ModelSpec, x, lam, eq=None):
    """Linearized eigenvalue function Lambda(lambda, x); lambda may be an array.

    Evaluated in closed form through the Faddeeva function; the direct
    complex quadrature is available as ``lambda_function_quadrature`` and
    agrees to roundoff (tested).
    """
    if model.equilibrium_kind != "example2":
        raise ViabilityError("the linearization is derived for the separable-death model")
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0.0):
        raise ValueError("lambda = 0 is excluded (function has a simple pole there)")
    eq = eq or stationary_equilibrium(model, float(x))
    if eq.trivial:
        raise ViabilityError(f"trait {x} has no nontrivial equilibrium")
    ehat = eq.meta["ehat"]
    m0 = eq.density0
    u_self = float(model.interaction.trait_kernel.u0(x, x))
    g0 = _gauss_laplace(0.0, ehat)
    g1 = _gauss_laplace(1.0, ehat)
    g_l = _gauss_laplace(lam, ehat)
    g_l1 = _gauss_laplace(lam + 1.0, ehat)
    i1 = g0 - g_l
    j = (-(2.0 - g1) / ehat + (g0 + g1) / lam - (g_l + g_l1) / (ehat * i1))
    return u_self * m0 * j - lam


def lambda_function_quadrature(model: ModelSpec, x, lam, eq=None, points_per_period=24):
    """Direct complex quadrature evaluation of Lambda (cross-check oracle)."""
    if model.equilibrium_kind != "example2":
        raise ViabilityError("the linearization is derived for the separable-death model")
    lam = complex(lam)
    if lam == 0.0:
        raise ValueError("lambda = 0 is excluded")
    eq = eq or stationary_equilibrium(model, float(x))
    ehat = eq.meta["ehat"]
    m0 = eq.density0
    u_self = float(model.interaction.trait_kernel.u0(x, x))
    a_max = 12.0 / np.sqrt(ehat) + 2.0
    periods = abs(lam.imag) * a_max / (2.0 * np.pi) + 1.0
    panels = int(max(48, np.ceil(periods * points_per_period / 10.0)))
    rule = AgeRule(a_max, panels=panels, order=10)
    a = rule.nodes
    gauss = np.exp(-0.5 * ehat * a * a)
    i1 = rule.integrate(gauss * (1.0 - np.exp(-lam * a)))
    inner = -a + 1.0 / lam - np.exp(-lam * a) / (ehat * i1)
    j = rule.integrate((1.0 + np.exp(-a)) * gauss * inner)
    return u_self * m0 * j - lam


@dataclass(frozen=True)
class JordanContour:
    """Positively oriented boundary of [delta-notch, R] x [-H, H] in Re >= 0.

    Runs down the imaginary axis, detours around the origin along a
    semicircle of radius delta into the right half-plane, then closes via the
    bottom, right and top edges of the rectangle.
    """

    delta: float = 1e-3
    radius: float = 50.0
    height: float = 50.0

    def segments(self):
        d, r, h = self.delta, self.radius, self.height
        return [
            lambda t: 1j * (h + (d - h) * t),                 # down to i*delta
            lambda t: d * np.exp(1j * (np.pi / 2 - np.pi * t)),  # notch around 0
            lambda t: -1j * (d + (h - d) * t),                # down to -i*h
            lambda t: -1j * h + r * t,                        # bottom edge
            lambda t: r + 1j * h * (2.0 * t - 1.0),           # right edge
            lambda t: r * (1.0 - t) + 1j * h,                 # top edge
        ]

    def scaled(self, factor):
        return JordanContour(self.delta, self.radius * factor, self.height * factor)


@dataclass
class WindingReport:
    trait: float
    winding: int
    min_abs: float
    max_phase_step: float
    n_points: int
    residual: float


def winding_number(func, contour: JordanContour, init_points=96, max_points=200_000,
                   min_abs_threshold=1e-12, trait=np.nan) -> WindingReport:
    """Argument-principle winding of func along the contour.

    The image argument is tracked continuously: contour segments are refined
    until consecutive phase steps stay below pi/2, then the total variation
    is summed and must land within 0.1 of an integer multiple of 2*pi.
    """
    segs = contour.segments()
    params = [np.linspace(0.0, 1.0, init_points) for _ in segs]
    values = [np.asarray(func(seg(t)), dtype=complex) for seg, t in zip(segs, params)]
    for _ in range(40):
        worst = 0.0
        refined = False
        for k, seg in enumerate(segs):
            t, v = params[k], values[k]
            dphi = np.angle(v[1:] / v[:-1])
            bad = np.abs(dphi) >= 0.5 * np.pi
            worst = max(worst, float(np.abs(dphi).max(initial=0.0)))
            if np.any(bad):
                refined = True
                mids = 0.5 * (t[:-1][bad] + t[1:][bad])
                t_new = np.sort(np.concatenate([t, mids]))
                params[k] = t_new
                values[k] = np.asarray(func(seg(t_new)), dtype=complex)
        total_pts = sum(len(t) for t in params)
        if total_pts > max_points:
            raise NumericError("winding: refinement exceeded the point budget "
                               "(possible zero close to the contour)")
        if not refined:
            break
    else:
        raise NumericError("winding: phase steps did not settle below pi/2")

    chain = np.concatenate([v[:-1] for v in values] + [values[0][:1]])
    min_abs = float(np.abs(chain).min())
    if min_abs < min_abs_threshold:
        raise NumericError(f"winding: |f| = {min_abs:.2e} on the contour; "
                           "zero too close to the path")
    steps = np.angle(chain[1:] / chain[:-1])
    total = float(steps.sum())
    winding = int(np.round(total / (2.0 * np.pi)))
    residual = abs(total / (2.0 * np.pi) - winding)
    if residual > 0.1:
        raise NumericError(f"winding: non-integer argument variation (residual {residual:.3f})")
    return WindingReport(trait=float(trait), winding=winding, min_abs=min_abs,
                         max_phase_step=float(np.abs(steps).max()),
                         n_points=len(chain), residual=residual)


def stability_scan(model: ModelSpec, traits, contour: JordanContour = None):
    """Winding numbers of Lambda(., x) over a trait grid, with verdicts.

    Zero right-half-plane eigenvalues means the nontrivial equilibrium is
    asymptotically stable (linearized-semigroup criterion).
    """
    contour = contour or JordanContour()
    reports = []
    for x in np.atleast_1d(np.asarray(traits, dtype=float)):
        eq = stationary_equilibrium(model, float(x))
        f = lambda lam: lambda_function(model, float(x), lam, eq=eq)
        rep = winding_number(f, contour, trait=float(x))
        reports.append((rep, "asymptotically stable" if rep.winding == 0
                        else "unstable or undetermined"))
    return reports
