"""Configuration-driven experiment runner.

A JSON config selects a registered model (with parameter overrides), an
operation, and numeric settings; the runner validates everything up front,
executes the pipeline, and writes CSV/SVG artifacts plus a machine-readable
manifest (config hash, seeds, versions, wall time) sufficient to re-run the
experiment bit-identically.

``reproduce`` runs desk-scale presets for the publication-style figures; the
individual-based presets rescale the interaction strength by 1000 so that
equilibrium head-counts stay in the thousands (recorded in the manifest).
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import _plotting as plots
from . import canonical as can
from . import demography as dem
from . import fitness as fit
from . import ibm
from . import stability as stab
from . import tss as tss_mod
from . import verify as ver
from .errors import ConfigError
from .models import REGISTRY, make_model

_GRID_SPEC = {
    "type": "object",
    "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                   "n": {"type": "integer", "minimum": 2}},
    "required": ["lo", "hi", "n"],
    "additionalProperties": False,
}

_SETTINGS_SCHEMAS = {
    "equilibrium": {
        "type": "object",
        "properties": {"traits": {"type": "array", "items": {"type": "number"},
                                  "minItems": 1}},
        "required": ["traits"],
        "additionalProperties": False,
    },
    "pde": {
        "type": "object",
        "properties": {"trait": {"type": "number"}, "t_end": {"type": "number"},
                       "a_max": {"type": "number"}, "n_cells": {"type": "integer"},
                       "init_mass": {"type": "number"}, "init_rate": {"type": "number"}},
        "required": ["trait", "t_end"],
        "additionalProperties": False,
    },
    "ibm": {
        "type": "object",
        "properties": {"scale_n": {"type": "integer", "minimum": 1},
                       "count": {"type": "integer", "minimum": 0},
                       "horizon": {"type": "number"},
                       "mutation_scale": {"type": "number"},
                       "snapshot_dt": {"type": "number"},
                       "trait_uniform": {"type": "array", "items": {"type": "number"},
                                         "minItems": 2, "maxItems": 2},
                       "age_exponential_rate": {"type": "number"},
                       "population_cap": {"type": "integer"}},
        "required": ["scale_n", "count", "horizon"],
        "additionalProperties": False,
    },
    "fitness": {
        "type": "object",
        "properties": {"resident": {"type": "number"},
                       "mutants": {"type": "array", "items": {"type": "number"},
                                   "minItems": 1}},
        "required": ["resident", "mutants"],
        "additionalProperties": False,
    },
    "pip": {
        "type": "object",
        "properties": {"grid": _GRID_SPEC},
        "required": ["grid"],
        "additionalProperties": False,
    },
    "tss": {
        "type": "object",
        "properties": {"x0": {"type": "number"}, "horizon": {"type": "number"},
                       "eps": {"type": "number"}},
        "required": ["x0", "horizon"],
        "additionalProperties": False,
    },
    "canonical": {
        "type": "object",
        "properties": {"x0": {"type": "number"}, "t_end": {"type": "number"}},
        "required": ["x0", "t_end"],
        "additionalProperties": False,
    },
    "stability": {
        "type": "object",
        "properties": {"grid": _GRID_SPEC, "delta": {"type": "number"},
                       "radius": {"type": "number"}, "height": {"type": "number"}},
        "required": ["grid"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {"pairs": {"type": "array",
                                 "items": {"type": "array", "items": {"type": "number"},
                                           "minItems": 2, "maxItems": 2},
                                 "minItems": 1},
                       "replicates": {"type": "integer", "minimum": 100},
                       "pop_cap": {"type": "integer", "minimum": 10},
                       "agreement_tol": {"type": "number"}},
        "required": ["pairs"],
        "additionalProperties": False,
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {"id": {"type": "string", "enum": sorted(REGISTRY)},
                           "overrides": {"type": "object"}},
            "required": ["id"],
            "additionalProperties": False,
        },
        "operation": {"type": "string", "enum": sorted(_SETTINGS_SCHEMAS)},
        "settings": {"type": "object"},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
    },
    "required": ["model", "operation", "settings"],
    "additionalProperties": False,
}


class VerificationFailure(Exception):
    """A verification pipeline produced a failing assertion."""


def _validate(config: dict):
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
        jsonschema.validate(config["settings"], _SETTINGS_SCHEMAS[config["operation"]])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema violation: {exc.message}") from None


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _grid(spec):
    return np.linspace(spec["lo"], spec["hi"], spec["n"])


# ---------------------------------------------------------------------------
# operation pipelines
# ---------------------------------------------------------------------------

def _op_equilibrium(model, settings, seed, out: Path):
    rows = []
    artifacts = []
    for x in settings["traits"]:
        eq = dem.stationary_equilibrium(model, x)
        residual = np.nan if eq.trivial else dem.balance_residual(model, eq)
        rows.append([x, eq.mass, eq.density0, int(eq.trivial), residual])
        if not eq.trivial:
            dens_path = out / f"density_x{x:g}.csv"
            _write_csv(dens_path, ["age", "value"],
                       zip(eq.density.grid.nodes, eq.density.values))
            artifacts.append(dens_path)
    summary = out / "equilibria.csv"
    _write_csv(summary, ["trait", "mass", "density_at_0", "trivial", "balance_residual"], rows)
    return [summary] + artifacts


def _op_pde(model, settings, seed, out: Path):
    grid = dem.AgeGrid(settings.get("a_max", model.age_cutoff),
                       settings.get("n_cells", 2000))
    rate = settings.get("init_rate", 1.0)
    mass = settings.get("init_mass", 1.0)
    init = dem.AgeDensity.from_function(
        grid, lambda a: mass * rate * np.exp(-rate * a))
    traj = dem.integrate_monomorphic(model, settings["trait"], init,
                                     settings["t_end"], grid=grid)
    mass_path = _write_csv(out / "mass.csv", ["time", "mass"],
                           zip(traj.times, traj.masses))
    dens_path = _write_csv(out / "final_density.csv", ["age", "value"],
                           zip(grid.nodes, traj.final.values))
    svg = plots.save_lines(out / "mass.svg", [(traj.times, traj.masses, "")],
                           xlabel="time", ylabel="total mass")
    return [mass_path, dens_path, svg]


def _op_ibm(model, settings, seed, out: Path):
    rng = np.random.default_rng(seed)
    lo, hi = settings.get("trait_uniform", [1.9, 2.1])
    rate = settings.get("age_exponential_rate", 2.0)
    init = ibm.initial_population(
        model, settings["scale_n"], settings["count"], rng,
        trait_sampler=lambda r, size: r.uniform(lo, hi, size),
        age_sampler=lambda r, size: r.exponential(1.0 / rate, size))
    result = ibm.simulate(model, init, settings["horizon"],
                          mutation_scale=settings.get("mutation_scale", 1.0),
                          rng_seed=seed,
                          snapshot_dt=settings.get("snapshot_dt", settings["horizon"] / 40),
                          population_cap=settings.get("population_cap", 1_000_000))
    ev = result.events
    ev_path = _write_csv(out / "events.csv",
                         ["time", "event", "subject_id", "child_id", "displacement"],
                         zip(ev.times, (ibm.KIND_NAMES[int(k)] for k in ev.kinds),
                             ev.subject, ev.child, ev.displacement))
    rows = []
    for s in result.snapshots:
        ages = s.ages()
        for j in range(s.count):
            rows.append([s.time, int(s.ids[j]), s.traits[j], ages[j]])
    snap_path = _write_csv(out / "snapshots.csv", ["time", "id", "trait", "age"], rows)
    t_m, m_m = result.mass_series()
    mass_path = _write_csv(out / "mass.csv", ["time", "mass"], zip(t_m, m_m))
    arr = np.array([[r[0], r[2]] for r in rows]) if rows else np.zeros((0, 2))
    svg = plots.save_scatter(out / "trait_cloud.svg", arr[:, 0], arr[:, 1],
                             xlabel="time", ylabel="trait")
    return [ev_path, snap_path, mass_path, svg]


def _op_fitness(model, settings, seed, out: Path):
    eq = dem.stationary_equilibrium(model, settings["resident"])
    rows = []
    for y in settings["mutants"]:
        rep = fit.extinction_probability(model, eq, y)
        rows.append([rep.resident, rep.mutant, rep.invasion_integral, rep.z0,
                     int(rep.invadable), rep.g_value])
    path = _write_csv(out / "fitness.csv",
                      ["resident", "mutant", "invasion_integral", "z0", "invadable", "g"],
                      rows)
    return [path]


def _op_pip(model, settings, seed, out: Path):
    grid = _grid(settings["grid"])
    pg = fit.pip(model, grid)
    mat_path = out / "pip_z0.csv"
    with open(mat_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mutant\\resident"] + list(pg.residents))
        for i, y in enumerate(pg.mutants):
            writer.writerow([y] + list(pg.z0[i]))
    overlays = [(pg.residents, pg.residents, "w--", "diagonal")]
    if model.model_id == "example1":
        overlays.append((pg.residents,
                         fit.invasion_boundary_example1(
                             pg.residents, model.params["natural_death"]),
                         "r-", "closed-form boundary"))
    elif model.model_id == "example1_no_senescence":
        overlays.append((pg.residents,
                         fit.invasion_boundary_no_senescence(
                             pg.residents, model.params["natural_death"]),
                         "r-", "closed-form boundary"))
    z0_svg = plots.save_heatmap(out / "z0.svg", pg.residents, pg.mutants, pg.z0,
                                xlabel="resident trait", ylabel="mutant trait",
                                cbar_label="extinction probability z0")
    sign_svg = plots.save_heatmap(out / "pip.svg", pg.residents, pg.mutants, pg.sign,
                                  xlabel="resident trait", ylabel="mutant trait",
                                  overlays=overlays, cbar_label="sign(1 - z0)")
    return [mat_path, z0_svg, sign_svg]


def _op_tss(model, settings, seed, out: Path):
    path = tss_mod.simulate_tss(model, settings["x0"], settings["horizon"],
                                rng_seed=seed, eps=settings.get("eps", 1.0))
    csv_path = _write_csv(out / "tss_path.csv",
                          ["jump_time", "trait", "mass", "fitness", "flag"],
                          zip(path.times, path.traits, path.masses,
                              path.fitness_at_jump, path.flags))
    stair_svg = plots.save_step(out / "trait_staircase.svg", path.times, path.traits,
                                xlabel="evolutionary time", ylabel="trait")
    strips = []
    t_all = np.append(path.times, path.horizon)
    for k in range(len(path.traits)):
        eq = dem.stationary_equilibrium(model, path.traits[k])
        strips.append((t_all[k], t_all[k + 1], eq.density.grid.nodes, eq.density.values))
    strips_svg = plots.save_strips(out / "equilibrium_strips.svg", strips)
    return [csv_path, stair_svg, strips_svg]


def _op_canonical(model, settings, seed, out: Path):
    traj = can.integrate_canonical(model, settings["x0"], settings["t_end"])
    csv_path = _write_csv(out / "canonical.csv", ["time", "trait"],
                          zip(traj.times, traj.traits))
    svg = plots.save_lines(out / "canonical.svg", [(traj.times, traj.traits, "")],
                           xlabel="time", ylabel="trait")
    return [csv_path, svg]


def _op_stability(model, settings, seed, out: Path):
    contour = stab.JordanContour(settings.get("delta", 1e-3),
                                 settings.get("radius", 50.0),
                                 settings.get("height", 50.0))
    reports = stab.stability_scan(model, _grid(settings["grid"]), contour)
    path = _write_csv(out / "stability_scan.csv",
                      ["trait", "winding", "min_abs_lambda", "verdict"],
                      [[r.trait, r.winding, r.min_abs, verdict] for r, verdict in reports])
    return [path]


def _op_verify(model, settings, seed, out: Path):
    replicates = settings.get("replicates", 10_000)
    pop_cap = settings.get("pop_cap", 300)
    tol = settings.get("agreement_tol", 1e-8)
    lines = []
    ok = True
    for k, (x, y) in enumerate(settings["pairs"]):
        eq = dem.stationary_equilibrium(model, x)
        z_root = fit.extinction_probability(model, eq, y).z0
        spec = ver.spec_from_invasion(model, eq, y)
        z_gw = ver.generation_gw_extinction(spec)
        mc = ver.simulate_linear_branching(spec, replicates, rng_seed=seed + k,
                                           pop_cap=pop_cap)
        agree = abs(z_root - z_gw) <= tol
        covered = mc.ci99[0] - tol <= z_root <= mc.ci99[1] + tol \
            and mc.ci99[0] - tol <= z_gw <= mc.ci99[1] + tol
        ok &= agree and covered
        lines.append(f"pair ({x}, {y}): F-root {z_root:.10f}  G-fixed-point {z_gw:.10f}  "
                     f"MC {mc.frequency:.4f} CI99 [{mc.ci99[0]:.4f}, {mc.ci99[1]:.4f}]  "
                     f"agree={'PASS' if agree else 'FAIL'} "
                     f"coverage={'PASS' if covered else 'FAIL'}")
    report = out / "verify_report.txt"
    report.write_text("\n".join(lines) + "\n")
    if not ok:
        raise VerificationFailure(f"verification failed; see {report}")
    return [report]


_PIPELINES = {
    "equilibrium": _op_equilibrium,
    "pde": _op_pde,
    "ibm": _op_ibm,
    "fitness": _op_fitness,
    "pip": _op_pip,
    "tss": _op_tss,
    "canonical": _op_canonical,
    "stability": _op_stability,
    "verify": _op_verify,
}


def run(config, output_dir=None, notes=()):
    """Execute one experiment config (path, JSON string, or dict).

    Returns the list of artifact paths; raises ConfigError / NumericError /
    VerificationFailure for the documented exit-code classes.
    """
    if isinstance(config, (str, Path)) and Path(config).exists():
        raw = Path(config).read_text()
        config = json.loads(raw)
    elif isinstance(config, str):
        config = json.loads(config)
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    _validate(config)
    model = make_model(config["model"]["id"], **config["model"].get("overrides", {}))
    seed = int(config.get("seed", 0))
    out = Path(output_dir or config.get("output_dir", "runs/latest"))
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    artifacts = _PIPELINES[config["operation"]](model, config["settings"], seed, out)
    manifest = {
        "config": config,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()).hexdigest(),
        "seed": seed,
        "versions": {"agedyn": __version__, "numpy": np.__version__},
        "wall_time_s": round(time.time() - started, 3),
        "artifacts": [str(a) for a in artifacts],
        "notes": list(notes),
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return artifacts + [manifest_path]


# ---------------------------------------------------------------------------
# figure presets (desk scale)
# ---------------------------------------------------------------------------

_DESK_NOTE = ("desk scale: interaction strength multiplied by 1000 relative to the "
              "published rates so equilibrium head-counts stay near 1.4 * n")

FIGURE_PRESETS = {
    "fig1a": {"model": {"id": "example1", "overrides": {"competition": 1.0}},
              "operation": "ibm",
              "settings": {"scale_n": 2000, "count": 2000, "horizon": 120.0,
                           "trait_uniform": [0.0, 1.3], "age_exponential_rate": 2.0,
                           "snapshot_dt": 1.0},
              "seed": 1},
    "fig1b": {"model": {"id": "example1_no_senescence", "overrides": {"competition": 1.0}},
              "operation": "ibm",
              "settings": {"scale_n": 2000, "count": 2000, "horizon": 120.0,
                           "trait_uniform": [0.0, 1.3], "age_exponential_rate": 2.0,
                           "snapshot_dt": 1.0},
              "seed": 1},
    "fig1c": {"model": {"id": "example2", "overrides": {"C": 2.0}},
              "operation": "ibm",
              "settings": {"scale_n": 400, "count": 500, "horizon": 250.0,
                           "trait_uniform": [0.0, 1.3], "age_exponential_rate": 2.0,
                           "snapshot_dt": 2.0},
              "seed": 1},
    "fig4": {"model": {"id": "example1"}, "operation": "pip",
             "settings": {"grid": {"lo": 0.02, "hi": 3.98, "n": 200}}, "seed": 0},
    "fig5": {"model": {"id": "example1"}, "operation": "tss",
             "settings": {"x0": 0.552, "horizon": 3.0}, "seed": 7},
    "fig6": {"model": {"id": "example1"}, "operation": "canonical",
             "settings": {"x0": 0.552, "t_end": 40.0}, "seed": 0},
    "fig7": {"model": {"id": "example2"}, "operation": "pip",
             "settings": {"grid": {"lo": 0.15, "hi": 3.9, "n": 72}}, "seed": 0},
    "fig8": {"model": {"id": "example1_age_logistic_kisdi"}, "operation": "pip",
             "settings": {"grid": {"lo": 0.4, "hi": 3.9, "n": 72}}, "seed": 0},
    "fig9-scan": {"model": {"id": "example2"}, "operation": "stability",
                  "settings": {"grid": {"lo": 0.1, "hi": 3.9, "n": 39}}, "seed": 0},
}


def reproduce(figure_id, output_dir=None):
    """Run the desk-scale preset for one publication-style figure."""
    if figure_id not in FIGURE_PRESETS:
        raise ConfigError(f"unknown figure id {figure_id!r}; "
                          f"known: {sorted(FIGURE_PRESETS)}")
    preset = json.loads(json.dumps(FIGURE_PRESETS[figure_id]))
    out = output_dir or f"runs/{figure_id}"
    notes = [_DESK_NOTE] if preset["operation"] == "ibm" else []
    return run(preset, output_dir=out, notes=notes)
