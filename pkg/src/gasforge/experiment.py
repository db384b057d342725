"""Run a configured study and write its CSV and JSON artifacts.

Files written for prefix ``P``:

* ``P_meta.json``: the full config, its hash, seeds, versions, per-chain
  statistics, study results and the sha256 of every CSV written.
* density studies: ``P_samples.csv`` (chain, step, particle, coord_0..) and
  ``P_histogram.csv`` (bin_mid, density, oracle columns when known).
* scaling studies: ``P_scaling.csv`` (dt, metric columns).
* edge study: ``P_maxima.csv`` (chain, step, max_modulus).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_hash
from .diagnostics import (
    build_histogram,
    density_distance,
    energy_scaling_study,
    fit_gumbel,
    ks_critical_value,
    max_modulus_series,
    radial_histogram,
    rejection_scaling_study,
)
from .integrators import SamplerParams
from .model import CoulombKernel, GasModel, LogKernel, Quartic
from .oracles import (
    QUARTIC_A,
    _semicircle,
    equilibrium_radius,
    ginibre_mean_radial_density,
    gue_mean_density,
    quartic_equilibrium_density,
    uniform_ball_radial_density,
    uniform_disk_radial_density,
)
from .samplers import derive_seed, run_ensemble

__all__ = ["ExperimentResult", "run_experiment", "reference_densities", "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


@dataclass
class ExperimentResult:
    status: int
    files: dict[str, Path] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def reference_densities(model: GasModel):
    """``(finite_n_mean, equilibrium)`` densities for a model; either may be None.

    Radial densities (in ``r = |x|``) are returned for d >= 2.
    """
    beta, n, d = model.beta, model.n_particles, model.particle_dim
    inter = model.interaction
    mean = equil = None
    try:
        R = equilibrium_radius(model)
    except ValueError:
        R = None
    if d == 1 and isinstance(model.confinement, Quartic):
        scale = 2 * QUARTIC_A / R
        equil = lambda x: scale * quartic_equilibrium_density(np.asarray(x) * scale)  # noqa: E731
    elif d == 1 and R is not None:
        equil = lambda x: _semicircle(x, R)  # noqa: E731
        if beta == 2 and model.name == "beta_hermite":
            mean = lambda x: gue_mean_density(x, n)  # noqa: E731
    elif d == 2 and isinstance(inter, LogKernel) and R is not None:
        equil = lambda r: uniform_disk_radial_density(r, 2 * R**2)  # noqa: E731
        if beta == 2 and model.name == "beta_ginibre":
            mean = lambda r: ginibre_mean_radial_density(r, n)  # noqa: E731
    elif isinstance(inter, CoulombKernel) and R is not None:
        equil = lambda r: uniform_ball_radial_density(r, 2 * R**d / (d - 2), d)  # noqa: E731
    return mean, equil


def _params(config: ExperimentConfig, model: GasModel, **changes) -> SamplerParams:
    base = dict(
        dt=config.dt,
        beta_n=model.beta_n,
        n_steps=config.n_steps,
        alpha=config.alpha,
        gamma=config.gamma,
        seed=config.seed,
        burn_in_fraction=config.burn_in_fraction,
        thinning=config.thinning,
        n_leapfrog=config.n_leapfrog,
    )
    base.update(changes)
    return SamplerParams(**base)


def _chain_stats(outputs, seeds):
    return [
        {
            "chain": i,
            "seed": seeds[i],
            "acceptance_rate": o.acceptance_rate,
            "rejection_rate": o.rejection_rate,
            "n_invalid": o.n_invalid,
            "steps_run": o.steps_run,
            "n_samples": o.n_samples,
            "error": o.error,
        }
        for i, o in enumerate(outputs)
    ]


def _default_range(config, model, has_mean):
    try:
        R = equilibrium_radius(model)
    except ValueError:
        R = None
    # finite-N mean densities have tails of width ~ 1/sqrt(N) past the support
    pad = 3.0 / math.sqrt(model.n_particles) if has_mean else 0.0
    return R, pad


def _density_study(config, model, outputs, prefix, files, results):
    mean, equil = reference_densities(model)
    positions = np.concatenate([o.samples for o in outputs]) if outputs else np.empty((0,) + model.shape)
    rows = (
        (c, int(step), p, *positions_c[p])
        for c, o in enumerate(outputs)
        for step, positions_c in zip(o.steps, o.samples)
        for p in range(model.n_particles)
    )
    header = ["chain", "step", "particle"] + [f"coord_{k}" for k in range(model.particle_dim)]
    files["samples"] = prefix.with_name(prefix.name + "_samples.csv")
    _write_csv(files["samples"], header, rows)
    if positions.size == 0:
        return
    R, pad = _default_range(config, model, mean is not None)
    if config.study == "density":
        if config.range is not None:
            lo, hi = config.range
        elif R is not None:
            lo, hi = -(1.1 * R + pad), 1.1 * R + pad
        else:
            m = float(np.abs(positions).max())
            lo, hi = -m, m
        hist = build_histogram(positions.ravel(), config.bins, (lo, hi))
    else:
        if config.r_max is not None:
            r_max = config.r_max
        elif R is not None:
            r_max = 1.1 * R + pad
        else:
            r_max = float(np.sqrt((positions**2).sum(-1)).max())
        hist = radial_histogram(positions, config.bins, r_max)
    columns = [hist.midpoints, hist.density]
    header = ["bin_mid", "density"]
    oracle = mean or equil
    if oracle is not None:
        columns.append(np.asarray(oracle(hist.midpoints), dtype=float))
        header.append("oracle_density")
        sup, l1 = density_distance(hist, oracle)
        results["oracle"] = "finite_n_mean" if mean is not None else "equilibrium"
        results["oracle_sup_gap"], results["oracle_l1_gap"] = sup, l1
    if equil is not None:
        columns.append(np.asarray(equil(hist.midpoints), dtype=float))
        header.append("equilibrium_density")
        sup, l1 = density_distance(hist, equil)
        results["equilibrium_sup_gap"], results["equilibrium_l1_gap"] = sup, l1
    results["histogram_range"] = [float(hist.bin_edges[0]), float(hist.bin_edges[-1])]
    results["n_values"] = int(hist.n_total)
    results["n_outside"] = int(hist.n_outside)
    files["histogram"] = prefix.with_name(prefix.name + "_histogram.csv")
    _write_csv(files["histogram"], header, zip(*columns))


def _edge_study(config, model, outputs, prefix, files, results):
    rows, maxima = [], []
    for c, o in enumerate(outputs):
        mx = max_modulus_series(o) if o.n_samples else np.empty(0)
        maxima.append(mx)
        rows.extend((c, int(s), m) for s, m in zip(o.steps, mx))
    files["maxima"] = prefix.with_name(prefix.name + "_maxima.csv")
    _write_csv(files["maxima"], ["chain", "step", "max_modulus"], rows)
    values = np.concatenate(maxima)
    results["n_maxima"] = int(values.size)
    results["mean_max_modulus"] = float(values.mean()) if values.size else math.nan
    try:
        results["equilibrium_radius"] = equilibrium_radius(model)
    except ValueError:
        results["equilibrium_radius"] = None
    if values.size >= 30 and np.std(values) > 0:
        fit = fit_gumbel(values, config.gumbel_method)
        results["gumbel"] = {
            "loc": fit.loc,
            "scale": fit.scale,
            "method": fit.method,
            "ks": fit.ks_statistic,
            "ks_critical_1pct": ks_critical_value(fit.n, 0.01),
            "ks_passes_1pct": bool(fit.ks_passes),
        }


def _scaling_study(config, model, prefix, files, results):
    params = _params(config, model)
    warmup = int(math.ceil(config.warmup_T / config.dt - 1e-9)) if config.warmup_T > 0 else 0
    dts = config.resolved_dt_list
    if config.study == "rejection-scaling":
        study = rejection_scaling_study(
            model, params, dts, config.T, config.sampler, warmup_steps=warmup, metric=config.rejection_metric
        )
        header = ["dt", "rejection_rate", "rejection_probability"]
        rows = [(dt, o.rejection_rate, o.mean_rejection_probability) for dt, o in zip(study.dt_values, study.chains)]
    else:
        study = energy_scaling_study(model, params, dts, config.T, warmup_steps=warmup)
        header = ["dt", "mean_abs_energy_error"]
        rows = [(dt, o.mean_abs_energy_error) for dt, o in zip(study.dt_values, study.chains)]
    files["scaling"] = prefix.with_name(prefix.name + "_scaling.csv")
    _write_csv(files["scaling"], header, rows)
    results.update(
        metric=study.metric,
        fitted_slope=study.fitted_slope,
        fitted_intercept=study.fitted_intercept,
        r_squared=study.r_squared,
    )
    return study.chains


def run_experiment(config: ExperimentConfig, workers: int | None = None, out: str | None = None) -> ExperimentResult:
    """Execute the study described by ``config`` and write its artifacts.

    Returns ``EXIT_RUNTIME`` as status (with the partial files flagged in the
    meta) when any chain aborted.
    """
    prefix = Path(out or config.out)
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    model = config.build_model()
    files: dict[str, Path] = {}
    results: dict = {}
    seeds: list[int] = []
    if config.study in ("rejection-scaling", "energy-scaling"):
        outputs = _scaling_study(config, model, prefix, files, results)
        seeds = [config.seed] * len(outputs)
    else:
        params = _params(config, model)
        seeds = [derive_seed(config.seed, i) for i in range(config.n_chains)]
        log.info("running %d %s chain(s) of %d steps", config.n_chains, config.sampler, params.n_steps)
        outputs = run_ensemble(model, params, config.sampler, config.n_chains, config.seed, workers)
        if config.study == "edge-gumbel":
            _edge_study(config, model, outputs, prefix, files, results)
        else:
            _density_study(config, model, outputs, prefix, files, results)

    errors = [o.error for o in outputs if o.error]
    meta = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "model": {"name": model.name, "beta": model.beta, "beta_n": model.beta_n, "N": model.n_particles},
        "n_steps": config.n_steps,
        "seed": config.seed,
        "versions": {"gasforge": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "chains": _chain_stats(outputs, seeds),
        "results": results,
        "partial": bool(errors),
        "errors": errors,
        "files": {k: {"path": p.name, "sha256": _sha256(p)} for k, p in files.items()},
    }
    files["meta"] = prefix.with_name(prefix.name + "_meta.json")
    files["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True, default=float) + "\n")
    return ExperimentResult(EXIT_RUNTIME if errors else EXIT_OK, files, meta)
