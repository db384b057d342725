"""Markov chains targeting exp(-beta_n H_N).

Sampler kinds
-------------
``hmc``      OU velocity refresh, one Verlet step, Metropolis selection;
             a rejection keeps the positions and flips the refreshed velocity.
``mala``     Euler-Maruyama proposal with the full kernel-ratio correction.
``ula``      unadjusted Euler-Maruyama.
``tamed``    unadjusted tamed Euler.
``kinetic``  HMC with the selection step switched off (used for energy-drift studies).

Acceptance tests are done in log space: accept iff ``log U < log ratio``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integrators import SamplerParams, _noise_scale, _verlet, ou_refresh, tamed_drift
from .model import Configuration, GasModel, _check, _energy_and_grad, energy, initial_configuration

__all__ = [
    "SAMPLERS",
    "ChainOutput",
    "ChainDivergedError",
    "mala_step",
    "hmc_step",
    "mala_log_ratio",
    "hmc_log_ratio",
    "run_chain",
    "run_ensemble",
    "derive_seed",
]

SAMPLERS = ("hmc", "mala", "ula", "tamed", "kinetic")
KINETIC = ("hmc", "kinetic")

ACCEPTED, REJECTED, INVALID = 0, 1, 2


class ChainDivergedError(RuntimeError):
    """An unadjusted chain produced a non-finite state. ``output`` holds the partial run."""

    def __init__(self, message: str, output: "ChainOutput | None" = None):
        super().__init__(message)
        self.output = output


@dataclass
class ChainOutput:
    """Recorded (post burn-in, thinned) states and run statistics."""

    samples: np.ndarray
    steps: np.ndarray
    energy_trace: np.ndarray
    acceptance_rate: float
    n_accepted: int
    n_rejected: int
    n_invalid: int
    steps_run: int
    sampler: str
    seed: int
    mean_abs_energy_error: float = math.nan
    mean_rejection_probability: float = math.nan
    final: Configuration | None = field(default=None, repr=False)
    error: str | None = None

    @property
    def rejection_rate(self) -> float:
        """Fraction of steps rejected by the Metropolis test (invalid proposals excluded)."""
        return self.n_rejected / self.steps_run if self.steps_run else math.nan

    @property
    def n_samples(self) -> int:
        return len(self.samples)


def _log_uniform(rng: np.random.Generator) -> float:
    u = rng.random()
    return math.log(u) if u > 0.0 else -math.inf


# ---------------------------------------------------------------------------
# MALA


def _log_kernel(beta_n, h, a, b, grad_a):
    r = b - a + h * grad_a
    return -beta_n * float(np.sum(r * r)) / (4.0 * h)


def mala_log_ratio(model: GasModel, params: SamplerParams, x, x_new) -> float:
    """Log of the MALA acceptance ratio for a move ``x -> x_new`` (before taking min with 0)."""
    x, x_new = _check(model, x), _check(model, x_new)
    e, g = _energy_and_grad(model, x)
    e1, g1 = _energy_and_grad(model, x_new)
    return _mala_log_ratio(params, x, e, g, x_new, e1, g1)


def _mala_log_ratio(params, x, e, g, x1, e1, g1):
    if not math.isfinite(e1):
        return -math.inf
    h = params.alpha * params.dt
    bn = params.beta_n
    return (
        -bn * (e1 - e)
        + _log_kernel(bn, h, x1, x, g1)
        - _log_kernel(bn, h, x, x1, g)
    )


def _mala_transition(model, params, x, e, g, rng):
    h = params.alpha * params.dt
    x1 = x - h * g + _noise_scale(params) * rng.standard_normal(x.shape)
    e1, g1 = _energy_and_grad(model, x1)
    log_u = _log_uniform(rng)
    if not math.isfinite(e1):
        return x, e, g, INVALID, -math.inf
    log_ratio = _mala_log_ratio(params, x, e, g, x1, e1, g1)
    if log_u < log_ratio:
        return x1, e1, g1, ACCEPTED, log_ratio
    return x, e, g, REJECTED, log_ratio


def mala_step(
    model: GasModel, params: SamplerParams, config: Configuration, rng: np.random.Generator
) -> tuple[Configuration, bool]:
    """One MALA transition. Returns the new configuration and whether the proposal was accepted."""
    x = _check(model, config)
    e, g = _energy_and_grad(model, x)
    if not math.isfinite(e):
        raise ValueError("MALA needs a starting state with finite energy")
    x1, _, _, status, _ = _mala_transition(model, params, x, e, g, rng)
    return Configuration(x1.copy()), status == ACCEPTED


# ---------------------------------------------------------------------------
# HMC


def hmc_log_ratio(model: GasModel, params: SamplerParams, x, y, x_new, y_new) -> float:
    """``-beta_n`` times the change of ``H_N(x) + |y|^2 / 2`` between two phase-space points."""
    e = energy(model, x)
    e1 = energy(model, x_new)
    if not math.isfinite(e1):
        return -math.inf
    y, y_new = np.asarray(y, dtype=float), np.asarray(y_new, dtype=float)
    dh = e1 + 0.5 * float(np.sum(y_new * y_new)) - e - 0.5 * float(np.sum(y * y))
    return -params.beta_n * dh


def _hmc_transition(model, params, x, y, e, g, rng, select=True):
    # returns (x, y, e, g, status, dH)
    y_ref = ou_refresh(params, y, rng)
    x1, y1, e1, g1 = _verlet(model, params, x, y_ref, g)
    log_u = _log_uniform(rng)
    if not math.isfinite(e1):
        return x, -y_ref, e, g, INVALID, math.inf
    dh = e1 + 0.5 * float(np.dot(y1.ravel(), y1.ravel())) - e - 0.5 * float(
        np.dot(y_ref.ravel(), y_ref.ravel())
    )
    if not select or log_u < -params.beta_n * dh:
        return x1, y1, e1, g1, ACCEPTED, dh
    return x, -y_ref, e, g, REJECTED, dh


def hmc_step(
    model: GasModel, params: SamplerParams, config: Configuration, rng: np.random.Generator
) -> tuple[Configuration, bool]:
    """One HMC transition: OU refresh, Verlet proposal, Metropolis test.

    On rejection the positions are unchanged and the momenta are the negated
    refreshed momenta.
    """
    if config.momenta is None:
        raise ValueError("HMC needs momenta")
    x = _check(model, config)
    e, g = _energy_and_grad(model, x)
    if not math.isfinite(e):
        raise ValueError("HMC needs a starting state with finite energy")
    x1, y1, _, _, status, _ = _hmc_transition(model, params, x, config.momenta, e, g, rng)
    return Configuration(x1.copy(), y1.copy()), status == ACCEPTED


# ---------------------------------------------------------------------------
# Chains


def run_chain(
    model: GasModel,
    params: SamplerParams,
    sampler_kind: str = "hmc",
    initial: Configuration | None = None,
    rng: np.random.Generator | None = None,
) -> ChainOutput:
    """Run ``params.n_steps`` transitions and record thinned post burn-in states.

    Step ``k`` (1-based) is recorded when ``k > burn_in`` and
    ``(k - burn_in) % thinning == 0``. With ``rng`` omitted the generator is
    seeded from ``params.seed``; a missing initial state is drawn from it
    with :func:`~gasforge.model.initial_configuration`.

    Raises :class:`ChainDivergedError` if an unadjusted chain leaves the
    finite domain.
    """
    if sampler_kind not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler_kind!r}; choose from {SAMPLERS}")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    kinetic = sampler_kind in KINETIC
    if initial is None:
        initial = initial_configuration(model, rng, with_momenta=kinetic)
    x = _check(model, initial).copy()
    y = None
    if kinetic:
        if initial.momenta is None:
            y = rng.standard_normal(x.shape) / math.sqrt(params.beta_n)
        else:
            y = initial.momenta.copy()
    e, g = _energy_and_grad(model, x)
    if not math.isfinite(e):
        raise ValueError("initial configuration has infinite energy")

    n_rec = params.n_recorded
    burn, thin = params.burn_in, params.thinning
    samples = np.empty((n_rec,) + x.shape)
    steps = np.empty(n_rec, dtype=np.int64)
    trace = np.empty(n_rec)
    counts = [0, 0, 0]
    abs_dh = 0.0
    n_dh = 0
    sum_reject_p = 0.0
    h = params.alpha * params.dt
    noise = _noise_scale(params)
    rec = 0

    def partial(k, message=None):
        return ChainOutput(
            samples=samples[:rec].copy(),
            steps=steps[:rec].copy(),
            energy_trace=trace[:rec].copy(),
            acceptance_rate=(counts[ACCEPTED] / k) if k else math.nan,
            n_accepted=counts[ACCEPTED],
            n_rejected=counts[REJECTED],
            n_invalid=counts[INVALID],
            steps_run=k,
            sampler=sampler_kind,
            seed=params.seed,
            mean_abs_energy_error=(abs_dh / n_dh) if (n_dh and kinetic) else math.nan,
            mean_rejection_probability=(sum_reject_p / n_dh) if n_dh else math.nan,
            final=Configuration(x.copy(), None if y is None else y.copy()),
            error=message,
        )

    for k in range(1, params.n_steps + 1):
        if sampler_kind == "hmc" or sampler_kind == "kinetic":
            x, y, e, g, status, dh = _hmc_transition(
                model, params, x, y, e, g, rng, select=sampler_kind == "hmc"
            )
            if status != INVALID:
                abs_dh += abs(dh)
                n_dh += 1
                sum_reject_p += -math.expm1(min(0.0, -params.beta_n * dh))
            elif sampler_kind == "kinetic":
                counts[INVALID] += 1
                msg = f"unadjusted kinetic chain hit a singular state at step {k}"
                raise ChainDivergedError(msg, partial(k, msg))
        elif sampler_kind == "mala":
            x, e, g, status, log_ratio = _mala_transition(model, params, x, e, g, rng)
            if status != INVALID:
                n_dh += 1
                sum_reject_p += -math.expm1(min(0.0, log_ratio))
        else:
            drift = h * g if sampler_kind == "ula" else tamed_drift(g, h)
            # a blow-up is reported below, not warned about
            with np.errstate(over="ignore", invalid="ignore"):
                x = x - drift + noise * rng.standard_normal(x.shape)
                e, g = _energy_and_grad(model, x)
            status = ACCEPTED
            if not (math.isfinite(e) and np.isfinite(g).all()):
                msg = f"{sampler_kind} chain diverged at step {k} (non-finite state)"
                raise ChainDivergedError(msg, partial(k - 1, msg))
        counts[status] += 1
        if k > burn and (k - burn) % thin == 0:
            samples[rec] = x
            steps[rec] = k
            trace[rec] = e
            rec += 1

    out = partial(params.n_steps)
    if sampler_kind in ("ula", "tamed", "kinetic"):
        out.acceptance_rate = 1.0
    return out


def derive_seed(master_seed: int, index: int) -> int:
    """Per-chain seed, a hash of ``(master_seed, index)`` through numpy's SeedSequence."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _ensemble_worker(args) -> ChainOutput:
    model, params, kind = args
    try:
        return run_chain(model, params, kind)
    except ChainDivergedError as exc:
        return exc.output


def run_ensemble(
    model: GasModel,
    params: SamplerParams,
    sampler_kind: str,
    n_chains: int,
    master_seed: int,
    workers: int | None = None,
) -> list[ChainOutput]:
    """Run independent chains with seeds ``derive_seed(master_seed, i)``.

    The result is ordered by chain index and does not depend on ``workers``.
    A diverged chain is returned as its partial output with ``error`` set.
    """
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    jobs = [(model, params.with_(seed=derive_seed(master_seed, i)), sampler_kind) for i in range(n_chains)]
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, n_chains))
    if workers == 1:
        return [_ensemble_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_ensemble_worker, jobs))
