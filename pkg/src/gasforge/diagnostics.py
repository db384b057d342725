"""Post-processing of chain output: histograms, log-log slope studies, edge statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .integrators import SamplerParams
from .model import Configuration, GasModel
from .oracles import EULER_GAMMA, gumbel_cdf
from .samplers import ChainOutput, run_chain

__all__ = [
    "Histogram",
    "SlopeStudy",
    "GumbelFit",
    "build_histogram",
    "radial_histogram",
    "fit_loglog",
    "rejection_scaling_study",
    "energy_scaling_study",
    "max_modulus_series",
    "fit_gumbel",
    "ks_statistic",
    "ks_critical_value",
    "density_distance",
    "effective_sample_size",
    "batch_means_se",
]


@dataclass
class Histogram:
    """Density histogram.

    ``density = counts / (n_total * width)`` where ``n_total`` includes the
    ``n_outside`` values that fell outside the bin range, so that
    ``sum(density * width) + n_outside / n_total == 1``.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    n_total: int
    n_outside: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.widths))


def build_histogram(values, n_bins: int, range: tuple[float, float]) -> Histogram:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("cannot build a histogram from no values")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = map(float, range)
    if not hi > lo:
        raise ValueError("histogram range must be nonempty")
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    n_total = values.size
    density = counts / (n_total * np.diff(edges))
    return Histogram(edges, counts, density, n_total, int(n_total - counts.sum()))


def radial_histogram(positions, n_bins: int, r_max: float) -> Histogram:
    """Histogram of particle moduli ``|x|`` on ``[0, r_max]``, as a density in ``r``."""
    positions = np.asarray(positions, dtype=float)
    if positions.ndim < 2 or positions.shape[-1] < 2:
        raise ValueError("radial histograms need particle dimension >= 2")
    r = np.sqrt(np.sum(positions**2, axis=-1))
    return build_histogram(r, n_bins, (0.0, r_max))


def density_distance(hist: Histogram, oracle) -> tuple[float, float]:
    """Sup and L1 gaps between a histogram density and an oracle at bin midpoints."""
    f = np.asarray(oracle(hist.midpoints), dtype=float)
    gap = np.abs(hist.density - f)
    return float(gap.max()), float(np.sum(gap * hist.widths))


# ---------------------------------------------------------------------------
# Slope studies


@dataclass
class SlopeStudy:
    dt_values: np.ndarray
    metric_values: np.ndarray
    fitted_slope: float
    fitted_intercept: float
    r_squared: float
    metric: str = ""
    chains: list = field(default_factory=list, repr=False)


def fit_loglog(dt_values, metric_values, metric: str = "") -> SlopeStudy:
    """Least-squares line through ``(log dt, log metric)``."""
    dt = np.asarray(dt_values, dtype=float)
    m = np.asarray(metric_values, dtype=float)
    if np.any(dt <= 0) or np.any(m <= 0):
        raise ValueError("log-log fit needs positive values")
    lx, ly = np.log(dt), np.log(m)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeStudy(dt, m, float(slope), float(intercept), min(1.0, max(0.0, r2)), metric)


def _check_dt_list(dt_list):
    dt_list = sorted(float(v) for v in dt_list)
    if len(dt_list) < 3 or dt_list[-1] < 4 * dt_list[0]:
        raise ValueError("dt_list needs at least 3 values spanning a factor 4")
    return dt_list


def _per_dt_runs(model, params_base, dt_list, t_final, kind, initial, warmup_steps):
    if initial is None and warmup_steps > 0:
        warm = params_base.with_(n_steps=warmup_steps, burn_in_fraction=0.0, thinning=warmup_steps)
        initial = run_chain(model, warm, "hmc" if kind == "kinetic" else kind).final
    outputs = []
    for dt in dt_list:
        n_steps = int(math.ceil(t_final / dt - 1e-9))
        params = params_base.with_(dt=dt, n_steps=n_steps, burn_in_fraction=0.0, thinning=n_steps)
        outputs.append(run_chain(model, params, kind, initial=initial))
    return outputs


def rejection_scaling_study(
    model: GasModel,
    params_base: SamplerParams,
    dt_list,
    t_final: float,
    sampler: str = "hmc",
    initial: Configuration | None = None,
    warmup_steps: int = 0,
    metric: str = "probability",
) -> SlopeStudy:
    """Rejection rate of the Metropolis step against the time step.

    One chain of physical length ``t_final`` is run per time step, all
    started from ``initial`` (or from the end of a ``warmup_steps`` run at
    ``params_base.dt``). ``metric="count"`` uses the realised fraction of
    rejected moves; ``metric="probability"`` (default) uses the mean of
    ``1 - min(1, ratio)`` over the same steps, which has the same expectation
    and far less noise when rejections are rare.
    Proposals hitting a coincident pair are not counted as rejections.
    """
    if metric not in ("probability", "count"):
        raise ValueError("metric must be 'probability' or 'count'")
    dt_list = _check_dt_list(dt_list)
    outs = _per_dt_runs(model, params_base, dt_list, t_final, sampler, initial, warmup_steps)
    if metric == "count":
        study = fit_loglog(dt_list, [o.rejection_rate for o in outs], "rejection_rate")
    else:
        study = fit_loglog(dt_list, [o.mean_rejection_probability for o in outs], "rejection_probability")
    study.chains = outs
    return study


def energy_scaling_study(
    model: GasModel,
    params_base: SamplerParams,
    dt_list,
    t_final: float,
    initial: Configuration | None = None,
    warmup_steps: int = 0,
) -> SlopeStudy:
    """Mean one-step ``|Delta H~|`` of the Verlet map along a kinetic chain with selection off."""
    dt_list = _check_dt_list(dt_list)
    outs = _per_dt_runs(model, params_base, dt_list, t_final, "kinetic", initial, warmup_steps)
    study = fit_loglog(dt_list, [o.mean_abs_energy_error for o in outs], "mean_abs_energy_error")
    study.chains = outs
    return study


# ---------------------------------------------------------------------------
# Autocorrelation


def effective_sample_size(x) -> float:
    """ESS of a scalar chain from Geyer's initial monotone sequence estimator."""
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 4:
        raise ValueError("effective_sample_size needs at least 4 values")
    xc = x - x.mean()
    var = float(np.dot(xc, xc)) / n
    if var == 0.0:
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n] / n
    rho = acov / acov[0]
    # sums of adjacent pairs, truncated at the first negative and made monotone
    m = (n - 1) // 2
    pairs = rho[0 : 2 * m : 2] + rho[1 : 2 * m : 2]
    neg = np.nonzero(pairs <= 0)[0]
    k = int(neg[0]) if neg.size else m
    pairs = np.minimum.accumulate(pairs[:k]) if k else pairs[:0]
    tau = -1.0 + 2.0 * float(pairs.sum())
    return float(n / max(tau, 1.0 / n))


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=float).ravel()
    size = x.size // n_batches
    if size < 1:
        raise ValueError("series shorter than the number of batches")
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


# ---------------------------------------------------------------------------
# Edge statistics


def max_modulus_series(chain_output) -> np.ndarray:
    """Largest particle modulus for every recorded configuration."""
    samples = chain_output.samples if isinstance(chain_output, ChainOutput) else chain_output
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[None]
    return np.sqrt(np.sum(samples**2, axis=-1)).max(axis=-1)


def ks_statistic(values, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one value")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical_value(n: int, level: float = 0.01) -> float:
    """Asymptotic critical value ``c(level) / sqrt(n)``; 1.628 / sqrt(n) at the 1% level."""
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    return c / math.sqrt(n)


@dataclass
class GumbelFit:
    loc: float
    scale: float
    method: str
    ks_statistic: float
    n: int

    def cdf(self, x):
        return gumbel_cdf(x, self.loc, self.scale)

    @property
    def ks_passes(self) -> bool:
        """KS test at the 1% level."""
        return self.ks_statistic <= ks_critical_value(self.n, 0.01)


def _gumbel_mle(x: np.ndarray, s0: float) -> tuple[float, float]:
    xbar = x.mean()
    xc = x - xbar

    def score(s):
        w = np.exp(-xc / s)
        return xbar - s - float(np.sum(x * w) / np.sum(w))

    lo, hi = s0 / 10, s0 * 10
    s = brentq(score, lo, hi, xtol=1e-14 * s0)
    mu = xbar - s * math.log(float(np.mean(np.exp(-xc / s))))
    return mu, s


def fit_gumbel(values, method: str = "moments") -> GumbelFit:
    """Translation-scale Gumbel fit.

    ``moments``: ``s = sqrt(6) std / pi`` and ``loc = mean - gamma_E s``.
    ``mle``: maximum likelihood, started from the moments estimate.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 30:
        raise ValueError("fit_gumbel needs at least 30 values")
    sd = float(np.std(x))
    if not sd > 0:
        raise ValueError("fit_gumbel needs values with nonzero variance")
    s = math.sqrt(6.0) * sd / math.pi
    mu = float(np.mean(x)) - EULER_GAMMA * s
    if method == "mle":
        mu, s = _gumbel_mle(x, s)
    elif method != "moments":
        raise ValueError("method must be 'moments' or 'mle'")
    ks = ks_statistic(x, lambda t: gumbel_cdf(t, mu, s))
    return GumbelFit(mu, s, method, ks, x.size)
