"""Closed-form reference densities used to validate the samplers.

Includes the finite-N mean eigenvalue densities of the GUE and complex
Ginibre ensembles (beta = 2), several equilibrium measures, and the Gumbel
law for edge fluctuations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import CoulombKernel, GasModel, LogKernel, Quadratic, Quartic

__all__ = [
    "hermite_functions",
    "gue_mean_density",
    "semicircle_density",
    "incomplete_gamma_q",
    "poisson_tail_sum",
    "ginibre_mean_density",
    "ginibre_mean_radial_density",
    "uniform_disk_radial_density",
    "uniform_ball_radial_density",
    "quartic_equilibrium_density",
    "equilibrium_radius",
    "gumbel_cdf",
    "gumbel_pdf",
    "DensityOracle",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.5772156649015329
QUARTIC_A = 3.0 ** -0.25

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


def hermite_functions(t, count: int) -> np.ndarray:
    """Orthonormal Hermite polynomials times ``exp(-t^2/4)``.

    Returns an array of shape ``(count,) + shape(t)`` holding
    ``h_l(t) = H_l(t) exp(-t^2/4)`` for ``l = 0..count-1``, where ``H_l`` are
    orthonormal for the standard Gaussian. The weight is carried through the
    recurrence so that large orders do not overflow.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    t = np.asarray(t, dtype=float)
    out = np.empty((count,) + t.shape)
    out[0] = np.exp(-(t**2) / 4.0)
    if count > 1:
        out[1] = t * out[0]
    for ell in range(1, count - 1):
        out[ell + 1] = (t * out[ell] - math.sqrt(ell) * out[ell - 1]) / math.sqrt(ell + 1)
    return out


def gue_mean_density(x, n: int):
    """Mean empirical eigenvalue density of the GUE with weight exp(-N sum x^2/2)."""
    x = np.asarray(x, dtype=float)
    h = hermite_functions(math.sqrt(n) * x, n)
    val = (h**2).sum(axis=0) / math.sqrt(2.0 * math.pi * n)
    return val if val.ndim else float(val)


def _semicircle(x, radius: float):
    x = np.asarray(x, dtype=float)
    inside = np.clip(radius**2 - x**2, 0.0, None)
    val = 2.0 * np.sqrt(inside) / (math.pi * radius**2)
    return val if val.ndim else float(val)


def semicircle_density(x, beta: float = 2.0):
    """Semicircle density on ``[-beta, beta]``: ``2 sqrt(beta^2 - x^2) / (pi beta^2)``.

    At ``beta = 2`` this is the GUE equilibrium ``sqrt(4 - x^2) / (2 pi)``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _semicircle(x, beta)


def _gamma_q_scalar(a: float, t: float) -> float:
    if t <= 0.0:
        return 1.0
    log_prefactor = a * math.log(t) - t - math.lgamma(a)
    if t < a + 1.0:
        # series for P(a, t)
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(_MAX_ITER):
            ap += 1.0
            term *= t / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return max(0.0, 1.0 - math.exp(log_prefactor + math.log(total)))
    # modified Lentz continued fraction for Q(a, t)
    b = t + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return min(1.0, math.exp(log_prefactor + math.log(h)))


def incomplete_gamma_q(a: float, t):
    """Regularised upper incomplete Gamma ``Q(a, t) = Gamma(a, t) / Gamma(a)``.

    Series below ``t = a + 1``, continued fraction above, evaluated in log
    space. Accepts scalar or array ``t``.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if np.ndim(t) == 0:
        return _gamma_q_scalar(float(a), float(t))
    t = np.asarray(t, dtype=float)
    return np.vectorize(lambda s: _gamma_q_scalar(float(a), s), otypes=[float])(t)


def poisson_tail_sum(n: int, r):
    """``exp(-r) sum_{l<n} r^l / l!``, the truncated Poisson sum (direct summation)."""
    r = np.asarray(r, dtype=float)
    term = np.exp(-r)
    total = term.copy()
    for ell in range(1, n):
        term = term * r / ell
        total = total + term
    return total if total.ndim else float(total)


def ginibre_mean_density(r, n: int):
    """Planar mean eigenvalue density of complex Ginibre at modulus ``r``: Q(N, N r^2)/pi."""
    r = np.asarray(r, dtype=float)
    val = incomplete_gamma_q(n, n * r**2) / math.pi
    return val if np.ndim(val) else float(val)


def ginibre_mean_radial_density(r, n: int):
    """Density of the modulus: ``2 r Q(N, N r^2)``."""
    r = np.asarray(r, dtype=float)
    val = np.where(r >= 0, 2.0 * r * incomplete_gamma_q(n, n * r**2), 0.0)
    return val if val.ndim else float(val)


def uniform_disk_radial_density(r, beta: float = 2.0):
    """Modulus density of the uniform law on the disk of radius sqrt(beta/2)."""
    R = math.sqrt(beta / 2.0)
    r = np.asarray(r, dtype=float)
    val = np.where((r >= 0) & (r <= R), 2.0 * r / R**2, 0.0)
    return val if val.ndim else float(val)


def uniform_ball_radial_density(r, beta: float = 2.0, d: int = 3):
    """Modulus density of the uniform law on the ball of radius (beta (d-2)/2)^(1/d)."""
    R = (beta * (d - 2) / 2.0) ** (1.0 / d)
    r = np.asarray(r, dtype=float)
    val = np.where((r >= 0) & (r <= R), d * r ** (d - 1) / R**d, 0.0)
    return val if val.ndim else float(val)


def quartic_equilibrium_density(x):
    """Equilibrium density for quartic confinement, supported on [-2a, 2a], a = 3^(-1/4)."""
    a = QUARTIC_A
    x = np.asarray(x, dtype=float)
    val = (2 * a**2 + x**2) * np.sqrt(np.clip(4 * a**2 - x**2, 0.0, None)) / (2 * math.pi)
    return val if val.ndim else float(val)


def equilibrium_radius(model: GasModel) -> float:
    """Radius of the support of the equilibrium measure for the built-in presets."""
    conf, inter, d = model.confinement, model.interaction, model.particle_dim
    if isinstance(conf, Quartic):
        # V = x^4 / 8 gives support [-2a, 2a]; the radius scales as scale^(-1/4)
        return 2 * QUARTIC_A * (8.0 * conf.scale) ** -0.25
    if not isinstance(conf, Quadratic):
        raise ValueError("equilibrium unknown for this confinement")
    if isinstance(inter, LogKernel) and d == 1:
        # V = c x^2 gives a semicircle of radius 1 / sqrt(c)
        return 1.0 / math.sqrt(conf.scale)
    if isinstance(inter, LogKernel) and d == 2:
        return math.sqrt(1.0 / (2.0 * conf.scale))
    if isinstance(inter, CoulombKernel) and d == inter.n:
        # uniform ball; with V = |x|^2 / beta this is (beta (d-2) / 2)^(1/d)
        return ((d - 2) / (2.0 * conf.scale)) ** (1.0 / d)
    raise ValueError("equilibrium unknown for this model")


def gumbel_cdf(x, loc: float = 0.0, scale: float = 1.0):
    if not scale > 0:
        raise ValueError("scale must be positive")
    z = (np.asarray(x, dtype=float) - loc) / scale
    val = np.exp(-np.exp(-z))
    return val if val.ndim else float(val)


def gumbel_pdf(x, loc: float = 0.0, scale: float = 1.0):
    if not scale > 0:
        raise ValueError("scale must be positive")
    z = (np.asarray(x, dtype=float) - loc) / scale
    val = np.exp(-z - np.exp(-z)) / scale
    return val if val.ndim else float(val)


@dataclass(frozen=True)
class DensityOracle:
    """A named reference density with its support ``(lo, hi)``.

    Build one with the class methods; call it like a function.
    """

    kind: str
    func: Callable = field(repr=False, compare=False)
    support: tuple[float, float]
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, x):
        return self.func(x)

    pdf = __call__

    @classmethod
    def gue_mean(cls, n: int) -> "DensityOracle":
        # Gaussian tails; 12 standard deviations of the single-particle scale
        lim = 2.0 + 12.0 / math.sqrt(n)
        return cls("GueMeanDensity", lambda x: gue_mean_density(x, n), (-lim, lim), {"N": n})

    @classmethod
    def semicircle(cls, beta: float = 2.0) -> "DensityOracle":
        return cls("Semicircle", lambda x: semicircle_density(x, beta), (-beta, beta), {"beta": beta})

    @classmethod
    def semicircle_radius(cls, radius: float) -> "DensityOracle":
        return cls("Semicircle", lambda x: _semicircle(x, radius), (-radius, radius), {"radius": radius})

    @classmethod
    def ginibre_mean_radial(cls, n: int) -> "DensityOracle":
        lim = 1.0 + 12.0 / math.sqrt(n)
        return cls("GinibreMeanRadial", lambda r: ginibre_mean_radial_density(r, n), (0.0, lim), {"N": n})

    @classmethod
    def uniform_disk_radial(cls, beta: float = 2.0) -> "DensityOracle":
        R = math.sqrt(beta / 2.0)
        return cls("UniformDiskRadial", lambda r: uniform_disk_radial_density(r, beta), (0.0, R), {"beta": beta})

    @classmethod
    def quartic_equilibrium(cls) -> "DensityOracle":
        return cls("QuarticEquilibrium", quartic_equilibrium_density, (-2 * QUARTIC_A, 2 * QUARTIC_A))

    @classmethod
    def uniform_ball_radial(cls, beta: float = 2.0, d: int = 3) -> "DensityOracle":
        R = (beta * (d - 2) / 2.0) ** (1.0 / d)
        return cls(
            "UniformBallRadial",
            lambda r: uniform_ball_radial_density(r, beta, d),
            (0.0, R),
            {"beta": beta, "d": d},
        )

    @classmethod
    def gumbel(cls, loc: float, scale: float) -> "DensityOracle":
        return cls(
            "Gumbel",
            lambda x: gumbel_pdf(x, loc, scale),
            (loc - 8 * scale, loc + 40 * scale),
            {"loc": loc, "scale": scale},
        )
