"""One-step integrators for overdamped and kinetic Langevin dynamics.

Random numbers come from a caller-owned ``numpy.random.Generator``. Each
Gaussian refresh consumes exactly one standard normal block of shape (N, d),
in C order, so a chain is reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import Configuration, GasModel, _check, _energy_and_grad, grad_energy

__all__ = [
    "SamplerParams",
    "euler_maruyama_step",
    "tamed_euler_step",
    "tamed_drift",
    "verlet_step",
    "ou_refresh",
]


@dataclass(frozen=True)
class SamplerParams:
    """Everything that controls a run.

    ``alpha`` is the time-scale parameter multiplying every drift and ``gamma``
    the friction of the kinetic dynamics. ``n_leapfrog`` Verlet steps are
    chained per HMC proposal (1 by default).
    """

    dt: float
    beta_n: float
    n_steps: int = 1
    alpha: float = 1.0
    gamma: float = 1.0
    seed: int = 0
    burn_in_fraction: float = 0.5
    thinning: int = 1
    n_leapfrog: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        if not self.beta_n > 0:
            raise ValueError("beta_n must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.n_leapfrog < 1:
            raise ValueError("n_leapfrog must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_recorded < 1:
            raise ValueError("burn_in_fraction and thinning leave no recorded sample")

    @classmethod
    def for_model(cls, model: GasModel, dt: float, **kwargs) -> "SamplerParams":
        return cls(dt=dt, beta_n=model.beta_n, **kwargs)

    @property
    def eta(self) -> float:
        """Velocity damping factor exp(-gamma alpha dt) of one OU refresh."""
        return math.exp(-self.gamma * self.alpha * self.dt)

    @property
    def burn_in(self) -> int:
        return int(math.floor(self.burn_in_fraction * self.n_steps))

    @property
    def n_recorded(self) -> int:
        return (self.n_steps - self.burn_in) // self.thinning

    def with_(self, **changes) -> "SamplerParams":
        return replace(self, **changes)


def _noise_scale(params: SamplerParams) -> float:
    return math.sqrt(2.0 * params.alpha * params.dt / params.beta_n)


def euler_maruyama_step(
    model: GasModel, params: SamplerParams, config: Configuration, rng: np.random.Generator
) -> Configuration:
    """x' = x - alpha dt grad H(x) + sqrt(2 alpha dt / beta_n) G.

    No safeguard near singularities: a coincident pair raises
    :class:`~gasforge.model.CoincidentParticlesError`.
    """
    x = config.positions
    g = grad_energy(model, x)
    h = params.alpha * params.dt
    return Configuration(x - h * g + _noise_scale(params) * rng.standard_normal(x.shape))


def tamed_drift(grad: np.ndarray, h: float) -> np.ndarray:
    """Tamed drift ``h grad / (1 + h |grad|)`` with the global Euclidean norm.

    Its norm is below 1. An infinite gradient yields the unit vector along the
    infinite components, the limit of the formula.
    """
    grad = np.asarray(grad, dtype=float)
    m = float(np.max(np.abs(grad))) if grad.size else 0.0
    if m == 0.0:
        return np.zeros_like(grad)
    if math.isinf(m):
        direction = np.where(np.isinf(grad), np.sign(grad), 0.0)
        return direction / np.sqrt(np.sum(direction * direction))
    # rescale before squaring so huge gradients do not overflow
    u = grad / m
    norm_u = float(np.sqrt(np.sum(u * u)))
    t = h * m * norm_u
    if math.isinf(t):
        return u / norm_u
    return u * (h * m / (1.0 + t))


def tamed_euler_step(
    model: GasModel, params: SamplerParams, config: Configuration, rng: np.random.Generator
) -> Configuration:
    """Euler-Maruyama with the drift replaced by :func:`tamed_drift`."""
    x = config.positions
    g = grad_energy(model, x)
    drift = tamed_drift(g, params.alpha * params.dt)
    return Configuration(x - drift + _noise_scale(params) * rng.standard_normal(x.shape))


def _verlet(model, params, x, y, g):
    # kick-drift-kick; returns the end state with its energy and gradient
    h = params.alpha * params.dt
    e = math.nan
    for _ in range(params.n_leapfrog):
        y = y - (0.5 * h) * g
        x = x + h * y
        e, g = _energy_and_grad(model, x)
        if not math.isfinite(e):
            return x, y, math.inf, g
        y = y - (0.5 * h) * g
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        return x, y, math.inf, g
    return x, y, e, g


def verlet_step(
    model: GasModel, params: SamplerParams, positions, momenta
) -> tuple[np.ndarray, np.ndarray, bool]:
    """One velocity-Verlet step of the Hamiltonian part, scaled by ``alpha``.

    Returns ``(positions, momenta, valid)``. ``valid`` is False when the
    trajectory hits a coincident pair or produces non-finite values; callers
    treat that as an infinite energy.
    """
    x = _check(model, positions)
    y = np.asarray(momenta, dtype=float).reshape(x.shape)
    e0, g0 = _energy_and_grad(model, x)
    if not math.isfinite(e0):
        return x.copy(), y.copy(), False
    x1, y1, e1, _ = _verlet(model, params, x, y, g0)
    return x1, y1, math.isfinite(e1)


def ou_refresh(params: SamplerParams, momenta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Exact Ornstein-Uhlenbeck velocity update (Mehler formula).

    ``y' = eta y + sqrt((1 - eta^2) / beta_n) G`` with ``eta = exp(-gamma alpha dt)``;
    it leaves N(0, I / beta_n) invariant.
    """
    eta = params.eta
    noise = rng.standard_normal(np.shape(momenta))
    return eta * momenta + math.sqrt((1.0 - eta * eta) / params.beta_n) * noise
