"""Gas models: confinement, pair interaction and the Hamiltonian.

The energy of a configuration ``x = (x_1, ..., x_N)`` with ``x_i`` in R^d is

    H_N(x) = (1/N) sum_i V(x_i) + (1/N^2) sum_{i<j} W(x_i - x_j)

and the target law is proportional to ``exp(-beta_N H_N)``.
Positions are stored as C-contiguous ``(N, d)`` float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "Quadratic",
    "Quartic",
    "HardWall",
    "LogKernel",
    "CoulombKernel",
    "GasModel",
    "Configuration",
    "CoincidentParticlesError",
    "beta_hermite",
    "beta_ginibre",
    "quartic",
    "coulomb3d",
    "loggas3d",
    "PRESETS",
    "make_model",
    "energy",
    "grad_energy",
    "energy_and_grad",
    "initial_configuration",
]

# Separations below this are treated as exact coincidence (infinite energy).
MIN_DISTANCE = 1e-300


class CoincidentParticlesError(ValueError):
    """Raised when a force is requested at a configuration with a coincident pair."""


# ---------------------------------------------------------------------------
# Confinements


@dataclass(frozen=True)
class Quadratic:
    """V(x) = scale * |x|^2."""

    scale: float

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.scale * np.einsum("ij,ij->i", x, x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return (2.0 * self.scale) * x


@dataclass(frozen=True)
class Quartic:
    """V(x) = scale * x^4, one-dimensional particles only."""

    scale: float = 0.25

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.scale * x[:, 0] ** 4

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return (4.0 * self.scale) * x**3


@dataclass(frozen=True)
class HardWall:
    """Infinite wall outside an interval. Declared only; sampling it needs constrained dynamics."""

    interval: tuple[float, float] = (-1.0, 1.0)

    def value(self, x):
        raise NotImplementedError("HardWall confinement is not supported by the samplers")

    gradient = value


# ---------------------------------------------------------------------------
# Pair interactions. Both act on squared distances ``r2`` and return the
# kernel value together with the scalar ``c`` such that grad W(x) = c * x.


@dataclass(frozen=True)
class LogKernel:
    """W(x) = -log|x|."""

    def pair_terms(self, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return -0.5 * np.log(r2), -1.0 / r2

    def value(self, r2: np.ndarray) -> np.ndarray:
        return -0.5 * np.log(r2)


@dataclass(frozen=True)
class CoulombKernel:
    """W(x) = |x|^{-(n-2)}, the Coulomb kernel of R^n for n >= 3."""

    n: int = 3

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("CoulombKernel needs n >= 3; use LogKernel for n = 2")

    def pair_terms(self, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = r2 ** (-(self.n - 2) / 2.0)
        return w, -(self.n - 2) * w / r2

    def value(self, r2: np.ndarray) -> np.ndarray:
        return r2 ** (-(self.n - 2) / 2.0)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GasModel:
    """A Boltzmann-Gibbs measure ``exp(-beta_n * H_N)`` on (R^d)^N.

    ``beta_n`` is stored explicitly; the presets set it to ``N**2 * beta``.
    """

    particle_dim: int
    ambient_dim: int
    beta: float
    n_particles: int
    confinement: Quadratic | Quartic | HardWall
    interaction: LogKernel | CoulombKernel
    beta_n: float = None  # type: ignore[assignment]
    name: str = "custom"

    def __post_init__(self):
        if self.particle_dim < 1:
            raise ValueError("particle_dim must be >= 1")
        if self.ambient_dim < 2:
            raise ValueError("ambient_dim must be >= 2")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if isinstance(self.confinement, Quartic) and self.particle_dim != 1:
            raise ValueError("Quartic confinement is only defined for d = 1")
        if self.beta_n is None:
            object.__setattr__(self, "beta_n", float(self.n_particles**2 * self.beta))
        if not self.beta_n > 0:
            raise ValueError("beta_n must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_particles, self.particle_dim)


@dataclass
class Configuration:
    """Particle positions, shape (N, d), with optional momenta of the same shape."""

    positions: np.ndarray
    momenta: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions.reshape(-1, 1)
        if self.momenta is not None:
            self.momenta = np.ascontiguousarray(self.momenta, dtype=float).reshape(
                self.positions.shape
            )

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "Configuration":
        return Configuration(
            self.positions.copy(), None if self.momenta is None else self.momenta.copy()
        )


# ---------------------------------------------------------------------------
# Presets


def beta_hermite(beta: float, n: int) -> GasModel:
    """Beta-Hermite log-gas on the line; beta = 2 is the GUE."""
    return GasModel(1, 2, beta, n, Quadratic(1.0 / (2.0 * beta)), LogKernel(), name="beta_hermite")


def beta_ginibre(beta: float, n: int) -> GasModel:
    """Beta-Ginibre gas in the plane; beta = 2 is the complex Ginibre ensemble."""
    return GasModel(2, 2, beta, n, Quadratic(1.0 / beta), LogKernel(), name="beta_ginibre")


def quartic(n: int, beta: float = 2.0) -> GasModel:
    """Log-gas on the line with quartic confinement.

    The weight is ``exp(-N sum x_i^4 / 4) prod |x_i - x_j|^beta``, which in the
    ``H_N`` normalisation above means ``V(x) = x^4 / (4 beta)`` (the same
    convention as :func:`beta_hermite`, whose weight uses ``x^2 / 2``).
    """
    return GasModel(1, 2, beta, n, Quartic(1.0 / (4.0 * beta)), LogKernel(), name="quartic")


def coulomb3d(beta: float, n: int) -> GasModel:
    return GasModel(3, 3, beta, n, Quadratic(1.0 / beta), CoulombKernel(3), name="coulomb3d")


def loggas3d(beta: float, n: int) -> GasModel:
    return GasModel(3, 3, beta, n, Quadratic(1.0 / beta), LogKernel(), name="loggas3d")


PRESETS = {
    "beta_hermite": beta_hermite,
    "gue": beta_hermite,
    "beta_ginibre": beta_ginibre,
    "ginibre": beta_ginibre,
    "quartic": lambda beta, n: quartic(n, beta),
    "coulomb3d": coulomb3d,
    "loggas3d": loggas3d,
}


def make_model(name: str, beta: float, n: int) -> GasModel:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(beta, n)


# ---------------------------------------------------------------------------
# Energy and forces


@lru_cache(maxsize=64)
def _pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, 1)
    return i, j


def _check(model: GasModel, positions: np.ndarray) -> np.ndarray:
    x = positions.positions if isinstance(positions, Configuration) else positions
    x = np.asarray(x, dtype=float)
    if x.ndim == 1 and model.particle_dim == 1:
        x = x.reshape(-1, 1)
    if x.shape != model.shape:
        raise ValueError(f"configuration shape {x.shape} does not match model shape {model.shape}")
    return x


def energy(model: GasModel, config) -> float:
    """H_N at a configuration; ``inf`` if two particles coincide."""
    x = _check(model, config)
    n = model.n_particles
    with np.errstate(over="ignore", invalid="ignore"):
        return _energy_raw(model, x, n)


def _energy_raw(model, x, n):
    e = model.confinement.value(x).sum() / n
    if n > 1:
        i, j = _pairs(n)
        diff = x[i] - x[j]
        r2 = np.einsum("ij,ij->i", diff, diff)
        if r2.min() <= MIN_DISTANCE**2:
            return math.inf
        e += model.interaction.value(r2).sum() / n**2
    return float(e)


def _energy_and_grad(model: GasModel, x: np.ndarray) -> tuple[float, np.ndarray]:
    # overflow far from the origin shows up as a non-finite energy; callers check it
    with np.errstate(over="ignore", invalid="ignore"):
        return _energy_and_grad_raw(model, x)


def _energy_and_grad_raw(model: GasModel, x: np.ndarray) -> tuple[float, np.ndarray]:
    # hot path: no shape checks
    n, d = x.shape
    e = model.confinement.value(x).sum() / n
    g = model.confinement.gradient(x) / n
    if n == 1:
        return float(e), g
    i, j = _pairs(n)
    diff = x[i] - x[j]
    r2 = np.einsum("ij,ij->i", diff, diff)
    if r2.min() <= MIN_DISTANCE**2:
        return math.inf, np.full_like(x, math.inf)
    w, c = model.interaction.pair_terms(r2)
    e += w.sum() / n**2
    f = diff * (c / n**2)[:, None]
    # grad_i gets +f_ij, grad_j gets -f_ij (antisymmetry of grad W)
    for k in range(d):
        g[:, k] += np.bincount(i, f[:, k], minlength=n) - np.bincount(j, f[:, k], minlength=n)
    return float(e), g


def energy_and_grad(model: GasModel, config) -> tuple[float, np.ndarray]:
    """H_N and its gradient from a single sweep over pairs.

    A coincident pair gives ``(inf, array of inf)``; samplers treat it as a
    certain rejection.
    """
    return _energy_and_grad(model, _check(model, config))


def grad_energy(model: GasModel, config) -> np.ndarray:
    """Gradient of H_N, shape (N, d). Raises CoincidentParticlesError at a coincidence."""
    e, g = _energy_and_grad(model, _check(model, config))
    if math.isinf(e):
        raise CoincidentParticlesError("two particles coincide; the force is infinite")
    return g


# ---------------------------------------------------------------------------


def _init_half_width(model: GasModel) -> float:
    from .oracles import equilibrium_radius

    try:
        return equilibrium_radius(model)
    except ValueError:
        return 1.0


def initial_configuration(
    model: GasModel, rng: np.random.Generator, with_momenta: bool = False
) -> Configuration:
    """I.i.d. uniform positions on a centred box of half-width the equilibrium radius.

    Draws are repeated until no two particles are closer than half the typical
    nearest-neighbour scale ``h N^(-2/d)``. Exact coincidence would give an
    infinite energy, and a very close pair makes large-step HMC reject every
    proposal for a long time. Momenta, if requested, are drawn from the
    stationary law N(0, I / beta_n).
    """
    h = _init_half_width(model)
    n, d = model.shape
    min_gap = 0.5 * h * n ** (-2.0 / d)
    while True:
        x = rng.uniform(-h, h, size=model.shape)
        if n == 1:
            break
        i, j = _pairs(n)
        gaps = np.sqrt(np.sum((x[i] - x[j]) ** 2, axis=1))
        if gaps.min() >= min_gap and math.isfinite(energy(model, x)):
            break
    y = rng.standard_normal(model.shape) / math.sqrt(model.beta_n) if with_momenta else None
    return Configuration(x, y)
