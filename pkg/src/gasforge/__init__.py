"""Hybrid Monte Carlo and Langevin samplers for Coulomb and log-gases."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    PRESETS,
    CoincidentParticlesError,
    Configuration,
    CoulombKernel,
    GasModel,
    LogKernel,
    Quadratic,
    Quartic,
    energy,
    energy_and_grad,
    grad_energy,
    initial_configuration,
    make_model,
)
from .integrators import SamplerParams, euler_maruyama_step, ou_refresh, tamed_euler_step, verlet_step  # noqa: E402
from .samplers import ChainDivergedError, ChainOutput, hmc_step, mala_step, run_chain, run_ensemble  # noqa: E402
from .oracles import DensityOracle, equilibrium_radius  # noqa: E402
from .diagnostics import (  # noqa: E402
    build_histogram,
    energy_scaling_study,
    fit_gumbel,
    radial_histogram,
    rejection_scaling_study,
)
from .config import ConfigError, ExperimentConfig, parse_config  # noqa: E402
from .experiment import run_experiment  # noqa: E402

__all__ = [
    "__version__",
    "PRESETS",
    "CoincidentParticlesError",
    "Configuration",
    "CoulombKernel",
    "GasModel",
    "LogKernel",
    "Quadratic",
    "Quartic",
    "energy",
    "energy_and_grad",
    "grad_energy",
    "initial_configuration",
    "make_model",
    "SamplerParams",
    "euler_maruyama_step",
    "ou_refresh",
    "tamed_euler_step",
    "verlet_step",
    "ChainDivergedError",
    "ChainOutput",
    "hmc_step",
    "mala_step",
    "run_chain",
    "run_ensemble",
    "DensityOracle",
    "equilibrium_radius",
    "build_histogram",
    "energy_scaling_study",
    "fit_gumbel",
    "radial_histogram",
    "rejection_scaling_study",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "run_experiment",
]
