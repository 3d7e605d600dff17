"""Continuous-time quantum walks on one-dimensional chains with static and dynamic disorder.

The stepping kernel comes from the compiled extension when it is built and
from a NumPy implementation otherwise; ``qwalk.BACKEND`` says which one is
active.  Set ``QWALK_BACKEND=python`` to force the NumPy path.
"""
from ._backend import BACKEND
from .disorder import DisorderKind, DisorderSpec, dephasing_rate, noise_intensity
from .integrator import (
    IntegrationConfig,
    NormDriftError,
    WindowCapError,
    geometric_times,
    rk4_step,
    run_trajectory,
    white_noise_schedule,
)
from .lattice import ExpansionPolicy, WavePacket, apply_hamiltonian, init_delta, init_uniform
from .observables import (
    CrossoverEstimate,
    ObservableSeries,
    fit_crossover,
    localization_saturation,
    return_probability,
    variance,
)
from .qubit import QubitParams, analytic_averaged, ensemble_qubit, integrate_averaged_odes
from .spectral import bessel_profile, clean_chain_modes, eigensystem, evolve_spectral

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CrossoverEstimate",
    "DisorderKind",
    "DisorderSpec",
    "ExpansionPolicy",
    "IntegrationConfig",
    "NormDriftError",
    "ObservableSeries",
    "QubitParams",
    "WavePacket",
    "WindowCapError",
    "analytic_averaged",
    "apply_hamiltonian",
    "bessel_profile",
    "clean_chain_modes",
    "dephasing_rate",
    "eigensystem",
    "ensemble_qubit",
    "evolve_spectral",
    "fit_crossover",
    "geometric_times",
    "init_delta",
    "init_uniform",
    "integrate_averaged_odes",
    "localization_saturation",
    "noise_intensity",
    "return_probability",
    "rk4_step",
    "run_trajectory",
    "variance",
    "white_noise_schedule",
]
