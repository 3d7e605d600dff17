"""Two-level system with white-noise level energies.

Three routes to the noise-averaged density matrix: the closed-form solution
of the averaged equations, direct RK4 integration of those equations, and a
Monte-Carlo ensemble of noisy Schrodinger trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .disorder import dephasing_rate, noise_intensity, white_noise_scale
from .observables import circular_variance

THETA_FLOOR = 1e-12


@dataclass(frozen=True)
class QubitParams:
    gamma: float = 1.0
    W: float = 0.0
    seed: int = 0
    ensemble_size: int = 100
    dt: float | None = None
    t_max: float = 10.0
    update_interval: float | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if self.W < 0:
            raise ValueError("W must be >= 0")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")

    @property
    def delta(self) -> float:
        return noise_intensity(self.W)


@dataclass(frozen=True)
class AveragedQubitState:
    """rho_11 = 1/2 + rho, rho_12 = R + iJ (arrays or scalars)."""

    rho: np.ndarray
    R: np.ndarray
    J: np.ndarray
    time: np.ndarray

    @property
    def rho12(self) -> np.ndarray:
        return self.R + 1j * self.J


def critical_disorder(gamma: float) -> float:
    """W at which delta = W^2/12 equals 2*gamma."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    return math.sqrt(24.0 * gamma)


def analytic_averaged(params: QubitParams, t) -> AveragedQubitState:
    """Closed-form solution for rho(0) = 1/2, R(0) = J(0) = 0.

    Underdamped (delta < 2 gamma), with w = sqrt(4 gamma^2 - delta^2)::

        J   = gamma sin(w t)/w e^{-delta t}
        rho = 1/2 e^{-delta t} (cos(w t) + delta/w sin(w t))

    the overdamped branch swaps sin/cos for sinh/cosh, and delta = 2 gamma is
    the common limit J = gamma t e^{-delta t}.
    """
    t = np.asarray(t, dtype=np.float64)
    g, d = params.gamma, params.delta
    disc = 4 * g * g - d * d
    if disc > 0:
        w = math.sqrt(disc)
        damp = np.exp(-d * t)
        J = g * np.sin(w * t) / w * damp
        rho = 0.5 * damp * (np.cos(w * t) + d / w * np.sin(w * t))
    elif disc < 0:
        kappa = math.sqrt(-disc)
        slow = np.exp((kappa - d) * t)
        fast = np.exp((-kappa - d) * t)
        J = g * (slow - fast) / (2 * kappa)
        rho = 0.25 * ((1 + d / kappa) * slow + (1 - d / kappa) * fast)
    else:
        damp = np.exp(-d * t)
        J = g * t * damp
        rho = 0.5 * damp * (1 + d * t)
    return AveragedQubitState(rho, np.zeros_like(t), J, t)


def integrate_averaged_odes(params: QubitParams, t_max: float, dt: float = 1e-3) -> AveragedQubitState:
    """RK4 on rho' = -2 gamma J, R' = -2 delta R, J' = -2 delta J + 2 gamma rho."""
    g, d = params.gamma, params.delta
    a = np.array([[0.0, 0.0, -2 * g], [0.0, -2 * d, 0.0], [2 * g, 0.0, -2 * d]])
    n = int(round(t_max / dt))
    out = np.empty((n + 1, 3))
    y = np.array([0.5, 0.0, 0.0])
    out[0] = y
    for i in range(n):
        k1 = a @ y
        k2 = a @ (y + 0.5 * dt * k1)
        k3 = a @ (y + 0.5 * dt * k2)
        k4 = a @ (y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return AveragedQubitState(out[:, 0], out[:, 1], out[:, 2], np.arange(n + 1) * dt)


def qubit_schedule(params: QubitParams, coherence_fraction: float = 0.002,
                   phase_step: float = 0.01) -> tuple[float, float]:
    """(dt, update_interval) with a whole number of RK4 steps per noise interval."""
    dtu = params.update_interval
    if dtu is None:
        rate = dephasing_rate(params.W)
        dtu = min(0.05, coherence_fraction / rate) if rate > 0 else 0.05
    dt = params.dt
    if dt is None:
        dt = phase_step / (params.gamma + params.W / 2 * white_noise_scale(dtu))
    n_sub = max(1, math.ceil(dtu / dt - 1e-9))
    return dtu / n_sub, dtu


@dataclass
class QubitEnsemble:
    """Ensemble-averaged density matrix of the noisy two-level system."""

    times: np.ndarray
    rho: np.ndarray
    rho12: np.ndarray
    se_R: np.ndarray
    se_J: np.ndarray
    max_norm_error: float

    @property
    def R(self) -> np.ndarray:
        return self.rho12.real

    @property
    def J(self) -> np.ndarray:
        return self.rho12.imag

    @property
    def abs_rho12(self) -> np.ndarray:
        return np.abs(self.rho12)

    @property
    def theta(self) -> np.ndarray:
        """arg rho12 in (-pi, pi]; NaN where |rho12| is below 1e-12."""
        th = np.angle(self.rho12)
        th = np.where(th == -np.pi, np.pi, th)
        return np.where(self.abs_rho12 < THETA_FLOOR, np.nan, th)

    def late_circular_variance(self, fraction: float = 0.25) -> float:
        """Axial circular variance of theta over the last ``fraction`` of samples.

        The angle is doubled because a coherent rho12 ~ iJ(t) flips between
        +pi/2 and -pi/2 as J changes sign.
        """
        start = int(math.floor(self.times.size * (1 - fraction)))
        return circular_variance(self.theta[start:], axial=True)


def _sample_plan(t_max: float, dtu: float, max_samples: int) -> tuple[np.ndarray, int]:
    n_int = int(round(t_max / dtu))
    stride = max(1, math.ceil(n_int / max_samples))
    return np.arange(0, n_int + 1, stride, dtype=np.int64), stride


def qubit_trajectories(params: QubitParams, real_start: int, count: int, dt: float, dtu: float,
                       boundaries: np.ndarray, backend: str | None = None):
    """Per-realization (rho12, population of level 1) at the refresh boundaries listed."""
    kern = _backend.get(backend)
    n_sub = int(round(dtu / dt))
    c = np.zeros((count, 2), dtype=np.complex128)
    c[:, 0] = 1.0
    rho12 = np.empty((count, boundaries.size), dtype=np.complex128)
    pop1 = np.empty((count, boundaries.size))
    k = 0
    for j, kb in enumerate(boundaries):
        if kb > k:
            kern.qubit_advance(c, int(params.seed) % 2 ** 64, real_start, params.W, dtu,
                               params.gamma, k, int(kb), n_sub)
            k = int(kb)
        rho12[:, j] = c[:, 0] * np.conj(c[:, 1])
        pop1[:, j] = np.abs(c[:, 0]) ** 2
    norm_err = float(np.max(np.abs(np.abs(c[:, 0]) ** 2 + np.abs(c[:, 1]) ** 2 - 1.0)))
    return rho12, pop1, norm_err


def reduce_qubit(times, rho12: np.ndarray, pop1: np.ndarray, norm_err: float) -> QubitEnsemble:
    n = rho12.shape[0]
    mean12 = np.mean(rho12, axis=0)
    if n > 1:
        se_R = np.std(rho12.real, axis=0, ddof=1) / math.sqrt(n)
        se_J = np.std(rho12.imag, axis=0, ddof=1) / math.sqrt(n)
    else:
        se_R = se_J = np.zeros(rho12.shape[1])
    return QubitEnsemble(np.asarray(times), np.mean(pop1, axis=0) - 0.5, mean12, se_R, se_J, norm_err)


def ensemble_qubit(params: QubitParams, max_samples: int = 400, workers: int = 1,
                   backend: str | None = None) -> QubitEnsemble:
    """Monte-Carlo average of rho12 = c1 c2* over ``ensemble_size`` noisy trajectories.

    Samples fall on noise-refresh boundaries.  Realizations are split into
    contiguous blocks for the worker pool and reassembled in index order.
    """
    dt, dtu = qubit_schedule(params)
    boundaries, _ = _sample_plan(params.t_max, dtu, max_samples)
    times = boundaries * dtu
    from .ensemble import map_blocks

    blocks = map_blocks(
        qubit_trajectories, params.ensemble_size, workers,
        params=params, dt=dt, dtu=dtu, boundaries=boundaries, backend=backend,
    )
    rho12 = np.concatenate([b[0] for b in blocks])
    pop1 = np.concatenate([b[1] for b in blocks])
    norm_err = max(b[2] for b in blocks)
    return reduce_qubit(times, rho12, pop1, norm_err)
