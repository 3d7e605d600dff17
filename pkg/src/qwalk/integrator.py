"""Fourth-order Runge-Kutta propagation of the tight-binding equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .disorder import (
    DisorderKind,
    DisorderSpec,
    dephasing_rate,
    potential_at,
    sinusoidal_frequencies,
    static_potential,
    white_noise_scale,
)
from .lattice import ExpansionPolicy, WavePacket, expansion_needed, hamiltonian_apply
from .observables import ObservableSeries

STABILITY_LIMIT = 0.5
MAX_SITES = 2 ** 20

_KIND_CODES = {
    DisorderKind.CLEAN: 0,
    DisorderKind.STATIC: 1,
    DisorderKind.WHITE: 2,
    DisorderKind.SINUSOIDAL: 3,
}


class NormDriftError(ArithmeticError):
    """The packet norm left the tolerance band: the step is too coarse."""


class WindowCapError(RuntimeError):
    """The self-expanding window outgrew its hard cap."""


def geometric_times(t_max: float, n: int = 200, t_min: float | None = None) -> np.ndarray:
    """0 followed by ``n`` geometrically spaced times up to ``t_max``."""
    if t_min is None:
        t_min = t_max * 1e-3
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, n)])


@dataclass
class IntegrationConfig:
    dt: float = 1e-3
    t_max: float = 10.0
    sample_times: np.ndarray = field(default=None)  # type: ignore[assignment]
    norm_tolerance: float = 1e-6
    max_sites: int = MAX_SITES

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.sample_times is None:
            t_min = min(max(10 * self.dt, self.t_max * 1e-3), 0.5 * self.t_max)
            self.sample_times = geometric_times(self.t_max, t_min=t_min)
        times = np.asarray(self.sample_times, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("sample_times must be a non-empty vector")
        if np.any(np.diff(times) <= 0) or times[0] < 0 or times[-1] > self.t_max * (1 + 1e-12):
            raise ValueError("sample_times must increase strictly within [0, t_max]")
        self.sample_times = times

    def check_stability(self, spec: DisorderSpec) -> None:
        bound = self.dt * (2.0 + spec.max_abs())
        if bound > STABILITY_LIMIT:
            raise ValueError(f"dt*(2+max|eps|) = {bound:.3g} exceeds {STABILITY_LIMIT}; reduce dt")
        if spec.kind is DisorderKind.WHITE and spec.update_interval < self.dt * (1 - 1e-12):
            raise ValueError("the white-noise update interval must be >= dt")


def white_noise_schedule(W: float, t_min: float | None = None, phase_step: float = 0.02,
                         coherence_fraction: float = 0.1) -> tuple[float, float]:
    """(dt, update_interval) resolving white noise of strength W.

    The update interval is ``coherence_fraction`` of the dephasing time and
    holds a whole number of steps; dt keeps dt*(2+max|eps|) <= ``phase_step``
    and stays below a quarter of the first sample time.
    """
    rate = dephasing_rate(W)
    dtu = min(1.0, coherence_fraction / rate) if rate > 0 else 1.0
    eps_max = W / 2 * white_noise_scale(dtu)
    dt = phase_step / (2.0 + eps_max)
    if t_min is not None:
        dt = min(dt, t_min / 4)
    n_sub = math.ceil(dtu / dt - 1e-9)
    return dtu / n_sub, dtu


def rk4_step(psi: WavePacket, eps_at: Callable[[float], np.ndarray], dt: float) -> WavePacket:
    """One classical RK4 step of dPsi/dt = -i H(t) Psi.

    ``eps_at(t)`` returns the potential on the packet's window and is queried at
    t, t + dt/2 and t + dt.
    """
    t = psi.time
    v = psi.amplitudes
    em = eps_at(t + 0.5 * dt)
    k1 = -1j * hamiltonian_apply(v, eps_at(t))
    k2 = -1j * hamiltonian_apply(v + 0.5 * dt * k1, em)
    k3 = -1j * hamiltonian_apply(v + 0.5 * dt * k2, em)
    k4 = -1j * hamiltonian_apply(v + dt * k3, eps_at(t + dt))
    return WavePacket(v + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), psi.x_offset, t + dt)


def potential_source(spec: DisorderSpec, psi: WavePacket, realization: int = 0):
    """eps_at(t) on the window of ``psi`` for use with :func:`rk4_step`."""
    coords = psi.coords
    return lambda t: potential_at(spec, realization, coords, t)


@dataclass
class Trajectory:
    series: ObservableSeries
    final: WavePacket
    packets: list = field(default_factory=list)
    expansions: int = 0


class _Window:
    """Mutable propagation state: amplitudes, offset and per-site disorder data."""

    def __init__(self, psi: WavePacket, spec: DisorderSpec, realization: int):
        self.amps = psi.amplitudes.copy()
        self.x0 = psi.x_offset
        self.spec = spec
        self.realization = realization
        self._refresh()

    def _refresh(self):
        coords = np.arange(self.x0, self.x0 + self.amps.size, dtype=np.int64)
        kind = self.spec.kind
        if kind is DisorderKind.STATIC:
            self.eps = static_potential(self.spec.seed, self.realization, self.spec.W, coords)
        else:
            self.eps = np.zeros(self.amps.size)
        if kind is DisorderKind.SINUSOIDAL:
            self.omega = sinusoidal_frequencies(self.spec.seed, self.realization, coords)
        else:
            self.omega = np.zeros(1)

    def grow(self, left: int, right: int):
        amps = np.zeros(self.amps.size + left + right, dtype=np.complex128)
        amps[left:left + self.amps.size] = self.amps
        self.amps = amps
        self.x0 -= left
        self._refresh()


def run_trajectory(psi0: WavePacket, spec: DisorderSpec, cfg: IntegrationConfig,
                   policy: ExpansionPolicy | None = None, realization: int = 0,
                   keep_packets: bool = False, backend: str | None = None) -> Trajectory:
    """Integrate from t = 0 to the last sample time.

    Samples snap to the nearest completed step and carry that step's time.
    ``policy=None`` keeps the window fixed (hard walls).  P(0, t) is
    integrated with trapezoids on every step to give C(t).
    """
    cfg.check_stability(spec)
    kern = _backend.get(backend)
    win = _Window(psi0, spec, realization)
    kind = _KIND_CODES[spec.kind]
    seed = int(spec.seed) % 2 ** 64
    norm0 = float(np.sum(np.abs(win.amps) ** 2))
    guard = policy.guard_band if policy else 1
    threshold = policy.edge_threshold if policy else 1.0
    targets = np.unique(np.rint(cfg.sample_times / cfg.dt).astype(np.int64))

    rows, packets = [], []
    n, p0_int, expansions = 0, 0.0, 0
    for target in targets:
        while n < target:
            if policy is not None:
                grow_left, grow_right = expansion_needed(win.amps, policy)
                if grow_left or grow_right:
                    win.grow(policy.growth_chunk * grow_left, policy.growth_chunk * grow_right)
                    expansions += 1
                    if win.amps.size > cfg.max_sites:
                        raise WindowCapError(f"window reached {win.amps.size} sites (cap {cfg.max_sites})")
            n, p0_int = kern.advance(
                win.amps, win.eps, kind, win.x0, n, int(target), cfg.dt, seed, realization,
                spec.W, spec.update_interval, spec.W, win.omega, guard, threshold,
                policy is not None, -win.x0, p0_int,
            )
        t = n * cfg.dt
        prob = win.amps.real ** 2 + win.amps.imag ** 2
        norm = float(np.sum(prob))
        if abs(norm - norm0) > cfg.norm_tolerance:
            raise NormDriftError(f"norm drifted to {norm:.12g} at t = {t:.6g}")
        x = np.arange(win.x0, win.x0 + prob.size, dtype=np.float64)
        origin = -win.x0
        p0 = float(prob[origin]) if 0 <= origin < prob.size else 0.0
        c = p0_int / t if t > 0 else p0
        rows.append((t, float(np.sum(x * x * prob)), p0, c, norm))
        if keep_packets:
            packets.append(WavePacket(win.amps, win.x0, t))

    data = np.array(rows)
    series = ObservableSeries(data[:, 0], data[:, 1], data[:, 2], data[:, 3], data[:, 4])
    final = WavePacket(win.amps, win.x0, n * cfg.dt)
    return Trajectory(series, final, packets, expansions)
