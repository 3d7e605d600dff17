"""On-site potentials for the clean, static and dynamic environments.

Every random number is a pure function of ``(seed, stream, realization,
interval, site)`` obtained by hashing those integers with SplitMix64, so a
potential can be regenerated for any window, time or evaluation order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53

# stream tags keep the three generators statistically independent
STREAM_STATIC = 1
STREAM_WHITE = 2
STREAM_SINUS = 3


class DisorderKind(str, enum.Enum):
    CLEAN = "clean"
    STATIC = "static"
    WHITE = "white"
    SINUSOIDAL = "sin"


@dataclass(frozen=True)
class DisorderSpec:
    """Disorder law for one ensemble.

    ``W`` is the box width for static and white-noise disorder and the level
    amplitude for the sinusoidal law.  ``update_interval`` only matters for
    white noise.
    """

    kind: DisorderKind = DisorderKind.CLEAN
    W: float = 0.0
    update_interval: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", DisorderKind(self.kind))
        if self.W < 0:
            raise ValueError(f"W must be >= 0, got {self.W}")
        if not self.update_interval > 0:
            raise ValueError(f"update_interval must be > 0, got {self.update_interval}")

    @property
    def is_static(self) -> bool:
        return self.kind in (DisorderKind.CLEAN, DisorderKind.STATIC)

    def max_abs(self) -> float:
        """Upper bound on |eps(x, t)|, used for the RK4 stability check."""
        if self.kind is DisorderKind.CLEAN:
            return 0.0
        if self.kind is DisorderKind.STATIC:
            return self.W / 2
        if self.kind is DisorderKind.WHITE:
            return self.W / 2 * white_noise_scale(self.update_interval)
        return self.W


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _as_u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64).view(np.uint64)


def counter_hash(seed: int, *words) -> np.ndarray:
    """SplitMix64 chain over ``seed`` and the integer ``words`` (broadcast)."""
    with np.errstate(over="ignore"):
        h = _splitmix(np.asarray(int(seed) % 2**64, dtype=np.uint64))
        for w in words:
            h = _splitmix(h ^ _as_u64(w))
    return h


def counter_uniform(seed: int, *words) -> np.ndarray:
    """Uniform doubles in [0, 1) keyed by the counter words."""
    h = counter_hash(seed, *words)
    return (h >> np.uint64(11)).astype(np.float64) * _TWO_M53


def noise_intensity(W: float) -> float:
    """delta = W^2/12, the variance of the box distribution of width W."""
    return W * W / 12.0


def dephasing_rate(W: float) -> float:
    """Decay rate 2*delta of a site-to-site coherence under white noise."""
    return 2.0 * noise_intensity(W)


def white_noise_scale(update_interval: float) -> float:
    """Factor applied to box samples so Var(eps)*dtu equals 2*delta."""
    return math.sqrt(2.0 / update_interval)


def sample_static(N: int, W: float, seed: int, realization: int = 0, x0: int = 0) -> np.ndarray:
    """N box samples W*(u - 1/2) for sites x0 .. x0+N-1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if W < 0:
        raise ValueError("W must be >= 0")
    coords = np.arange(x0, x0 + N, dtype=np.int64)
    return static_potential(seed, realization, W, coords)


def static_potential(seed: int, realization: int, W: float, coords: np.ndarray) -> np.ndarray:
    u = counter_uniform(seed, STREAM_STATIC, realization, 0, coords)
    return W * (u - 0.5)


def interval_index(t: float, update_interval: float) -> int:
    # tolerate rounding when t lands on a refresh boundary
    return int(math.floor(t / update_interval + 1e-9))


def white_noise_block(seed: int, realization: int, W: float, update_interval: float,
                      k: int, coords: np.ndarray) -> np.ndarray:
    """Potential during refresh interval ``k`` for the given site coordinates."""
    u = counter_uniform(seed, STREAM_WHITE, realization, k, coords)
    return W * (u - 0.5) * white_noise_scale(update_interval)


def white_noise_at(t: float, spec: DisorderSpec, site_count: int, realization: int = 0,
                   x0: int = 0) -> np.ndarray:
    """Piecewise-constant white-noise potential at time ``t``."""
    if spec.kind is not DisorderKind.WHITE:
        raise ValueError("white_noise_at needs a white-noise DisorderSpec")
    coords = np.arange(x0, x0 + site_count, dtype=np.int64)
    k = interval_index(t, spec.update_interval)
    return white_noise_block(spec.seed, realization, spec.W, spec.update_interval, k, coords)


@dataclass(frozen=True)
class SinusoidalField:
    amp: float
    omega: np.ndarray
    phi: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.phi is None:
            object.__setattr__(self, "phi", np.zeros_like(self.omega))


def sinusoidal_frequencies(seed: int, realization: int, coords: np.ndarray) -> np.ndarray:
    """Per-site frequencies, uniform on [0, 2*pi], drawn once per trajectory."""
    return 2.0 * np.pi * counter_uniform(seed, STREAM_SINUS, realization, 0, coords)


def sinusoidal_field(spec: DisorderSpec, site_count: int, realization: int = 0,
                     x0: int = 0) -> SinusoidalField:
    coords = np.arange(x0, x0 + site_count, dtype=np.int64)
    return SinusoidalField(spec.W, sinusoidal_frequencies(spec.seed, realization, coords))


def sinusoidal_at(t: float, field: SinusoidalField) -> np.ndarray:
    return field.amp * np.cos(field.omega * t + field.phi)


def potential_at(spec: DisorderSpec, realization: int, coords: np.ndarray, t: float) -> np.ndarray:
    """eps(x, t) for arbitrary site coordinates; reference path for the kernels."""
    coords = np.asarray(coords, dtype=np.int64)
    if spec.kind is DisorderKind.CLEAN:
        return np.zeros(coords.shape)
    if spec.kind is DisorderKind.STATIC:
        return static_potential(spec.seed, realization, spec.W, coords)
    if spec.kind is DisorderKind.WHITE:
        k = interval_index(t, spec.update_interval)
        return white_noise_block(spec.seed, realization, spec.W, spec.update_interval, k, coords)
    omega = sinusoidal_frequencies(spec.seed, realization, coords)
    return spec.W * np.cos(omega * t)
