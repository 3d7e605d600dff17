"""Wave-packet state on a window of the integer lattice and the hopping operator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOLERANCE = 1e-8


@dataclass(frozen=True)
class WavePacket:
    """Amplitudes on the contiguous sites ``x_offset .. x_offset + N - 1``.

    The release site is coordinate 0; ``time`` is in units of the inverse
    hopping integral.
    """

    amplitudes: np.ndarray
    x_offset: int = 0
    time: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a non-empty vector")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "x_offset", int(self.x_offset))
        object.__setattr__(self, "time", float(self.time))

    @property
    def size(self) -> int:
        return self.amplitudes.size

    @property
    def coords(self) -> np.ndarray:
        return np.arange(self.x_offset, self.x_offset + self.size, dtype=np.int64)

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.probability))

    def index_of(self, x: int) -> int | None:
        i = x - self.x_offset
        return i if 0 <= i < self.size else None

    def prob_at(self, x: int) -> float:
        i = self.index_of(x)
        return 0.0 if i is None else float(abs(self.amplitudes[i]) ** 2)

    def replace(self, amplitudes=None, x_offset=None, time=None) -> "WavePacket":
        return WavePacket(
            self.amplitudes if amplitudes is None else amplitudes,
            self.x_offset if x_offset is None else x_offset,
            self.time if time is None else time,
        )


@dataclass(frozen=True)
class ExpansionPolicy:
    edge_threshold: float = 1e-12
    guard_band: int = 5
    growth_chunk: int = 64

    def __post_init__(self):
        if not self.edge_threshold > 0:
            raise ValueError("edge_threshold must be > 0")
        if self.guard_band < 1 or self.growth_chunk < 1:
            raise ValueError("guard_band and growth_chunk must be >= 1")


def init_delta(center: int = 0, window: tuple[int, int] | None = None) -> WavePacket:
    """Particle released at ``center``.

    Without ``window`` the packet is the single site; ``window=(lo, hi)`` gives a
    fixed window of sites lo..hi inclusive.
    """
    if window is None:
        return WavePacket(np.ones(1), x_offset=center)
    lo, hi = window
    if not lo <= center <= hi:
        raise ValueError(f"center {center} outside window [{lo}, {hi}]")
    amps = np.zeros(hi - lo + 1, dtype=np.complex128)
    amps[center - lo] = 1.0
    return WavePacket(amps, x_offset=lo)


def init_uniform(N: int, x_offset: int = 0) -> WavePacket:
    if N < 1:
        raise ValueError("N must be >= 1")
    return WavePacket(np.full(N, 1.0 / np.sqrt(N), dtype=np.complex128), x_offset=x_offset)


def centered_window(N: int) -> tuple[int, int]:
    """Window of N sites with the release site in the middle (left-middle for even N)."""
    lo = -((N - 1) // 2)
    return lo, lo + N - 1


def hamiltonian_apply(amps: np.ndarray, eps: np.ndarray) -> np.ndarray:
    out = eps * amps
    out[1:] += amps[:-1]
    out[:-1] += amps[1:]
    return out


def apply_hamiltonian(psi: WavePacket, eps) -> np.ndarray:
    """(H psi)(x) = eps(x) psi(x) + psi(x-1) + psi(x+1) with hard walls."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != psi.amplitudes.shape:
        raise ValueError(f"potential has {eps.size} sites, packet has {psi.size}")
    return hamiltonian_apply(psi.amplitudes, eps)


def edge_probabilities(amps: np.ndarray, guard_band: int) -> tuple[float, float]:
    g = min(guard_band, amps.size)
    left = float(np.sum(np.abs(amps[:g]) ** 2))
    right = float(np.sum(np.abs(amps[-g:]) ** 2))
    return left, right


def expansion_needed(amps: np.ndarray, policy: ExpansionPolicy) -> tuple[bool, bool]:
    left, right = edge_probabilities(amps, policy.guard_band)
    return left > policy.edge_threshold, right > policy.edge_threshold


def maybe_expand(psi: WavePacket, policy: ExpansionPolicy) -> WavePacket:
    """Zero-pad ``growth_chunk`` sites on any side whose guard band is occupied."""
    grow_left, grow_right = expansion_needed(psi.amplitudes, policy)
    if not (grow_left or grow_right):
        return psi
    left = policy.growth_chunk if grow_left else 0
    right = policy.growth_chunk if grow_right else 0
    amps = np.zeros(psi.size + left + right, dtype=np.complex128)
    amps[left:left + psi.size] = psi.amplitudes
    return WavePacket(amps, psi.x_offset - left, psi.time)
