"""Exact propagation through the eigenpairs of a static tridiagonal Hamiltonian."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .lattice import WavePacket


@dataclass(frozen=True)
class EigenSystem:
    """Ascending energies and the matching modes, stored as columns of ``modes``."""

    energies: np.ndarray
    modes: np.ndarray
    x_offset: int = 0

    @property
    def size(self) -> int:
        return self.energies.size


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    # first component above noise level made positive
    lead = np.argmax(np.abs(modes) > 1e-10, axis=0)
    signs = np.sign(modes[lead, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def eigensystem(eps, x_offset: int = 0) -> EigenSystem:
    """Full spectrum of the matrix with diagonal ``eps`` and unit off-diagonal."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.ndim != 1 or eps.size < 1:
        raise ValueError("eps must be a non-empty vector")
    if eps.size == 1:
        return EigenSystem(eps.copy(), np.ones((1, 1)), x_offset)
    energies, modes = eigh_tridiagonal(eps, np.ones(eps.size - 1), lapack_driver="stev")
    return EigenSystem(energies, _fix_signs(modes), x_offset)


def clean_chain_modes(N: int, x_offset: int = 0) -> EigenSystem:
    """Closed-form eigenpairs of the clean N-site chain with hard walls.

    E_j = 2 cos(pi j / (N+1)), psi_j(x) = sqrt(2/(N+1)) sin(pi j x / (N+1)),
    with x = 1..N counted from the left wall.  Returned in ascending energy.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(N, 0, -1)
    x = np.arange(1, N + 1)
    energies = 2.0 * np.cos(np.pi * j / (N + 1))
    modes = np.sqrt(2.0 / (N + 1)) * np.sin(np.pi * np.outer(x, j) / (N + 1))
    return EigenSystem(energies, modes, x_offset)


def evolve_spectral(psi0: WavePacket, sys: EigenSystem, t: float) -> WavePacket:
    """Psi(t) = sum_j exp(-i E_j t) psi_j <j|Psi(0)>."""
    if psi0.size != sys.size:
        raise ValueError(f"packet has {psi0.size} sites, eigensystem has {sys.size}")
    if psi0.x_offset != sys.x_offset:
        raise ValueError("packet and eigensystem windows differ")
    coeffs = sys.modes.T @ psi0.amplitudes
    amps = sys.modes @ (np.exp(-1j * sys.energies * t) * coeffs)
    return WavePacket(amps, psi0.x_offset, psi0.time + t)


def energy(psi: WavePacket, eps) -> float:
    from .lattice import apply_hamiltonian
    return float(np.real(np.vdot(psi.amplitudes, apply_hamiltonian(psi, eps))))


def bessel_j_orders(n_max: int, z: float) -> np.ndarray:
    """J_0(z) .. J_{n_max}(z) by Miller's backward recurrence.

    The unnormalized sequence is fixed by J_0 + 2 sum_k J_{2k} = 1.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    out = np.zeros(n_max + 1)
    if z == 0.0:
        out[0] = 1.0
        return out
    top = max(n_max, int(z)) + 20 + int(math.sqrt(40.0 * max(n_max, z, 1.0)))
    top += top % 2
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(top, 0, -1):
        j_prev = 2.0 * k / z * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            out *= 1e-250
            norm *= 1e-250
    norm += j_cur
    return out / norm


def bessel_density(x: int, t: float) -> float:
    """(J_x(2t))^2, the clean-lattice occupation of site x."""
    if t < 0:
        raise ValueError("t must be >= 0")
    n = abs(int(x))
    return float(bessel_j_orders(n, 2.0 * t)[n] ** 2)


def bessel_profile(x_max: int, t: float) -> np.ndarray:
    """(J_x(2t))^2 for x = -x_max .. x_max."""
    j = bessel_j_orders(x_max, 2.0 * t) ** 2
    return np.concatenate([j[:0:-1], j])
