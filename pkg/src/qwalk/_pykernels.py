"""Pure-NumPy RK4 stepping kernel, used when the compiled extension is missing.

Mirrors ``_kernels.pyx`` argument for argument; the two are checked against
each other in the test suite.
"""
from __future__ import annotations

import math

import numpy as np

from .disorder import white_noise_block

CLEAN, STATIC, WHITE, SINUSOIDAL = 0, 1, 2, 3

BACKEND = "python"


def _minus_i_h(v: np.ndarray, eps: np.ndarray) -> np.ndarray:
    hv = eps * v
    hv[1:] += v[:-1]
    hv[:-1] += v[1:]
    return -1j * hv


def _substep(psi, h, eps_a, eps_m, eps_b):
    k1 = _minus_i_h(psi, eps_a)
    k2 = _minus_i_h(psi + (0.5 * h) * k1, eps_m)
    k3 = _minus_i_h(psi + (0.5 * h) * k2, eps_m)
    k4 = _minus_i_h(psi + h * k3, eps_b)
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _edges_exceed(psi, guard, threshold):
    g = min(guard, psi.size)
    left = np.sum(psi[:g].real ** 2 + psi[:g].imag ** 2)
    right = np.sum(psi[-g:].real ** 2 + psi[-g:].imag ** 2)
    return left > threshold or right > threshold


def advance(psi, eps, kind, x0, n_start, n_stop, dt, seed, realization, W, dtu,
            amp, omega, guard, threshold, check_edges, origin, p0_int):
    """Advance ``psi`` in place from step ``n_start`` towards ``n_stop``.

    Step n spans [n*dt, (n+1)*dt]; a white-noise refresh boundary inside a
    step splits it.  Returns ``(n_reached, p0_int)``; stops early when an
    edge band exceeds ``threshold`` and ``check_edges`` is set.
    """
    n = n_start
    coords = np.arange(x0, x0 + psi.size, dtype=np.int64)
    have_origin = 0 <= origin < psi.size
    k_loaded = None
    zero = np.zeros(psi.size)
    while n < n_stop:
        a = n * dt
        b = (n + 1) * dt
        pieces = [(a, b)]
        if kind == WHITE:
            cut = (math.floor(a / dtu + 1e-9) + 1) * dtu
            if cut < b - 1e-9 * dt:
                pieces = [(a, cut), (cut, b)]
        for ta, tb in pieces:
            h = tb - ta
            p_a = abs(psi[origin]) ** 2 if have_origin else 0.0
            if kind == CLEAN:
                _substep(psi, h, zero, zero, zero)
            elif kind == STATIC:
                _substep(psi, h, eps, eps, eps)
            elif kind == WHITE:
                k = int(math.floor(0.5 * (ta + tb) / dtu))
                if k != k_loaded:
                    eps[:] = white_noise_block(seed, realization, W, dtu, k, coords)
                    k_loaded = k
                _substep(psi, h, eps, eps, eps)
            else:
                _substep(psi, h, amp * np.cos(omega * ta), amp * np.cos(omega * (ta + 0.5 * h)),
                         amp * np.cos(omega * tb))
            p_b = abs(psi[origin]) ** 2 if have_origin else 0.0
            p0_int += 0.5 * h * (p_a + p_b)
        n += 1
        if check_edges and _edges_exceed(psi, guard, threshold):
            break
    return n, p0_int


def qubit_advance(c, seed, real_start, W, dtu, gamma, k_start, k_stop, n_sub):
    """Vectorized over realizations; same contract as the compiled version."""
    from .disorder import STREAM_WHITE, counter_uniform, white_noise_scale

    reals = np.arange(real_start, real_start + c.shape[0], dtype=np.int64)[:, None]
    sites = np.arange(2, dtype=np.int64)[None, :]
    scale = white_noise_scale(dtu)
    h = dtu / n_sub
    c1 = c[:, 0].copy()
    c2 = c[:, 1].copy()

    def f(a1, a2, e1, e2):
        return -1j * (e1 * a1 + gamma * a2), -1j * (gamma * a1 + e2 * a2)

    for k in range(k_start, k_stop):
        eps = W * (counter_uniform(seed, STREAM_WHITE, reals, k, sites) - 0.5) * scale
        e1, e2 = eps[:, 0], eps[:, 1]
        for _ in range(n_sub):
            p1, p2 = f(c1, c2, e1, e2)
            q1, q2 = f(c1 + 0.5 * h * p1, c2 + 0.5 * h * p2, e1, e2)
            r1, r2 = f(c1 + 0.5 * h * q1, c2 + 0.5 * h * q2, e1, e2)
            s1, s2 = f(c1 + h * r1, c2 + h * r2, e1, e2)
            c1 = c1 + h / 6.0 * (p1 + 2.0 * q1 + 2.0 * r1 + s1)
            c2 = c2 + h / 6.0 * (p2 + 2.0 * q2 + 2.0 * r2 + s2)
    c[:, 0] = c1
    c[:, 1] = c2
