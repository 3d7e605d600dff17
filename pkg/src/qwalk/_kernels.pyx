# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 stepping kernel; see ``_pykernels.advance`` for the contract."""

from libc.math cimport cos, floor, sqrt

cdef enum:
    CLEAN = 0
    STATIC = 1
    WHITE = 2
    SINUSOIDAL = 3

BACKEND = "compiled"

ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16


cdef inline u64 splitmix(u64 z) nogil:
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def counter_uniform_block(u64 seed, long long stream, long long realization, long long k,
                          long long x0, Py_ssize_t n):
    """Same numbers as ``disorder.counter_uniform`` for sites x0..x0+n-1."""
    import numpy as np
    out = np.empty(n)
    cdef double[::1] o = out
    cdef u64 prefix = splitmix(splitmix(splitmix(splitmix(seed) ^ <u64>stream) ^ <u64>realization) ^ <u64>k)
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = <double>(splitmix(prefix ^ <u64>(x0 + i)) >> 11) * TWO_M53
    return out


cdef void fill_white(double* eps, Py_ssize_t n, u64 seed, long long realization, long long k,
                     long long x0, double W, double scale) nogil:
    cdef u64 prefix = splitmix(splitmix(splitmix(splitmix(seed) ^ <u64>2) ^ <u64>realization) ^ <u64>k)
    cdef Py_ssize_t i
    cdef double u
    for i in range(n):
        u = <double>(splitmix(prefix ^ <u64>(x0 + i)) >> 11) * TWO_M53
        eps[i] = W * (u - 0.5) * scale


cdef inline void deriv(const double* v, const double* eps, double* k, Py_ssize_t n) nogil:
    # k = -i H v on interleaved (re, im) storage, hard walls
    cdef Py_ssize_t i
    cdef double hr, hi
    if n == 1:
        k[0] = eps[0] * v[1]
        k[1] = -(eps[0] * v[0])
        return
    hr = eps[0] * v[0] + v[2]
    hi = eps[0] * v[1] + v[3]
    k[0] = hi
    k[1] = -hr
    for i in range(1, n - 1):
        hr = eps[i] * v[2 * i] + v[2 * i - 2] + v[2 * i + 2]
        hi = eps[i] * v[2 * i + 1] + v[2 * i - 1] + v[2 * i + 3]
        k[2 * i] = hi
        k[2 * i + 1] = -hr
    i = n - 1
    hr = eps[i] * v[2 * i] + v[2 * i - 2]
    hi = eps[i] * v[2 * i + 1] + v[2 * i - 1]
    k[2 * i] = hi
    k[2 * i + 1] = -hr


cdef void substep(double* psi, double h, const double* ea, const double* em, const double* eb,
                  double* k, double* acc, double* tmp, Py_ssize_t n) nogil:
    cdef Py_ssize_t i, m = 2 * n
    cdef double half = 0.5 * h, sixth = h / 6.0
    deriv(psi, ea, k, n)
    for i in range(m):
        acc[i] = k[i]
        tmp[i] = psi[i] + half * k[i]
    deriv(tmp, em, k, n)
    for i in range(m):
        acc[i] = acc[i] + 2.0 * k[i]
        tmp[i] = psi[i] + half * k[i]
    deriv(tmp, em, k, n)
    for i in range(m):
        acc[i] = acc[i] + 2.0 * k[i]
        tmp[i] = psi[i] + h * k[i]
    deriv(tmp, eb, k, n)
    for i in range(m):
        psi[i] = psi[i] + sixth * (acc[i] + k[i])


cdef inline bint edges_exceed(const double* psi, Py_ssize_t n, Py_ssize_t guard, double threshold) nogil:
    cdef Py_ssize_t g = guard if guard < n else n
    cdef Py_ssize_t i
    cdef double left = 0.0, right = 0.0
    for i in range(g):
        left += psi[2 * i] * psi[2 * i] + psi[2 * i + 1] * psi[2 * i + 1]
    for i in range(n - g, n):
        right += psi[2 * i] * psi[2 * i] + psi[2 * i + 1] * psi[2 * i + 1]
    return left > threshold or right > threshold


def advance(psi_c, double[::1] eps, int kind, long long x0, long long n_start, long long n_stop,
            double dt, u64 seed, long long realization, double W, double dtu, double amp,
            double[::1] omega, Py_ssize_t guard, double threshold, bint check_edges,
            Py_ssize_t origin, double p0_int):
    import numpy as np
    cdef double[::1] psi = psi_c.view(np.float64)
    cdef Py_ssize_t n = eps.shape[0]
    work = np.zeros((3, 2 * n))
    cdef double[:, ::1] w = work
    eps_buf = np.zeros((3, n))
    cdef double[:, ::1] e3 = eps_buf
    cdef double* pp = &psi[0]
    cdef double* ep = &eps[0]
    cdef double* ea = &e3[0, 0]
    cdef double* em = &e3[1, 0]
    cdef double* eb = &e3[2, 0]
    cdef double* om = NULL
    cdef double scale = sqrt(2.0 / dtu) if dtu > 0 else 0.0
    cdef bint have_origin = 0 <= origin < n
    cdef long long step = n_start, k, k_loaded = -1
    cdef double a, b, cut, h, p_a, p_b
    cdef int pieces, piece
    cdef double ta[2]
    cdef double tb[2]
    cdef Py_ssize_t i
    if kind == SINUSOIDAL:
        om = &omega[0]
    with nogil:
        while step < n_stop:
            a = step * dt
            b = (step + 1) * dt
            ta[0] = a
            tb[0] = b
            pieces = 1
            if kind == WHITE:
                cut = (floor(a / dtu + 1e-9) + 1) * dtu
                if cut < b - 1e-9 * dt:
                    tb[0] = cut
                    ta[1] = cut
                    tb[1] = b
                    pieces = 2
            for piece in range(pieces):
                h = tb[piece] - ta[piece]
                if have_origin:
                    p_a = pp[2 * origin] * pp[2 * origin] + pp[2 * origin + 1] * pp[2 * origin + 1]
                else:
                    p_a = 0.0
                if kind == CLEAN or kind == STATIC:
                    substep(pp, h, ep, ep, ep, &w[0, 0], &w[1, 0], &w[2, 0], n)
                elif kind == WHITE:
                    k = <long long>floor(0.5 * (ta[piece] + tb[piece]) / dtu)
                    if k != k_loaded:
                        fill_white(ep, n, seed, realization, k, x0, W, scale)
                        k_loaded = k
                    substep(pp, h, ep, ep, ep, &w[0, 0], &w[1, 0], &w[2, 0], n)
                else:
                    for i in range(n):
                        ea[i] = amp * cos(om[i] * ta[piece])
                        em[i] = amp * cos(om[i] * (ta[piece] + 0.5 * h))
                        eb[i] = amp * cos(om[i] * tb[piece])
                    substep(pp, h, ea, em, eb, &w[0, 0], &w[1, 0], &w[2, 0], n)
                if have_origin:
                    p_b = pp[2 * origin] * pp[2 * origin] + pp[2 * origin + 1] * pp[2 * origin + 1]
                else:
                    p_b = 0.0
                p0_int += 0.5 * h * (p_a + p_b)
            step += 1
            if check_edges and edges_exceed(pp, n, guard, threshold):
                break
    return step, p0_int


def qubit_advance(c_in, u64 seed, long long real_start, double W, double dtu, double gamma,
                  long long k_start, long long k_stop, long long n_sub):
    """Two-level batch: rows of ``c_in`` are (c1, c2) per realization, advanced in place
    through refresh intervals k_start..k_stop-1 with ``n_sub`` RK4 steps each."""
    import numpy as np
    cdef double[:, ::1] c = c_in.view(np.float64)
    cdef Py_ssize_t R = c.shape[0], r
    cdef long long k, s
    cdef double scale = sqrt(2.0 / dtu), h = dtu / n_sub
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef double e1, e2, u
    cdef double v[4]
    cdef double t[4]
    cdef double kk[4]
    cdef double acc[4]
    cdef u64 prefix
    cdef int i, stage
    with nogil:
        for r in range(R):
            for i in range(4):
                v[i] = c[r, i]
            for k in range(k_start, k_stop):
                prefix = splitmix(splitmix(splitmix(splitmix(seed) ^ <u64>2) ^ <u64>(real_start + r)) ^ <u64>k)
                u = <double>(splitmix(prefix ^ <u64>0) >> 11) * TWO_M53
                e1 = W * (u - 0.5) * scale
                u = <double>(splitmix(prefix ^ <u64>1) >> 11) * TWO_M53
                e2 = W * (u - 0.5) * scale
                for s in range(n_sub):
                    for i in range(4):
                        t[i] = v[i]
                    for stage in range(4):
                        # k = -i H t ; H = [[e1, g], [g, e2]]
                        kk[0] = e1 * t[1] + gamma * t[3]
                        kk[1] = -(e1 * t[0] + gamma * t[2])
                        kk[2] = gamma * t[1] + e2 * t[3]
                        kk[3] = -(gamma * t[0] + e2 * t[2])
                        if stage == 0:
                            for i in range(4):
                                acc[i] = kk[i]
                                t[i] = v[i] + half * kk[i]
                        elif stage == 1:
                            for i in range(4):
                                acc[i] = acc[i] + 2.0 * kk[i]
                                t[i] = v[i] + half * kk[i]
                        elif stage == 2:
                            for i in range(4):
                                acc[i] = acc[i] + 2.0 * kk[i]
                                t[i] = v[i] + h * kk[i]
                        else:
                            for i in range(4):
                                v[i] = v[i] + sixth * (acc[i] + kk[i])
            for i in range(4):
                c[r, i] = v[i]
