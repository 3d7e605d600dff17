"""Measured quantities: spreading, return probability, carpets, crossover and saturation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .lattice import WavePacket

QUAD_SLOPE = 1.9
DIFF_BAND = (0.9, 1.1)
SLOPE_WINDOW = 7


@dataclass
class ObservableSeries:
    """Observables of one trajectory (or an ensemble mean) at the sampled times."""

    times: np.ndarray
    sigma2: np.ndarray
    p0: np.ndarray
    c_of_t: np.ndarray
    norm: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.sigma2 = np.asarray(self.sigma2, dtype=np.float64)
        self.p0 = np.asarray(self.p0, dtype=np.float64)
        self.c_of_t = np.asarray(self.c_of_t, dtype=np.float64)
        if self.norm is None:
            self.norm = np.ones_like(self.times)
        self.norm = np.asarray(self.norm, dtype=np.float64)


def variance(psi: WavePacket) -> float:
    """sigma^2 = sum_x x^2 P(x), measured from the release site x = 0.

    Summed with correct rounding, so zero padding never changes the result.
    """
    x = psi.coords.astype(np.float64)
    return math.fsum(x * x * psi.probability)


def return_probability(times, p0) -> np.ndarray:
    """C(t) = (1/t) int_0^t P(0, t') dt' by trapezoids on the given grid.

    ``times`` must start at 0; C(0) is P(0, 0).
    """
    times = np.asarray(times, dtype=np.float64)
    p0 = np.asarray(p0, dtype=np.float64)
    if times.size == 0 or times[0] != 0.0:
        raise ValueError("the sample grid must start at t = 0")
    integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (p0[1:] + p0[:-1]))])
    c = np.empty_like(p0)
    c[0] = p0[0]
    c[1:] = integral[1:] / times[1:]
    return c


def ensemble_mean(ensemble: Sequence[ObservableSeries]) -> ObservableSeries:
    """Mean over realizations, summed in realization order."""
    if not ensemble:
        raise ValueError("empty ensemble")
    times = ensemble[0].times
    for s in ensemble[1:]:
        if not np.array_equal(s.times, times):
            raise ValueError("ensemble members have different time grids")
    stack = lambda name: np.mean(np.stack([getattr(s, name) for s in ensemble]), axis=0)
    return ObservableSeries(times, stack("sigma2"), stack("p0"), stack("c_of_t"), stack("norm"))


def loglog_slope(t, y, t_lo=None, t_hi=None) -> float:
    """Least-squares slope of log y against log t over t_lo <= t <= t_hi."""
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mask = (t > 0) & (y > 0)
    if t_lo is not None:
        mask &= t >= t_lo
    if t_hi is not None:
        mask &= t <= t_hi
    if mask.sum() < 2:
        raise ValueError("need at least two positive samples to fit a slope")
    return float(np.polyfit(np.log(t[mask]), np.log(y[mask]), 1)[0])


def local_slopes(t, y, window: int = SLOPE_WINDOW) -> np.ndarray:
    """Sliding least-squares log-log slopes; entry i fits samples i .. i+window-1."""
    lt = np.log(np.asarray(t, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    n = lt.size - window + 1
    if n < 1:
        return np.empty(0)
    wx = np.lib.stride_tricks.sliding_window_view(lt, window)
    wy = np.lib.stride_tricks.sliding_window_view(ly, window)
    dx = wx - wx.mean(axis=1, keepdims=True)
    dy = wy - wy.mean(axis=1, keepdims=True)
    return np.sum(dx * dy, axis=1) / np.sum(dx * dx, axis=1)


@dataclass(frozen=True)
class CrossoverEstimate:
    """End of the ballistic law and start of the diffusive law for one W.

    Either time is ``None`` when the run does not show that regime.
    """

    W: float
    t_quad_end: float | None
    t_diff_start: float | None

    @property
    def determined(self) -> bool:
        return self.t_quad_end is not None and self.t_diff_start is not None

    @property
    def t_c(self) -> float | None:
        """Crossover time, taken as the onset of the diffusive law."""
        return self.t_diff_start


def sample_slopes(t, y, window: int = SLOPE_WINDOW) -> np.ndarray:
    """Local log-log slope at every sample.

    Sample i uses the ``window`` consecutive samples centred on it, shifted
    inwards near the ends of the series.
    """
    t = np.asarray(t, dtype=np.float64)
    fits = local_slopes(t, y, window)
    if fits.size == 0:
        return fits
    start = np.clip(np.arange(t.size) - window // 2, 0, fits.size - 1)
    return fits[start]


def crossover_from_curve(t, sigma2, W: float, window: int = SLOPE_WINDOW,
                         quad_slope: float = QUAD_SLOPE,
                         diff_band: tuple[float, float] = DIFF_BAND,
                         slope_error=None) -> CrossoverEstimate:
    """Read the two crossover times off sigma^2(t).

    ``t_quad_end`` is the last sample of the initial run of samples whose local
    slope is >= ``quad_slope``; ``t_diff_start`` is the first sample from which
    the local slope stays inside ``diff_band`` to the end of the series.

    ``slope_error`` (one value per sample of ``t``) widens both tests: a slope
    only counts as outside a threshold when it misses it by more than its error.
    """
    t = np.asarray(t, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    keep = (t > 0) & (sigma2 > 0)
    t, sigma2 = t[keep], sigma2[keep]
    slopes = sample_slopes(t, sigma2, window)
    if slopes.size == 0:
        return CrossoverEstimate(W, None, None)
    err = np.zeros_like(slopes) if slope_error is None else np.asarray(slope_error, dtype=np.float64)[keep]

    t_quad_end = None
    quad = slopes >= quad_slope - err
    if quad[0]:
        run = quad.size if quad.all() else int(np.argmin(quad))
        t_quad_end = float(t[run - 1])

    t_diff_start = None
    inside = (slopes >= diff_band[0] - err) & (slopes <= diff_band[1] + err)
    if inside[-1]:
        first = 0 if inside.all() else inside.size - int(np.argmin(inside[::-1]))
        t_diff_start = float(t[first])
    return CrossoverEstimate(W, t_quad_end, t_diff_start)


def slope_standard_error(ensemble: Sequence[ObservableSeries], window: int = SLOPE_WINDOW) -> np.ndarray:
    """Jackknife standard error of the local slopes of the ensemble-mean sigma^2.

    Zero where the mean is not positive (those samples are never fitted).
    """
    n = len(ensemble)
    if n < 2:
        raise ValueError("a standard error needs at least two realizations")
    mean = ensemble_mean(ensemble)
    keep = (mean.times > 0) & (mean.sigma2 > 0)
    t = mean.times[keep]
    total = np.sum([s.sigma2[keep] for s in ensemble], axis=0)
    loo = [sample_slopes(t, (total - s.sigma2[keep]) / (n - 1), window) for s in ensemble]
    loo = np.array(loo)
    err = np.zeros(mean.times.size)
    if loo.shape[1]:
        err[keep] = np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return err


def fit_crossover(ensemble: Sequence[ObservableSeries], W: float, min_realizations: int = 16,
                  tolerance: float = 1.0, **kwargs) -> CrossoverEstimate:
    """Crossover times of the ensemble-averaged sigma^2(t).

    The slope thresholds are applied with a margin of ``tolerance`` jackknife
    standard errors, so sampling noise of a finite ensemble alone cannot end
    the ballistic stretch early or push the diffusive onset late.
    """
    if len(ensemble) < min_realizations:
        raise ValueError(f"need at least {min_realizations} realizations, got {len(ensemble)}")
    mean = ensemble_mean(ensemble)
    window = kwargs.get("window", SLOPE_WINDOW)
    err = None
    if tolerance > 0 and len(ensemble) > 1:
        err = tolerance * slope_standard_error(ensemble, window)
    return crossover_from_curve(mean.times, mean.sigma2, W, slope_error=err, **kwargs)


class NotSaturated(Exception):
    """sigma^2(t) is still growing over the final doubling of the run."""


@dataclass(frozen=True)
class Saturation:
    sigma2_inf: float
    stderr: float
    doubling_ratio: float

    @property
    def length(self) -> float:
        return float(np.sqrt(self.sigma2_inf))


def localization_saturation(ensemble: Sequence[ObservableSeries],
                            band: tuple[float, float] = (0.9, 1.1)) -> Saturation:
    """Saturated sigma^2 from the last quarter of the run.

    Raises :class:`NotSaturated` unless sigma^2(T_end)/sigma^2(T_end/2) of the
    ensemble mean lies inside ``band``.
    """
    if not ensemble:
        raise ValueError("empty ensemble")
    mean = ensemble_mean(ensemble)
    t = mean.times
    t_end = t[-1]
    half = int(np.argmin(np.abs(t - 0.5 * t_end)))
    if mean.sigma2[half] <= 0:
        raise NotSaturated("sigma^2 vanishes at half time")
    ratio = float(mean.sigma2[-1] / mean.sigma2[half])
    if not band[0] <= ratio <= band[1]:
        raise NotSaturated(f"sigma^2 grew by a factor {ratio:.3f} over the final doubling")
    late = t >= 0.75 * t_end
    per_real = np.array([np.mean(s.sigma2[late]) for s in ensemble])
    stderr = float(np.std(per_real, ddof=1) / np.sqrt(per_real.size)) if per_real.size > 1 else float("nan")
    return Saturation(float(np.mean(per_real)), stderr, ratio)


@dataclass(frozen=True)
class Carpet:
    """P(x, t): rows are sites ``x_range``, columns the sampled times."""

    grid: np.ndarray
    x_range: np.ndarray
    t_samples: np.ndarray

    def time_average(self, t_from: float = 0.0) -> np.ndarray:
        cols = self.t_samples >= t_from
        return self.grid[:, cols].mean(axis=1)


def accumulate_carpet(packets: Iterable[WavePacket], x_window: tuple[int, int]) -> Carpet:
    """Stack P(x, t) of the sampled packets onto the fixed window x_window = (lo, hi)."""
    lo, hi = x_window
    x_range = np.arange(lo, hi + 1)
    columns, times = [], []
    for psi in packets:
        col = np.zeros(x_range.size)
        src = psi.coords
        sel = (src >= lo) & (src <= hi)
        col[src[sel] - lo] = psi.probability[sel]
        columns.append(col)
        times.append(psi.time)
    if not columns:
        raise ValueError("no packets to stack")
    return Carpet(np.stack(columns, axis=1), x_range, np.asarray(times))


def participation_ratio(p: np.ndarray) -> float:
    """(sum P)^2 / sum P^2: number of sites effectively occupied."""
    p = np.asarray(p, dtype=np.float64)
    return float(np.sum(p) ** 2 / np.sum(p * p))


def circular_variance(angles, axial: bool = False) -> float:
    """1 - |<exp(i theta)>|, ignoring NaNs.

    ``axial=True`` doubles the angles first, so theta and theta + pi count as
    the same direction.
    """
    a = np.asarray(angles, dtype=np.float64)
    a = a[np.isfinite(a)]
    if a.size == 0:
        return float("nan")
    if axial:
        a = 2.0 * a
    return float(1.0 - np.abs(np.mean(np.exp(1j * a))))
