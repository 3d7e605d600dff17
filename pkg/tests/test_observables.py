import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwalk.disorder import DisorderSpec, dephasing_rate
from qwalk.ensemble import run_ensemble
from qwalk.experiments import crossover_plan, scaling_exponent
from qwalk.integrator import IntegrationConfig, run_trajectory, white_noise_schedule
from qwalk.lattice import ExpansionPolicy, WavePacket, centered_window, init_delta, init_uniform
from qwalk.observables import (
    CrossoverEstimate,
    NotSaturated,
    ObservableSeries,
    accumulate_carpet,
    circular_variance,
    crossover_from_curve,
    ensemble_mean,
    fit_crossover,
    local_slopes,
    localization_saturation,
    loglog_slope,
    participation_ratio,
    return_probability,
    sample_slopes,
    slope_standard_error,
    variance,
)


def series_from(t, sigma2):
    t = np.asarray(t, dtype=float)
    return ObservableSeries(t, sigma2, np.zeros_like(t), np.ones_like(t))


def haken_strobl(t, rate):
    """Mean-square displacement of a nearest-neighbour chain under strong white-noise dephasing."""
    x = rate * np.asarray(t)
    return 4.0 / rate ** 2 * (x - (1.0 - np.exp(-x)))


def test_variance_trivial():
    assert variance(init_delta(0)) == 0.0
    psi = WavePacket(np.sqrt([0.5, 0.0, 0.5]), x_offset=-1)
    assert variance(psi) == pytest.approx(1.0, abs=1e-15)


def test_variance_measured_from_release_site():
    psi = WavePacket([1.0], x_offset=3)
    assert variance(psi) == 9.0


def test_return_probability_constant():
    t = np.linspace(0, 5, 11)
    np.testing.assert_array_equal(return_probability(t, np.ones_like(t)), 1.0)


def test_return_probability_analytic():
    t = np.linspace(0, 50, 200_001)
    c = return_probability(t, 1 / (1 + t))
    expected = np.log1p(t[1:]) / t[1:]
    assert np.max(np.abs(c[1:] - expected)) < 1e-6
    assert c[0] == 1.0


def test_return_probability_first_trapezoid():
    c = return_probability([0.0, 2.0], [1.0, 0.5])
    assert c[1] == pytest.approx(0.75)


def test_return_probability_needs_origin():
    with pytest.raises(ValueError):
        return_probability([0.1, 0.2], [1.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-2.5, max_value=2.5), st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=1e-3, max_value=10.0), st.integers(min_value=9, max_value=80))
def test_power_law_exponent_recovered(p, a, t0, n):
    t = np.geomspace(t0, t0 * 1e3, n)
    y = a * t ** p
    assert loglog_slope(t, y) == pytest.approx(p, abs=0.02)
    assert np.all(np.abs(local_slopes(t, y) - p) < 0.02)
    assert np.all(np.abs(sample_slopes(t, y) - p) < 0.02)


def test_sample_slopes_one_per_sample():
    t = np.geomspace(1, 100, 20)
    assert sample_slopes(t, t ** 2).shape == (20,)
    assert sample_slopes(t[:5], t[:5]).size == 0


def test_crossover_pure_ballistic():
    t = np.geomspace(0.01, 100, 60)
    est = crossover_from_curve(t, 2 * t ** 2, 0.0)
    assert est.t_quad_end == t[-1]
    assert est.t_diff_start is None
    assert not est.determined


def test_crossover_pure_diffusive():
    t = np.geomspace(0.01, 100, 60)
    est = crossover_from_curve(t, 2 * t, 0.0)
    assert est.t_diff_start == t[0]
    assert est.t_quad_end is None


def test_crossover_skips_t0():
    t = np.concatenate([[0.0], np.geomspace(0.01, 100, 40)])
    est = crossover_from_curve(t, 2 * t, 0.0)
    assert est.t_diff_start == t[1]


def test_crossover_on_dephasing_law():
    # the exact dephasing curve: slope 2 early, 1 late, crossover scaling 1/rate
    estimates = []
    for W in (2.0, 5.0, 10.0, 20.0):
        rate = dephasing_rate(W)
        t = crossover_plan(W).times
        est = crossover_from_curve(t, haken_strobl(t, rate), W)
        assert est.determined
        assert est.t_quad_end <= est.t_diff_start
        # the centred slope reaches 1.9 near rate*t = 0.3 and 1.1 near rate*t = 11
        assert 0.1 < rate * est.t_quad_end < 0.5
        assert 7 < rate * est.t_diff_start < 20
        estimates.append(est)
    assert scaling_exponent(estimates) == pytest.approx(-2.0, abs=0.02)


def test_crossover_time_is_diffusive_onset():
    est = CrossoverEstimate(1.0, 0.5, 40.0)
    assert est.t_c == 40.0
    assert CrossoverEstimate(1.0, 0.5, None).t_c is None


def test_crossover_needs_realizations():
    t = np.geomspace(0.01, 10, 30)
    with pytest.raises(ValueError):
        fit_crossover([series_from(t, t)] * 15, 1.0)
    assert fit_crossover([series_from(t, t)] * 16, 1.0).t_diff_start == t[0]


def test_crossover_undetermined_for_short_run():
    rate = 1.0
    t = np.geomspace(0.01, 2.0, 30)
    est = crossover_from_curve(t, haken_strobl(t, rate), 1.0)
    assert est.t_quad_end is not None
    assert est.t_diff_start is None


def brute_jackknife(t, members, window=7):
    """Leave-one-out slopes refitted with np.polyfit on centred windows."""
    t = np.asarray(t)
    n, size = len(members), len(t)
    half = window // 2
    loo = np.empty((n, size))
    for i in range(n):
        y = np.mean([m for j, m in enumerate(members) if j != i], axis=0)
        for k in range(size):
            lo = min(max(k - half, 0), size - window)
            sl = slice(lo, lo + window)
            loo[i, k] = np.polyfit(np.log(t[sl]), np.log(y[sl]), 1)[0]
    return np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))


def noisy_ensemble(seed, n=20, size=30):
    rng = np.random.default_rng(seed)
    t = np.geomspace(0.01, 100, size)
    clean = haken_strobl(t, 1.0)
    return t, [series_from(t, clean * np.exp(rng.normal(0, 0.1, size))) for _ in range(n)]


def test_slope_error_matches_brute_force():
    t, members = noisy_ensemble(1, n=8, size=15)
    expected = brute_jackknife(t, [m.sigma2 for m in members])
    np.testing.assert_allclose(slope_standard_error(members), expected, rtol=1e-9, atol=1e-12)


def test_slope_error_zero_for_identical_members():
    t = np.concatenate([[0.0], np.geomspace(0.01, 10, 20)])
    members = [series_from(t, haken_strobl(t, 1.0))] * 4
    err = slope_standard_error(members)
    assert err[0] == 0.0 and np.max(err) < 1e-12
    assert fit_crossover(members * 4, 1.0) == crossover_from_curve(t, haken_strobl(t, 1.0), 1.0)


@pytest.mark.parametrize("seed", range(6))
def test_tolerance_only_widens_regimes(seed):
    _, members = noisy_ensemble(seed)
    strict = fit_crossover(members, 1.0, tolerance=0.0)
    loose = fit_crossover(members, 1.0, tolerance=1.0)
    if strict.t_diff_start is not None:
        assert loose.t_diff_start <= strict.t_diff_start
    if strict.t_quad_end is not None:
        assert loose.t_quad_end >= strict.t_quad_end


def test_ensemble_mean_in_index_order():
    t = np.array([0.0, 1.0])
    members = [series_from(t, [0.0, v]) for v in (0.1, 0.2, 0.3)]
    assert ensemble_mean(members).sigma2[1] == pytest.approx(0.2)
    with pytest.raises(ValueError):
        ensemble_mean([series_from(t, t), series_from([0.0, 2.0], t)])


def test_saturation_synthetic():
    t = np.linspace(0, 100, 101)
    members = [series_from(t, s * (1 - np.exp(-t))) for s in (10.0, 12.0, 14.0)]
    sat = localization_saturation(members)
    assert sat.sigma2_inf == pytest.approx(12.0, rel=1e-9)
    assert sat.stderr == pytest.approx(2.0 / math.sqrt(3), rel=1e-9)
    assert sat.length == pytest.approx(math.sqrt(12.0))


def test_clean_chain_not_saturated():
    cfg = IntegrationConfig(dt=0.01, t_max=40.0, sample_times=np.linspace(0, 40, 41))
    series = run_trajectory(init_delta(0), DisorderSpec(), cfg, ExpansionPolicy()).series
    with pytest.raises(NotSaturated):
        localization_saturation([series])
    assert np.all(np.diff(series.sigma2) > 0)


@pytest.mark.slow
def test_stronger_disorder_localizes_tighter(localization_runs):
    sat5 = localization_saturation(localization_runs[5.0])
    sat10 = localization_saturation(localization_runs[10.0])
    assert sat10.sigma2_inf + 2 * sat10.stderr < sat5.sigma2_inf - 2 * sat5.stderr


def test_carpet_clean_fronts():
    N = 101
    lo, hi = centered_window(N)
    times = np.linspace(0, 100, 201)
    cfg = IntegrationConfig(dt=0.01, t_max=100.0, sample_times=times)
    traj = run_trajectory(init_delta(0, (lo, hi)), DisorderSpec(), cfg, keep_packets=True)
    carpet = accumulate_carpet(traj.packets, (lo, hi))
    assert carpet.grid.shape == (101, 201)
    first = carpet.grid[:, 0]
    assert first[-lo] == 1.0 and np.count_nonzero(first) == 1
    np.testing.assert_allclose(carpet.grid.sum(axis=0), traj.series.norm, atol=1e-12)
    assert np.all(np.abs(carpet.grid.sum(axis=0) - 1) < 1e-6)
    # right-hand front: outermost site with P above 1e-3, before it reaches the wall
    sel = (carpet.t_samples >= 5) & (carpet.t_samples <= 20)
    front = [np.max(np.nonzero(col > 1e-3)[0]) + lo for col in carpet.grid[:, sel].T]
    speed = np.polyfit(carpet.t_samples[sel], front, 1)[0]
    assert speed == pytest.approx(2.0, abs=0.1)


def _late_pattern(spec, dt):
    N = 101
    lo, hi = centered_window(N)
    times = np.linspace(0, 200, 201)
    traj = run_trajectory(init_uniform(N, lo), spec, IntegrationConfig(dt, 200.0, times), keep_packets=True)
    carpet = accumulate_carpet(traj.packets, (lo, hi))
    t = carpet.t_samples
    a = carpet.grid[:, (t >= 100) & (t < 150)].mean(axis=1)
    b = carpet.grid[:, t >= 150].mean(axis=1)
    return participation_ratio(carpet.time_average(100.0)), np.corrcoef(a, b)[0, 1]


def test_static_carpet_pattern_frozen():
    pr_static, corr_static = _late_pattern(DisorderSpec("static", 5.0, seed=0), 0.005)
    pr_clean, _ = _late_pattern(DisorderSpec(), 0.005)
    dt, dtu = white_noise_schedule(5.0)
    pr_white, corr_white = _late_pattern(DisorderSpec("white", 5.0, dtu, seed=0), dt)
    assert pr_static < 0.7 * 101
    assert pr_static < 0.9 * pr_clean < pr_white
    assert corr_static > 0.95
    assert corr_white < 0.5


def test_white_noise_carpet_spreads_linearly():
    N = 101
    lo, hi = centered_window(N)
    dt, dtu = white_noise_schedule(5.0)
    cfg = IntegrationConfig(dt, 100.0, np.linspace(0, 100, 101))
    ens = run_ensemble(init_delta(0, (lo, hi)), DisorderSpec("white", 5.0, dtu, seed=0), cfg, None, 16)
    mean = ensemble_mean(ens)
    assert 0.9 <= loglog_slope(mean.times, mean.sigma2, 10, 100) <= 1.1


def test_participation_ratio():
    assert participation_ratio(np.full(10, 0.1)) == pytest.approx(10.0)
    assert participation_ratio(np.array([0.0, 1.0, 0.0])) == 1.0


def test_circular_variance():
    assert circular_variance(np.zeros(5)) == pytest.approx(0.0)
    assert circular_variance(np.array([0.0, np.pi])) == pytest.approx(1.0)
    assert circular_variance(np.array([np.pi / 2, -np.pi / 2]), axial=True) == pytest.approx(0.0, abs=1e-15)
    assert math.isnan(circular_variance(np.array([np.nan])))
