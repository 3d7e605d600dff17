import math

import numpy as np
import pytest

from qwalk import _backend
from qwalk.qubit import (
    QubitParams,
    _sample_plan,
    analytic_averaged,
    critical_disorder,
    ensemble_qubit,
    integrate_averaged_odes,
    qubit_schedule,
    qubit_trajectories,
)

needs_compiled = pytest.mark.skipif(_backend.compiled_kernels is None, reason="extension not built")


def params_for_delta(delta, gamma=1.0):
    return QubitParams(gamma=gamma, W=math.sqrt(12.0 * delta))


def test_delta_definition():
    assert QubitParams(W=3.0).delta == 0.75
    assert QubitParams(W=0.0).delta == 0.0


def test_params_validation():
    with pytest.raises(ValueError):
        QubitParams(gamma=0.0)
    with pytest.raises(ValueError):
        QubitParams(W=-1.0)
    with pytest.raises(ValueError):
        QubitParams(ensemble_size=0)


def test_noiseless_rabi():
    t = np.linspace(0, 10, 101)
    s = analytic_averaged(QubitParams(), t)
    np.testing.assert_allclose(s.J, np.sin(2 * t) / 2, atol=1e-15)
    np.testing.assert_allclose(s.rho, np.cos(2 * t) / 2, atol=1e-15)
    assert np.all(s.R == 0)


def test_critical_damping_limit():
    t = np.linspace(0, 10, 101)
    s = analytic_averaged(params_for_delta(2.0), t)
    np.testing.assert_allclose(s.J, t * np.exp(-2 * t), rtol=1e-12, atol=1e-15)


def test_branches_continuous_at_critical_point():
    t = np.linspace(0, 5, 51)
    crit = analytic_averaged(params_for_delta(2.0), t)
    for d in (2.0 - 1e-7, 2.0 + 1e-7):
        near = analytic_averaged(params_for_delta(d), t)
        np.testing.assert_allclose(near.J, crit.J, atol=1e-6)
        np.testing.assert_allclose(near.rho, crit.rho, atol=1e-6)


@pytest.mark.parametrize("delta", [0.0, 1.0, 2.0, 3.0, 0.5, 5.0])
def test_closed_form_matches_ode(delta):
    p = params_for_delta(delta)
    ode = integrate_averaged_odes(p, 10.0, 1e-3)
    exact = analytic_averaged(p, ode.time)
    for a, b in ((ode.rho, exact.rho), (ode.R, exact.R), (ode.J, exact.J)):
        assert np.max(np.abs(a - b)) < 1e-8


def test_ode_zero_damping_invariant():
    s = integrate_averaged_odes(QubitParams(), 10.0, 1e-3)
    assert np.max(np.abs(s.rho ** 2 + s.J ** 2 - 0.25)) < 1e-10


@pytest.mark.parametrize("delta", [0.3, 1.0, 3.0])
def test_ode_relaxes_to_half_identity(delta):
    s = integrate_averaged_odes(params_for_delta(delta), 60.0, 1e-2)
    assert abs(s.rho[-1]) < 1e-4 and abs(s.J[-1]) < 1e-4 and s.R[-1] == 0.0


def test_overdamped_never_changes_sign():
    s = integrate_averaged_odes(params_for_delta(3.0), 20.0, 1e-3)
    assert np.all(s.J >= 0)


def test_underdamped_changes_sign():
    s = integrate_averaged_odes(params_for_delta(1.0), 20.0, 1e-3)
    assert s.J.min() < 0 < s.J.max()


def test_positivity_of_averaged_state():
    t = np.linspace(0, 20, 401)
    for d in (0.0, 0.5, 2.0, 4.0):
        s = analytic_averaged(params_for_delta(d), t)
        assert np.all(np.abs(s.rho) <= 0.5 + 1e-12)
        assert np.all(s.R ** 2 + s.J ** 2 <= 0.25 + 1e-12)


@pytest.mark.parametrize("gamma, expected", [(1.0, math.sqrt(24)), (0.5, math.sqrt(12)), (3.0, math.sqrt(72))])
def test_critical_disorder(gamma, expected):
    assert critical_disorder(gamma) == pytest.approx(expected, rel=1e-15)
    assert QubitParams(gamma=gamma, W=critical_disorder(gamma)).delta == pytest.approx(2 * gamma)


def test_critical_disorder_value():
    assert critical_disorder(1.0) == pytest.approx(4.89898, abs=1e-5)
    with pytest.raises(ValueError):
        critical_disorder(0.0)


def test_schedule_whole_substeps():
    for W in (0.0, 1.0, 2.0, 10.0):
        dt, dtu = qubit_schedule(QubitParams(W=W))
        assert abs(dtu / dt - round(dtu / dt)) < 1e-9
        assert dt <= dtu


def test_noiseless_monte_carlo_exact():
    ens = ensemble_qubit(QubitParams(W=0.0, ensemble_size=3))
    t = ens.times
    np.testing.assert_allclose(ens.rho12, 0.5j * np.sin(2 * t), atol=1e-9)
    np.testing.assert_allclose(ens.rho, 0.5 * np.cos(2 * t), atol=1e-9)
    assert ens.max_norm_error < 1e-10


def test_weak_noise_envelope_decay():
    p = QubitParams(W=1.0, ensemble_size=2000, t_max=20.0)
    ens = ensemble_qubit(p)
    mag = ens.abs_rho12
    peaks = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]))[0] + 1
    assert peaks.size >= 10
    rate = -np.polyfit(ens.times[peaks], np.log(mag[peaks]), 1)[0]
    # the averaged solution decays as exp(-delta t)
    assert rate == pytest.approx(p.delta, rel=0.2)


def test_trajectory_purity():
    for W in (1.0, 10.0):
        ens = ensemble_qubit(QubitParams(W=W, ensemble_size=50, seed=4))
        assert ens.max_norm_error < 1e-8


def test_ensemble_loses_purity():
    ens = ensemble_qubit(QubitParams(W=10.0, ensemble_size=200))
    purity = 0.5 + 2 * ens.rho ** 2 + 2 * np.abs(ens.rho12) ** 2
    assert purity[0] == pytest.approx(1.0)
    assert purity[-1] < 0.6


def test_phase_coherence_contrast():
    cv = {W: ensemble_qubit(QubitParams(W=W, ensemble_size=100)).late_circular_variance()
          for W in (0.1, 1.0, 10.0)}
    assert cv[0.1] < 0.1
    assert cv[1.0] < 0.1
    assert cv[10.0] > 0.5


def test_theta_undefined_below_floor():
    ens = ensemble_qubit(QubitParams(W=0.0, ensemble_size=1, t_max=1.0))
    assert math.isnan(ens.theta[0])
    assert np.all(np.abs(ens.theta[1:]) <= math.pi)


def test_worker_count_irrelevant():
    p = QubitParams(W=2.0, ensemble_size=20, t_max=3.0, seed=9)
    a = ensemble_qubit(p, workers=1)
    b = ensemble_qubit(p, workers=3)
    assert a.rho12.tobytes() == b.rho12.tobytes()


def test_seed_changes_noise():
    a = ensemble_qubit(QubitParams(W=2.0, ensemble_size=5, t_max=3.0, seed=1))
    b = ensemble_qubit(QubitParams(W=2.0, ensemble_size=5, t_max=3.0, seed=2))
    assert np.max(np.abs(a.rho12 - b.rho12)) > 1e-3


@needs_compiled
def test_backends_agree():
    p = QubitParams(W=3.0, t_max=4.0, seed=11)
    dt, dtu = qubit_schedule(p)
    bounds, _ = _sample_plan(p.t_max, dtu, 50)
    a = qubit_trajectories(p, 5, 4, dt, dtu, bounds, backend="compiled")
    b = qubit_trajectories(p, 5, 4, dt, dtu, bounds, backend="python")
    np.testing.assert_allclose(a[0], b[0], rtol=0, atol=1e-13)
    np.testing.assert_allclose(a[1], b[1], rtol=0, atol=1e-13)
