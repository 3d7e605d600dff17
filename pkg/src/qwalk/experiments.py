"""Ready-made runs shared by the command line and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disorder import DisorderSpec, dephasing_rate
from .ensemble import run_ensemble
from .integrator import IntegrationConfig, white_noise_schedule
from .lattice import ExpansionPolicy, init_delta
from .observables import CrossoverEstimate, ObservableSeries, ensemble_mean, fit_crossover

# The crossover grid starts well inside the ballistic regime and ends once the
# ensemble-mean spread has settled onto the diffusive law.
CROSSOVER_T_MIN = 0.01     # in units of the dephasing time
CROSSOVER_T_END = 100.0    # likewise
CROSSOVER_MIN_SPREAD = 20.0
SAMPLES_PER_DECADE = 5


@dataclass(frozen=True)
class CrossoverPlan:
    W: float
    dt: float
    update_interval: float
    times: np.ndarray

    @property
    def t_max(self) -> float:
        return float(self.times[-1])


def crossover_plan(W: float, samples_per_decade: float = SAMPLES_PER_DECADE,
                   t_max: float | None = None) -> CrossoverPlan:
    """Time grid and step sizes for a white-noise spreading run at strength W.

    The grid runs from 0.01 dephasing times to the later of 100 dephasing
    times and the time at which the diffusive spread 4t/rate reaches 20 sites^2;
    with weak hopping per dephasing time the packet needs that long before
    realization-to-realization scatter settles down.
    """
    rate = dephasing_rate(W)
    if not rate > 0:
        raise ValueError("crossover runs need W > 0")
    t_min = CROSSOVER_T_MIN / rate
    if t_max is None:
        t_max = max(CROSSOVER_T_END / rate, CROSSOVER_MIN_SPREAD * rate / 4.0)
    if not t_max > t_min:
        raise ValueError(f"t_max must exceed the first sample {t_min:.3g}")
    # whole number of grid steps, so every W samples the same values of rate*t
    steps = max(7, math.ceil(samples_per_decade * math.log10(t_max / t_min) - 1e-9))
    t_max = t_min * 10.0 ** (steps / samples_per_decade)
    times = np.concatenate([[0.0], t_min * 10.0 ** (np.arange(steps + 1) / samples_per_decade)])
    dt, dtu = white_noise_schedule(W, t_min=t_min)
    return CrossoverPlan(float(W), dt, dtu, times)


def crossover_ensemble(W: float, realizations: int = 32, seed: int = 0, workers: int = 1,
                       plan: CrossoverPlan | None = None, backend: str | None = None):
    """(plan, ensemble) for a delta start under white noise on an expanding window."""
    plan = plan or crossover_plan(W)
    spec = DisorderSpec("white", W, plan.update_interval, seed=seed)
    cfg = IntegrationConfig(dt=plan.dt, t_max=plan.t_max, sample_times=plan.times)
    ens = run_ensemble(init_delta(0), spec, cfg, ExpansionPolicy(), realizations,
                       workers=workers, backend=backend)
    return plan, ens


def crossover_sweep(W_values, realizations: int = 32, seed: int = 0, workers: int = 1,
                    samples_per_decade: float = SAMPLES_PER_DECADE,
                    backend: str | None = None) -> list[tuple[CrossoverEstimate, ObservableSeries]]:
    out = []
    for W in W_values:
        plan = crossover_plan(W, samples_per_decade)
        _, ens = crossover_ensemble(W, realizations, seed, workers, plan, backend)
        out.append((fit_crossover(ens, W), ensemble_mean(ens)))
    return out


def scaling_exponent(estimates) -> float:
    """Slope of log t_c against log W over the determined estimates."""
    pts = [(e.W, e.t_c) for e in estimates if e.t_c is not None]
    if len(pts) < 2:
        raise ValueError("need two determined crossover times")
    W, tc = np.array(pts).T
    return float(np.polyfit(np.log(W), np.log(tc), 1)[0])
