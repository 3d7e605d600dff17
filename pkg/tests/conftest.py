"""Shared long runs for the acceptance suite, computed once per session."""
import numpy as np
import pytest

from qwalk.disorder import DisorderSpec
from qwalk.ensemble import run_ensemble
from qwalk.experiments import crossover_ensemble
from qwalk.integrator import IntegrationConfig, geometric_times
from qwalk.lattice import ExpansionPolicy, init_delta

LOCALIZATION_T = 2000.0
REALIZATIONS = 32

_verdicts: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    _verdicts.append(line)


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def localization_runs():
    """Static-disorder ensembles (seed 0) at W = 5 and W = 10 up to t = 2000."""
    times = geometric_times(LOCALIZATION_T, 200, 1.0)
    out = {}
    for W in (5.0, 10.0):
        cfg = IntegrationConfig(dt=0.02 / (2 + W / 2), t_max=LOCALIZATION_T, sample_times=times)
        out[W] = run_ensemble(init_delta(0), DisorderSpec("static", W, seed=0), cfg,
                              ExpansionPolicy(), REALIZATIONS)
    return out


@pytest.fixture(scope="session")
def crossover_runs():
    """White-noise ensembles (seed 0) on the dephasing-aligned grids."""
    return {W: crossover_ensemble(W, REALIZATIONS, seed=0)[1] for W in (1.0, 2.0, 5.0, 10.0, 20.0)}
