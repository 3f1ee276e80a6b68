import os

import numpy as np
import pytest
from hypothesis import settings

from vfshm import FrequencyGrid, RationalModel, evaluate_model, mdof_frf, benchmark_system, apply_damage

settings.register_profile("ci", deadline=None, max_examples=50)
settings.register_profile("stress", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

# damage case used throughout: second spring softened by 25%, its damper stiffened by 25%
BENCHMARK_DAMAGE = [(1, 0.75, 1.25)]


def random_model(rng, n_pairs, f_lo, f_hi, zeta=(1e-3, 2e-2), d=True, h=False):
    """Stable conjugate-closed model with well separated pairs inside [f_lo, f_hi]."""
    # stratified frequencies keep the pairs distinct
    edges = np.linspace(f_lo, f_hi, n_pairs + 1)
    f = edges[:-1] + rng.uniform(0.2, 0.8, n_pairs) * np.diff(edges)
    z = np.exp(rng.uniform(np.log(zeta[0]), np.log(zeta[1]), n_pairs))
    w = 2 * np.pi * f
    p = -z * w + 1j * w * np.sqrt(1 - z**2)
    r = (rng.standard_normal(n_pairs) + 1j * rng.standard_normal(n_pairs)) * w * z * 10
    poles = np.ravel(np.column_stack([p, p.conj()]))
    res = np.ravel(np.column_stack([r, r.conj()]))
    return RationalModel(poles, res, d=rng.standard_normal() if d else 0.0, h=rng.standard_normal() * 1e-6 if h else 0.0)


def sorted_upper(poles):
    poles = np.asarray(poles)
    up = poles[poles.imag > 0]
    return up[np.argsort(up.imag)]


@pytest.fixture(scope="session")
def benchmark_grid():
    return FrequencyGrid.linspace(100.0, 450.0, 2001)


@pytest.fixture(scope="session")
def baseline_frf(benchmark_grid):
    return mdof_frf(benchmark_system(), benchmark_grid)


@pytest.fixture(scope="session")
def damaged_frf(benchmark_grid):
    return mdof_frf(apply_damage(benchmark_system(), BENCHMARK_DAMAGE), benchmark_grid)


@pytest.fixture(scope="session")
def three_pair_model():
    """Three lightly damped modes at 250, 480 and 720 Hz plus a constant term."""
    f0 = np.array([250.0, 480.0, 720.0])
    z0 = np.array([0.01, 0.015, 0.008])
    w = 2 * np.pi * f0
    p = -z0 * w + 1j * w * np.sqrt(1 - z0**2)
    r = np.array([1 + 0.5j, -0.8 + 1j, 0.6 - 0.3j]) * w * z0 * 10
    poles = np.ravel(np.column_stack([p, p.conj()]))
    res = np.ravel(np.column_stack([r, r.conj()]))
    return RationalModel(poles, res, d=0.2)


@pytest.fixture(scope="session")
def three_pair_grid():
    return FrequencyGrid.linspace(100.0, 1000.0, 1000)


@pytest.fixture(scope="session")
def three_pair_frf(three_pair_model, three_pair_grid):
    return evaluate_model(three_pair_model, three_pair_grid)


# --- acceptance reporting -----------------------------------------------------

ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
