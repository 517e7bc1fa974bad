import functools

import numpy as np
import pytest

from pasf import pipeline, simkit

SEED = 1

# acceptance lines collected during the run, printed in the terminal summary
ACCEPTANCE = []


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: s.split("criterion ")[1]):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def rotating_run(noise_var, seed=SEED):
    sim = simkit.simulate_rotating(noise_var=noise_var, seed=seed)
    res = pipeline.run_decompose(sim.observed, grid=sim.grid)
    return sim, res


@functools.lru_cache(maxsize=None)
def propagation_run(seed=SEED):
    sim = simkit.simulate_propagation(seed=seed)
    res = pipeline.run_decompose(sim.observed, grid=sim.grid)
    return sim, res


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian_psd(rng, m, rank=None):
    rank = m if rank is None else rank
    A = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
    return A @ A.conj().T
