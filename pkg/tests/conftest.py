import functools

import numpy as np
import pytest

from sdrkit.sim import ExperimentConfig, run_experiment

ACCEPTANCE_LINES = []

# One fixed seed for every Monte-Carlo cell shared between test modules.
CELL_SEED = 7
CELL_REPS = 100


@functools.lru_cache(maxsize=None)
def table_cell(setting, law, tuning="fixed", reps=CELL_REPS, seed=CELL_SEED):
    cfg = ExperimentConfig(setting=setting, law=law, tuning=tuning, n_reps=reps, seed=seed)
    return run_experiment(cfg, threads=1)


@pytest.fixture(scope="session")
def cell():
    return table_cell


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_acceptance(number, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
