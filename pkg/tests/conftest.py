import time

import numpy as np
import pytest

from trayport.harness import ExperimentConfig, run_experiment

ACCEPTANCE_SEEDS = (42, 43, 44, 45, 46)
RUN_DURATION = 60.0


@pytest.fixture(scope="session")
def fsc_batch():
    """The five-seed FSC replica batch shared by several acceptance criteria."""
    t0 = time.perf_counter()
    runs = {
        seed: run_experiment(ExperimentConfig(mode="FSC", duration=RUN_DURATION, seed=seed))
        for seed in ACCEPTANCE_SEEDS
    }
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def f_batch():
    t0 = time.perf_counter()
    runs = {
        seed: run_experiment(ExperimentConfig(mode="F", duration=RUN_DURATION, seed=seed))
        for seed in ACCEPTANCE_SEEDS
    }
    return runs, time.perf_counter() - t0
