from functools import lru_cache

import numpy as np
import pytest

from monopole.config import scenario
from monopole.dynamics import IntegratorConfig, integrate, make_state

ACCEPTANCE_LINES = []


@lru_cache(maxsize=None)
def scenario_run(name, sample_every=1):
    cfg = scenario(name)
    icfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12, t_end=20.0, sample_every=sample_every)
    init = make_state(cfg.r0, cfg.v0, cfg.xi)
    return cfg, init, integrate(init, icfg, cfg.k, cfg.lam)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
