"""Shared fixtures. The expensive full-device runs are computed once per
session and reused by the module tests and the acceptance suite."""
import math
import time

import numpy as np
import pytest

from holosim.config import resolve
from holosim.device import TransmonSpec
from holosim.scenarios import (SQ_PLOT_INPUTS, cp_design, cp_device, sim_options, sq_device,
                               sq_schedule)
from holosim.simulate import (simulate_process_1q, simulate_process_cp, single_qubit_pair)

RATE = 0.004  # MHz


@pytest.fixture(scope="session")
def cfg():
    return resolve({})[0]


@pytest.fixture(scope="session")
def sq_pair(cfg):
    return sq_device(cfg)


@pytest.fixture(scope="session")
def bare_pair():
    """First pair at d=3 with no decoherence."""
    return single_qubit_pair(TransmonSpec(5000.0, 320.0, 3), TransmonSpec(4500.0, 300.0, 3), 12.0)


@pytest.fixture(scope="session")
def rx_schedule(cfg, sq_pair):
    return sq_schedule(cfg, "rx", sq_pair)


@pytest.fixture(scope="session")
def rz_schedule(cfg, sq_pair):
    return sq_schedule(cfg, "rz", sq_pair)


@pytest.fixture(scope="session")
def cp_setup(cfg):
    pair, outer = cp_device(cfg)
    return pair, outer, cp_design(cfg, pair)


class _Timed:
    def __init__(self, value, seconds):
        self.value = value
        self.seconds = seconds


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return _Timed(out, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def sq_processes(cfg, sq_pair, rx_schedule, rz_schedule):
    """{(gate, decoherence): timed LogicalProcess} at the configured step."""
    out = {}
    for name, sched in (("rx", rx_schedule), ("rz", rz_schedule)):
        for flag in (True, False):
            out[name, flag] = _timed(simulate_process_1q, sched, sq_pair,
                                     **sim_options(cfg, flag))
    return out


@pytest.fixture(scope="session")
def cp_processes(cfg, cp_setup):
    pair, outer, design = cp_setup
    open_run = _timed(simulate_process_cp, design, pair, outer, **sim_options(cfg, True))
    closed_run = _timed(simulate_process_cp, design, pair, outer, **sim_options(cfg, False))
    return {True: open_run, False: closed_run}


@pytest.fixture(scope="session")
def sq_plot_inputs():
    return {k: np.array(v, dtype=complex) for k, v in SQ_PLOT_INPUTS.items()}


def random_unitary(rng, n):
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
