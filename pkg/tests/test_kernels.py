import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg

from vsgss import kernels
from vsgss.simulate import SimScenario, run_simulation, sim_preset

needs_compiled = pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")


def _random_discrete(rng, n):
    a = rng.normal(size=(n, n))
    a -= (np.max(np.real(np.linalg.eigvals(a))) + 1.0) * np.eye(n)
    dt = 1e-2
    block = np.zeros((n + 1, n + 1))
    block[:n, :n] = a * dt
    block[:n, n] = rng.normal(size=n) * dt
    phi = scipy.linalg.expm(block)
    return phi[:n, :n], phi[:n, n], rng.normal(size=n), float(rng.normal())


def test_zoh_matches_closed_form():
    # first-order lag 1/(s+1): ad = e^-dt, bd = 1 - e^-dt
    dt = 1e-3
    y = kernels.python.zoh_step_series(np.array([[np.exp(-dt)]]), np.array([1 - np.exp(-dt)]),
                                       np.array([1.0]), 0.0, 1000)
    t = dt * np.arange(1001)
    assert np.max(np.abs(y - (1 - np.exp(-t)))) <= 1e-13


@needs_compiled
@pytest.mark.parametrize("n", [1, 3, 7])
def test_zoh_backends_agree(n):
    ad, bd, c, d = _random_discrete(np.random.default_rng(n), n)
    a = kernels.python.zoh_step_series(ad, bd, c, d, 3000)
    b = kernels.compiled.zoh_step_series(ad, bd, c, d, 3000)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


@needs_compiled
def test_rk4_backends_agree():
    sc = sim_preset("Hv2x", t_end=4.0)
    a = run_simulation(sc, backend=kernels.python)
    b = run_simulation(sc, backend=kernels.compiled)
    for name in a.COLUMNS + ("phi_bus", "omega_bus"):
        assert np.max(np.abs(a.column(name) - b.column(name))) <= 1e-12, name


def test_rk4_fourth_order():
    # errors against a fine reference shrink by ~2^4 per halving of dt
    def run(dt):
        return run_simulation(SimScenario(t_end=2.0, dt=dt, bus_freq_filter_tc=1e-2))

    ref = run(1.25e-4)
    errs = []
    for dt, stride in ((2e-3, 16), (1e-3, 8)):
        ts = run(dt)
        errs.append(np.max(np.abs(ts.omega_s - ref.omega_s[::stride])))
    assert 10.0 < errs[0] / errs[1] < 22.0


def test_rk4_reports_divergence():
    states = np.zeros((2001, kernels.N_STATES))
    alg = np.zeros((2001, kernels.N_ALG))
    par = np.ones(20)
    par[3] = -1e-3
    net = np.array([[0.5, 0.5, 0.2j, 0.2j, 0.2j, 0.2j]] * 2, dtype=complex)
    x0 = np.zeros(9)
    x0[2] = 1.0
    for impl in filter(None, (kernels.python, kernels.compiled)):
        n = impl.rk4_simulate(x0, par, net, 2000, 3000, 5e-4, states, alg)
        assert 1 < n < 2001


def test_fallback_selected_by_environment():
    env = dict(os.environ, VSGSS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from vsgss import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_compiled_selected_by_default():
    env = {k: v for k, v in os.environ.items() if k != "VSGSS_PURE_PYTHON"}
    out = subprocess.run([sys.executable, "-c", "from vsgss import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"
