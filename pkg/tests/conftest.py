import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from vsgss.model import default_base_case


def match_error(a, b):
    """Largest relative distance under the best one-to-one pairing of two root sets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert a.size == b.size, (a, b)
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :]) / np.maximum(1.0, np.abs(b))[None, :]
    i, j = linear_sum_assignment(cost)
    return float(cost[i, j].max())


def is_subset(sub, sup, rtol):
    """Every member of ``sub`` matches a distinct member of ``sup``."""
    sub = np.asarray(sub, dtype=complex)
    sup = np.asarray(sup, dtype=complex)
    if sub.size == 0:
        return True
    if sub.size > sup.size:
        return False
    cost = np.abs(sub[:, None] - sup[None, :]) / np.maximum(1.0, np.abs(sup))[None, :]
    i, j = linear_sum_assignment(cost)
    return bool(cost[i, j].max() <= rtol)


@pytest.fixture
def base_cfg():
    return default_base_case()


def random_config(rng, base=None, spread=0.5):
    """Base case with every machine constant scaled by an independent factor in 1 +- spread."""
    base = base or default_base_case()

    def scale(p):
        f = lambda x: x * rng.uniform(1 - spread, 1 + spread)
        return p.replace(H=f(p.H), D=f(p.D), Kp=f(p.Kp), Tp=f(p.Tp), Kq=f(p.Kq), Tq=f(p.Tq), X=f(p.X))

    return base.replace(vsg=scale(base.vsg), sg=scale(base.sg))


def matched_config(base=None):
    base = base or default_base_case()
    return base.replace(vsg=base.sg)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
