"""Engineering quantities from transfer-function channels."""
from __future__ import annotations

import csv
import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .errors import SingularError
from .ratpoly import PoleZeroSet, RationalFunction, evaluate, minreal

__all__ = [
    "DISPLAY_TOL",
    "ModeClass",
    "ModeReport",
    "StepResponse",
    "pole_zero",
    "classify_modes",
    "find_mode",
    "bode_grid",
    "bode_magnitude",
    "step_response",
    "residue_step_response",
    "dc_gain",
    "settling_time",
    "nearest_zero_distance",
    "write_pz_csv",
    "write_bode_csv",
    "write_step_csv",
    "write_modes_csv",
    "fmt",
]

DISPLAY_TOL = 1e-3
UNSTABLE_RE = 1e-9


def fmt(x: float) -> str:
    """Shortest round-trip float text."""
    return repr(float(x))


def pole_zero(ch: RationalFunction, display_tol: float = DISPLAY_TOL) -> PoleZeroSet:
    if display_tol < 0:
        raise ValueError("display_tol must be >= 0")
    if display_tol > 0:
        ch = minreal(ch, display_tol)
    return PoleZeroSet.from_rational(ch)


class ModeClass(str, enum.Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"
    REAL = "real"
    OTHER = "other"


@dataclass(frozen=True)
class ModeReport:
    pair: complex  # upper member of a conjugate pair, or the real pole
    natural_frequency: float
    damping_ratio: float
    classification: ModeClass

    @classmethod
    def of(cls, pole: complex, classification: ModeClass) -> "ModeReport":
        wn = abs(pole)
        zeta = -pole.real / wn if wn > 0 else 1.0
        return cls(complex(pole), wn, zeta, classification)


def _mode_order(a: ModeReport, b: ModeReport) -> int:
    scale = max(1.0, a.natural_frequency, b.natural_frequency)
    if abs(a.natural_frequency - b.natural_frequency) > 1e-9 * scale:
        return -1 if a.natural_frequency < b.natural_frequency else 1
    for x, y in ((a.damping_ratio, b.damping_ratio), (a.pair.real, b.pair.real), (a.pair.imag, b.pair.imag)):
        if x != y:
            return -1 if x < y else 1
    return 0


def classify_modes(pz) -> list:
    """Label complex pairs by natural-frequency order and list real poles.

    The slowest pair is primary and the fastest secondary; anything in
    between is "other". Real poles come last, ordered by magnitude.
    """
    poles = np.asarray(pz.poles if isinstance(pz, PoleZeroSet) else pz, dtype=complex)
    pairs = [ModeReport.of(p, ModeClass.OTHER) for p in poles if p.imag > 0]
    reals = [ModeReport.of(complex(p.real, 0.0), ModeClass.REAL) for p in poles if p.imag == 0]
    pairs.sort(key=functools.cmp_to_key(_mode_order))
    reals.sort(key=functools.cmp_to_key(_mode_order))
    out = []
    for i, m in enumerate(pairs):
        if i == 0:
            cls = ModeClass.PRIMARY
        elif i == len(pairs) - 1:
            cls = ModeClass.SECONDARY
        else:
            cls = ModeClass.OTHER
        out.append(ModeReport(m.pair, m.natural_frequency, m.damping_ratio, cls))
    return out + reals


def find_mode(modes, classification: ModeClass):
    for m in modes:
        if m.classification is classification:
            return m
    return None


def bode_grid(w_min: float, w_max: float, n: int) -> np.ndarray:
    """Log-spaced grid; going from ``n`` to ``2n - 1`` points keeps every old point bit-identical."""
    if not (w_min > 0 and w_max > w_min):
        raise ValueError("need 0 < w_min < w_max")
    if n < 2:
        raise ValueError("need n >= 2")
    lo, hi = math.log10(w_min), math.log10(w_max)
    k = np.arange(n, dtype=float)
    return 10.0 ** (lo + (hi - lo) * (k / (n - 1)))


def bode_magnitude(ch: RationalFunction, w_min: float, w_max: float, n: int):
    w = bode_grid(w_min, w_max, n)
    with np.errstate(divide="ignore"):
        mag = 20.0 * np.log10(np.abs(evaluate(ch, 1j * w)))
    return w, mag


@dataclass(frozen=True)
class StepResponse:
    time: np.ndarray
    value: np.ndarray
    input_channel: str
    step_size: float
    unstable: bool = False

    def final_value(self) -> float:
        return float(self.value[-1])

    def peak(self) -> float:
        return float(np.max(np.abs(self.value)))


def _grid(t_end: float, dt: float):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > dt:
        raise ValueError("t_end must exceed dt")
    ratio = t_end / dt
    n = int(round(ratio)) if abs(ratio - round(ratio)) <= 1e-9 * ratio else int(math.floor(ratio))
    return n, dt * np.arange(n + 1)


def _canonical(ch: RationalFunction):
    """Controllable canonical realization ``(A, B, C, D)`` of a proper channel."""
    den = ch.den.coeffs  # monic
    n = den.size - 1
    num = np.zeros(n + 1)
    nc = ch.num.coeffs
    num[: nc.size] = nc
    d = num[n]
    c = num[:n] - d * den[:n]
    a = np.zeros((n, n))
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -den[:n]
    b = np.zeros(n)
    b[-1] = 1.0
    return a, b, c, d


def step_response(ch: RationalFunction, step_size: float = 0.05, t_end: float = 30.0,
                  dt: float = 1e-3, input_channel: str = "") -> StepResponse:
    """Exact zero-order-hold step response on a fixed grid."""
    if not ch.is_proper:
        raise ValueError("step response needs a proper channel")
    n_steps, t = _grid(t_end, dt)
    unstable = bool(np.any(ch.poles.real > UNSTABLE_RE))
    if ch.is_zero:
        return StepResponse(t, np.zeros_like(t), input_channel, step_size, unstable)
    a, b, c, d = _canonical(ch)
    n = a.shape[0]
    if n == 0:
        y = np.full(t.shape, d)
    else:
        block = np.zeros((n + 1, n + 1))
        block[:n, :n] = a * dt
        block[:n, n] = b * dt
        phi = scipy.linalg.expm(block)
        y = kernels.zoh_step_series(phi[:n, :n], phi[:n, n], c, d, n_steps)
    return StepResponse(t, step_size * y, input_channel, step_size, unstable)


def residue_step_response(ch: RationalFunction, t, step_size: float = 1.0, min_sep: float = 1e-6):
    """Partial-fraction step response; needs distinct, nonzero poles."""
    t = np.asarray(t, dtype=float)
    p = ch.poles
    if ch.is_zero:
        return np.zeros_like(t)
    if np.any(p == 0):
        raise ValueError("pole at the origin")
    if p.size > 1:
        sep = np.abs(p[:, None] - p[None, :])
        np.fill_diagonal(sep, np.inf)
        if sep.min() <= min_sep:
            raise ValueError("repeated poles; residue oracle does not apply")
    y = np.full(t.shape, dc_gain(ch), dtype=complex)
    for i, pi in enumerate(p):
        others = np.delete(p, i)
        r = ch.gain * np.prod(pi - ch.zeros) / np.prod(pi - others)
        y += (r / pi) * np.exp(pi * t)
    return step_size * y.real


def dc_gain(ch: RationalFunction) -> float:
    if ch.is_zero:
        return 0.0
    if np.any(ch.poles == 0):
        reduced = minreal(ch, 1e-9)
        if np.any(reduced.poles == 0):
            raise SingularError("integrator: den(0) = 0, DC gain undefined")
        ch = reduced
    return float(ch.num.coeffs[0] / ch.den.coeffs[0])


def settling_time(resp: StepResponse, band: float = 0.02) -> float:
    """Last time the response is outside ``band`` of its final value."""
    y = resp.value
    final = y[-1]
    ref = abs(final) if abs(final) > 1e-12 * resp.peak() else resp.peak()
    if ref == 0:
        return 0.0
    outside = np.flatnonzero(np.abs(y - final) > band * ref)
    if outside.size == 0:
        return float(resp.time[0])
    k = outside[-1] + 1
    return float(resp.time[min(k, y.size - 1)])


def nearest_zero_distance(pole: complex, zeros) -> float:
    zeros = np.asarray(zeros, dtype=complex)
    if zeros.size == 0:
        return math.inf
    return float(np.min(np.abs(zeros - pole)))


# -- CSV ---------------------------------------------------------------------

def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_pz_csv(path, pz: PoleZeroSet):
    rows = [(fmt(p.real), fmt(p.imag), "pole") for p in pz.poles]
    rows += [(fmt(z.real), fmt(z.imag), "zero") for z in pz.zeros]
    _write(path, ("re", "im", "kind"), rows)


def write_bode_csv(path, w, mag):
    _write(path, ("omega_rad_s", "mag_db"), [(fmt(a), fmt(b)) for a, b in zip(w, mag)])


def write_step_csv(path, resp: StepResponse):
    _write(path, ("t_s", "value_pu"), [(fmt(a), fmt(b)) for a, b in zip(resp.time, resp.value)])


def write_modes_csv(path, modes):
    _write(path, ("class", "wn", "zeta"),
           [(m.classification.value, fmt(m.natural_frequency), fmt(m.damping_ratio)) for m in modes])
