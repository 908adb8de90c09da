"""Nonlinear phasor-domain simulation of the two-machine system.

Topology per machine: controlled source ``E = v e^{j phi}`` behind the stator
impedance ``R + jX``, a terminal node, a line ``Z_line`` into a common load
node. The load is ``Z_L0``, with ``Z_step`` switched in parallel at
``t_switch``. The network is quasi-static and solved at every integrator
stage; machine powers are measured at the terminal node.

Frequencies are in the units of ``cfg.freq_convention`` (pu deviation by
default); ``omega = 0`` is nominal frequency.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np
import scipy.optimize

from . import kernels
from .analysis import fmt, step_response
from .errors import ConfigError, ConvergenceError, IntegrationError, SingularError, UnsettledWindowError
from .model import Dispatch, OperatingPoint, SystemConfig, config_from_dict, config_to_dict, default_base_case
from .tfbuild import Target, TransferMatrix

__all__ = [
    "SimScenario",
    "SimState",
    "NetworkSolution",
    "Initialization",
    "TimeSeries",
    "ExtractedPoint",
    "SignalDeviation",
    "DeviationReport",
    "solve_network",
    "size_load",
    "initialize",
    "run_simulation",
    "extract_operating_point",
    "compare_with_linear",
    "effective_load_step",
    "band_content",
    "derivatives",
    "scenario_to_dict",
    "scenario_from_dict",
    "load_scenario",
    "dump_scenario",
    "write_timeseries_csv",
    "SIM_PRESETS",
    "sim_preset",
    "TIMESERIES_HEADER",
]

Z_LINE = complex(0.0054, 0.0076)
INIT_TOL = 1e-13
ZERO_SIGNAL = 1e-12  # deviations below this count as no response, pu
SETTLED_RATE = 1e-6  # max |d signal / dt| inside an averaging window, pu/s
TIMESERIES_HEADER = ("t_s", "omega_v_pu", "omega_s_pu", "v_v_pu", "v_s_pu",
                     "p_v_pu", "q_v_pu", "p_s_pu", "q_s_pu", "v_bus_pu")


@dataclass(frozen=True)
class SimScenario:
    """Simulation setup.

    ``z_load0=None`` sizes the pre-step load so the terminal powers equal the
    dispatch at ``|V_b| = v_b0``. ``z_load_step=None`` sizes the switched
    branch to draw ``delta_s_load`` at the pre-switch bus voltage. Explicit
    impedances take precedence over the targets.
    """

    cfg: SystemConfig = field(default_factory=default_base_case)
    z_line: complex = Z_LINE
    z_load0: complex | None = None
    z_load_step: complex | None = None
    delta_s_load: complex = complex(0.02, 0.02)
    t_switch: float = 1.0
    t_end: float = 20.0
    dt: float = 5e-4
    bus_freq_filter_tc: float = 1e-3
    close_switch: bool = True

    def __post_init__(self):
        for name in ("z_line", "z_load0", "z_load_step", "delta_s_load"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, complex(v))
        for name in ("t_switch", "t_end", "dt", "bus_freq_filter_tc"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("must be positive", path="dt")
        if not (0 < self.t_switch < self.t_end and math.isfinite(self.t_end)):
            raise ConfigError("need 0 < t_switch < t_end", path="t_switch")
        if not self.bus_freq_filter_tc > 0:
            raise ConfigError("must be positive", path="bus_freq_filter_tc")
        if self.z_line.real < 0:
            raise ConfigError("negative resistance", path="z_line")
        for name in ("z_load0", "z_load_step"):
            z = getattr(self, name)
            if z is not None and (z.real < 0 or z == 0 or not np.isfinite(z)):
                raise ConfigError("need Re >= 0 and nonzero magnitude", path=name)
        if self.z_load_step is None and self.delta_s_load == 0 and self.close_switch:
            raise ConfigError("zero load step needs close_switch=false", path="delta_s_load")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def k_switch(self) -> int:
        """Index of the first sample on the closed-switch network."""
        if not self.close_switch:
            return self.n_steps + 1
        return int(round(self.t_switch / self.dt))


@dataclass(frozen=True)
class SimState:
    """Integrator state unpacked from the kernel layout."""

    omega_v: float
    phi_v: float
    gov_v: float
    qv_v: float
    omega_s: float
    phi_s: float
    gov_s: float
    qv_s: float
    bus_filter: float

    @classmethod
    def from_array(cls, x) -> "SimState":
        return cls(*(float(v) for v in x))

    def to_array(self) -> np.ndarray:
        return np.array([self.omega_v, self.phi_v, self.gov_v, self.qv_v,
                         self.omega_s, self.phi_s, self.gov_s, self.qv_s, self.bus_filter])


@dataclass(frozen=True)
class _Branches:
    z_st_v: complex
    z_st_s: complex
    z_line: complex
    y_load: complex

    @property
    def zb_v(self):
        return self.z_st_v + self.z_line

    @property
    def zb_s(self):
        return self.z_st_s + self.z_line

    def weights(self):
        yv, ys = 1.0 / self.zb_v, 1.0 / self.zb_s
        total = yv + ys + self.y_load
        if abs(total) <= 1e-12 * (abs(yv) + abs(ys) + abs(self.y_load)):
            raise SingularError("singular network: nodal admittance vanishes")
        return yv / total, ys / total

    def kernel_row(self):
        wv, ws = self.weights()
        return [wv, ws, self.zb_v, self.z_st_v, self.zb_s, self.z_st_s]


def _branches(cfg: SystemConfig, z_line, z_load0, z_load_step, switch_closed) -> _Branches:
    if z_load0 is None or z_load0 == 0:
        raise SingularError("load impedance must be nonzero")
    y = 1.0 / complex(z_load0)
    if switch_closed:
        if z_load_step is None or z_load_step == 0:
            raise SingularError("switched impedance must be nonzero")
        y += 1.0 / complex(z_load_step)
    return _Branches(complex(cfg.vsg.R, cfg.vsg.X), complex(cfg.sg.R, cfg.sg.X), complex(z_line), y)


@dataclass(frozen=True)
class NetworkSolution:
    v_terminal_v: complex
    v_terminal_s: complex
    v_bus: complex
    i_v: complex
    i_s: complex
    s_v: complex  # terminal-node power of the VSG, p + jq
    s_s: complex
    residual: float  # current mismatch at the load node


def solve_network(e_v: complex, e_s: complex, cfg: SystemConfig, z_line, z_load0,
                  z_load_step=None, switch_closed: bool = False) -> NetworkSolution:
    """Node voltages and terminal powers for given internal source phasors."""
    br = _branches(cfg, z_line, z_load0, z_load_step, switch_closed)
    wv, ws = br.weights()
    vb = wv * e_v + ws * e_s
    i_v = (e_v - vb) / br.zb_v
    i_s = (e_s - vb) / br.zb_s
    vt_v = e_v - br.z_st_v * i_v
    vt_s = e_s - br.z_st_s * i_s
    resid = abs(i_v + i_s - br.y_load * vb)
    return NetworkSolution(vt_v, vt_s, vb, i_v, i_s, vt_v * i_v.conjugate(), vt_s * i_s.conjugate(), resid)


# -- initialization -----------------------------------------------------------

@dataclass(frozen=True)
class Initialization:
    x0: np.ndarray
    p_r: tuple  # governor setpoints (vsg, sg)
    q_r: tuple
    v_r: tuple
    z_load0: complex
    z_load_step: complex
    v_bus: complex
    s_v: complex
    s_s: complex
    load_sized: bool


def _root(fun, guess, what):
    sol = scipy.optimize.root(fun, guess, method="hybr", options={"xtol": 1e-15})
    res = np.max(np.abs(fun(sol.x)))
    if not (sol.success or res < INIT_TOL) or not res < 1e-10:
        raise ConvergenceError(f"{what}: initialization did not converge (residual {res:.3e})",
                               residual=float(res))
    return sol.x


def _branch_current(s, v_b, z_line):
    """Current ``I`` with ``(v_b + z_line I) conj(I) = s`` for real ``v_b``."""
    def f(x):
        i = complex(x[0], x[1])
        r = (v_b + z_line * i) * i.conjugate() - s
        return [r.real, r.imag]

    x = _root(f, [s.real / v_b, -s.imag / v_b], "branch current")
    return complex(x[0], x[1])


def size_load(cfg: SystemConfig, z_line=Z_LINE):
    """Pre-step load impedance that makes the terminal powers equal the dispatch.

    Returns ``(z_load0, i_v, i_s)`` with the load-node voltage at ``v_b0``.
    """
    d = cfg.dispatch
    i_v = _branch_current(complex(d.p_v0, d.q_v0), d.v_b0, complex(z_line))
    i_s = _branch_current(complex(d.p_s0, d.q_s0), d.v_b0, complex(z_line))
    total = i_v + i_s
    if total == 0:
        raise SingularError("dispatch draws no load current")
    return d.v_b0 / total, i_v, i_s


def _explicit_currents(cfg: SystemConfig, z_line, z_load0):
    """Branch currents for a fixed load: reactive setpoints and the active split are held."""
    d = cfg.dispatch
    zl = complex(z_line)

    def f(x):
        i_v, i_s = complex(x[0], x[1]), complex(x[2], x[3])
        vb = z_load0 * (i_v + i_s)
        s_v = (vb + zl * i_v) * i_v.conjugate()
        s_s = (vb + zl * i_s) * i_s.conjugate()
        return [vb.imag, s_v.imag - d.q_v0, s_s.imag - d.q_s0,
                (s_v.real - s_s.real) - (d.p_v0 - d.p_s0)]

    vb = d.v_b0
    guess = [d.p_v0 / vb, -d.q_v0 / vb, d.p_s0 / vb, -d.q_s0 / vb]
    x = _root(f, guess, "fixed-load operating point")
    i_v, i_s = complex(x[0], x[1]), complex(x[2], x[3])
    v_bus = z_load0 * (i_v + i_s)
    if v_bus.real <= 0:
        raise ConvergenceError("fixed-load operating point has a reversed bus voltage")
    return i_v, i_s


def initialize(scenario: SimScenario) -> Initialization:
    """Exact switch-open equilibrium with the common-bus angle at zero.

    With a sized load every setpoint equals the dispatch. With an explicit
    ``z_load0`` the four power targets cannot all be met (the load fixes the
    total), so the reactive setpoints and the active split are held and the
    governor setpoints are trimmed to the resulting terminal powers; the
    frequency equilibrium is then exactly nominal.
    """
    cfg = scenario.cfg
    zl = scenario.z_line
    if scenario.z_load0 is None:
        z0, i_v, i_s = size_load(cfg, zl)
        sized = True
    else:
        z0 = scenario.z_load0
        i_v, i_s = _explicit_currents(cfg, zl, z0)
        sized = False
    v_bus = z0 * (i_v + i_s)
    v_bus = complex(abs(v_bus), 0.0) if abs(v_bus.imag) < 1e-12 else v_bus
    e_v = v_bus + (zl + complex(cfg.vsg.R, cfg.vsg.X)) * i_v
    e_s = v_bus + (zl + complex(cfg.sg.R, cfg.sg.X)) * i_s
    net = solve_network(e_v, e_s, cfg, zl, z0)
    if scenario.z_load_step is not None:
        z_step = scenario.z_load_step
    elif scenario.delta_s_load != 0:
        z_step = abs(net.v_bus) ** 2 / scenario.delta_s_load.conjugate()
    else:
        z_step = complex(1e12, 0.0)  # never switched in
    d = cfg.dispatch
    q_r = (d.q_v0, d.q_s0)
    p_r = (d.p_v0, d.p_s0) if sized else (net.s_v.real, net.s_s.real)
    v_r = (abs(e_v), abs(e_s))
    phi_b = math.atan2(net.v_bus.imag, net.v_bus.real)
    x0 = SimState(0.0, math.atan2(e_v.imag, e_v.real), p_r[0], 0.0,
                  0.0, math.atan2(e_s.imag, e_s.real), p_r[1], 0.0, phi_b).to_array()
    init = Initialization(x0, p_r, q_r, v_r, complex(z0), complex(z_step), net.v_bus,
                          net.s_v, net.s_s, sized)
    # seed the washout with the kernel's own bus-angle expression so rounding
    # differences are not amplified by 1 / bus_freq_filter_tc
    par = _kernel_params(cfg, init, scenario.bus_freq_filter_tc)
    row = tuple(_branches(cfg, zl, z0, z_step, False).kernel_row())
    alg = [0.0] * kernels.N_ALG
    kernels.python._stage(list(x0), list(par), row, [0.0] * kernels.N_STATES, alg)
    x0[8] = alg[5]
    return init


def _kernel_params(cfg: SystemConfig, init: Initialization, tau: float) -> np.ndarray:
    par = []
    for i, m in enumerate((cfg.vsg, cfg.sg)):
        par += [cfg.momentum(m), m.D, m.Kp, m.Tp, m.Kq, m.Tq, init.p_r[i], init.q_r[i], init.v_r[i]]
    par += [cfg.angle_scale, tau]
    return np.array(par, dtype=float)


def derivatives(scenario: SimScenario, x, init: Initialization | None = None,
                switch_closed: bool = False) -> np.ndarray:
    """Right-hand side of the simulator ODE (Python kernel) at state ``x``."""
    init = init or initialize(scenario)
    par = _kernel_params(scenario.cfg, init, scenario.bus_freq_filter_tc)
    row = tuple(_branches(scenario.cfg, scenario.z_line, init.z_load0, init.z_load_step,
                          switch_closed).kernel_row())
    out = [0.0] * kernels.N_STATES
    kernels.python._stage(list(np.asarray(x, dtype=float)), list(par), row, out)
    return np.array(out)


# -- integration ---------------------------------------------------------------

@dataclass
class TimeSeries:
    """Sampled simulator output on a uniform grid.

    ``theta_*`` are machine angles relative to the common bus and ``phi_bus``
    is the unwrapped bus angle (zero at ``t = 0``).
    """

    t: np.ndarray
    omega_v: np.ndarray
    omega_s: np.ndarray
    v_v: np.ndarray
    v_s: np.ndarray
    p_v: np.ndarray
    q_v: np.ndarray
    p_s: np.ndarray
    q_s: np.ndarray
    v_bus: np.ndarray
    theta_v: np.ndarray
    theta_s: np.ndarray
    phi_bus: np.ndarray
    omega_bus: np.ndarray
    dt: float
    t_switch: float
    k_switch: int
    init: Initialization | None = None
    backend: str = ""

    COLUMNS = ("omega_v", "omega_s", "v_v", "v_s", "p_v", "q_v", "p_s", "q_s", "v_bus")

    def __post_init__(self):
        n = self.t.size
        for name in self.COLUMNS + ("theta_v", "theta_s", "phi_bus", "omega_bus"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name} has length {getattr(self, name).size}, expected {n}")

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def load_power(self) -> np.ndarray:
        """Complex power drawn by the whole load at every sample."""
        if self.init is None:
            raise ValueError("time series carries no impedance data")
        y0 = 1.0 / self.init.z_load0
        ys = 1.0 / self.init.z_load_step
        y = np.where(np.arange(self.t.size) >= self.k_switch, y0 + ys, y0)
        return self.v_bus**2 * np.conj(y)

    def step_branch_power(self) -> complex:
        """Power drawn by the switched branch at the first closed-switch sample."""
        if self.init is None or self.k_switch >= self.t.size:
            raise ValueError("switch never closed")
        return complex(self.v_bus[self.k_switch] ** 2 / np.conj(self.init.z_load_step))


def run_simulation(scenario: SimScenario, backend=None) -> TimeSeries:
    """Integrate from the exact equilibrium; the switch closes at ``t_switch``.

    ``backend`` is a kernel module (``kernels.python`` or ``kernels.compiled``);
    the default is whichever :mod:`vsgss.kernels` selected.
    """
    init = initialize(scenario)
    cfg = scenario.cfg
    par = _kernel_params(cfg, init, scenario.bus_freq_filter_tc)
    net = np.array([
        _branches(cfg, scenario.z_line, init.z_load0, init.z_load_step, False).kernel_row(),
        _branches(cfg, scenario.z_line, init.z_load0, init.z_load_step, True).kernel_row(),
    ], dtype=complex)
    n = scenario.n_steps
    states = np.zeros((n + 1, kernels.N_STATES))
    alg = np.zeros((n + 1, kernels.N_ALG))
    impl = backend if backend is not None else kernels
    written = impl.rk4_simulate(init.x0, par, net, n, scenario.k_switch, scenario.dt, states, alg)
    t = scenario.dt * np.arange(n + 1)
    if written < n + 1:
        t_last = float(t[written - 1])
        raise IntegrationError(f"state diverged after t = {t_last:.6g} s", t_last=t_last)
    s = states
    name = getattr(impl, "BACKEND", None) or ("cython" if impl is kernels.compiled else "python")
    return TimeSeries(
        t=t,
        omega_v=s[:, 0].copy(), omega_s=s[:, 4].copy(),
        v_v=init.v_r[0] + s[:, 3], v_s=init.v_r[1] + s[:, 7],
        p_v=alg[:, 0].copy(), q_v=alg[:, 1].copy(), p_s=alg[:, 2].copy(), q_s=alg[:, 3].copy(),
        v_bus=alg[:, 4].copy(),
        theta_v=s[:, 1] - alg[:, 5], theta_s=s[:, 5] - alg[:, 5],
        phi_bus=alg[:, 5].copy(), omega_bus=alg[:, 6].copy(),
        dt=scenario.dt, t_switch=scenario.k_switch * scenario.dt, k_switch=scenario.k_switch,
        init=init, backend=name,
    )


# -- operating point extraction and comparison ------------------------------------

@dataclass(frozen=True)
class ExtractedPoint:
    op: OperatingPoint
    s_v: complex  # measured terminal powers, window averages
    s_s: complex
    window: tuple
    max_rate: float

    def dispatch(self) -> Dispatch:
        """Measured powers and bus voltage as a dispatch record."""
        return Dispatch(self.s_v.real, self.s_v.imag, self.s_s.real, self.s_s.imag, self.op.v_b0)


def extract_operating_point(ts: TimeSeries, window=None) -> ExtractedPoint:
    """Average the pre-switch window into an operating point.

    The default window is every sample strictly before the switch.
    """
    t_sw = ts.t_switch if ts.k_switch < ts.t.size else math.inf
    if window is None:
        idx = np.arange(min(ts.k_switch, ts.t.size))
    else:
        t0, t1 = float(window[0]), float(window[1])
        if not t0 < t1:
            raise UnsettledWindowError(f"empty window [{t0}, {t1}]")
        if t1 >= t_sw - 0.5 * ts.dt:
            raise UnsettledWindowError(f"window [{t0}, {t1}] reaches the switch at t = {t_sw} s")
        idx = np.flatnonzero((ts.t >= t0 - 0.5 * ts.dt) & (ts.t <= t1 + 0.5 * ts.dt))
    if idx.size < 2:
        raise UnsettledWindowError("window holds fewer than two samples")
    rate = 0.0
    for name in TimeSeries.COLUMNS + ("theta_v", "theta_s"):
        y = ts.column(name)[idx]
        rate = max(rate, float(np.max(np.abs(np.diff(y)))) / ts.dt)
    if rate > SETTLED_RATE:
        raise UnsettledWindowError(f"signals still moving in window (max rate {rate:.3e} pu/s)")
    op = OperatingPoint(
        v_v0=float(np.mean(ts.v_v[idx])), v_s0=float(np.mean(ts.v_s[idx])),
        theta_v0=float(np.mean(ts.theta_v[idx])), theta_s0=float(np.mean(ts.theta_s[idx])),
        v_b0=float(np.mean(ts.v_bus[idx])),
    )
    s_v = complex(np.mean(ts.p_v[idx]), np.mean(ts.q_v[idx]))
    s_s = complex(np.mean(ts.p_s[idx]), np.mean(ts.q_s[idx]))
    return ExtractedPoint(op, s_v, s_s, (float(ts.t[idx[0]]), float(ts.t[idx[-1]])), rate)


def effective_load_step(ts: TimeSeries, tail: float = 1.0) -> complex:
    """Settled change in total load power caused by the switch.

    An impedance load draws ``|V_b|^2 conj(Y)``, so the bus-voltage sag after
    the switch lowers the base load's consumption and the realised step is
    smaller than the switched branch's nominal power. Averages the last
    ``tail`` seconds of the run against the last pre-switch sample.
    """
    k = ts.k_switch
    if k >= ts.t.size - 1:
        raise ValueError("switch never closed")
    s = ts.load_power()
    n_tail = max(1, int(round(tail / ts.dt)))
    if n_tail > ts.t.size - k:
        raise ValueError("tail window reaches before the switch")
    return complex(np.mean(s[-n_tail:]) - s[k - 1])


def band_content(t, y, w_lo: float, w_hi: float) -> float:
    """RMS amplitude of ``y`` carried by angular frequencies in ``[w_lo, w_hi]`` rad/s."""
    y = np.asarray(y, dtype=float) - np.mean(y)
    dt = float(t[1] - t[0])
    spec = np.fft.rfft(y)
    w = 2.0 * np.pi * np.fft.rfftfreq(y.size, dt)
    sel = (w >= w_lo) & (w <= w_hi)
    return float(np.sqrt(2.0 * np.sum(np.abs(spec[sel]) ** 2)) / y.size)


@dataclass(frozen=True)
class SignalDeviation:
    max_abs: float
    peak_linear: float
    peak_sim: float

    @property
    def normalized(self) -> float:
        if self.peak_linear == 0:
            return 0.0 if self.max_abs <= ZERO_SIGNAL else math.inf
        return self.max_abs / self.peak_linear

    def to_dict(self) -> dict:
        return {"max_abs_dev_pu": self.max_abs, "peak_linear_pu": self.peak_linear,
                "peak_sim_pu": self.peak_sim, "normalized_dev": self.normalized}


@dataclass
class DeviationReport:
    omega: SignalDeviation
    voltage: SignalDeviation
    step: tuple
    target: str
    resampled: bool
    t: np.ndarray = field(repr=False, default=None)
    sim_omega: np.ndarray = field(repr=False, default=None)
    lin_omega: np.ndarray = field(repr=False, default=None)
    sim_voltage: np.ndarray = field(repr=False, default=None)
    lin_voltage: np.ndarray = field(repr=False, default=None)

    def worst(self) -> float:
        return max(self.omega.normalized, self.voltage.normalized)

    def passes(self, threshold: float = 0.10) -> bool:
        return self.worst() <= threshold

    def to_dict(self) -> dict:
        return {"target": self.target, "step_pu": list(self.step), "resampled": self.resampled,
                "omega": self.omega.to_dict(), "voltage": self.voltage.to_dict()}


def _deviation(sim, lin) -> SignalDeviation:
    return SignalDeviation(float(np.max(np.abs(sim - lin))), float(np.max(np.abs(lin))),
                           float(np.max(np.abs(sim))))


def compare_with_linear(ts: TimeSeries, tf: TransferMatrix, step) -> DeviationReport:
    """Post-switch deviations of the target machine against superposed linear step responses."""
    dp, dq = (float(step[0]), float(step[1]))
    k = ts.k_switch
    if k >= ts.t.size - 1:
        raise ValueError("time series has no post-switch samples")
    if tf.target is Target.SG:
        w, v = ts.omega_s, ts.v_s
    else:
        w, v = ts.omega_v, ts.v_v
    t_rel = ts.t[k:] - ts.t[k]
    sim_w = w[k:] - w[k]
    sim_v = v[k:] - v[k]
    t_end = float(t_rel[-1])

    def lin(name, size):
        if size == 0:
            return np.zeros_like(t_rel), False
        r = step_response(tf[name], size, t_end, ts.dt)
        if r.time.size == t_rel.size and np.allclose(r.time, t_rel, rtol=0, atol=1e-9 * ts.dt):
            return r.value, False
        return np.interp(t_rel, r.time, r.value), True

    parts = [lin("p_to_w", dp), lin("q_to_w", dq), lin("p_to_v", dp), lin("q_to_v", dq)]
    lin_w = parts[0][0] + parts[1][0]
    lin_v = parts[2][0] + parts[3][0]
    resampled = any(p[1] for p in parts)
    return DeviationReport(_deviation(sim_w, lin_w), _deviation(sim_v, lin_v), (dp, dq),
                           tf.target.value, resampled, t_rel, sim_w, lin_w, sim_v, lin_v)


# -- serialization -----------------------------------------------------------------

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "config": {"type": "object"},
        "z_line_pu": _COMPLEX,
        "z_load0_pu": {"oneOf": [_COMPLEX, {"type": "null"}]},
        "z_load_step_pu": {"oneOf": [_COMPLEX, {"type": "null"}]},
        "delta_s_load_pu": _COMPLEX,
        "t_switch_s": {"type": "number"},
        "t_end_s": {"type": "number"},
        "dt_s": {"type": "number"},
        "bus_freq_filter_tc_s": {"type": "number"},
        "close_switch": {"type": "boolean"},
        "preset": {"type": "string"},
    },
    "additionalProperties": False,
}


def _cx(z):
    return None if z is None else [z.real, z.imag]


def scenario_to_dict(sc: SimScenario) -> dict:
    return {
        "config": config_to_dict(sc.cfg),
        "z_line_pu": _cx(sc.z_line),
        "z_load0_pu": _cx(sc.z_load0),
        "z_load_step_pu": _cx(sc.z_load_step),
        "delta_s_load_pu": _cx(sc.delta_s_load),
        "t_switch_s": sc.t_switch,
        "t_end_s": sc.t_end,
        "dt_s": sc.dt,
        "bus_freq_filter_tc_s": sc.bus_freq_filter_tc,
        "close_switch": sc.close_switch,
    }


def scenario_from_dict(doc: dict) -> SimScenario:
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or None
        raise ConfigError(exc.message, path=path) from None
    base = sim_preset(doc["preset"]) if "preset" in doc else SimScenario()

    def cx(key, default):
        if key not in doc:
            return default
        v = doc[key]
        return None if v is None else complex(v[0], v[1])

    cfg = config_from_dict(doc["config"]) if "config" in doc else base.cfg
    return SimScenario(
        cfg=cfg,
        z_line=cx("z_line_pu", base.z_line),
        z_load0=cx("z_load0_pu", base.z_load0),
        z_load_step=cx("z_load_step_pu", base.z_load_step),
        delta_s_load=cx("delta_s_load_pu", base.delta_s_load),
        t_switch=doc.get("t_switch_s", base.t_switch),
        t_end=doc.get("t_end_s", base.t_end),
        dt=doc.get("dt_s", base.dt),
        bus_freq_filter_tc=doc.get("bus_freq_filter_tc_s", base.bus_freq_filter_tc),
        close_switch=doc.get("close_switch", base.close_switch),
    )


def load_scenario(text: str) -> SimScenario:
    import json

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def dump_scenario(sc: SimScenario) -> str:
    import json

    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n"


def write_timeseries_csv(path, ts: TimeSeries):
    cols = [ts.t] + [ts.column(c) for c in TimeSeries.COLUMNS]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])


# -- presets -------------------------------------------------------------------------

def _preset_cfgs():
    base = default_base_case()
    vsg = base.vsg
    return {
        "base": (base, complex(0.02, 0.02)),
        "Hv2x": (base.with_vsg(H=2.0 * vsg.H), complex(0.02, 0.02)),
        "Xv1.4x": (base.with_vsg(X=1.4 * vsg.X), complex(0.02, 0.02)),
        "XR3": (base.with_vsg(R=vsg.X / 3.0), complex(0.02, 0.02)),
        "alt_dispatch": (base.replace(dispatch=Dispatch(0.5, 0.25, 0.5, 0.25, 1.0)), complex(0.04, 0.04)),
    }


SIM_PRESETS = ("base", "Hv2x", "Xv1.4x", "XR3", "alt_dispatch")


def sim_preset(name: str, **changes) -> SimScenario:
    """Case-study scenario with the load sized from the dispatch and step target."""
    cfgs = _preset_cfgs()
    if name not in cfgs:
        raise ConfigError(f"unknown simulation preset {name!r}; choose from {', '.join(SIM_PRESETS)}")
    cfg, ds = cfgs[name]
    return SimScenario(cfg=cfg, delta_s_load=ds, **changes)
