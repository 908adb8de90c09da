"""Single-parameter sensitivity sweeps over the VSG and automated trend checks."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from .model import SystemConfig, config_to_dict, default_base_case
from .powerflow import solve_operating_point
from .tfbuild import CHANNELS, Target, TransferMatrix, build_transfer_matrix

__all__ = [
    "PARAMETERS",
    "SweepSpec",
    "TrendVerdict",
    "ChannelAnalysis",
    "PointResult",
    "SweepResult",
    "point_config",
    "run_sweep",
    "preset_sweeps",
    "preset",
    "write_sweep",
    "TREND_CHECKS",
]

PARAMETERS = ("Hv", "Tpv", "XRv", "Dv", "Kqv", "Tqv", "Xv")
_FIELD = {"Hv": "H", "Tpv": "Tp", "Dv": "D", "Kqv": "Kq", "Tqv": "Tq", "Xv": "X"}
ALL_OUTPUTS = ("pz", "bode", "step", "modes")

BODE_RANGE = (1e-2, 1e3, 401)
STEP_SIZE = 0.05
STEP_T_END = 30.0
STEP_DT = 1e-3


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    base: SystemConfig = field(default_factory=default_base_case)
    recompute_op: bool = False
    channels: tuple = tuple(CHANNELS)
    outputs: tuple = ALL_OUTPUTS
    target: Target = Target.SG

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep values must be nonempty")
        if self.parameter == "XRv":
            if any(not v > 0 for v in values):
                raise ValueError("X/R ratios must be > 0 (use inf for R = 0)")
        elif any(math.isinf(v) or math.isnan(v) for v in values):
            raise ValueError("sweep values must be finite")
        diffs = np.diff(np.array(values))
        if diffs.size and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep values must be strictly monotone")
        for ch in self.channels:
            if ch not in CHANNELS:
                raise ValueError(f"unknown channel {ch!r}")
        for out in self.outputs:
            if out not in ALL_OUTPUTS:
                raise ValueError(f"unknown output {out!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "target", Target(self.target))
        if self.parameter == "Xv":
            object.__setattr__(self, "recompute_op", True)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "values": [v if math.isfinite(v) else "inf" for v in self.values],
            "base": config_to_dict(self.base),
            "recompute_op": self.recompute_op,
            "channels": list(self.channels),
            "outputs": list(self.outputs),
            "target": self.target.value,
        }


def _json_scalar(e):
    if e is None:
        return None
    e = float(e)
    return e if math.isfinite(e) else "inf"


@dataclass(frozen=True)
class TrendVerdict:
    claim_id: str
    holds: bool
    evidence: list
    detail: str = ""

    def to_dict(self) -> dict:
        ev = [_json_scalar(e) for e in self.evidence]
        return {"claim_id": self.claim_id, "holds": self.holds, "evidence": ev, "detail": self.detail}


@dataclass
class ChannelAnalysis:
    pz: object
    modes: list
    bode: tuple | None = None
    step: an.StepResponse | None = None


@dataclass
class PointResult:
    value: float
    config: SystemConfig
    tm: TransferMatrix | None = None
    analyses: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class SweepResult:
    spec: SweepSpec
    points: list
    verdicts: list

    @property
    def failures(self) -> list:
        return [(p.value, p.error) for p in self.points if p.error]

    @property
    def all_hold(self) -> bool:
        return all(v.holds for v in self.verdicts)


def point_config(spec: SweepSpec, value: float) -> SystemConfig:
    """Base configuration with only the VSG parameter under study changed."""
    base = spec.base
    if spec.parameter == "XRv":
        R = 0.0 if math.isinf(value) else base.vsg.X / value
        return base.with_vsg(R=R)
    changes = {_FIELD[spec.parameter]: value}
    if spec.parameter == "Dv":
        changes["H"] = 2.0 * base.vsg.H
    return base.with_vsg(**changes)


def _analyse_point(spec: SweepSpec, value: float, base_op) -> PointResult:
    cfg = point_config(spec, value)
    res = PointResult(value, cfg)
    try:
        op = solve_operating_point(cfg) if spec.recompute_op else base_op
        res.tm = build_transfer_matrix(cfg, op, spec.target)
        for name in spec.channels:
            ch = res.tm[name]
            pz = an.pole_zero(ch, an.DISPLAY_TOL)
            ca = ChannelAnalysis(pz, an.classify_modes(pz))
            if "bode" in spec.outputs:
                ca.bode = an.bode_magnitude(ch, *BODE_RANGE)
            if "step" in spec.outputs:
                ca.step = an.step_response(ch, STEP_SIZE, STEP_T_END, STEP_DT, name)
            res.analyses[name] = ca
    except Exception as exc:  # recorded per point, the sweep continues
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _analyse_star(args):
    return _analyse_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Analyse every sweep point and evaluate the registered trend checks.

    Points that fail are recorded with their error and the sweep continues.
    Results follow ``spec.values`` order.
    """
    base_op = solve_operating_point(spec.base)
    jobs = [(spec, v, base_op) for v in spec.values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_analyse_star, jobs))
    else:
        points = [_analyse_point(*j) for j in jobs]
    verdicts = [v for check in TREND_CHECKS.get(spec.parameter, ()) for v in check(spec, points)]
    return SweepResult(spec, points, verdicts)


# ---------------------------------------------------------------------------
# trend checks


def _mode(point, channel, cls):
    ca = point.analyses.get(channel)
    if ca is None:
        return None
    return an.find_mode(ca.modes, cls)


def _strict(series, direction):
    """``direction`` +1 for strictly increasing, -1 for strictly decreasing."""
    d = np.diff(np.asarray(series, dtype=float))
    return bool(np.all(direction * d > 0))


def _monotone(claim, spec, points, extract, direction, what):
    ev = [None if p.error else extract(p) for p in points]
    if any(e is None for e in ev):
        missing = [fmt_value(p.value) for p, e in zip(points, ev) if e is None]
        return TrendVerdict(claim, False, ev, f"{what} absent at {', '.join(missing)}")
    ok = _strict(ev, direction)
    word = "increasing" if direction > 0 else "decreasing"
    return TrendVerdict(claim, ok, ev, f"{what} strictly {word} in {spec.parameter}: {ok}")


def _attr(channel, cls, fn):
    def get(p):
        m = _mode(p, channel, cls)
        return None if m is None else fn(m)

    return get


def _unchanged_poles(claim, points, poles_of, rtol, what):
    from scipy.optimize import linear_sum_assignment

    sets = [None if p.error else poles_of(p) for p in points]
    if any(s is None for s in sets):
        return TrendVerdict(claim, False, [None if s is None else len(s) for s in sets], f"{what} absent")
    ref = sets[0]
    ev = []
    for s in sets:
        if s.size != ref.size:
            ev.append(math.inf)
            continue
        if s.size == 0:
            ev.append(0.0)
            continue
        cost = np.abs(s[:, None] - ref[None, :]) / np.maximum(1.0, np.abs(ref))[None, :]
        i, j = linear_sum_assignment(cost)
        ev.append(float(cost[i, j].max()))
    ok = all(e <= rtol for e in ev)
    return TrendVerdict(claim, ok, ev, f"max relative deviation of {what} from the first point <= {rtol:g}: {ok}")


def _primary_pair(channel):
    def get(p):
        m = _mode(p, channel, an.ModeClass.PRIMARY)
        return None if m is None else np.array([m.pair, m.pair.conjugate()])

    return get


def _secondary_mismatch(channel):
    def get(p):
        m = _mode(p, channel, an.ModeClass.SECONDARY)
        if m is None:
            return None
        return an.nearest_zero_distance(m.pair, p.analyses[channel].pz.zeros)

    return get


def check_hv(spec, points):
    out = [
        _monotone("hv_primary_damping_up", spec, points,
                  _attr("p_to_w", an.ModeClass.PRIMARY, lambda m: m.damping_ratio), +1, "primary damping ratio"),
        _monotone("hv_primary_wn_down", spec, points,
                  _attr("p_to_w", an.ModeClass.PRIMARY, lambda m: m.natural_frequency), -1, "primary natural frequency"),
        _monotone("hv_secondary_wn_down", spec, points,
                  _attr("p_to_w", an.ModeClass.SECONDARY, lambda m: m.natural_frequency), -1,
                  "secondary natural frequency"),
        _monotone("hv_secondary_damping_down", spec, points,
                  _attr("p_to_w", an.ModeClass.SECONDARY, lambda m: m.damping_ratio), -1, "secondary damping ratio"),
        _monotone("hv_qw_secondary_decay_slower", spec, points,
                  _attr("q_to_w", an.ModeClass.SECONDARY, lambda m: -m.pair.real), -1,
                  "q_to_w secondary |Re|"),
    ]
    dist = [None if p.error else _secondary_mismatch("p_to_w")(p) for p in points]
    h_s = spec.base.sg.H
    at = [i for i, p in enumerate(points) if abs(p.value - h_s) <= 1e-12 * max(1.0, h_s)]
    if not at or any(d is None for d in dist):
        out.append(TrendVerdict("hv_cancellation_best_at_hs", False, dist,
                                "grid lacks H_v = H_s or a secondary pair is absent"))
    else:
        k = at[0]
        ok = all(dist[k] < d for i, d in enumerate(dist) if i != k)
        out.append(TrendVerdict("hv_cancellation_best_at_hs", ok, dist,
                                f"secondary pole-zero distance minimal at H_v = {h_s:g}: {ok}"))
    return out


def check_tpv(spec, points):
    return [
        _monotone("tpv_primary_damping_up_as_tp_down", spec, points,
                  _attr("p_to_w", an.ModeClass.PRIMARY, lambda m: m.damping_ratio), -1, "primary damping ratio"),
        _monotone("tpv_secondary_mismatch_down", spec, points, _secondary_mismatch("p_to_w"), -1,
                  "secondary pole to nearest zero distance"),
    ]


def check_xrv(spec, points):
    def peak(p):
        ca = p.analyses.get("q_to_w")
        return None if ca is None or ca.step is None else ca.step.peak()

    # values run with increasing X/R, so the peak must fall
    direction = -1 if spec.values[-1] > spec.values[0] else +1
    return [_monotone("xr_qw_peak_up_as_xr_down", spec, points, peak, direction, "peak |q_to_w| step response")]


def check_dv(spec, points):
    return [
        _monotone("dv_secondary_damping_up", spec, points,
                  _attr("p_to_w", an.ModeClass.SECONDARY, lambda m: m.damping_ratio), +1, "secondary damping ratio"),
        _unchanged_poles("dv_primary_unchanged", points, _primary_pair("p_to_w"), 1e-8, "primary pair"),
    ]


def check_kqv(spec, points):
    def poles(p):
        ca = p.analyses.get("q_to_v")
        return None if ca is None else np.asarray(ca.pz.poles)

    def dc(p):
        return abs(an.dc_gain(p.tm["q_to_v"]))

    return [
        _unchanged_poles("kqv_qv_poles_unchanged", points, poles, 1e-6, "q_to_v pole multiset"),
        _monotone("kqv_qv_dc_up", spec, points, dc, +1, "|q_to_v DC gain|"),
    ]


def check_tqv(spec, points):
    ref = None if points[0].error else points[0].tm["p_to_w"]
    ev = []
    for p in points:
        if p.error or ref is None:
            ev.append(None)
            continue
        ev.append(_coeff_distance(p.tm["p_to_w"], ref))
    ok = all(e is not None and e <= 1e-10 for e in ev)
    identical = TrendVerdict("tqv_pw_unchanged", ok, ev,
                             f"p_to_w coefficients identical to the first point within 1e-10: {ok}")

    def settle(p):
        ca = p.analyses.get("q_to_v")
        return None if ca is None or ca.step is None else an.settling_time(ca.step)

    return [identical, _monotone("tqv_qv_settling_up", spec, points, settle, +1, "q_to_v 2% settling time")]


def _coeff_distance(a, b) -> float:
    """Relative coefficient distance after monic normalization; inf when degrees differ."""
    if a.num_degree != b.num_degree or a.den_degree != b.den_degree:
        return math.inf
    worst = 0.0
    for x, y in ((a.num.coeffs, b.num.coeffs), (a.den.coeffs, b.den.coeffs)):
        scale = max(float(np.max(np.abs(y))), 1e-300)
        worst = max(worst, float(np.max(np.abs(x - y))) / scale)
    return worst


def check_xv(spec, points):
    return [
        _unchanged_poles("xv_primary_unchanged", points, _primary_pair("p_to_w"), 1e-6, "primary pair"),
        _monotone("xv_qv_dc_up", spec, points, lambda p: abs(an.dc_gain(p.tm["q_to_v"])), +1,
                  "|q_to_v DC gain|"),
    ]


TREND_CHECKS = {
    "Hv": (check_hv,),
    "Tpv": (check_tpv,),
    "XRv": (check_xrv,),
    "Dv": (check_dv,),
    "Kqv": (check_kqv,),
    "Tqv": (check_tqv,),
    "Xv": (check_xv,),
}


# ---------------------------------------------------------------------------
# presets and output


def preset_sweeps(base: SystemConfig | None = None) -> dict:
    base = base or default_base_case()

    def grid(lo, hi):
        return tuple(np.linspace(lo, hi, 7).tolist())

    return {
        "Hv": SweepSpec("Hv", grid(2.0, 8.0), base),
        "Tpv": SweepSpec("Tpv", grid(0.03, 1.3), base),
        "XRv": SweepSpec("XRv", (2.0, 3.0, 5.0, 10.0, 20.0, math.inf), base),
        "Dv": SweepSpec("Dv", grid(0.3, 34.0), base),
        "Kqv": SweepSpec("Kqv", grid(0.05, 0.2), base),
        "Tqv": SweepSpec("Tqv", grid(0.05, 0.2), base),
        "Xv": SweepSpec("Xv", grid(0.1, 0.4), base, recompute_op=True),
    }


def preset(name: str, base: SystemConfig | None = None) -> SweepSpec:
    presets = preset_sweeps(base)
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(presets)}")
    return presets[name]


def fmt_value(v: float) -> str:
    return "inf" if math.isinf(v) else an.fmt(v)


def write_sweep(result: SweepResult, out_dir) -> dict:
    """Write ``manifest.json`` and one ``<param>=<value>/<channel>/`` tree per point."""
    spec = result.spec
    os.makedirs(out_dir, exist_ok=True)
    points = []
    for p in result.points:
        name = f"{spec.parameter}={fmt_value(p.value)}"
        entry = {"value": fmt_value(p.value), "dir": name, "error": p.error}
        points.append(entry)
        if p.error:
            continue
        for ch, ca in p.analyses.items():
            d = os.path.join(out_dir, name, ch)
            os.makedirs(d, exist_ok=True)
            if "pz" in spec.outputs:
                an.write_pz_csv(os.path.join(d, "pz.csv"), ca.pz)
            if "modes" in spec.outputs:
                an.write_modes_csv(os.path.join(d, "modes.csv"), ca.modes)
            if ca.bode is not None:
                an.write_bode_csv(os.path.join(d, "bode.csv"), *ca.bode)
            if ca.step is not None:
                an.write_step_csv(os.path.join(d, "step.csv"), ca.step)
    manifest = {
        "spec": spec.to_dict(),
        "verdicts": [v.to_dict() for v in result.verdicts],
        "all_hold": result.all_hold,
        "points": points,
        "failures": [{"value": fmt_value(v), "error": e} for v, e in result.failures],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return manifest
