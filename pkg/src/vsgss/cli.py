"""Command-line entry point: ``vsgss <verb> [options]``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import os
import sys

from . import __version__, kernels
from . import analysis as an
from . import simulate as sim
from . import sweep as sw
from .errors import VsgssError
from .model import FreqConvention, SystemConfig, default_base_case, dump_config, load_config
from .powerflow import build_a_coeffs, build_k_matrix, solve_operating_point
from .tfbuild import BUILD_TOL, CHANNEL_ALIASES, CHANNELS, Target, build_descriptor, build_transfer_matrix

VERBS = ("opsolve", "kmatrix", "tf", "pz", "bode", "step", "dcgain", "sweep", "sim", "compare", "presets")
SHORT = {v: k for k, v in CHANNEL_ALIASES.items()}


class CliError(Exception):
    pass


# -- helpers ---------------------------------------------------------------------

def _load_cfg(args) -> SystemConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc.strerror}") from None
        cfg = load_config(text)
    else:
        cfg = default_base_case()
    if getattr(args, "freq_convention", None):
        cfg = cfg.replace(freq_convention=FreqConvention(args.freq_convention))
    return cfg


def _channels(args):
    if getattr(args, "channel", None):
        return (CHANNEL_ALIASES[args.channel],)
    return tuple(CHANNELS)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _config_hash(cfg: SystemConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()


def _manifest(out, verb, argv, cfg, outputs, extra=None):
    doc = {
        "tool": "vsgss",
        "version": __version__,
        "verb": verb,
        "argv": list(argv),
        "config_sha256": _config_hash(cfg),
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "kernel_backend": kernels.BACKEND,
        "outputs": sorted(outputs),
    }
    doc.update(extra or {})
    _write_json(os.path.join(out, "run_manifest.json"), doc)


def _scenario(args) -> sim.SimScenario:
    if args.scenario:
        try:
            with open(args.scenario) as fh:
                sc = sim.load_scenario(fh.read())
        except OSError as exc:
            raise CliError(f"cannot read scenario {args.scenario}: {exc.strerror}") from None
    else:
        sc = sim.sim_preset(args.preset or "base")
        if args.config:
            sc = dataclasses.replace(sc, cfg=_load_cfg(args))
    changes = {}
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.t_end is not None:
        changes["t_end"] = args.t_end
    if args.freq_convention:
        changes["cfg"] = sc.cfg.replace(freq_convention=FreqConvention(args.freq_convention))
    if changes:
        sc = dataclasses.replace(sc, **changes)
    return sc


# -- verbs -------------------------------------------------------------------------

def cmd_opsolve(args, out):
    cfg = _load_cfg(args)
    op = solve_operating_point(cfg)
    _write_json(os.path.join(out, "op.json"), op.to_dict())
    print(f"VSG: v0 = {op.v_v0:.6f} pu, theta0 = {op.theta_v0:.6f} rad")
    print(f"SG:  v0 = {op.v_s0:.6f} pu, theta0 = {op.theta_s0:.6f} rad")
    print(f"bus: v_b0 = {op.v_b0:.6f} pu")
    return cfg, ["op.json"]


def cmd_kmatrix(args, out):
    cfg = _load_cfg(args)
    op = solve_operating_point(cfg)
    doc = {"operating_point": op.to_dict()}
    for which in ("vsg", "sg"):
        k = build_k_matrix(cfg.machine(which), op.machine(which))
        a = build_a_coeffs(k)
        doc[which] = {"K": k.k.tolist(), "a_p": a.a_p, "a_q": a.a_q, "a_v": a.a_v}
        print(f"{which}: K = {k.k.tolist()}")
        print(f"{which}: a_p = {a.a_p:.9g}, a_q = {a.a_q:.9g}, a_v = {a.a_v:.9g}")
    _write_json(os.path.join(out, "kmatrix.json"), doc)
    return cfg, ["kmatrix.json"]


def _tf(args, cfg):
    return build_transfer_matrix(cfg, target=Target(args.target), tol=args.tol or BUILD_TOL)


def cmd_tf(args, out):
    cfg = _load_cfg(args)
    h = _tf(args, cfg)
    _write_json(os.path.join(out, "tf.json"), h.to_dict())
    _write_json(os.path.join(out, "descriptor.json"), build_descriptor(cfg, target=h.target).to_dict())
    for name, ch in h.channels.items():
        print(f"{name}: order {ch.den.degree}, numerator degree {ch.num.degree}")
    return cfg, ["tf.json", "descriptor.json"]


def cmd_pz(args, out):
    cfg = _load_cfg(args)
    h = _tf(args, cfg)
    files = []
    for name in _channels(args):
        pz = an.pole_zero(h[name], an.DISPLAY_TOL)
        an.write_pz_csv(os.path.join(out, f"pz_{SHORT[name]}.csv"), pz)
        an.write_modes_csv(os.path.join(out, f"modes_{SHORT[name]}.csv"), an.classify_modes(pz))
        files += [f"pz_{SHORT[name]}.csv", f"modes_{SHORT[name]}.csv"]
        print(f"{name}: {pz.poles.size} poles, {pz.zeros.size} zeros")
    return cfg, files


def cmd_bode(args, out):
    cfg = _load_cfg(args)
    h = _tf(args, cfg)
    files = []
    for name in _channels(args):
        w, mag = an.bode_magnitude(h[name], args.w_min, args.w_max, args.n)
        an.write_bode_csv(os.path.join(out, f"bode_{SHORT[name]}.csv"), w, mag)
        files.append(f"bode_{SHORT[name]}.csv")
    return cfg, files


def cmd_step(args, out):
    cfg = _load_cfg(args)
    h = _tf(args, cfg)
    files = []
    dt = args.dt if args.dt is not None else sw.STEP_DT
    t_end = args.t_end if args.t_end is not None else sw.STEP_T_END
    for name in _channels(args):
        r = an.step_response(h[name], args.step_size, t_end, dt, name)
        an.write_step_csv(os.path.join(out, f"step_{SHORT[name]}.csv"), r)
        files.append(f"step_{SHORT[name]}.csv")
        print(f"{name}: final value {r.final_value():.9g} pu" + (" (unstable)" if r.unstable else ""))
    return cfg, files


def cmd_dcgain(args, out):
    cfg = _load_cfg(args)
    h = _tf(args, cfg)
    doc = {}
    for name in _channels(args):
        doc[name] = an.dc_gain(h[name]) + 0.0
        print(f"{name}: {doc[name]:.12g}")
    _write_json(os.path.join(out, "dcgain.json"), doc)
    return cfg, ["dcgain.json"]


def cmd_sweep(args, out):
    cfg = _load_cfg(args)
    if not args.preset:
        raise CliError("sweep needs --preset (one of %s, or all)" % ", ".join(sw.PARAMETERS))
    names = list(sw.preset_sweeps(cfg)) if args.preset == "all" else [args.preset]
    files = []
    verdicts = {}
    for name in names:
        spec = sw.preset(name, cfg)
        if args.target:
            spec = sw.SweepSpec(spec.parameter, spec.values, spec.base, spec.recompute_op,
                                spec.channels, spec.outputs, Target(args.target))
        result = sw.run_sweep(spec, workers=args.workers)
        d = out if len(names) == 1 else os.path.join(out, name)
        manifest = sw.write_sweep(result, d)
        files.append(os.path.relpath(os.path.join(d, "manifest.json"), out))
        for v in manifest["verdicts"]:
            verdicts[v["claim_id"]] = v["holds"]
            print(f"{v['claim_id']}: {'holds' if v['holds'] else 'FAILS'}")
    return cfg, files, {"verdicts": verdicts}


def cmd_sim(args, out):
    sc = _scenario(args)
    ts = sim.run_simulation(sc)
    sim.write_timeseries_csv(os.path.join(out, "timeseries.csv"), ts)
    with open(os.path.join(out, "scenario.json"), "w") as fh:
        fh.write(sim.dump_scenario(sc))
    ep = sim.extract_operating_point(ts)
    init = ts.init
    doc = {
        "operating_point": ep.op.to_dict(),
        "measured_s_v_pu": [ep.s_v.real, ep.s_v.imag],
        "measured_s_s_pu": [ep.s_s.real, ep.s_s.imag],
        "z_load0_pu": [init.z_load0.real, init.z_load0.imag],
        "z_load_step_pu": [init.z_load_step.real, init.z_load_step.imag],
    }
    _write_json(os.path.join(out, "sim_op.json"), doc)
    print(f"simulated {sc.t_end:g} s at dt = {sc.dt:g} s ({ts.backend} kernel)")
    print(f"pre-switch: v_b0 = {ep.op.v_b0:.6f} pu, theta_v0 = {ep.op.theta_v0:.6f}, theta_s0 = {ep.op.theta_s0:.6f} rad")
    return sc.cfg, ["timeseries.csv", "scenario.json", "sim_op.json"]


def cmd_compare(args, out):
    sc = _scenario(args)
    ts = sim.run_simulation(sc)
    ep = sim.extract_operating_point(ts)
    h = build_transfer_matrix(sc.cfg, ep.op, Target(args.target), args.tol or BUILD_TOL)
    if args.load_step == "effective":
        ds = sim.effective_load_step(ts)
    else:
        ds = sc.delta_s_load
    rep = sim.compare_with_linear(ts, h, (ds.real, ds.imag))
    doc = rep.to_dict()
    doc.update({"load_step_mode": args.load_step, "threshold": 0.10, "passes": rep.passes(0.10),
                "operating_point": ep.op.to_dict()})
    _write_json(os.path.join(out, "deviation.json"), doc)
    with open(os.path.join(out, "compare.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t_s", "sim_domega_pu", "lin_domega_pu", "sim_dv_pu", "lin_dv_pu"))
        for row in zip(rep.t, rep.sim_omega, rep.lin_omega, rep.sim_voltage, rep.lin_voltage):
            w.writerow([an.fmt(x) for x in row])
    print(f"load step ({args.load_step}): dp = {ds.real:.6g}, dq = {ds.imag:.6g} pu")
    print(f"d omega: normalized deviation {rep.omega.normalized:.4f}")
    print(f"d v:     normalized deviation {rep.voltage.normalized:.4f}")
    return sc.cfg, ["deviation.json", "compare.csv"]


def cmd_presets(args, out):
    cfg = _load_cfg(args)
    doc = {
        "sweeps": {k: s.to_dict() for k, s in sw.preset_sweeps(cfg).items()},
        "simulations": {k: sim.scenario_to_dict(sim.sim_preset(k)) for k in sim.SIM_PRESETS},
    }
    _write_json(os.path.join(out, "presets.json"), doc)
    print("sweeps: " + ", ".join(doc["sweeps"]))
    print("simulations: " + ", ".join(doc["simulations"]))
    return cfg, ["presets.json"]


COMMANDS = {
    "opsolve": cmd_opsolve, "kmatrix": cmd_kmatrix, "tf": cmd_tf, "pz": cmd_pz, "bode": cmd_bode,
    "step": cmd_step, "dcgain": cmd_dcgain, "sweep": cmd_sweep, "sim": cmd_sim,
    "compare": cmd_compare, "presets": cmd_presets,
}


# -- parser ------------------------------------------------------------------------

def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vsgss", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vsgss {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="verb")

    def add(verb, help_text):
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", help="system configuration JSON (default: base case)")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--freq-convention", choices=[c.value for c in FreqConvention])
        return p

    add("opsolve", "solve the operating point")
    add("kmatrix", "linearized power-flow matrices and A coefficients")
    for verb, text in (("tf", "rational transfer matrix and descriptor realization"),
                       ("pz", "poles and zeros per channel"), ("bode", "Bode magnitude"),
                       ("step", "step responses"), ("dcgain", "DC gains")):
        p = add(verb, text)
        p.add_argument("--target", choices=[t.value for t in Target], default="sg")
        p.add_argument("--tol", type=_positive, help=f"build cancellation tolerance (default {BUILD_TOL:g})")
        if verb != "tf":
            p.add_argument("--channel", choices=sorted(CHANNEL_ALIASES))
        if verb == "bode":
            p.add_argument("--w-min", type=_positive, default=sw.BODE_RANGE[0])
            p.add_argument("--w-max", type=_positive, default=sw.BODE_RANGE[1])
            p.add_argument("--n", type=int, default=sw.BODE_RANGE[2])
        if verb == "step":
            p.add_argument("--step-size", type=float, default=sw.STEP_SIZE)
            p.add_argument("--dt", type=_positive)
            p.add_argument("--t-end", type=_positive)
    p = add("sweep", "parameter sweep with trend verdicts")
    p.add_argument("--preset", help="sweep preset name or 'all'")
    p.add_argument("--target", choices=[t.value for t in Target])
    p.add_argument("--workers", type=int, default=1)
    for verb, text in (("sim", "nonlinear simulation"), ("compare", "simulation against linear model")):
        p = add(verb, text)
        p.add_argument("--scenario", help="scenario JSON")
        p.add_argument("--preset", choices=sim.SIM_PRESETS, help="simulation preset (default base)")
        p.add_argument("--dt", type=_positive)
        p.add_argument("--t-end", type=_positive)
        if verb == "compare":
            p.add_argument("--target", choices=[t.value for t in Target], default="sg")
            p.add_argument("--tol", type=_positive)
            p.add_argument("--load-step", choices=("effective", "nominal"), default="effective",
                           help="drive the linear model with the realised or the nominal load step")
    add("presets", "list sweep and simulation presets")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.verb == "sweep" and args.preset and args.preset != "all" and args.preset not in sw.PARAMETERS:
        print(f"error: unknown sweep preset {args.preset!r}; choose from {', '.join(sw.PARAMETERS)} or all",
              file=sys.stderr)
        return 2
    if args.verb == "sweep" and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    if args.verb == "bode" and args.n < 2:
        print("error: --n must be >= 2", file=sys.stderr)
        return 2
    out = args.out
    try:
        os.makedirs(out, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise CliError(f"output directory {out} is not writable")
        result = COMMANDS[args.verb](args, out)
        cfg, files = result[0], result[1]
        extra = result[2] if len(result) > 2 else None
        _manifest(out, args.verb, argv, cfg, files, extra)
    except (VsgssError, CliError, ValueError, KeyError, OSError) as exc:
        kind = type(exc).__name__
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error ({kind}): {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
