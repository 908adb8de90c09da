"""Domain types, unit conventions and JSON configuration.

All quantities are per unit on the machine base except time (s), angles (rad)
and the bases themselves. Frequencies follow :class:`FreqConvention`.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field

import jsonschema

from .errors import ConfigError

__all__ = [
    "FreqConvention",
    "MachineParams",
    "Dispatch",
    "SystemConfig",
    "OperatingPoint",
    "MachineOperatingPoint",
    "default_vsg",
    "default_sg",
    "default_base_case",
    "load_config",
    "dump_config",
    "config_to_dict",
    "config_from_dict",
    "CONFIG_SCHEMA",
]


class FreqConvention(str, enum.Enum):
    """How small-signal frequency deviations are measured.

    ``PER_UNIT``: deviations are divided by the nominal frequency, the angle
    integrates ``omega_n * dw`` and the swing momentum is ``2H``.
    ``RAD_PER_SEC``: deviations in rad/s, angle integrates ``dw`` directly and
    the momentum is ``J*omega_r = 2H/omega_n`` (power base of one per unit).
    """

    PER_UNIT = "pu"
    RAD_PER_SEC = "rad_s"


def _check(name, value, ok, bound):
    if not math.isfinite(value):
        raise ConfigError(f"must be finite, got {value!r}", path=name)
    if not ok:
        raise ConfigError(f"violates bound {bound} (got {value!r})", path=name)


@dataclass(frozen=True)
class MachineParams:
    """Physical and control constants of one machine (VSG or SG)."""

    H: float  # inertia constant, s
    D: float  # damper winding constant, pu
    Kp: float  # frequency droop, pu
    Tp: float  # governor lag, s
    Kq: float  # QV droop, pu
    Tq: float  # QV droop lag, s
    R: float  # stator resistance, pu
    X: float  # stator reactance, pu

    def __post_init__(self):
        for name in ("H", "D", "Kp", "Tp", "Kq", "Tq", "R", "X"):
            object.__setattr__(self, name, float(getattr(self, name)))
        _check("H", self.H, self.H > 0, "H > 0")
        _check("X", self.X, self.X > 0, "X > 0")
        _check("R", self.R, self.R >= 0, "R >= 0")
        _check("Tp", self.Tp, self.Tp > 0, "Tp > 0")
        _check("Tq", self.Tq, self.Tq > 0, "Tq > 0")
        _check("Kp", self.Kp, self.Kp >= 0, "Kp >= 0")
        _check("Kq", self.Kq, self.Kq >= 0, "Kq >= 0")
        _check("D", self.D, True, "finite")

    def replace(self, **changes) -> "MachineParams":
        return dataclasses.replace(self, **changes)

    def inertia_moment(self, omega_r: float, S_n: float = 1.0) -> float:
        """Moment of inertia ``J = 2 H S_n / omega_r**2``."""
        return 2.0 * self.H * S_n / omega_r**2


@dataclass(frozen=True)
class Dispatch:
    """Power setpoints of both machines and the bus voltage magnitude (pu)."""

    p_v0: float = 0.5
    q_v0: float = 0.5
    p_s0: float = 0.5
    q_s0: float = 0.5
    v_b0: float = 1.0

    def __post_init__(self):
        for name in ("p_v0", "q_v0", "p_s0", "q_s0", "v_b0"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            _check(name, value, True, "finite")
        _check("v_b0", self.v_b0, self.v_b0 > 0, "v_b0 > 0")

    def machine(self, which: str) -> tuple[float, float]:
        """``(p0, q0)`` of ``"vsg"`` or ``"sg"``."""
        if which == "vsg":
            return self.p_v0, self.q_v0
        if which == "sg":
            return self.p_s0, self.q_s0
        raise ValueError(f"unknown machine {which!r}")


def default_vsg() -> MachineParams:
    return MachineParams(H=4.0, D=17.0, Kp=20.0, Tp=1.0, Kq=0.1, Tq=0.1, R=0.0, X=0.2)


def default_sg() -> MachineParams:
    return MachineParams(H=4.0, D=3.0, Kp=20.0, Tp=1.0, Kq=0.1, Tq=0.1, R=0.0, X=0.2)


@dataclass(frozen=True)
class SystemConfig:
    vsg: MachineParams = field(default_factory=default_vsg)
    sg: MachineParams = field(default_factory=default_sg)
    omega_n: float = 2.0 * math.pi * 60.0  # rad/s
    S_n: float = 1.0e6  # VA
    V_n: float = 6.6e3  # V, phase-phase RMS
    dispatch: Dispatch = field(default_factory=Dispatch)
    freq_convention: FreqConvention = FreqConvention.PER_UNIT

    def __post_init__(self):
        for name in ("omega_n", "S_n", "V_n"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            _check(name, value, value > 0, f"{name} > 0")
        object.__setattr__(self, "freq_convention", FreqConvention(self.freq_convention))

    @property
    def omega_r(self) -> float:
        return self.omega_n

    @property
    def angle_scale(self) -> float:
        """Factor ``c`` in ``d(theta)/dt = c * (w_machine - w_bus)``."""
        if self.freq_convention is FreqConvention.PER_UNIT:
            return self.omega_n
        return 1.0

    def momentum(self, params: MachineParams) -> float:
        """Swing-equation momentum ``M`` in the active frequency convention."""
        if self.freq_convention is FreqConvention.PER_UNIT:
            return 2.0 * params.H
        # M = J * omega_r with the power base taken as 1 pu
        return params.inertia_moment(self.omega_r, 1.0) * self.omega_r

    def machine(self, which: str) -> MachineParams:
        if which == "vsg":
            return self.vsg
        if which == "sg":
            return self.sg
        raise ValueError(f"unknown machine {which!r}")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_vsg(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, vsg=self.vsg.replace(**changes))

    def swapped(self) -> "SystemConfig":
        """Exchange the VSG and SG parameter and dispatch blocks."""
        d = self.dispatch
        return dataclasses.replace(
            self,
            vsg=self.sg,
            sg=self.vsg,
            dispatch=Dispatch(p_v0=d.p_s0, q_v0=d.q_s0, p_s0=d.p_v0, q_s0=d.q_v0, v_b0=d.v_b0),
        )


@dataclass(frozen=True)
class MachineOperatingPoint:
    """One machine's slice of an :class:`OperatingPoint`."""

    v0: float
    theta0: float
    v_b0: float


@dataclass(frozen=True)
class OperatingPoint:
    v_v0: float
    v_s0: float
    theta_v0: float
    theta_s0: float
    v_b0: float

    def machine(self, which: str) -> MachineOperatingPoint:
        if which == "vsg":
            return MachineOperatingPoint(self.v_v0, self.theta_v0, self.v_b0)
        if which == "sg":
            return MachineOperatingPoint(self.v_s0, self.theta_s0, self.v_b0)
        raise ValueError(f"unknown machine {which!r}")

    def swapped(self) -> "OperatingPoint":
        return OperatingPoint(self.v_s0, self.v_v0, self.theta_s0, self.theta_v0, self.v_b0)

    def to_dict(self) -> dict:
        return {
            "v_v0_pu": self.v_v0,
            "v_s0_pu": self.v_s0,
            "theta_v0_rad": self.theta_v0,
            "theta_s0_rad": self.theta_s0,
            "v_b0_pu": self.v_b0,
        }


def default_base_case() -> SystemConfig:
    """Base-case system: default machines, 1 MVA / 6.6 kV / 60 Hz, 0.5+0.5j pu each."""
    return SystemConfig()


# ---------------------------------------------------------------------------
# JSON schema and (de)serialization

_MACHINE_FIELDS = {
    "H_s": "H",
    "D_pu": "D",
    "Kp_pu": "Kp",
    "Tp_s": "Tp",
    "Kq_pu": "Kq",
    "Tq_s": "Tq",
    "R_pu": "R",
    "X_pu": "X",
}
_DISPATCH_FIELDS = {
    "p_v0_pu": "p_v0",
    "q_v0_pu": "q_v0",
    "p_s0_pu": "p_s0",
    "q_s0_pu": "q_s0",
    "v_b0_pu": "v_b0",
}
_SYSTEM_FIELDS = {"omega_n_rad_s": "omega_n", "S_n_VA": "S_n", "V_n_V": "V_n"}

_number = {"type": "number"}

_MACHINE_SCHEMA = {
    "type": "object",
    "properties": {
        "H_s": {**_number, "description": "inertia constant (s)"},
        "D_pu": {**_number, "description": "damper winding constant (pu)"},
        "Kp_pu": {**_number, "description": "frequency droop (pu)"},
        "Tp_s": {**_number, "description": "governor lag (s)"},
        "Kq_pu": {**_number, "description": "QV droop (pu)"},
        "Tq_s": {**_number, "description": "QV droop lag (s)"},
        "R_pu": {**_number, "description": "stator resistance (pu)"},
        "X_pu": {**_number, "description": "stator reactance (pu)"},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "vsgss system configuration",
    "type": "object",
    "properties": {
        "vsg": _MACHINE_SCHEMA,
        "sg": _MACHINE_SCHEMA,
        "omega_n_rad_s": {**_number, "description": "nominal angular frequency (rad/s)"},
        "S_n_VA": {**_number, "description": "power base (VA)"},
        "V_n_V": {**_number, "description": "voltage base, phase-phase RMS (V)"},
        "dispatch": {
            "type": "object",
            "properties": {
                "p_v0_pu": _number,
                "q_v0_pu": _number,
                "p_s0_pu": _number,
                "q_s0_pu": _number,
                "v_b0_pu": _number,
            },
            "additionalProperties": False,
        },
        "freq_convention": {"enum": [c.value for c in FreqConvention]},
    },
    "additionalProperties": False,
}


def _machine_from_dict(doc: dict, defaults: MachineParams, prefix: str) -> MachineParams:
    values = dataclasses.asdict(defaults)
    for key, attr in _MACHINE_FIELDS.items():
        if key in doc:
            values[attr] = doc[key]
    try:
        return MachineParams(**values)
    except ConfigError as exc:
        # re-anchor the path at the document key
        key = next(k for k, a in _MACHINE_FIELDS.items() if a == exc.path)
        raise ConfigError(exc.detail, path=f"{prefix}.{key}") from None


def config_from_dict(doc: dict) -> SystemConfig:
    """Validate a parsed document and build a :class:`SystemConfig`.

    Missing fields take their base-case defaults.
    """
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(err.message, path=path)

    vsg = _machine_from_dict(doc.get("vsg", {}), default_vsg(), "vsg")
    sg = _machine_from_dict(doc.get("sg", {}), default_sg(), "sg")

    disp_doc = doc.get("dispatch", {})
    disp_vals = dataclasses.asdict(Dispatch())
    for key, attr in _DISPATCH_FIELDS.items():
        if key in disp_doc:
            disp_vals[attr] = disp_doc[key]
    try:
        dispatch = Dispatch(**disp_vals)
    except ConfigError as exc:
        raise ConfigError(exc.detail, path=f"dispatch.{exc.path}_pu") from None

    sys_vals = {}
    for key, attr in _SYSTEM_FIELDS.items():
        if key in doc:
            sys_vals[attr] = doc[key]
    try:
        return SystemConfig(
            vsg=vsg,
            sg=sg,
            dispatch=dispatch,
            freq_convention=FreqConvention(doc.get("freq_convention", "pu")),
            **sys_vals,
        )
    except ConfigError as exc:
        key = next(k for k, a in _SYSTEM_FIELDS.items() if a == exc.path)
        raise ConfigError(exc.detail, path=key) from None


def load_config(text: str) -> SystemConfig:
    """Parse a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}", path="<root>") from None
    return config_from_dict(doc)


def config_to_dict(cfg: SystemConfig) -> dict:
    def machine(p: MachineParams) -> dict:
        return {key: getattr(p, attr) for key, attr in _MACHINE_FIELDS.items()}

    return {
        "vsg": machine(cfg.vsg),
        "sg": machine(cfg.sg),
        "omega_n_rad_s": cfg.omega_n,
        "S_n_VA": cfg.S_n,
        "V_n_V": cfg.V_n,
        "dispatch": {key: getattr(cfg.dispatch, attr) for key, attr in _DISPATCH_FIELDS.items()},
        "freq_convention": cfg.freq_convention.value,
    }


def dump_config(cfg: SystemConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
