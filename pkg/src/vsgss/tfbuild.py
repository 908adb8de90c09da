"""Small-signal transfer objects of the two-machine system.

Two independent constructions are provided. The rational path eliminates the
network symbolically (stand-alone machine blocks G, network blocks B, per
machine F, and finally the interconnected matrix H for a target machine). The
descriptor path stacks the same linear equations as one DAE ``E x' = A x + B u``
and is used as a numeric oracle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularError
from .model import FreqConvention, MachineParams, OperatingPoint, SystemConfig, config_to_dict
from .powerflow import ACoeffs, PowerFlowMatrix, build_a_coeffs, build_k_matrix, solve_operating_point
from .ratpoly import RationalFunction, RatMatrix2, mat2_inv, minreal

__all__ = [
    "Target",
    "CHANNELS",
    "CHANNEL_ALIASES",
    "BUILD_TOL",
    "StandaloneTF",
    "MachineBlocks",
    "TransferMatrix",
    "DescriptorSystem",
    "build_standalone",
    "build_b_matrices",
    "build_f_matrix",
    "build_machine_blocks",
    "build_interconnected",
    "build_transfer_matrix",
    "build_descriptor",
    "DESCRIPTOR_STATES",
]

BUILD_TOL = 1e-9

CHANNELS = {
    "p_to_w": (0, 0),
    "q_to_w": (0, 1),
    "p_to_v": (1, 0),
    "q_to_v": (1, 1),
}
CHANNEL_ALIASES = {"pw": "p_to_w", "qw": "q_to_w", "pv": "p_to_v", "qv": "q_to_v"}


class Target(str, enum.Enum):
    SG = "sg"
    VSG = "vsg"

    @property
    def other(self) -> "Target":
        return Target.VSG if self is Target.SG else Target.SG


def _rf(*coeffs) -> RationalFunction:
    return RationalFunction(list(coeffs))


def _lag(gain, tc) -> RationalFunction:
    """``gain / (1 + tc s)``."""
    return RationalFunction([gain], [1.0, tc])


@dataclass(frozen=True)
class StandaloneTF:
    """``(dp, dq) -> (dw, dv)`` of one machine on a stiff bus."""

    g: RatMatrix2

    def __post_init__(self):
        if not self.g[1, 0].is_zero:
            raise ValueError("stand-alone entry (2,1) must be identically zero")


def build_standalone(params: MachineParams, k: PowerFlowMatrix, a: ACoeffs,
                     convention=FreqConvention.PER_UNIT, omega_n: float = 2 * np.pi * 60,
                     tol: float = BUILD_TOL) -> StandaloneTF:
    if isinstance(convention, SystemConfig):
        cfg = convention
    else:
        cfg = SystemConfig(omega_n=omega_n, freq_convention=FreqConvention(convention))
    M = cfg.momentum(params)
    c = cfg.angle_scale
    damp = params.D / (c * k[0, 0])
    swing = _rf(0.0, M) + _lag(params.Kp, params.Tp)
    qv = _lag(params.Kq, params.Tq)
    g11 = minreal(-_rf(1.0, damp * (1.0 - k[0, 2] * a.a_p)) / swing, tol)
    inner = minreal(_rf(k[0, 2] * a.a_q) - qv * (k[0, 1] + k[0, 2] * a.a_v), tol)
    g12 = minreal(_rf(0.0, damp) * inner / swing, tol)
    return StandaloneTF(RatMatrix2([[g11, g12], [0.0, -qv]]))


def build_b_matrices(k: PowerFlowMatrix, angle_scale: float = 1.0):
    """Network blocks ``(b_self, b_bus)``.

    ``angle_scale`` multiplies the angle columns; it is ``omega_n`` in the
    per-unit frequency convention and 1 otherwise.
    """
    c = angle_scale
    b_self = RatMatrix2([[c * k[0, 0], _rf(0.0, k[0, 1])], [c * k[1, 0], _rf(0.0, k[1, 1])]])
    b_bus = RatMatrix2([[-c * k[0, 0], _rf(0.0, k[0, 2])], [-c * k[1, 0], _rf(0.0, k[1, 2])]])
    return b_self, b_bus


def build_f_matrix(g: StandaloneTF, b_self: RatMatrix2, b_bus: RatMatrix2,
                   tol: float = BUILD_TOL) -> RatMatrix2:
    """``(sI - b_self g)^-1 b_bus``."""
    pencil = b_self.mul(g.g, tol).s_identity_minus(tol)
    try:
        inv = mat2_inv(pencil, tol)
    except SingularError as exc:
        raise SingularError(f"(sI - B_self G) is singular: {exc}") from None
    return inv.mul(b_bus, tol)


@dataclass(frozen=True)
class MachineBlocks:
    """Every intermediate object of one machine."""

    params: MachineParams
    k: PowerFlowMatrix
    a: ACoeffs
    g: StandaloneTF
    b_self: RatMatrix2
    b_bus: RatMatrix2
    f: RatMatrix2


def build_machine_blocks(cfg: SystemConfig, op: OperatingPoint, which: str,
                         tol: float = BUILD_TOL) -> MachineBlocks:
    params = cfg.machine(which)
    k = build_k_matrix(params, op.machine(which))
    a = build_a_coeffs(k)
    g = build_standalone(params, k, a, cfg, tol=tol)
    b_self, b_bus = build_b_matrices(k, cfg.angle_scale)
    f = build_f_matrix(g, b_self, b_bus, tol)
    return MachineBlocks(params, k, a, g, b_self, b_bus, f)


@dataclass(frozen=True)
class TransferMatrix:
    """Load disturbance ``(dp_L, dq_L)`` to target response ``(dw, dv)``."""

    matrix: RatMatrix2
    target: Target
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))

    def __getitem__(self, name: str) -> RationalFunction:
        name = CHANNEL_ALIASES.get(name, name)
        if name not in CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        return self.matrix[CHANNELS[name]]

    @property
    def channels(self) -> dict:
        return {name: self.matrix[idx] for name, idx in CHANNELS.items()}

    def evaluate(self, s) -> np.ndarray:
        return self.matrix.evaluate(s)

    def poles(self) -> np.ndarray:
        return np.concatenate([ch.poles for ch in self.channels.values()])

    def to_dict(self) -> dict:
        return {
            "target": self.target.value,
            "channels": {name: ch.to_dict() for name, ch in self.channels.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TransferMatrix":
        ch = {name: RationalFunction.from_dict(doc["channels"][name]) for name in CHANNELS}
        m = RatMatrix2([[ch["p_to_w"], ch["q_to_w"]], [ch["p_to_v"], ch["q_to_v"]]])
        return cls(m, Target(doc["target"]), doc.get("metadata", {}))


def build_interconnected(f_v: RatMatrix2, f_s: RatMatrix2, b_self_target: RatMatrix2,
                         b_bus_target: RatMatrix2, target=Target.SG,
                         tol: float = BUILD_TOL, metadata=None) -> TransferMatrix:
    """Load disturbance to target response.

    With ``T`` the target machine,
    ``H = [(F_v + F_s) F_T^-1 (sI - B_bus,T F_T^-1)^-1 B_self,T]^-1``.
    The outer inverse is distributed over the product, which gives
    ``H = B_self,T^-1 (s F_T - B_bus,T) (F_v + F_s)^-1``: the same function,
    but without re-extracting roots from the determinant of the full chain,
    where the nearly coincident modes of the two machines are ill-conditioned.
    """
    target = Target(target)
    f_t = f_s if target is Target.SG else f_v

    def inverse(m, label):
        try:
            return mat2_inv(m, tol)
        except SingularError as exc:
            raise SingularError(f"{label} failed: {exc}") from None

    b_inv = inverse(b_self_target, f"inverse of B_self,{target.value}")
    total_inv = inverse(f_v.add(f_s, tol), "inverse of (F_vsg + F_sg)")
    s = RationalFunction.s()
    middle = f_t.scale(s, tol).sub(b_bus_target, tol)
    h = b_inv.mul(middle, tol).mul(total_inv, tol)
    return TransferMatrix(h, target, dict(metadata or {}, build_tol=tol))


def build_transfer_matrix(cfg: SystemConfig, op: OperatingPoint | None = None,
                          target=Target.SG, tol: float = BUILD_TOL) -> TransferMatrix:
    """Solve the operating point if needed and build ``H`` for ``target``."""
    target = Target(target)
    if op is None:
        op = solve_operating_point(cfg)
    vsg = build_machine_blocks(cfg, op, "vsg", tol)
    sg = build_machine_blocks(cfg, op, "sg", tol)
    t = sg if target is Target.SG else vsg
    meta = {"config": config_to_dict(cfg), "operating_point": op.to_dict()}
    return build_interconnected(vsg.f, sg.f, t.b_self, t.b_bus, target, tol, meta)


# ---------------------------------------------------------------------------
# descriptor oracle

DESCRIPTOR_STATES = (
    "w_v", "g_v", "xq_v", "theta_v",
    "w_s", "g_s", "xq_s", "theta_s",
    "w_b", "v_b", "v_v", "v_s", "p_v", "q_v", "p_s", "q_s",
)


@dataclass(frozen=True)
class DescriptorSystem:
    e_matrix: np.ndarray
    a_matrix: np.ndarray
    b_matrix: np.ndarray
    c_matrix: np.ndarray
    d_matrix: np.ndarray
    target: Target = Target.SG

    def __post_init__(self):
        e, a = self.e_matrix, self.a_matrix
        rng = np.random.default_rng(0)
        probes = rng.normal(size=2) + 1j * rng.normal(size=2)
        if all(np.linalg.matrix_rank(lam * e - a) < a.shape[0] for lam in probes):
            raise SingularError("descriptor pencil (A, E) is singular")

    def finite_eigenvalues(self) -> np.ndarray:
        alpha, beta = scipy.linalg.eig(self.a_matrix, self.e_matrix, right=False,
                                       homogeneous_eigvals=True)
        finite = np.abs(beta) > 1e-10 * np.abs(alpha)
        lam = alpha[finite] / beta[finite]
        return lam[np.lexsort((lam.imag, lam.real))]

    def evaluate(self, s) -> np.ndarray:
        """``C (sE - A)^-1 B + D``; output shape ``s.shape + (2, 2)``."""
        s = np.asarray(s, dtype=complex)
        out = np.empty(s.shape + (2, 2), dtype=complex)
        for idx in np.ndindex(s.shape):
            lhs = s[idx] * self.e_matrix - self.a_matrix
            out[idx] = self.c_matrix @ np.linalg.solve(lhs, self.b_matrix) + self.d_matrix
        return out

    def to_dict(self) -> dict:
        return {
            "target": self.target.value,
            "states": list(DESCRIPTOR_STATES),
            "inputs": ["p_L", "q_L"],
            "outputs": [f"w_{self.target.value}", f"v_{self.target.value}"],
            "E": self.e_matrix.tolist(),
            "A": self.a_matrix.tolist(),
            "B": self.b_matrix.tolist(),
            "C": self.c_matrix.tolist(),
            "D": self.d_matrix.tolist(),
        }


def build_descriptor(cfg: SystemConfig, op: OperatingPoint | None = None,
                     target=Target.SG) -> DescriptorSystem:
    target = Target(target)
    if op is None:
        op = solve_operating_point(cfg)
    n = len(DESCRIPTOR_STATES)
    ix = {name: i for i, name in enumerate(DESCRIPTOR_STATES)}
    E = np.zeros((n, n))
    A = np.zeros((n, n))
    B = np.zeros((n, 2))
    c = cfg.angle_scale
    w_b, v_b = ix["w_b"], ix["v_b"]
    for m, which in enumerate(("vsg", "sg")):
        sfx = which[0]
        par = cfg.machine(which)
        k = build_k_matrix(par, op.machine(which)).k
        w, g, xq, th = (ix[f"{name}_{sfx}"] for name in ("w", "g", "xq", "theta"))
        v, p, q = ix[f"v_{sfx}"], ix[f"p_{sfx}"], ix[f"q_{sfx}"]
        # swing: M w' = g - p - D (w - w_b)
        E[w, w] = cfg.momentum(par)
        A[w, g], A[w, p], A[w, w], A[w, w_b] = 1.0, -1.0, -par.D, par.D
        # governor lag: Tp g' = -g - Kp w
        E[g, g] = par.Tp
        A[g, g], A[g, w] = -1.0, -par.Kp
        # QV lag: Tq xq' = -xq - Kq q
        E[xq, xq] = par.Tq
        A[xq, xq], A[xq, q] = -1.0, -par.Kq
        # angle: theta' = c (w - w_b)
        E[th, th] = 1.0
        A[th, w], A[th, w_b] = c, -c
        # algebraic rows
        A[v, v], A[v, xq] = 1.0, -1.0
        A[p, p], A[p, th], A[p, v], A[p, v_b] = -1.0, k[0, 0], k[0, 1], k[0, 2]
        A[q, q], A[q, th], A[q, v], A[q, v_b] = -1.0, k[1, 0], k[1, 1], k[1, 2]
    # load balance; rows of w_b and v_b are algebraic
    A[w_b, ix["p_v"]], A[w_b, ix["p_s"]], B[w_b, 0] = 1.0, 1.0, -1.0
    A[v_b, ix["q_v"]], A[v_b, ix["q_s"]], B[v_b, 1] = 1.0, 1.0, -1.0
    C = np.zeros((2, n))
    sfx = target.value[0]
    C[0, ix[f"w_{sfx}"]] = 1.0
    C[1, ix[f"v_{sfx}"]] = 1.0
    return DescriptorSystem(E, A, B, C, np.zeros((2, 2)), target)
