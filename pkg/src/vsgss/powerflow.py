"""Two-machine power flow: operating point, linearized power-flow matrix, A coefficients."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, SingularError
from .model import MachineOperatingPoint, MachineParams, OperatingPoint, SystemConfig

__all__ = [
    "machine_power",
    "PowerFlowMatrix",
    "ACoeffs",
    "build_k_matrix",
    "build_a_coeffs",
    "solve_machine",
    "solve_operating_point",
]

MAX_ITER = 50
TOL = 1e-10


def machine_power(v, theta, v_b, R, X):
    """Quasi-steady active and reactive power delivered to the bus.

    ``v`` and ``v_b`` are the internal and bus voltage magnitudes, ``theta``
    the angle across the stator impedance ``R + jX``. Broadcasts over arrays.
    """
    z2 = R * R + X * X
    c, s = np.cos(theta), np.sin(theta)
    p = (R * (v * v_b * c - v_b**2) + X * v * v_b * s) / z2
    q = (X * (v * v_b * c - v_b**2) - R * v * v_b * s) / z2
    return p, q


@dataclass(frozen=True)
class PowerFlowMatrix:
    """Sensitivities of ``(p, q)`` to ``(theta, v_machine, v_bus)``, shape (2, 3)."""

    k: np.ndarray

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        if k.shape != (2, 3):
            raise ValueError(f"power-flow matrix must be 2x3, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("power-flow matrix has non-finite entries")
        k.setflags(write=False)
        object.__setattr__(self, "k", k)

    def __getitem__(self, idx):
        return self.k[idx]

    @property
    def determinant(self) -> float:
        """``K11*K23 - K13*K21``, the common denominator of the A coefficients."""
        k = self.k
        return float(k[0, 0] * k[1, 2] - k[0, 2] * k[1, 0])


@dataclass(frozen=True)
class ACoeffs:
    """Bus-voltage elimination ``dv_b = a_p dp + a_q dq + a_v dv``."""

    a_p: float
    a_q: float
    a_v: float


def _k_entries(v0, theta0, v_b0, R, X):
    z2 = R * R + X * X
    s, c = math.sin(theta0), math.cos(theta0)
    return np.array(
        [
            [
                (-R * v0 * v_b0 * s + X * v0 * v_b0 * c) / z2,
                (R * v_b0 * c + X * v_b0 * s) / z2,
                (R * (v0 * c - 2.0 * v_b0) + X * v0 * s) / z2,
            ],
            [
                (-R * v0 * v_b0 * c - X * v0 * v_b0 * s) / z2,
                (-R * v_b0 * s + X * v_b0 * c) / z2,
                (-R * v0 * s + X * (v0 * c - 2.0 * v_b0)) / z2,
            ],
        ]
    )


def build_k_matrix(params: MachineParams, op: MachineOperatingPoint) -> PowerFlowMatrix:
    """Closed-form Jacobian of :func:`machine_power` at ``op``."""
    return PowerFlowMatrix(_k_entries(op.v0, op.theta0, op.v_b0, params.R, params.X))


def build_a_coeffs(k: PowerFlowMatrix) -> ACoeffs:
    det = k.determinant
    scale = max(abs(k[0, 0] * k[1, 2]), abs(k[0, 2] * k[1, 0]), 1e-300)
    if det == 0.0 or abs(det) <= 1e-14 * scale:
        raise SingularError(f"K11*K23 - K13*K21 = {det!r} is singular")
    return ACoeffs(
        a_p=float(-k[1, 0] / det),
        a_q=float(k[0, 0] / det),
        a_v=float((k[0, 1] * k[1, 0] - k[0, 0] * k[1, 1]) / det),
    )


def solve_machine(p0, q0, v_b0, R, X, *, guess=None, max_iter=MAX_ITER, tol=TOL):
    """Newton-Raphson for ``(v0, theta0)`` delivering ``(p0, q0)`` at ``v_b0``.

    Returns ``(v0, theta0, iterations)``. The step is halved while the
    residual grows; ``theta0`` is kept inside ``(-pi/2, pi/2)``.
    """
    v, th = (v_b0, 0.0) if guess is None else guess

    def residual(v, th):
        p, q = machine_power(v, th, v_b0, R, X)
        return np.array([p - p0, q - q0])

    f = residual(v, th)
    norm = np.max(np.abs(f))
    for it in range(max_iter + 1):
        if norm <= tol:
            return float(v), float(th), it
        if it == max_iter:
            break
        jac = _k_entries(v, th, v_b0, R, X)[:, :2]  # columns: theta, v
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularError(f"power-flow Jacobian is singular (condition estimate {cond:.3e})")
        d_th, d_v = np.linalg.solve(jac, -f)
        step = 1.0
        for _ in range(30):
            th_new = th + step * d_th
            v_new = v + step * d_v
            if v_new > 0 and abs(th_new) < math.pi / 2:
                f_new = residual(v_new, th_new)
                norm_new = np.max(np.abs(f_new))
                if norm_new < norm:
                    break
            step *= 0.5
        else:
            raise ConvergenceError(
                f"power flow stalled after {it} iterations (last residual {norm:.3e} pu)",
                residual=float(norm),
            )
        v, th, f, norm = v_new, th_new, f_new, norm_new
    raise ConvergenceError(
        f"power flow did not converge in {max_iter} iterations (last residual {norm:.3e} pu)",
        residual=float(norm),
    )


def solve_operating_point(cfg: SystemConfig) -> OperatingPoint:
    """Steady-state internal voltages and stator angles for the configured dispatch."""
    d = cfg.dispatch
    v_v0, th_v0, _ = solve_machine(d.p_v0, d.q_v0, d.v_b0, cfg.vsg.R, cfg.vsg.X)
    v_s0, th_s0, _ = solve_machine(d.p_s0, d.q_s0, d.v_b0, cfg.sg.R, cfg.sg.X)
    return OperatingPoint(v_v0=v_v0, v_s0=v_s0, theta_v0=th_v0, theta_s0=th_s0, v_b0=d.v_b0)
