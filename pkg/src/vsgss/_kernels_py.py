"""Pure-Python reference implementations of the hot loops."""
import math

import numpy as np


def zoh_step_series(ad, bd, c, d, n_steps):
    """Output of ``x+ = ad x + bd``, ``y = c x + d`` for a unit step from ``x = 0``.

    Returns ``n_steps + 1`` samples, the first at ``t = 0``.
    """
    ad = np.ascontiguousarray(ad, dtype=float)
    bd = np.ascontiguousarray(bd, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    n = ad.shape[0]
    y = np.empty(n_steps + 1)
    x = np.zeros(n)
    for k in range(n_steps + 1):
        y[k] = c @ x + d
        x = ad @ x + bd
    return y


# State layout for the simulator loop, one block of four per machine:
#   [w_v, phi_v, g_v, x_v, w_s, phi_s, g_s, x_s, xi]
# par: [M, D, Kp, Tp, Kq, Tq, p_r, q_r, v_r] for VSG then SG, then [c, tau]
# net: rows (switch open, switch closed) of
#   [w_v, w_s, zb_v, zst_v, zb_s, zst_s]  with  V_b = w_v E_v + w_s E_s,
#   zb the source-to-load-node impedance and zst the stator impedance.
# alg columns: [p_v, q_v, p_s, q_s, |V_b|, phi_b, w_b]
N_STATES = 9
N_ALG = 7
DIVERGED = 1e6


def _stage(x, par, row, out, alg=None):
    """Right-hand side at state ``x``; fills ``out`` and optionally ``alg``."""
    w_v, phi_v, g_v, x_v, w_s, phi_s, g_s, x_s, xi = x
    c = par[18]
    tau = par[19]
    wv, ws, zbv, zstv, zbs, zsts = row
    mag_v = par[8] + x_v
    mag_s = par[17] + x_s
    e_v = complex(mag_v * math.cos(phi_v), mag_v * math.sin(phi_v))
    e_s = complex(mag_s * math.cos(phi_s), mag_s * math.sin(phi_s))
    vb = wv * e_v + ws * e_s
    i_v = (e_v - vb) / zbv
    i_s = (e_s - vb) / zbs
    sv = (e_v - zstv * i_v) * i_v.conjugate()
    ss = (e_s - zsts * i_s) * i_s.conjugate()
    # bus angle continued from the SG angle so it never wraps
    rot = vb * complex(math.cos(phi_s), -math.sin(phi_s))
    phi_b = phi_s + math.atan2(rot.imag, rot.real)
    w_b = (phi_b - xi) / (tau * c)
    p_v, q_v, p_s, q_s = sv.real, sv.imag, ss.real, ss.imag

    out[0] = (g_v - p_v - par[1] * (w_v - w_b)) / par[0]
    out[1] = c * w_v
    out[2] = (par[6] - par[2] * w_v - g_v) / par[3]
    out[3] = (par[4] * (par[7] - q_v) - x_v) / par[5]
    out[4] = (g_s - p_s - par[10] * (w_s - w_b)) / par[9]
    out[5] = c * w_s
    out[6] = (par[15] - par[11] * w_s - g_s) / par[12]
    out[7] = (par[13] * (par[16] - q_s) - x_s) / par[14]
    out[8] = (phi_b - xi) / tau
    if alg is not None:
        alg[0] = p_v
        alg[1] = q_v
        alg[2] = p_s
        alg[3] = q_s
        alg[4] = abs(vb)
        alg[5] = phi_b
        alg[6] = w_b


def rk4_simulate(x0, par, net, n_steps, k_switch, dt, states, alg):
    """Fixed-step RK4 from ``x0``; the closed-switch network applies from step ``k_switch``.

    Writes ``n_steps + 1`` samples into ``states`` (rows, ``N_STATES`` wide)
    and ``alg``. Returns the number of samples written; fewer than
    ``n_steps + 1`` means the state diverged.
    """
    par = [float(v) for v in par]
    rows = [tuple(complex(v) for v in net[0]), tuple(complex(v) for v in net[1])]
    n = N_STATES
    x = [float(v) for v in x0]
    k1 = [0.0] * n
    k2 = [0.0] * n
    k3 = [0.0] * n
    k4 = [0.0] * n
    a = [0.0] * N_ALG
    h2 = 0.5 * dt
    h6 = dt / 6.0
    for k in range(n_steps + 1):
        row = rows[1] if k >= k_switch else rows[0]
        _stage(x, par, row, k1, a)
        states[k, :] = x
        alg[k, :] = a
        if k == n_steps:
            break
        _stage([x[i] + h2 * k1[i] for i in range(n)], par, row, k2)
        _stage([x[i] + h2 * k2[i] for i in range(n)], par, row, k3)
        _stage([x[i] + dt * k3[i] for i in range(n)], par, row, k4)
        x = [x[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) for i in range(n)]
        for i in (0, 2, 3, 4, 6, 7):
            if not abs(x[i]) < DIVERGED:
                return k + 1
        for i in (1, 5, 8):
            if not math.isfinite(x[i]):
                return k + 1
    return n_steps + 1
