# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; same layouts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, fabs, isfinite, sqrt

cnp.import_array()

DEF NS = 9
DEF NA = 7

N_STATES = NS
N_ALG = NA
BACKEND = "cython"


def zoh_step_series(ad, bd, c, double d, Py_ssize_t n_steps):
    """Output of ``x+ = ad x + bd``, ``y = c x + d`` for a unit step from ``x = 0``."""
    cdef double[:, ::1] A = np.ascontiguousarray(ad, dtype=float)
    cdef double[::1] B = np.ascontiguousarray(bd, dtype=float)
    cdef double[::1] C = np.ascontiguousarray(c, dtype=float)
    cdef Py_ssize_t n = A.shape[0], i, j, k
    out = np.empty(n_steps + 1)
    cdef double[::1] y = out
    cdef double[::1] x = np.zeros(n)
    cdef double[::1] xn = np.zeros(n)
    cdef double acc
    for k in range(n_steps + 1):
        acc = 0.0
        for i in range(n):
            acc += C[i] * x[i]
        y[k] = acc + d
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            xn[i] = acc + B[i]
        for i in range(n):
            x[i] = xn[i]
    return out


cdef inline void _stage(double* x, double* par, double complex* row,
                        double* out, double* alg) noexcept nogil:
    cdef double c = par[18], tau = par[19]
    cdef double mag_v = par[8] + x[3], mag_s = par[17] + x[7]
    cdef double complex e_v = mag_v * cos(x[1]) + 1j * (mag_v * sin(x[1]))
    cdef double complex e_s = mag_s * cos(x[5]) + 1j * (mag_s * sin(x[5]))
    cdef double complex vb = row[0] * e_v + row[1] * e_s
    cdef double complex i_v = (e_v - vb) / row[2]
    cdef double complex i_s = (e_s - vb) / row[4]
    cdef double complex sv = (e_v - row[3] * i_v) * i_v.conjugate()
    cdef double complex ss = (e_s - row[5] * i_s) * i_s.conjugate()
    cdef double complex rot = vb * (cos(x[5]) - 1j * sin(x[5]))
    cdef double phi_b = x[5] + atan2(rot.imag, rot.real)
    cdef double w_b = (phi_b - x[8]) / (tau * c)
    cdef double p_v = sv.real, q_v = sv.imag, p_s = ss.real, q_s = ss.imag
    out[0] = (x[2] - p_v - par[1] * (x[0] - w_b)) / par[0]
    out[1] = c * x[0]
    out[2] = (par[6] - par[2] * x[0] - x[2]) / par[3]
    out[3] = (par[4] * (par[7] - q_v) - x[3]) / par[5]
    out[4] = (x[6] - p_s - par[10] * (x[4] - w_b)) / par[9]
    out[5] = c * x[4]
    out[6] = (par[15] - par[11] * x[4] - x[6]) / par[12]
    out[7] = (par[13] * (par[16] - q_s) - x[7]) / par[14]
    out[8] = (phi_b - x[8]) / tau
    if alg != NULL:
        alg[0] = p_v
        alg[1] = q_v
        alg[2] = p_s
        alg[3] = q_s
        alg[4] = sqrt(vb.real * vb.real + vb.imag * vb.imag)
        alg[5] = phi_b
        alg[6] = w_b


def rk4_simulate(x0, par, net, Py_ssize_t n_steps, Py_ssize_t k_switch, double dt,
                 double[:, ::1] states, double[:, ::1] alg):
    """Fixed-step RK4; see ``_kernels_py.rk4_simulate``."""
    cdef double[::1] p = np.ascontiguousarray(par, dtype=float)
    cdef double complex[:, ::1] rows = np.ascontiguousarray(net, dtype=complex)
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=float)
    cdef double x[NS]
    cdef double xs[NS]
    cdef double k1[NS]
    cdef double k2[NS]
    cdef double k3[NS]
    cdef double k4[NS]
    cdef double a[NA]
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    cdef Py_ssize_t i, k
    cdef double complex* row
    cdef Py_ssize_t written = n_steps + 1
    for i in range(NS):
        x[i] = x0v[i]
    with nogil:
        for k in range(n_steps + 1):
            row = &rows[1, 0] if k >= k_switch else &rows[0, 0]
            _stage(x, &p[0], row, k1, a)
            for i in range(NS):
                states[k, i] = x[i]
            for i in range(NA):
                alg[k, i] = a[i]
            if k == n_steps:
                break
            for i in range(NS):
                xs[i] = x[i] + h2 * k1[i]
            _stage(xs, &p[0], row, k2, NULL)
            for i in range(NS):
                xs[i] = x[i] + h2 * k2[i]
            _stage(xs, &p[0], row, k3, NULL)
            for i in range(NS):
                xs[i] = x[i] + dt * k3[i]
            _stage(xs, &p[0], row, k4, NULL)
            for i in range(NS):
                x[i] = x[i] + h6 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
            if not (fabs(x[0]) < 1e6 and fabs(x[2]) < 1e6 and fabs(x[3]) < 1e6
                    and fabs(x[4]) < 1e6 and fabs(x[6]) < 1e6 and fabs(x[7]) < 1e6
                    and isfinite(x[1]) and isfinite(x[5]) and isfinite(x[8])):
                written = k + 1
                break
    return written
