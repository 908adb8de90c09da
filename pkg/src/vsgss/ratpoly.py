"""Polynomials, rational functions and 2x2 rational matrices in the Laplace variable.

Rational functions are kept in factored form (gain, zeros, poles) so that
products and inverses never re-extract roots: a pole produced at one step of
an elimination is bit-identical wherever it reappears, and exact pole-zero
pairs cancel exactly under :func:`minreal`. Only sums form new numerator
coefficients whose roots must be computed; those numerators are formed in
exact rational arithmetic from the (binary, hence rational) operand roots and
their roots are isolated with ball arithmetic, so nearly coincident roots of
the two machines stay resolved. Coefficients are ascending
(``c[0] + c[1] s + ...``).
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass

import flint
import numpy as np
import scipy.linalg

from .errors import PoleProximityError, SingularError

__all__ = [
    "Polynomial",
    "RationalFunction",
    "RatMatrix2",
    "PoleZeroSet",
    "roots",
    "minreal",
    "mat2_inv",
    "evaluate",
    "FLUSH_RTOL",
]

FLUSH_RTOL = 1e-14
# a sum whose every coefficient cancels this far is the zero function
ZERO_SUM_RTOL = 1e-10
# sums merge denominator roots closer than this (relative) into one factor
LIKE_ROOT_RTOL = 1e-12
_POLE_PROXIMITY = 1e-12
_REAL_SNAP = 1e-12
# working precision (bits) for isolating the roots of exact sum numerators
_ROOT_PREC = 128


def _strip(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1]


class Polynomial:
    """Real polynomial with ascending coefficients.

    Trailing zeros are stripped, so the leading coefficient is nonzero except
    for the zero polynomial ``[0.0]``. A sum coefficient is flushed to zero
    when it is below ``FLUSH_RTOL`` of the magnitudes that produced it
    (cancellation noise). Nothing is flushed relative to the largest
    coefficient: a wide root spread legitimately puts coefficients many
    decades apart.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0.0,)):
        if isinstance(coeffs, Polynomial):
            c = coeffs.coeffs
        else:
            c = np.atleast_1d(np.asarray(coeffs, dtype=float)).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        c = _strip(c)
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_roots(cls, rts, gain: float = 1.0) -> "Polynomial":
        rts = np.asarray(rts, dtype=complex)
        c = np.array([1.0 + 0j])
        for r in rts:
            c = np.concatenate([[0.0], c]) - r * np.concatenate([c, [0.0]])
        scale = max(1.0, float(np.max(np.abs(c))))
        if np.max(np.abs(c.imag)) > 1e-8 * scale:
            raise ValueError("roots are not closed under conjugation")
        return cls(gain * c.real)

    @property
    def degree(self) -> int:
        """Degree; ``-1`` for the zero polynomial."""
        return -1 if self.is_zero else self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, s):
        """Horner evaluation; ``s`` may be a complex scalar or array."""
        s = np.asarray(s)
        acc = np.zeros_like(s, dtype=np.result_type(s, float))
        for c in self.coeffs[::-1]:
            acc = acc * s + c
        return acc if acc.ndim else acc[()]

    def _binary(self, other) -> "Polynomial":
        return other if isinstance(other, Polynomial) else Polynomial([other])

    def __add__(self, other):
        other = self._binary(other)
        a, b = self.coeffs, other.coeffs
        n = max(a.size, b.size)
        a = np.pad(a, (0, n - a.size))
        b = np.pad(b, (0, n - b.size))
        c = a + b
        # exact cancellation between operands, judged per coefficient; a
        # global threshold would wipe out legitimately small coefficients
        mag = np.abs(a) + np.abs(b)
        c = np.where(np.abs(c) <= FLUSH_RTOL * mag, 0.0, c)
        return Polynomial(c)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._binary(other))

    def __rsub__(self, other):
        return self._binary(other) - self

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return self.scale(other)
        return Polynomial(np.convolve(self.coeffs, self._binary(other).coeffs))

    __rmul__ = __mul__

    def scale(self, k: float) -> "Polynomial":
        return Polynomial(float(k) * self.coeffs)

    def deriv(self) -> "Polynomial":
        if self.coeffs.size == 1:
            return Polynomial([0.0])
        return Polynomial(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def roots(self) -> np.ndarray:
        return roots(self)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.size == other.coeffs.size and bool(np.all(self.coeffs == other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()!r})"


# ---------------------------------------------------------------------------
# root finding


def _companion(monic_low: np.ndarray) -> np.ndarray:
    n = monic_low.size
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -monic_low
    return comp


def _aberth(c: np.ndarray, max_iter: int = 500) -> np.ndarray:
    """Aberth-Ehrlich simultaneous iteration on ascending coefficients ``c``."""
    n = c.size - 1
    p = Polynomial(c)
    dp = p.deriv()
    radius = 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    for _ in range(max_iter):
        ratio = p(z) / dp(z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        corr = ratio / (1.0 - ratio * np.sum(1.0 / diff, axis=1))
        z = z - corr
        if np.all(np.abs(corr) <= 1e-15 * np.maximum(1.0, np.abs(z))):
            break
    return z


def _pair_conjugates(r: np.ndarray) -> np.ndarray:
    r = r.astype(complex).copy()
    scale = np.maximum(1.0, np.abs(r))
    near_real = np.abs(r.imag) <= _REAL_SNAP * scale
    r[near_real] = r[near_real].real
    upper = [i for i in range(r.size) if r[i].imag > 0]
    lower = [i for i in range(r.size) if r[i].imag < 0]
    pairs = []
    for i in sorted(upper, key=lambda k: (r[k].real, r[k].imag)):
        if not lower:
            break
        j = min(lower, key=lambda k: abs(r[k] - np.conj(r[i])))
        lower.remove(j)
        pairs.append((i, j))
    for i, j in pairs:
        re = 0.5 * (r[i].real + r[j].real)
        im = 0.5 * (r[i].imag - r[j].imag)
        r[i], r[j] = complex(re, im), complex(re, -im)
    leftover = [i for i in upper if i not in {a for a, _ in pairs}] + lower
    for i in leftover:
        r[i] = r[i].real
    return r


def _sort_roots(r: np.ndarray) -> np.ndarray:
    order = np.lexsort((r.imag, r.real))
    return r[order]


def roots(p: Polynomial) -> np.ndarray:
    """All complex roots of ``p``, sorted by real then imaginary part.

    Companion-matrix eigenvalues after balancing, polished with two Newton
    steps (a step is kept only if it lowers ``|p(r)|``). Aberth-Ehrlich is the
    fallback when the eigenvalue iteration fails. Conjugate pairs are exact.
    """
    if not isinstance(p, Polynomial):
        p = Polynomial(p)
    if p.degree < 1:
        raise ValueError(f"roots needs degree >= 1, got degree {p.degree}")
    c = p.coeffs
    nzero = int(np.flatnonzero(c)[0])
    c = c[nzero:]
    found = [np.zeros(nzero, dtype=complex)]
    if c.size > 1:
        comp = _companion(c[:-1] / c[-1])
        try:
            try:
                with np.errstate(invalid="raise", over="raise"):
                    bal, _ = scipy.linalg.matrix_balance(comp, permute=False)
            except FloatingPointError:  # scaling overflow on extreme coefficient spreads
                bal = comp
            r = np.linalg.eigvals(bal)
            if not np.all(np.isfinite(r)):
                raise np.linalg.LinAlgError("non-finite eigenvalues")
        except np.linalg.LinAlgError:
            r = _aberth(c)
        poly = Polynomial(c)
        dpoly = poly.deriv()
        r = r.astype(complex)
        with np.errstate(over="ignore", invalid="ignore"):
            # non-finite residuals compare false and keep the eigenvalue
            for _ in range(2):
                f = poly(r)
                fp = dpoly(r)
                ok = (fp != 0) & np.isfinite(fp) & np.isfinite(f)
                cand = r.copy()
                cand[ok] = r[ok] - f[ok] / fp[ok]
                better = np.abs(poly(cand)) < np.abs(f)
                r = np.where(better, cand, r)
        found.append(r)
    return _sort_roots(_pair_conjugates(np.concatenate(found)))


# ---------------------------------------------------------------------------
# rational functions


def _as_complex_array(x) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=complex)).ravel()
    return _sort_roots(a) if a.size else a


def _match_roots(a: np.ndarray, b: np.ndarray, rtol: float):
    """Greedy multiset matching; returns index pairs ``(i, j)`` with ``|a_i - b_j|`` small."""
    if a.size == 0 or b.size == 0:
        return []
    dist = np.abs(a[:, None] - b[None, :]) / np.maximum(1.0, np.abs(b))[None, :]
    pairs = []
    dist = dist.copy()
    while True:
        flat = int(np.argmin(dist))
        i, j = divmod(flat, dist.shape[1])
        if not dist[i, j] <= rtol:
            break
        pairs.append((i, j))
        dist[i, :] = np.inf
        dist[:, j] = np.inf
    return pairs


def _without(arr, drop) -> np.ndarray:
    return np.array([x for i, x in enumerate(arr) if i not in drop], dtype=complex)

class RationalFunction:
    """Ratio of real polynomials ``gain * prod(s - z) / prod(s - p)``.

    The denominator is monic; ``gain`` is the ratio of leading coefficients.
    The zero function has no zeros or poles. Arithmetic never cancels a pole
    against a zero, use :meth:`minreal` for that. Sums do merge denominator
    roots that coincide (relative ``LIKE_ROOT_RTOL``), so ``a/d + b/d`` stays
    over ``d``.
    """

    __slots__ = ("gain", "zeros", "poles", "_num", "_den")

    def __init__(self, num=0.0, den=1.0):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = den if isinstance(den, Polynomial) else Polynomial(den)
        if den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")
        if num.is_zero:
            self._set(0.0, (), ())
            return
        zeros = roots(num) if num.degree >= 1 else ()
        poles = roots(den) if den.degree >= 1 else ()
        self._set(num.lead / den.lead, zeros, poles)

    def _set(self, gain, zeros, poles):
        gain = float(gain)
        if not np.isfinite(gain):
            raise ValueError("non-finite gain")
        if gain == 0.0:
            zeros, poles = (), ()
        self.gain = gain
        self.zeros = _as_complex_array(zeros)
        self.poles = _as_complex_array(poles)
        self.zeros.setflags(write=False)
        self.poles.setflags(write=False)
        self._num = None
        self._den = None

    @classmethod
    def from_zpk(cls, zeros, poles, gain) -> "RationalFunction":
        obj = cls.__new__(cls)
        obj._set(gain, zeros, poles)
        return obj

    @classmethod
    def constant(cls, value: float) -> "RationalFunction":
        return cls.from_zpk((), (), value)

    @classmethod
    def s(cls) -> "RationalFunction":
        """The Laplace variable itself."""
        return cls.from_zpk((0.0,), (), 1.0)

    @classmethod
    def coerce(cls, x) -> "RationalFunction":
        if isinstance(x, RationalFunction):
            return x
        if isinstance(x, Polynomial):
            return cls(x)
        if isinstance(x, numbers.Real):
            return cls.constant(float(x))
        raise TypeError(f"cannot convert {type(x).__name__} to RationalFunction")

    # -- coefficient views --------------------------------------------------
    @property
    def num(self) -> Polynomial:
        if self._num is None:
            self._num = Polynomial.from_roots(self.zeros, self.gain)
        return self._num

    @property
    def den(self) -> Polynomial:
        if self._den is None:
            self._den = Polynomial.from_roots(self.poles, 1.0)
        return self._den

    @property
    def is_zero(self) -> bool:
        return self.gain == 0.0

    @property
    def num_degree(self) -> int:
        return -1 if self.is_zero else self.zeros.size

    @property
    def den_degree(self) -> int:
        return self.poles.size

    @property
    def relative_degree(self) -> int:
        return self.den_degree - max(self.num_degree, 0)

    @property
    def is_proper(self) -> bool:
        return self.num_degree <= self.den_degree

    # -- arithmetic ----------------------------------------------------------
    def __mul__(self, other):
        other = RationalFunction.coerce(other)
        if self.is_zero or other.is_zero:
            return RationalFunction.constant(0.0)
        return RationalFunction.from_zpk(
            np.concatenate([self.zeros, other.zeros]),
            np.concatenate([self.poles, other.poles]),
            self.gain * other.gain,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return RationalFunction.from_zpk(self.zeros, self.poles, -self.gain)

    def __add__(self, other):
        other = RationalFunction.coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        pairs = _match_roots(other.poles, self.poles, LIKE_ROOT_RTOL)
        only_other = _without(other.poles, {i for i, _ in pairs})
        only_self = _without(self.poles, {j for _, j in pairs})
        lcm = np.concatenate([self.poles, only_other])
        # zeros shared by both operands factor out of the sum exactly
        zpairs = _match_roots(other.zeros, self.zeros, LIKE_ROOT_RTOL)
        common = np.array([self.zeros[j] for _, j in zpairs], dtype=complex)
        za = _without(self.zeros, {j for _, j in zpairs})
        zb = _without(other.zeros, {i for i, _ in zpairs})
        lead, zeros = _sum_numerator(self.gain, np.concatenate([za, only_other]),
                                     other.gain, np.concatenate([zb, only_self]))
        if lead == 0.0:
            return RationalFunction.constant(0.0)
        return RationalFunction.from_zpk(np.concatenate([common, zeros]), lcm, lead)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-RationalFunction.coerce(other))

    def __rsub__(self, other):
        return RationalFunction.coerce(other) - self

    def inv(self) -> "RationalFunction":
        if self.is_zero:
            raise ZeroDivisionError("inverse of the zero function")
        return RationalFunction.from_zpk(self.poles, self.zeros, 1.0 / self.gain)

    def __truediv__(self, other):
        return self * RationalFunction.coerce(other).inv()

    def __rtruediv__(self, other):
        return RationalFunction.coerce(other) * self.inv()

    def minreal(self, tol: float) -> "RationalFunction":
        return minreal(self, tol)

    # -- evaluation ----------------------------------------------------------
    def _check_poles(self, s):
        if self.poles.size == 0:
            return
        s = np.atleast_1d(s)
        dist = np.abs(s[:, None] - self.poles[None, :]) / np.maximum(1.0, np.abs(self.poles))[None, :]
        if np.any(dist <= _POLE_PROXIMITY):
            raise PoleProximityError("evaluation point coincides with a pole")

    def __call__(self, s):
        return evaluate(self, s)

    def evaluate_factored(self, s):
        """Evaluate from the stored roots (independent of :meth:`__call__`)."""
        s = np.asarray(s, dtype=complex)
        self._check_poles(s)
        if self.is_zero:
            return np.zeros_like(s)
        num = np.prod(s[..., None] - self.zeros, axis=-1) if self.zeros.size else np.ones_like(s)
        den = np.prod(s[..., None] - self.poles, axis=-1) if self.poles.size else np.ones_like(s)
        out = self.gain * num / den
        return out if out.ndim else out[()]

    def dc_value(self) -> float:
        return float(np.real(evaluate(self, 0.0)))

    # -- comparison / serialization -----------------------------------------
    def allclose(self, other, rtol=1e-10, atol=0.0) -> bool:
        """Coefficient-wise comparison after monic normalization of the denominator."""
        other = RationalFunction.coerce(other)
        for a, b in ((self.num.coeffs, other.num.coeffs), (self.den.coeffs, other.den.coeffs)):
            n = max(a.size, b.size)
            a = np.pad(a, (0, n - a.size))
            b = np.pad(b, (0, n - b.size))
            scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-300)
            if np.max(np.abs(a - b)) > atol + rtol * scale:
                return False
        return True

    def to_dict(self) -> dict:
        return {"num": self.num.coeffs.tolist(), "den": self.den.coeffs.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "RationalFunction":
        return cls(doc["num"], doc["den"])

    def __repr__(self):
        return f"RationalFunction(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"


# ---------------------------------------------------------------------------
# exact sums


def _q(x) -> flint.fmpq:
    n, d = float(x).as_integer_ratio()
    return flint.fmpq(n, d)


def _exact_poly(rts, gain) -> flint.fmpq_poly:
    """``gain * prod(s - r)`` with exact rational coefficients.

    Conjugate pairs enter as real quadratics, so the product is exact for
    binary roots; a complex root without an exact partner is snapped first.
    """
    r = np.asarray(rts, dtype=complex)
    upper = sorted((x for x in r if x.imag > 0), key=lambda x: (x.real, x.imag))
    lower = sorted((x.conjugate() for x in r if x.imag < 0), key=lambda x: (x.real, x.imag))
    if upper != lower:
        r = _pair_conjugates(r)
        upper = [x for x in r if x.imag > 0]
    p = flint.fmpq_poly([_q(gain)])
    for x in r:
        if x.imag == 0:
            p *= flint.fmpq_poly([-_q(x.real), 1])
    for x in upper:
        re, im = _q(x.real), _q(x.imag)
        p *= flint.fmpq_poly([re * re + im * im, -2 * re, 1])
    return p


def _fmpq_float(x: flint.fmpq) -> float:
    return int(x.p) / int(x.q)


_FLUSH_Q = _q(FLUSH_RTOL)
_ZERO_SUM_Q = _q(ZERO_SUM_RTOL)


def _sum_numerator(ga, ra, gb, rb):
    """Roots and leading coefficient of ``ga*prod(s - ra) + gb*prod(s - rb)``.

    Coefficients cancelling below ``FLUSH_RTOL`` of their two terms are set to
    zero (they are rounding residue of an exact cancellation), and when every
    coefficient cancels below ``ZERO_SUM_RTOL`` the sum is taken to vanish
    identically. Returns ``(0.0, [])`` for the zero polynomial.
    """
    a = _exact_poly(ra, ga).coeffs()
    b = _exact_poly(rb, gb).coeffs()
    n = max(len(a), len(b))
    zero = flint.fmpq(0)
    a += [zero] * (n - len(a))
    b += [zero] * (n - len(b))
    c = []
    total = True
    for x, y in zip(a, b):
        t = x + y
        mag = abs(x) + abs(y)
        if t != 0 and abs(t) <= _FLUSH_Q * mag:
            t = zero
        total = total and abs(t) <= _ZERO_SUM_Q * mag
        c.append(t)
    if total:
        return 0.0, np.zeros(0, dtype=complex)
    num = flint.fmpq_poly(c)
    if num.degree() < 0:
        return 0.0, np.zeros(0, dtype=complex)
    lead = _fmpq_float(num.coeffs()[-1])
    if num.degree() == 0:
        return lead, np.zeros(0, dtype=complex)
    old = flint.ctx.prec
    flint.ctx.prec = _ROOT_PREC
    try:
        found = [complex(root.mid()) for root, m in num.complex_roots() for _ in range(m)]
    finally:
        flint.ctx.prec = old
    return lead, _sort_roots(_pair_conjugates(np.array(found, dtype=complex)))


def evaluate(r: RationalFunction, s):
    """Horner evaluation ``num(s) / den(s)``.

    Raises :class:`PoleProximityError` within ``1e-12`` (relative) of a pole.
    """
    s = np.asarray(s, dtype=complex)
    r._check_poles(s)
    out = r.num(s) / r.den(s)
    return out


def minreal(r: RationalFunction, tol: float) -> RationalFunction:
    """Cancel zero/pole pairs closer than ``tol * max(1, |pole|)``.

    Pairs are taken greedily by ascending distance over deterministically
    sorted roots; the gain is unchanged.
    """
    if not tol > 0:
        raise ValueError("minreal tolerance must be positive")
    if r.is_zero or r.zeros.size == 0 or r.poles.size == 0:
        return r
    pairs = _match_roots(r.zeros, r.poles, tol)
    if not pairs:
        return r
    gone_z = {i for i, _ in pairs}
    gone_p = {j for _, j in pairs}
    zeros = [z for i, z in enumerate(r.zeros) if i not in gone_z]
    poles = [p for j, p in enumerate(r.poles) if j not in gone_p]
    return RationalFunction.from_zpk(zeros, poles, r.gain)


# ---------------------------------------------------------------------------
# 2x2 matrices


def _op(x: RationalFunction, tol):
    return x if tol is None else minreal(x, tol)


class RatMatrix2:
    """2x2 matrix of rational functions, indexed ``m[i, j]``."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        rows = tuple(tuple(RationalFunction.coerce(x) for x in row) for row in entries)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("RatMatrix2 needs exactly 2x2 entries")
        self.entries = rows

    @classmethod
    def identity(cls) -> "RatMatrix2":
        return cls([[1.0, 0.0], [0.0, 1.0]])

    @classmethod
    def diag(cls, a, b) -> "RatMatrix2":
        return cls([[a, 0.0], [0.0, b]])

    def __getitem__(self, idx) -> RationalFunction:
        i, j = idx
        return self.entries[i][j]

    def map(self, fn) -> "RatMatrix2":
        return RatMatrix2([[fn(x) for x in row] for row in self.entries])

    def add(self, other: "RatMatrix2", tol=None) -> "RatMatrix2":
        return RatMatrix2(
            [[_op(self[i, j] + other[i, j], tol) for j in range(2)] for i in range(2)]
        )

    def sub(self, other: "RatMatrix2", tol=None) -> "RatMatrix2":
        return RatMatrix2(
            [[_op(self[i, j] - other[i, j], tol) for j in range(2)] for i in range(2)]
        )

    def mul(self, other: "RatMatrix2", tol=None) -> "RatMatrix2":
        def entry(i, j):
            left = _op(self[i, 0] * other[0, j], tol)
            right = _op(self[i, 1] * other[1, j], tol)
            return _op(left + right, tol)

        return RatMatrix2([[entry(i, j) for j in range(2)] for i in range(2)])

    def scale(self, k, tol=None) -> "RatMatrix2":
        k = RationalFunction.coerce(k)
        return self.map(lambda x: _op(x * k, tol))

    __add__ = add
    __sub__ = sub
    __matmul__ = mul

    def det(self, tol=None) -> RationalFunction:
        ad = _op(self[0, 0] * self[1, 1], tol)
        bc = _op(self[0, 1] * self[1, 0], tol)
        return _op(ad - bc, tol)

    def inv(self, tol=None) -> "RatMatrix2":
        return mat2_inv(self, tol)

    def s_identity_minus(self, tol=None) -> "RatMatrix2":
        """``s I - self``."""
        s = RationalFunction.s()
        return RatMatrix2([[s, 0.0], [0.0, s]]).sub(self, tol)

    def minreal(self, tol) -> "RatMatrix2":
        return self.map(lambda x: minreal(x, tol))

    def evaluate(self, s) -> np.ndarray:
        """Values at ``s``; output shape ``s.shape + (2, 2)``."""
        s = np.asarray(s, dtype=complex)
        out = np.empty(s.shape + (2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[..., i, j] = evaluate(self[i, j], s)
        return out

    def __repr__(self):
        return f"RatMatrix2({[list(r) for r in self.entries]!r})"


def mat2_inv(m: RatMatrix2, tol=None) -> RatMatrix2:
    """Adjugate over determinant; ``tol`` applies :func:`minreal` to each step."""
    det = m.det(tol)
    if det.is_zero:
        norms = [float(np.max(np.abs((m[0, 0] * m[1, 1]).num.coeffs))),
                 float(np.max(np.abs((m[0, 1] * m[1, 0]).num.coeffs)))]
        raise SingularError(
            f"singular 2x2 rational matrix: determinant numerator vanished "
            f"(product term norms {norms[0]:.3e}, {norms[1]:.3e})"
        )
    dinv = det.inv()
    adj = [[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]
    return RatMatrix2([[_op(adj[i][j] * dinv, tol) for j in range(2)] for i in range(2)])


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoleZeroSet:
    poles: np.ndarray
    zeros: np.ndarray
    gain: float

    @classmethod
    def from_rational(cls, r: RationalFunction) -> "PoleZeroSet":
        return cls(poles=np.array(r.poles), zeros=np.array(r.zeros), gain=r.gain)

    def to_rational(self) -> RationalFunction:
        return RationalFunction.from_zpk(self.zeros, self.poles, self.gain)
