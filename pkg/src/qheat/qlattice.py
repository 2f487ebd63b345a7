"""q-calculus primitives on the geometric time lattice ``{T q^m}``.

Everything here is a pure function of its arguments. Infinite sums and
products are cut after ``n_terms + 1`` terms; the ``*_tail_bound`` helpers
report the size of what was dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LatticeError, QDomainError

#: Target for the default truncation depth: q**n_terms falls below this.
DEFAULT_TAIL = 1e-20


def _check_q(q):
    if not (0.0 < q < 1.0):
        raise QDomainError(f"q must lie in the open interval (0, 1), got q={q!r}")


def default_n_terms(q):
    """Smallest depth >= 64 with ``q**depth <= 1e-20``."""
    _check_q(q)
    return max(64, math.ceil(math.log(DEFAULT_TAIL) / math.log(q)))


@dataclass(frozen=True)
class QParams:
    """Deformation parameter and truncation controls.

    ``n_terms=None`` picks :func:`default_n_terms`, which keeps the geometric
    tail of a Jackson sum of a bounded integrand below ``1e-20`` relative.
    """

    q: float
    n_terms: int | None = None
    tol: float = 1e-12

    def __post_init__(self):
        _check_q(self.q)
        if self.n_terms is None:
            object.__setattr__(self, "n_terms", default_n_terms(self.q))
        if int(self.n_terms) != self.n_terms or self.n_terms < 1:
            raise QDomainError(f"n_terms must be a positive integer, got {self.n_terms!r}")
        object.__setattr__(self, "n_terms", int(self.n_terms))
        if not self.tol > 0:
            raise QDomainError(f"tol must be positive, got {self.tol!r}")

    def close(self, a, b, atol=None, rtol=None):
        """Mixed tolerance comparison ``|a - b| <= atol + rtol * |b|``."""
        atol = self.tol if atol is None else atol
        rtol = self.tol if rtol is None else rtol
        return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= atol + rtol * np.abs(b)))


def q_number(alpha, q):
    """``[alpha]_q = (1 - q**alpha) / (1 - q)``."""
    _check_q(q)
    return (1.0 - q**alpha) / (1.0 - q)


def q_factorial(n, q):
    """``[n]_q! = [1]_q [2]_q ... [n]_q`` with ``[0]_q! = 1``."""
    _check_q(q)
    if int(n) != n or n < 0:
        raise QDomainError(f"q_factorial needs a nonnegative integer, got {n!r}")
    out = 1.0
    for k in range(1, int(n) + 1):
        out *= q_number(k, q)
    return out


@dataclass(frozen=True)
class QLattice:
    """Points ``T q^m`` for ``m = 0..depth`` followed by a terminal 0."""

    scale: float
    q: float
    depth: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_q(self.q)
        if not self.scale > 0:
            raise LatticeError(f"lattice scale T must be positive, got {self.scale!r}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise LatticeError(f"lattice depth must be a positive integer, got {self.depth!r}")
        object.__setattr__(self, "depth", int(self.depth))
        pts = np.append(self.scale * self.q ** np.arange(self.depth + 1), 0.0)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.depth + 2

    @property
    def zero_index(self):
        return self.depth + 1

    def index_of(self, t):
        """Index of lattice point ``t``; raises :class:`LatticeError` off-lattice."""
        if t == 0:
            return self.zero_index
        j = geometric_index(t, self.scale, self.q)
        if j > self.depth:
            raise LatticeError(f"t={t!r} lies below the lattice depth {self.depth}")
        return j

    def is_interior(self, idx):
        """True when ``points[idx] > 0`` and ``q * points[idx]`` is also a lattice point."""
        return 0 <= idx < self.depth


def geometric_index(t, scale, q, rtol=1e-12):
    """Return ``j >= 0`` with ``t == scale * q**j`` (to ``rtol``), else raise."""
    if not t > 0:
        raise LatticeError(f"t={t!r} is not a positive lattice point")
    j = int(round(math.log(t / scale) / math.log(q)))
    if j < 0 or not math.isclose(scale * q**j, t, rel_tol=rtol, abs_tol=0.0):
        raise LatticeError(f"t={t!r} is not on the lattice {{{scale}*{q}^m}}")
    return j


@dataclass(frozen=True)
class LatticeFn:
    """Samples of a function at every lattice point, the terminal 0 included."""

    lattice: QLattice
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape[0] != len(self.lattice):
            raise LatticeError(
                f"expected {len(self.lattice)} samples (one per lattice point), got {vals.shape[0]}"
            )
        if not np.all(np.isfinite(vals)):
            raise LatticeError("lattice function has non-finite samples")
        object.__setattr__(self, "values", vals)

    @classmethod
    def sample(cls, lattice, f):
        return cls(lattice, _evaluate(f, lattice.points))


def dq(f: LatticeFn, idx: int):
    """q-derivative ``(f(t) - f(qt)) / (t (1 - q))`` at lattice index ``idx``.

    Undefined at ``t = 0`` and at the deepest positive point (its q-image is
    not stored), both rejected.
    """
    lat = f.lattice
    if idx == lat.zero_index or idx == -1:
        raise LatticeError("D_q is not evaluated at t = 0")
    if not lat.is_interior(idx):
        raise LatticeError(f"index {idx} has no q-neighbour on a lattice of depth {lat.depth}")
    t = lat.points[idx]
    return (f.values[idx] - f.values[idx + 1]) / (t * (1.0 - lat.q))


def dq_poly(coeffs, q):
    """Coefficients (lowest degree first) of ``D_q p`` for ``p = sum c_n x^n``.

    Uses ``D_q x^n = [n]_q x^(n-1)``; no cancellation at small ``x``.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.size <= 1:
        return np.zeros(1)
    n = np.arange(1, c.size)
    return c[1:] * (1.0 - q**n) / (1.0 - q)


def _evaluate(f, pts):
    """Evaluate a vectorised callable, falling back to a point loop for scalar ones."""
    try:
        out = np.asarray(f(pts))
        if out.shape[:1] == pts.shape:
            return out
        if out.ndim == 0:
            return np.full(pts.shape, out[()])
    except (TypeError, ValueError):
        pass
    return np.asarray([f(float(p)) for p in pts])


def jackson_integral(f: Callable, x, params: QParams):
    """``(1-q) x sum_{m=0}^{n_terms} q^m f(x q^m)``.

    ``f`` may be vectorised (array in, array out) or scalar.
    """
    if x < 0:
        raise QDomainError(f"Jackson integral needs x >= 0, got x={x!r}")
    if x == 0:
        return 0.0
    q = params.q
    w = q ** np.arange(params.n_terms + 1)
    vals = _evaluate(f, x * w)
    if not np.all(np.isfinite(vals)):
        raise QDomainError("integrand produced non-finite samples")
    return (1.0 - q) * x * math.fsum(w * vals)


def jackson_tail_bound(x, sup_abs_f, params: QParams):
    """Bound on the dropped terms of :func:`jackson_integral`."""
    return x * params.q ** (params.n_terms + 1) * sup_abs_f


def window_sum(values, width):
    """``out[m] = sum(values[m:m+width])`` along axis 0 for all full windows.

    Accumulates from the deep (small) end so each window keeps the relative
    accuracy of its own terms rather than of the grand total.
    """
    v = np.asarray(values)
    rev = np.cumsum(v[::-1], axis=0)[::-1]
    rev = np.concatenate([rev, np.zeros((1,) + v.shape[1:], dtype=rev.dtype)])
    n_out = v.shape[0] - width + 1
    return rev[:n_out] - rev[width : width + n_out]


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


_SPLIT = 134217729.0  # 2**27 + 1


def _two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul(x, y):
    p, e = _two_prod(x[0], y[0])
    e += x[0] * y[1] + x[1] * y[0]
    return _two_sum(p, e)


def _dd_add(x, y):
    s, e = _two_sum(x[0], y[0])
    e += x[1] + y[1]
    return _two_sum(s, e)


def _dd_div(x, y):
    c = x[0] / y[0]
    p, e = _two_prod(c, y[0])
    cc = (x[0] - p - e + x[1] - c * y[1]) / y[0]
    return _two_sum(c, cc)


def e_q_terms_needed(x, params: QParams):
    """Terms kept by :func:`e_q`: ``n_terms`` or enough for its own ratio ``(1-q)|x|``."""
    r = (1.0 - params.q) * abs(x)
    if r == 0.0:
        return params.n_terms
    return max(params.n_terms, math.ceil(math.log(DEFAULT_TAIL) / math.log(r)))


def e_q(x, params: QParams):
    """Small q-exponential ``sum_k x^k / [k]_q!``.

    The tail ratio tends to ``(1-q)|x|``, so the term count grows near the
    edge of the convergence disc (see :func:`e_q_terms_needed`). Terms are
    carried in double-double arithmetic: for negative ``x`` the series
    alternates with terms far larger than its sum.
    """
    q = params.q
    if not (1.0 - q) * abs(x) < 1.0:
        raise QDomainError(f"e_q series diverges: need (1-q)|x| < 1, got x={x!r}, q={q!r}")
    xx = (float(x), 0.0)
    qq = (float(q), 0.0)
    qk = (1.0, 0.0)  # q^(k-1)
    bracket = (0.0, 0.0)  # [k]_q = 1 + q + ... + q^(k-1)
    term = (1.0, 0.0)
    parts = [1.0]
    for _ in range(e_q_terms_needed(x, params)):
        bracket = _dd_add(bracket, qk)
        qk = _dd_mul(qk, qq)
        term = _dd_div(_dd_mul(term, xx), bracket)
        parts.extend(term)
        if term[0] == 0.0:
            break
    return math.fsum(parts)


def _E_q_factors(x, params):
    q = params.q
    fac = (1.0 - q) * q ** np.arange(params.n_terms + 1) * x
    if np.any(fac <= -1.0):
        raise QDomainError(f"E_q product has a nonpositive factor at x={x!r}")
    return fac


def log_E_q(x, params: QParams):
    """``log E_q(x)`` from the product form; safe where ``E_q`` overflows."""
    return math.fsum(np.log1p(_E_q_factors(x, params)))


def E_q(x, params: QParams):
    """Big q-exponential as the product ``prod_i (1 + (1-q) q^i x)``."""
    return math.exp(log_E_q(x, params))


def E_q_series(x, params: QParams):
    """Series form ``sum_k q^(k(k-1)/2) x^k / [k]_q!``; cross-check for :func:`E_q`."""
    q = params.q
    term = 1.0
    terms = [term]
    for k in range(1, params.n_terms + 1):
        term *= q ** (k - 1) * x / q_number(k, q)
        terms.append(term)
        if term == 0.0:
            break
    return math.fsum(terms)


def E_q_tail_bound(x, params: QParams):
    """Relative error bound ``exp(|x| q^(n+1)) - 1`` of the truncated product."""
    return math.expm1(abs(x) * params.q ** (params.n_terms + 1))
