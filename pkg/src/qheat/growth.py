"""Growth function gamma_v(lambda, t) and the weighted q-integrals built on it.

``gamma_inv(lam, t) = prod_{i=0}^{N} (1 + (1-q) lam t q^i v(q^i t))`` is the
stored primitive; every factor is >= 1 so the product never cancels.
``gamma`` is its reciprocal. Note the coefficient ``v`` is sampled at
``q^i t``, not ``q^i lam t``: with that normalisation
``D_q[gamma_inv(lam, .)](t) = lam v(t) gamma_inv(lam, q t)`` holds exactly for
non-constant ``v`` as well.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LatticeError
from .qlattice import QLattice, QParams, _evaluate, geometric_index, jackson_integral, window_sum


@dataclass(frozen=True)
class ConstantFn:
    a: float

    def __call__(self, t):
        return np.full(np.shape(t), float(self.a)) if np.ndim(t) else float(self.a)


@dataclass(frozen=True)
class AffineFn:
    """``t -> a + b t``."""

    a: float
    b: float

    def __call__(self, t):
        return self.a + self.b * np.asarray(t, dtype=float) if np.ndim(t) else self.a + self.b * t


@dataclass(frozen=True)
class CoefficientProfile:
    """Time coefficient ``v`` with declared bounds ``0 < alpha <= v <= beta``.

    The bounds are hypotheses supplied by the caller. They are checked against
    samples by :meth:`check`, which :class:`GrowthEvaluator` runs over every
    point it will touch.
    """

    upsilon: Callable
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0 < self.alpha <= self.beta < math.inf):
            raise ValueError(
                f"need 0 < alpha <= beta < inf, got alpha={self.alpha!r}, beta={self.beta!r}"
            )

    def margin(self, points):
        """Smallest of ``v - alpha`` and ``beta - v`` over ``points`` (negative = violated)."""
        v = np.asarray(_evaluate(self.upsilon, np.asarray(points, dtype=float)), dtype=float)
        if not np.all(np.isfinite(v)):
            return -math.inf
        return float(min(np.min(v - self.alpha), np.min(self.beta - v)))

    def check(self, points):
        m = self.margin(points)
        if m < 0:
            raise ValueError(
                f"coefficient leaves its declared bounds [{self.alpha}, {self.beta}] "
                f"(worst margin {m:.3g})"
            )


@dataclass
class GrowthEvaluator:
    """Evaluates ``gamma_inv`` on the lattice ``{T q^j}`` with a per-lambda memo.

    Points ``T q^j`` are addressable for ``j <= depth + n_terms + 1`` so that
    q-shifted arguments and every term of a lattice Jackson sum are covered.
    Off-lattice arguments are rejected.
    """

    profile: CoefficientProfile
    params: QParams
    horizon: float
    depth: int | None = None
    validate: bool = True
    memoize: bool = True
    lattice: QLattice = field(init=False)
    _memo: dict = field(init=False, default_factory=dict, repr=False)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.depth is None:
            self.depth = self.params.n_terms
        self.lattice = QLattice(self.horizon, self.params.q, self.depth)
        N = self.params.n_terms
        # factor indices needed: G_j for j <= depth+N+1 uses factors up to depth+2N+1
        self.ext_points = self.horizon * self.params.q ** np.arange(self.depth + 2 * N + 2)
        self.upsilon_ext = np.asarray(
            _evaluate(self.profile.upsilon, self.ext_points), dtype=float
        )
        if self.validate:
            self.profile.check(np.append(self.ext_points, 0.0))

    @property
    def n_gamma(self):
        """Number of addressable points ``T q^j`` for ``gamma_inv``."""
        return self.depth + self.params.n_terms + 2

    # -- tables --------------------------------------------------------------
    def log_factors(self, lam):
        """``log1p((1-q) lam t_j v(t_j))`` at every extended point."""
        q = self.params.q
        return np.log1p((1.0 - q) * lam * self.ext_points * self.upsilon_ext)

    def _compute_log_table(self, lam):
        return window_sum(self.log_factors(lam), self.params.n_terms + 1)[: self.n_gamma]

    def log_gamma_inv_table(self, lam):
        """``log gamma_inv(lam, T q^j)`` for ``j = 0 .. depth + n_terms + 1``."""
        lam = float(lam)
        if not lam > 0:
            raise ValueError(f"eigenvalue must be positive, got {lam!r}")
        if not self.memoize:
            return self._compute_log_table(lam)
        tab = self._memo.get(lam)
        if tab is None:
            tab = self._compute_log_table(lam)
            tab.flags.writeable = False
            with self._lock:
                tab = self._memo.setdefault(lam, tab)
        return tab

    def log_gamma_inv_matrix(self, lams):
        """Stack of :meth:`log_gamma_inv_table`, shape ``(n_gamma, K)``."""
        return np.column_stack([self.log_gamma_inv_table(l) for l in lams])

    def clear_memo(self):
        with self._lock:
            self._memo.clear()

    # -- pointwise -----------------------------------------------------------
    def index(self, t):
        j = geometric_index(t, self.horizon, self.params.q)
        if j >= self.n_gamma:
            raise LatticeError(f"t={t!r} lies below the addressable lattice")
        return j

    def _indices(self, t):
        t = np.asarray(t, dtype=float)
        j = np.rint(np.log(t / self.horizon) / math.log(self.params.q)).astype(int)
        ok = (j >= 0) & (j < self.n_gamma)
        ok &= np.isclose(self.horizon * self.params.q ** np.clip(j, 0, None), t, rtol=1e-12, atol=0)
        if not np.all(ok):
            raise LatticeError("argument off the lattice")
        return j

    def gamma_inv(self, lam, t):
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t!r}")
        if not lam > 0:
            raise ValueError(f"eigenvalue must be positive, got {lam!r}")
        if t == 0:
            return 1.0
        return math.exp(self.log_gamma_inv_table(lam)[self.index(t)])

    def gamma(self, lam, t):
        return 1.0 / self.gamma_inv(lam, t)

    def gamma_inv_many(self, lam, t):
        """Vectorised ``gamma_inv`` over an array of lattice points (0 allowed)."""
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        pos = t > 0
        if np.any(pos):
            out[pos] = np.exp(self.log_gamma_inv_table(lam)[self._indices(t[pos])])
        return out

    def identity_residual(self, lam, t, relative=True):
        """``|D_q[gamma_inv(lam, .)](t) - lam v(t) gamma_inv(lam, q t)|``.

        With ``relative`` the residual is divided by ``lam v(t) gamma_inv(lam, q t)``;
        the absolute value grows with ``gamma_inv`` and says nothing for large modes.

        The q-difference is taken as ``gamma_inv(qt) * expm1(log ratio)``, the
        log ratio being the first factor of the window at ``t`` minus the last
        factor of the window at ``qt``. A plain difference of stored values
        would lose every digit once ``(1-q) t`` nears machine epsilon.
        """
        j = self.index(t)
        if j >= self.depth:
            raise LatticeError(f"t={t!r} is not an interior lattice point")
        q, N = self.params.q, self.params.n_terms
        ell = self.log_factors(lam)
        g_qt = math.exp(self.log_gamma_inv_table(lam)[j + 1])
        dq_val = g_qt * math.expm1(ell[j] - ell[j + N + 1]) / ((1.0 - q) * t)
        rhs = lam * self.upsilon_ext[j] * g_qt
        r = abs(dq_val - rhs)
        return r / abs(rhs) if relative and rhs != 0 else r

    def identity_residuals(self, lam):
        """Relative :meth:`identity_residual` at every interior lattice point at once."""
        q, N, M = self.params.q, self.params.n_terms, self.depth
        ell = self.log_factors(lam)
        t = self.ext_points[:M]
        ratio = np.expm1(ell[:M] - ell[N + 1 : N + 1 + M]) / ((1.0 - q) * t * lam * self.upsilon_ext[:M])
        return np.abs(ratio - 1.0)

    def weighted_integral(self, lam, t, weight):
        """``int_0^t gamma_inv(lam, q s) weight(s) d_q s`` via the Jackson sum."""
        q = self.params.q
        if t == 0:
            return 0.0
        if self.index(t) > self.depth:
            raise LatticeError(f"t={t!r} lies below the lattice depth")
        return jackson_integral(
            lambda s: self.gamma_inv_many(lam, q * np.asarray(s)) * _evaluate(weight, np.asarray(s)),
            t,
            self.params,
        )

    def weighted_integral_table(self, lams, h):
        """Jackson sums ``int_0^{t_m} gamma_inv(lam_k, q s) h_k(s) d_q s`` for all lattice m.

        ``h`` holds samples at ``T q^j``, ``j = 0 .. depth + n_terms``, shape
        ``(depth + n_terms + 1, K)`` (or 1-D, broadcast over modes). Returns
        shape ``(depth + 2, K)``; the last row is the empty integral at 0.
        """
        q, N, M = self.params.q, self.params.n_terms, self.depth
        n = M + N + 1
        h = np.asarray(h, dtype=float)
        if h.ndim == 1:
            h = h[:, None]
        G = np.exp(self.log_gamma_inv_matrix(lams)[1 : n + 1])
        terms = (1.0 - q) * self.ext_points[:n, None] * G * h[:n]
        out = window_sum(terms, N + 1)
        return np.vstack([out, np.zeros((1, out.shape[1]))])


def gamma_inv(lam, t, ev: GrowthEvaluator):
    return ev.gamma_inv(lam, t)


def gamma(lam, t, ev: GrowthEvaluator):
    return ev.gamma(lam, t)


def dq_gamma_inv_identity_residual(lam, t, ev: GrowthEvaluator, relative=True):
    return ev.identity_residual(lam, t, relative)


def weighted_integral(lam, t, weight, ev: GrowthEvaluator):
    return ev.weighted_integral(lam, t, weight)
