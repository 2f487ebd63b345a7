"""Inverse source problem: recover ``f`` in ``D_q u + v L u = g(t) f`` from ``u(0)`` and ``u(T)``.

Per mode the data fix ``f_k = (gamma_inv(lam_k, T) eta_k - phi_k) / W_k(T)`` with
``W_k(t) = int_0^t gamma_inv(lam_k, q s) g(s) d_q s``; the state follows from
``u_k(t) = gamma(lam_k, t) (phi_k + f_k W_k(t))``. No regularisation: noisy
``eta`` is not handled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import logsumexp

from .direct import LOG_OVERFLOW, DirectProblem, SeparableSource, dq_from_equation, ode_residual, seed_depth
from .errors import DegenerateDenominatorError
from .growth import CoefficientProfile, GrowthEvaluator
from .qlattice import QParams, _evaluate, jackson_integral, log_E_q
from .spectral import CoeffTrajectory, Spectrum, sobolev_norm


@dataclass(frozen=True)
class SourceProfile:
    """Known time shape ``g`` of the source, with ``alpha0 <= int_0^T g d_q s <= beta0``."""

    g: Callable
    alpha0: float
    beta0: float

    def __post_init__(self):
        if not (0 < self.alpha0 <= self.beta0 < math.inf):
            raise ValueError(
                f"need 0 < alpha0 <= beta0 < inf, got alpha0={self.alpha0!r}, beta0={self.beta0!r}"
            )

    def check(self, interior_points, horizon, params: QParams):
        """Positivity on the open interval and the declared bounds on its q-integral.

        ``g(0)`` is not constrained and ``g(T)`` only needs to be nonnegative.
        """
        g = np.asarray(_evaluate(self.g, np.asarray(interior_points, dtype=float)), dtype=float)
        if not np.all(g > 0):
            bad = float(np.asarray(interior_points)[np.flatnonzero(~(g > 0))[0]])
            raise ValueError(f"source shape g must be positive inside (0, T); g({bad:.6g}) = {g[~(g > 0)][0]:.6g}")
        g_T = float(np.asarray(_evaluate(self.g, np.array([float(horizon)])))[0])
        if g_T < 0:
            raise ValueError(f"source shape g must be nonnegative at T; g(T) = {g_T:.6g}")
        total = jackson_integral(self.g, horizon, params)
        if not (self.alpha0 <= total <= self.beta0):
            raise ValueError(
                f"int_0^T g d_q s = {total:.12g} is outside the declared [{self.alpha0}, {self.beta0}]"
            )


@dataclass(frozen=True)
class InverseProblem:
    spectrum: Spectrum
    profile: CoefficientProfile
    qparams: QParams
    horizon: float
    phi: np.ndarray
    eta: np.ndarray
    source_shape: SourceProfile
    d: float = 0.0
    lattice_depth: int | None = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        K = self.spectrum.K
        for name in ("phi", "eta"):
            v = np.asarray(getattr(self, name))
            if v.shape != (K,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({K},)")
            if not np.all(np.isfinite(v)) or not math.isfinite(sobolev_norm(v, self.d + 2, self.spectrum)):
                raise ValueError(f"{name} is not a finite H^(d+2) coefficient vector")
            object.__setattr__(self, name, v)
        if not self.horizon > 0:
            raise ValueError(f"horizon T must be positive, got {self.horizon!r}")
        if self.lattice_depth is None:
            M = max(
                self.qparams.n_terms,
                seed_depth(self.horizon, self.qparams.q, self.spectrum.eigenvalues[-1], self.profile.beta),
            )
            object.__setattr__(self, "lattice_depth", M)
        if self.validate:
            ev = self.evaluator
            self.source_shape.check(ev.ext_points[1 : ev.depth + 1], self.horizon, self.qparams)

    @cached_property
    def evaluator(self):
        return GrowthEvaluator(
            self.profile, self.qparams, self.horizon, depth=self.lattice_depth, validate=self.validate
        )

    @property
    def lattice(self):
        return self.evaluator.lattice

    @cached_property
    def g_samples(self):
        """``g`` at ``T q^j`` for ``j = 0 .. depth + n_terms``."""
        ev = self.evaluator
        n = ev.depth + self.qparams.n_terms + 1
        return np.asarray(_evaluate(self.source_shape.g, ev.ext_points[:n]), dtype=float)

    def as_direct(self, f) -> DirectProblem:
        """The direct problem with source ``g(t) f`` on the same lattice."""
        return DirectProblem(
            self.spectrum,
            self.profile,
            self.phi,
            SeparableSource(np.asarray(f), self.source_shape.g),
            self.horizon,
            self.qparams,
            self.d,
            lattice_depth=self.lattice_depth,
            validate=False,
        )


@dataclass
class InverseSolution:
    f: np.ndarray
    trajectory: CoeffTrajectory
    diagnostics: dict = field(default_factory=dict)


def _log_W_terms(p: InverseProblem):
    """Log-magnitudes and signs of ``(1-q) t_j gamma_inv(q t_j) g(t_j)``, shape ``(n, K)``."""
    ev = p.evaluator
    q = p.qparams.q
    n = ev.depth + p.qparams.n_terms + 1
    L = ev.log_gamma_inv_matrix(p.spectrum.eigenvalues)
    g = p.g_samples
    with np.errstate(divide="ignore"):
        base = np.log((1.0 - q) * ev.ext_points[:n]) + np.log(np.abs(g))
    return base[:, None] + L[1 : n + 1], np.sign(g)[:, None] * np.ones((1, p.spectrum.K)), L


def log_denominators(p: InverseProblem):
    """``log W_k(T)`` for every mode (computed without forming ``gamma_inv``)."""
    a, sgn, _ = _log_W_terms(p)
    N = p.qparams.n_terms
    val, s = logsumexp(a[: N + 1], axis=0, b=sgn[: N + 1], return_sign=True)
    return np.where(s > 0, val, -np.inf)


def recover_source(p: InverseProblem):
    """``f_k = (gamma_inv(lam_k, T) eta_k - phi_k) / W_k(T)``, evaluated in log space."""
    ev = p.evaluator
    logW = log_denominators(p)
    log_tol = math.log(p.qparams.tol)
    for k in range(p.spectrum.K):
        if not logW[k] > log_tol:
            raise DegenerateDenominatorError(
                f"source-recovery denominator for mode {k + 1} is <= {p.qparams.tol:g}", mode=k + 1
            )
    logG_T = ev.log_gamma_inv_matrix(p.spectrum.eigenvalues)[0]
    return p.eta * np.exp(logG_T - logW) - p.phi * np.exp(-logW)


def _scaled_W(p: InverseProblem):
    """``gamma(t_m) W_k(t_m)`` for ``m = 0 .. depth`` and ``gamma(t_m)``."""
    ev = p.evaluator
    lam = p.spectrum.eigenvalues
    M, N = ev.depth, p.qparams.n_terms
    L = ev.log_gamma_inv_matrix(lam)
    if L.max() <= LOG_OVERFLOW:
        W = ev.weighted_integral_table(lam, p.g_samples)[: M + 1]
        gam = np.exp(-L[: M + 1])
        return W * gam, gam
    # large modes: every window in log space
    a, sgn, _ = _log_W_terms(p)
    aw = sliding_window_view(a, N + 1, axis=0)
    sw = sliding_window_view(sgn, N + 1, axis=0)
    val, s = logsumexp(aw, axis=-1, b=sw, return_sign=True)
    return s * np.exp(val - L[: M + 1]), np.exp(-L[: M + 1])


def reconstruct_state(p: InverseProblem, f) -> CoeffTrajectory:
    """``u_k(t) = gamma(lam_k, t) (phi_k + f_k W_k(t))`` at every lattice point."""
    f = np.asarray(f)
    gW, gam = _scaled_W(p)
    M = p.lattice.depth
    u = np.empty((M + 2, p.spectrum.K), dtype=np.result_type(f, p.phi, float))
    u[: M + 1] = gam * p.phi + gW * f
    u[M + 1] = p.phi
    return CoeffTrajectory(p.lattice, u)


@dataclass(frozen=True)
class StabilityReport:
    holds: bool
    lhs: float
    rhs: float
    constant: float
    source_bound_holds: bool
    source_bound_worst_ratio: float
    failing_modes: tuple = ()
    uniform: bool = True


def source_bound_log(p: InverseProblem):
    """``log(E_q(beta lam_k T) / alpha0)`` per mode: amplitude bound per unit data."""
    b, T = p.profile.beta, p.horizon
    return np.array(
        [log_E_q(b * lam * T, p.qparams) for lam in p.spectrum.eigenvalues]
    ) - math.log(p.source_shape.alpha0)


def source_bound_margins(f, p: InverseProblem):
    """``1 - |f_k| / bound_k`` per mode (1 where the data vanish)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        bound = np.exp(source_bound_log(p)) * (np.abs(p.eta) + np.abs(p.phi))
        m = 1.0 - np.abs(np.asarray(f)) / bound
    return np.where(bound > 0, m, 1.0)


def stability_constant(p: InverseProblem):
    """Return ``(C, uniform)`` for ``sup||u||^2_{H^{d+2}} + sup||D_q u||^2_{H^d} <= C (||phi||^2 + ||eta||^2)``.

    With ``j*`` the first lattice index where ``g > 0`` the last-cell bound
    ``W(T) >= (1-q) t_j* g(t_j*) gamma_inv(q t_j*)`` gives
    ``gamma_inv(T)/W(T) <= P(lam)``. Then per mode ``|u_k| <= C_u (|phi_k| + |eta_k|)``
    and ``lam^(d/2)|D_q u_k| <= C_D lam^((d+2)/2) (|phi_k| + |eta_k|)`` with
    ``A = sup|g| P(lam)/lam``, ``C_u = 1 + A/alpha``, ``C_D = A + beta C_u``.
    ``uniform`` is True when ``g(T) > 0`` (then ``A`` is bounded in lam).
    """
    ev = p.evaluator
    q, beta, alpha = p.qparams.q, p.profile.beta, p.profile.alpha
    g = p.g_samples
    pos = np.flatnonzero(g > 0)
    j = int(pos[0])
    t = ev.ext_points
    lam = p.spectrum.eigenvalues
    logP = np.sum(np.log1p((1.0 - q) * np.outer(lam, t[: j + 1]) * beta), axis=1) - math.log(
        (1.0 - q) * t[j] * g[j]
    )
    A = np.max(np.abs(g)) * np.exp(logP) / lam
    a_max = float(np.max(A))
    c_u = 1.0 + a_max / alpha
    c_d = a_max + beta * c_u
    return 2.0 * (c_u**2 + c_d**2), j == 0


def stability_check(sol: InverseSolution, p: InverseProblem) -> StabilityReport:
    """Per-mode amplitude bound and the solution estimate."""
    f = np.asarray(sol.f)
    data = np.abs(p.eta) + np.abs(p.phi)
    # zero data forces f = 0; 0 <= 0 holds
    trivial = (data == 0) & (f == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(trivial, -np.inf, np.log(np.abs(f)) - (source_bound_log(p) + np.log(data)))
    ok = log_ratio <= 1e-12
    failing = tuple(int(k) + 1 for k in np.flatnonzero(~ok))

    s, d = p.spectrum, p.d
    lam = s.eigenvalues
    u = sol.trajectory.values
    dp = p.as_direct(f)
    dqv = dq_from_equation(u, dp)
    lhs = float(np.max(np.sum(lam ** (d + 2) * np.abs(u) ** 2, axis=1)))
    lhs += float(np.max(np.sum(lam**d * np.abs(dqv) ** 2, axis=1))) if dqv.size else 0.0
    rhs = sobolev_norm(p.phi, d + 2, s) ** 2 + sobolev_norm(p.eta, d + 2, s) ** 2
    C, uniform = stability_constant(p)
    holds = math.isfinite(lhs) and lhs <= C * rhs * (1 + 1e-10) + 1e-300
    worst = float(np.exp(np.max(log_ratio))) if log_ratio.size else 0.0
    return StabilityReport(
        bool(holds and ok.all()), lhs, rhs, C, bool(ok.all()), worst, failing, uniform
    )


def solve_inverse(p: InverseProblem, diagnostics=True) -> InverseSolution:
    f = recover_source(p)
    tr = reconstruct_state(p, f)
    sol = InverseSolution(f, tr)
    if diagnostics:
        rep = stability_check(sol, p)
        roundtrip = np.abs(tr.final - p.eta) / (1.0 + np.abs(p.eta))
        sol.diagnostics = {
            "roundtrip_error": float(roundtrip.max()),
            "ode_residual": ode_residual(tr, p.as_direct(f)),
            "stability": {
                "holds": rep.holds,
                "lhs": rep.lhs,
                "rhs": rep.rhs,
                "constant": rep.constant,
                "uniform_constant": rep.uniform,
            },
            "source_bound": {
                "holds": rep.source_bound_holds,
                "worst_ratio": rep.source_bound_worst_ratio,
                "failing_modes": list(rep.failing_modes),
                "margins": source_bound_margins(f, p).tolist(),
            },
        }
    return sol
