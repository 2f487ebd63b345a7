"""Direct Cauchy problem ``D_q u + v(t) L u = f``, ``u(0) = phi``, in coefficient space.

Each mode obeys ``D_q u_k + lam_k v u_k = f_k`` on the lattice. :func:`solve_direct`
evaluates the closed form through the growth function; :func:`lattice_stepper_oracle`
marches the same equation upward from the bottom of the lattice without it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .growth import CoefficientProfile, GrowthEvaluator
from .qlattice import QParams, _evaluate, jackson_tail_bound
from .spectral import CoeffTrajectory, Spectrum, sobolev_norm, tail_estimate

#: Stepper seed u(t_M) = phi is off by ~ lam_K * beta * t_M relative; keep that below this.
SEED_TOL = 1e-14
#: exp() overflows a double past this.
LOG_OVERFLOW = 700.0


@dataclass(frozen=True)
class SeparableSource:
    """``f_k(t) = coeffs[k] * shape(t)``."""

    coeffs: np.ndarray
    shape: Callable

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(_evaluate(self.shape, t), dtype=float)[:, None] * np.asarray(self.coeffs)[None, :]


@dataclass(frozen=True)
class AffineModeSource:
    """``f_k(t) = a[k] + b[k] t`` (different time profile per mode)."""

    a: np.ndarray
    b: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)[:, None]
        return np.asarray(self.a)[None, :] + np.asarray(self.b)[None, :] * t


def zero_source(K):
    return SeparableSource(np.zeros(K), lambda t: np.zeros_like(t))


def seed_depth(T, q, lam_max, beta, seed_tol=SEED_TOL):
    """Smallest M with ``T q^M lam_max beta <= seed_tol``."""
    scale = T * lam_max * beta
    if scale <= seed_tol:
        return 1
    return math.ceil(math.log(seed_tol / scale) / math.log(q))


@dataclass(frozen=True)
class DirectProblem:
    """Data for the direct problem.

    ``source`` maps an array of times, shape ``(n,)``, to per-mode values of
    shape ``(n, K)``. ``lattice_depth`` defaults to ``n_terms``, raised if the
    stepper seed would otherwise be too coarse.
    """

    spectrum: Spectrum
    profile: CoefficientProfile
    phi: np.ndarray
    source: Callable
    horizon: float
    qparams: QParams
    d: float = 0.0
    lattice_depth: int | None = None
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        phi = np.asarray(self.phi)
        if phi.shape != (self.spectrum.K,):
            raise ValueError(f"phi has shape {phi.shape}, expected ({self.spectrum.K},)")
        if not np.all(np.isfinite(phi)):
            raise ValueError("phi has non-finite entries")
        if not self.horizon > 0:
            raise ValueError(f"horizon T must be positive, got {self.horizon!r}")
        object.__setattr__(self, "phi", phi)
        if self.lattice_depth is None:
            M = max(
                self.qparams.n_terms,
                seed_depth(self.horizon, self.qparams.q, self.spectrum.eigenvalues[-1], self.profile.beta),
            )
            object.__setattr__(self, "lattice_depth", M)
        if self.validate:
            f = self.source_samples
            if f.shape != (self.evaluator.depth + self.qparams.n_terms + 1, self.spectrum.K):
                raise ValueError(f"source returned shape {f.shape}; expected (n, {self.spectrum.K})")
            if not np.all(np.isfinite(f)):
                raise ValueError("source has non-finite samples on the lattice")
            if not math.isfinite(sobolev_norm(phi, self.d + 2, self.spectrum)):
                raise ValueError("phi is not in H^{d+2}")

    @cached_property
    def evaluator(self):
        return GrowthEvaluator(
            self.profile, self.qparams, self.horizon, depth=self.lattice_depth, validate=self.validate
        )

    @property
    def lattice(self):
        return self.evaluator.lattice

    @cached_property
    def source_samples(self):
        """``f_k`` at ``T q^j``, ``j = 0 .. depth + n_terms``, shape ``(depth + n_terms + 1, K)``."""
        ev = self.evaluator
        n = ev.depth + self.qparams.n_terms + 1
        return np.asarray(self.source(ev.ext_points[:n]))

    def source_on_lattice(self):
        """``f_k`` at every lattice point including 0, shape ``(depth + 2, K)``."""
        M = self.lattice.depth
        f0 = np.asarray(self.source(np.zeros(1)))
        return np.vstack([self.source_samples[: M + 1], f0])

    def upsilon_on_lattice(self):
        M = self.lattice.depth
        return self.evaluator.upsilon_ext[: M + 1]


@dataclass
class DirectSolution:
    trajectory: CoeffTrajectory
    diagnostics: dict = field(default_factory=dict)


def _closed_form(p: DirectProblem, source_samples=None):
    ev = p.evaluator
    lam = p.spectrum.eigenvalues
    M = ev.depth
    L = ev.log_gamma_inv_matrix(lam)
    if L.max() > LOG_OVERFLOW:
        raise OverflowError(
            f"gamma_inv reaches exp({L.max():.1f}); reduce the number of modes or the horizon"
        )
    h = p.source_samples if source_samples is None else source_samples
    S = ev.weighted_integral_table(lam, h)
    u = np.empty((M + 2, p.spectrum.K), dtype=np.result_type(p.phi, h, float))
    u[: M + 1] = (p.phi[None, :] + S[: M + 1]) * np.exp(-L[: M + 1])
    u[M + 1] = p.phi
    return u


def solve_direct(p: DirectProblem, diagnostics=True) -> DirectSolution:
    """Closed-form solution ``u_k(t) = gamma(t) [phi_k + int_0^t gamma_inv(q s) f_k(s) d_q s]``.

    With ``diagnostics`` the ODE residual, the stepper mismatch, the a-priori
    estimate and truncation tails are attached.
    """
    tr = CoeffTrajectory(p.lattice, _closed_form(p))
    sol = DirectSolution(tr)
    if diagnostics:
        sol.diagnostics = direct_diagnostics(sol, p)
    return sol


def lattice_stepper_oracle(p: DirectProblem) -> CoeffTrajectory:
    """March ``u(t) = (u(qt) + (1-q) t f(t)) / (1 + (1-q) t lam v(t))`` up from ``u(t_M) = phi``.

    Independent of the growth function. Seeding at ``t_M`` rather than 0
    costs a relative error ~ ``lam_K beta t_M``, which the default depth
    keeps below ``SEED_TOL``.
    """
    lat = p.lattice
    q, M = lat.q, lat.depth
    lam = p.spectrum.eigenvalues
    t = lat.points
    f = p.source_on_lattice()
    ups = p.upsilon_on_lattice()
    u = np.empty((M + 2, p.spectrum.K), dtype=np.result_type(p.phi, f, float))
    u[M + 1] = p.phi
    u[M] = p.phi
    for m in range(M - 1, -1, -1):
        h = (1.0 - q) * t[m]
        u[m] = (u[m + 1] + h * f[m]) / (1.0 + h * lam * ups[m])
    return CoeffTrajectory(lat, u)


def equation_terms(values, p: DirectProblem, f=None):
    """Per-point pieces of ``u(t) - u(qt) + (1-q) t (lam v u(t) - f(t))`` at interior points."""
    lat = p.lattice
    M = lat.depth
    h = ((1.0 - lat.q) * lat.points[:M])[:, None]
    lam = p.spectrum.eigenvalues[None, :]
    ups = p.upsilon_on_lattice()[:M, None]
    f = p.source_on_lattice()[:M] if f is None else f[:M]
    u, uq = values[:M], values[1 : M + 1]
    return u, uq, h, lam * ups, f


def ode_residual(sol, p: DirectProblem, f=None):
    """Largest normalised residual of ``D_q u_k + lam_k v u_k = f_k`` over modes and interior points.

    Backward-error form: the residual multiplied through by ``(1-q) t`` over
    the sum of magnitudes of the same terms. Scale-free, and not swamped by
    rounding where ``(1-q) t`` is tiny.
    """
    values = sol.trajectory.values if isinstance(sol, DirectSolution) else sol.values
    u, uq, h, lu, f = equation_terms(values, p, f)
    r = np.abs(u - uq + h * (lu * u - f))
    den = np.abs(u) + np.abs(uq) + h * (lu * np.abs(u) + np.abs(f))
    ratio = np.divide(r, den, out=np.zeros_like(r, dtype=float), where=den > 0)
    return float(ratio.max()) if ratio.size else 0.0


def dq_from_equation(values, p: DirectProblem, f=None):
    """``D_q u_k = f_k - lam_k v u_k`` at interior points, shape ``(depth, K)``."""
    u, _, _, lu, f = equation_terms(values, p, f)
    return f - lu * u


def oracle_mismatch(a: CoeffTrajectory, b: CoeffTrajectory):
    """Max over modes of ``max_t |a - b| / max_t |b|`` (0 for identically zero modes)."""
    diff = np.max(np.abs(a.values - b.values), axis=0)
    scale = np.max(np.abs(b.values), axis=0)
    rel = np.divide(diff, scale, out=np.where(diff > 0, np.inf, 0.0), where=scale > 0)
    return float(rel.max())


@dataclass(frozen=True)
class EstimateReport:
    lhs: float
    rhs: float
    constant: float
    holds: bool
    lhs_u: float = 0.0
    lhs_dq: float = 0.0


def apriori_constant(p: DirectProblem):
    """``C = 2 (C1^2 + C2^2)`` with ``C1 = max{1,T}``, ``C2 = max{beta, 1/lam0} (1 + C1)``.

    Per mode ``lam^((d+2)/2) |u_k| <= C1 (a_k + b_k)`` and
    ``lam^(d/2) |D_q u_k| <= C2 (a_k + b_k)`` where ``a_k``, ``b_k`` are the
    weighted sizes of ``phi_k`` and ``sup |f_k|``; squaring and summing gives C.
    The decay factor ``max{1/E_q, 1}`` is 1.
    """
    c1 = max(1.0, p.horizon) * 1.0
    c2 = max(p.profile.beta, 1.0 / p.spectrum.lambda0) * (1.0 + c1)
    return 2.0 * (c1**2 + c2**2)


def apriori_check(sol: DirectSolution, p: DirectProblem) -> EstimateReport:
    """``sup ||u||^2_{H^{d+2}} + sup ||D_q u||^2_{H^d} <= C (||phi||^2_{H^{d+2}} + sum_k sup_s lam^{d+2} |f_k(s)|^2)``."""
    s, d = p.spectrum, p.d
    lam = s.eigenvalues
    u = sol.trajectory.values
    lhs_u = float(np.max(np.sum(lam ** (d + 2) * np.abs(u) ** 2, axis=1)))
    dqv = dq_from_equation(u, p)
    lhs_dq = float(np.max(np.sum(lam**d * np.abs(dqv) ** 2, axis=1))) if dqv.size else 0.0
    f_all = np.vstack([p.source_samples, p.source_on_lattice()[-1:]])
    sup_f = np.max(np.abs(f_all), axis=0)
    rhs = sobolev_norm(p.phi, d + 2, s) ** 2 + float(np.sum(lam ** (d + 2) * sup_f**2))
    C = apriori_constant(p)
    lhs = lhs_u + lhs_dq
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        return EstimateReport(lhs, rhs, C, False, lhs_u, lhs_dq)
    holds = lhs <= C * rhs * (1 + 1e-12) + 1e-300
    return EstimateReport(lhs, rhs, C, bool(holds), lhs_u, lhs_dq)


def direct_diagnostics(sol: DirectSolution, p: DirectProblem):
    stepper = lattice_stepper_oracle(p)
    est = apriori_check(sol, p)
    f = p.source_samples
    T = p.horizon
    sup_f = float(np.max(np.abs(f))) if f.size else 0.0
    return {
        "ode_residual": ode_residual(sol, p),
        "oracle_mismatch": oracle_mismatch(sol.trajectory, stepper),
        "apriori": {
            "lhs": est.lhs,
            "rhs": est.rhs,
            "constant": est.constant,
            "holds": est.holds,
            "lhs_u": est.lhs_u,
            "lhs_dq": est.lhs_dq,
        },
        "tails": {
            "jackson_tail_bound": jackson_tail_bound(T, sup_f, p.qparams),
            "stepper_seed_error": float(
                p.lattice.points[p.lattice.depth] * p.spectrum.eigenvalues[-1] * p.profile.beta
            ),
            "mode_tail_phi": tail_estimate(p.phi, p.d, p.spectrum),
            "mode_tail_final": tail_estimate(sol.trajectory.final, p.d, p.spectrum),
        },
    }
