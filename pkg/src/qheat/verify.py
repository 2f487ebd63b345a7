"""Named invariant checks with worst-case margins.

Each check returns a :class:`Check`; ``margin`` is positive when the check
passes and measures how far the worst case sits from its threshold (in the
check's own units, stated in ``detail``). The identity suites are plain
functions of ``(params, rng, cases)`` so tests can reuse them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .direct import (
    DirectProblem, SeparableSource, AffineModeSource, apriori_check, lattice_stepper_oracle,
    ode_residual, oracle_mismatch, solve_direct,
)
from .growth import ConstantFn, GrowthEvaluator
from .inverse import InverseProblem, SourceProfile, solve_inverse
from .operators import SQRT_2_PI, InvolutionOperator, apply_involution, forward_transform, inverse_transform
from .qlattice import E_q, QParams, dq_poly, e_q, jackson_integral, log_E_q
from .spectral import plancherel_norm

IDENTITY_TOL = 1e-10
GROWTH_TOL = 1e-12
SOLVER_TOL = 1e-10
ROUNDTRIP_TOL = 1e-8
TRANSFORM_TOL = 1e-8
GRAM_TOL = 1e-10


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: dict = field(default_factory=dict)
    skipped: bool = False

    def to_dict(self):
        return asdict(self)


def _below(name, worst, tol, **detail):
    worst = float(worst)
    return Check(name, bool(worst <= tol), tol - worst, {"worst": worst, "threshold": tol, **detail})


# -- q-calculus identities on random polynomials ---------------------------------

def _poly(rng, max_deg=5):
    return rng.normal(size=int(rng.integers(1, max_deg + 2)))


def _scaled_q(c, q):
    """Coefficients of ``p(q x)``."""
    return c * q ** np.arange(c.size)


def product_rule_errors(params: QParams, rng, cases=100):
    """``D_q(fg)(x) = f(qx) D_q g(x) + g(x) D_q f(x)``; coefficient form and lattice quotient at x in [0.1, 2]."""
    q = params.q
    out = np.empty(cases)
    for i in range(cases):
        f, g = _poly(rng), _poly(rng)
        x = rng.uniform(0.1, 2.0)
        lhs_c = dq_poly(P.polymul(f, g), q)
        rhs_c = P.polyadd(P.polymul(_scaled_q(f, q), dq_poly(g, q)), P.polymul(g, dq_poly(f, q)))
        n = max(lhs_c.size, rhs_c.size)
        e_coef = np.max(np.abs(np.pad(lhs_c, (0, n - lhs_c.size)) - np.pad(rhs_c, (0, n - rhs_c.size))))
        e_coef /= max(1.0, np.max(np.abs(lhs_c)))
        fg = P.polymul(f, g)
        lhs = (P.polyval(x, fg) - P.polyval(q * x, fg)) / ((1.0 - q) * x)
        a = P.polyval(q * x, f) * P.polyval(x, dq_poly(g, q))
        b = P.polyval(x, g) * P.polyval(x, dq_poly(f, q))
        # rounding in the quotient scales with |fg| / ((1-q) x)
        scale = max(1.0, abs(a), abs(b), abs(P.polyval(x, fg)) / ((1.0 - q) * x))
        out[i] = max(e_coef, abs(lhs - (a + b)) / scale)
    return out


def ftc_errors(params: QParams, rng, cases=100):
    """``D_q int_0^x f = f(x)`` and ``int_0^x D_q f = f(x) - f(0)`` with the truncated Jackson sum."""
    q = params.q
    out = np.empty(cases)
    for i in range(cases):
        f = _poly(rng)
        x = rng.uniform(0.1, 2.0)
        F = lambda y: jackson_integral(lambda t: P.polyval(t, f), y, params)
        d = (F(x) - F(q * x)) / ((1.0 - q) * x)
        fx = P.polyval(x, f)
        e1 = abs(d - fx) / max(1.0, abs(fx), abs(F(x)) / ((1.0 - q) * x))
        I = jackson_integral(lambda t: P.polyval(t, dq_poly(f, q)), x, params)
        rhs = fx - f[0]
        e2 = abs(I - rhs) / max(1.0, abs(rhs), abs(fx))
        out[i] = max(e1, e2)
    return out


def parts_errors(params: QParams, rng, cases=100):
    """``int_0^x f D_q g = f g |_0^x - int_0^x g(qt) D_q f(t) d_q t``."""
    q = params.q
    out = np.empty(cases)
    for i in range(cases):
        f, g = _poly(rng), _poly(rng)
        x = rng.uniform(0.1, 2.0)
        lhs = jackson_integral(lambda t: P.polyval(t, f) * P.polyval(t, dq_poly(g, q)), x, params)
        rest = jackson_integral(lambda t: P.polyval(q * t, g) * P.polyval(t, dq_poly(f, q)), x, params)
        bdry = P.polyval(x, f) * P.polyval(x, g) - f[0] * g[0]
        out[i] = abs(lhs - (bdry - rest)) / max(1.0, abs(lhs), abs(rest), abs(bdry))
    return out


def exp_product_errors(params: QParams, rng, cases=100):
    """``|e_q(x) E_q(-x) - 1|`` for ``(1-q)|x| <= 0.9``."""
    a = 0.9 / (1.0 - params.q)
    xs = rng.uniform(-a, a, size=cases)
    return np.array([abs(e_q(x, params) * E_q(-x, params) - 1.0) for x in xs])


def identity_suite(params: QParams, rng, cases=100):
    """Worst error of each q-calculus identity over ``cases`` random draws."""
    return {
        "product_rule": float(product_rule_errors(params, rng, cases).max()),
        "fundamental_theorem": float(ftc_errors(params, rng, cases).max()),
        "integration_by_parts": float(parts_errors(params, rng, cases).max()),
        "e_q_E_q_inverse": float(exp_product_errors(params, rng, cases).max()),
    }


# -- growth function -------------------------------------------------------------

def sandwich_margin(ev: GrowthEvaluator, lams):
    """Smallest log-slack of ``1/E_q(beta lam t) <= gamma(lam, t) <= 1/E_q(alpha lam t)`` over the lattice."""
    alpha, beta = ev.profile.alpha, ev.profile.beta
    t = ev.lattice.points[: ev.depth + 1]
    worst = math.inf
    for lam in lams:
        L = ev.log_gamma_inv_table(lam)[: ev.depth + 1]
        lo = np.array([log_E_q(alpha * lam * s, ev.params) for s in t])
        hi = np.array([log_E_q(beta * lam * s, ev.params) for s in t])
        scale = np.maximum(1.0, np.abs(hi))
        worst = min(worst, float(np.min((L - lo) / scale)), float(np.min((hi - L) / scale)))
    return worst


def identity_worst(ev: GrowthEvaluator, lams):
    return max(float(ev.identity_residuals(lam).max()) for lam in lams)


def integral_bounds_margin(ev: GrowthEvaluator, lams):
    """Relative slack of ``(gamma_inv(t)-1)/(lam beta) <= int_0^t gamma_inv(q s) d_q s <= (gamma_inv(t)-1)/(lam alpha)``.

    Returns ``(margin, skipped)``; modes whose ``gamma_inv`` overflows are skipped.
    """
    alpha, beta = ev.profile.alpha, ev.profile.beta
    M = ev.depth
    worst, skipped = math.inf, []
    n = M + ev.params.n_terms + 1
    for lam in lams:
        L = ev.log_gamma_inv_table(lam)[: M + 1]
        if L.max() > 700:
            skipped.append(float(lam))
            continue
        I = ev.weighted_integral_table([lam], np.ones(n))[: M + 1, 0]
        gm1 = np.expm1(L)
        ok = gm1 > 0
        lower, upper = gm1[ok] / (lam * beta), gm1[ok] / (lam * alpha)
        worst = min(worst, float(np.min(I[ok] / lower - 1.0)), float(np.min(1.0 - I[ok] / upper)))
    return worst, skipped


# -- random data -------------------------------------------------------------------

def random_coeffs(rng, spectrum, d, decay=1.0):
    """Random coefficients with ``lam^((d+2)/2) |c_k|`` decaying like ``lam^-decay``."""
    lam = spectrum.eigenvalues
    return rng.normal(size=spectrum.K) * lam ** (-(d + 2) / 2 - decay)


def random_source(rng, spectrum, d):
    return AffineModeSource(random_coeffs(rng, spectrum, d), random_coeffs(rng, spectrum, d))


# -- suite -------------------------------------------------------------------------

def _guard(name, fn):
    try:
        return fn()
    except (ArithmeticError, ValueError) as e:
        return Check(name, False, -math.inf, {"error": f"{type(e).__name__}: {e}"})


def growth_checks(ev, lams):
    def sandwich():
        m = sandwich_margin(ev, lams)
        return Check("sandwich", m >= -GROWTH_TOL, m, {"units": "relative log slack", "threshold": -GROWTH_TOL})

    def bounds():
        m, skipped = integral_bounds_margin(ev, lams)
        return Check("integral_bounds", m >= -GROWTH_TOL, m,
                     {"units": "relative slack", "threshold": -GROWTH_TOL, "skipped_overflow_modes": skipped})

    return [
        _guard("sandwich", sandwich),
        _guard("identity", lambda: _below("identity", identity_worst(ev, lams), GROWTH_TOL, units="relative residual")),
        _guard("integral_bounds", bounds),
    ]


def direct_checks(p: DirectProblem):
    def run():
        sol = solve_direct(p, diagnostics=False)
        res = ode_residual(sol, p)
        mis = oracle_mismatch(sol.trajectory, lattice_stepper_oracle(p))
        est = apriori_check(sol, p)
        return [
            _below("ode_residual", res, SOLVER_TOL, units="backward error"),
            _below("oracle_equivalence", mis, SOLVER_TOL, units="per-mode relative"),
            Check("apriori_estimate", est.holds, 1.0 - est.lhs / (est.constant * est.rhs) if est.rhs > 0 else 0.0,
                  {"lhs": est.lhs, "rhs": est.rhs, "constant": est.constant, "units": "1 - lhs/(C rhs)"}),
        ]

    try:
        return run()
    except (ArithmeticError, ValueError) as e:
        err = {"error": f"{type(e).__name__}: {e}"}
        return [Check(n, False, -math.inf, err) for n in ("ode_residual", "oracle_equivalence", "apriori_estimate")]


def inverse_checks(p: DirectProblem, shape: SourceProfile, rng):
    """Round trip through a direct solve with source ``g(t) f*`` and a random ``f*``."""
    names = ("inverse_roundtrip", "source_bound", "stability")
    try:
        f_star = random_coeffs(rng, p.spectrum, p.d)
        dp = DirectProblem(p.spectrum, p.profile, p.phi, SeparableSource(f_star, shape.g), p.horizon,
                           p.qparams, p.d, p.lattice_depth, validate=False)
        u = solve_direct(dp, diagnostics=False).trajectory
        ip = InverseProblem(p.spectrum, p.profile, p.qparams, p.horizon, p.phi, u.final, shape, p.d,
                            p.lattice_depth, validate=False)
        sol = solve_inverse(ip)
    except (ArithmeticError, ValueError) as e:
        err = {"error": f"{type(e).__name__}: {e}"}
        return [Check(n, False, -math.inf, err) for n in names]
    scale = np.maximum(np.abs(f_star), 1e-300)
    f_err = float(np.max(np.abs(sol.f - f_star) / scale))
    u_err = oracle_mismatch(sol.trajectory, u)
    dg = sol.diagnostics
    sb = dg["source_bound"]
    st = dg["stability"]
    return [
        _below("inverse_roundtrip", max(f_err, u_err), ROUNDTRIP_TOL, source_error=f_err, state_error=u_err),
        Check("source_bound", sb["holds"], float(min(sb["margins"])),
              {"failing_modes": sb["failing_modes"], "units": "1 - |f_k|/bound_k"}),
        Check("stability", st["holds"], 1.0 - st["lhs"] / (st["constant"] * st["rhs"]) if st["rhs"] > 0 else 0.0,
              {"lhs": st["lhs"], "rhs": st["rhs"], "constant": st["constant"], "units": "1 - lhs/(C rhs)"}),
    ]


def involution_checks(op: InvolutionOperator, rng):
    def plancherel():
        c = rng.normal(size=op.modes)
        f = inverse_transform(c, op)
        e_norm = abs(f.l2_norm() - plancherel_norm(c)) / plancherel_norm(c)
        e_rt = float(np.max(np.abs(forward_transform(f, op) - c)))
        return _below("plancherel_bridge", max(e_norm, e_rt), TRANSFORM_TOL, norm_error=e_norm, roundtrip_error=e_rt)

    def eigenpair():
        h = op.h
        bound = SQRT_2_PI * max(op.labels) ** 2 / 12.0 * h * h
        worst = 0.0
        for k in range(op.modes):
            u = op.eigenfunction(k)
            r = apply_involution(u, op.epsilon).values - op.spectrum.eigenvalues[k] * u.values
            worst = max(worst, float(np.max(np.abs(r[1:-1]))) / op.spectrum.eigenvalues[k])
        return _below("eigenpair", worst, bound * (1 + 1e-6), units="sup error / lambda_n")

    def gram():
        B = op.basis()
        G = (op.weights[:, None] * B).T @ B
        return _below("orthonormality", np.max(np.abs(G - np.eye(op.modes))), GRAM_TOL)

    return [_guard("plancherel_bridge", plancherel), _guard("eigenpair", eigenpair), _guard("orthonormality", gram)]


def run_suite(p: DirectProblem, rng, shape: SourceProfile | None = None, op: InvolutionOperator | None = None,
              cases=100):
    """Every check for one problem setting."""
    params = p.qparams
    ident = identity_suite(params, rng, cases)
    checks = [_below(name, v, IDENTITY_TOL) for name, v in ident.items()]
    ev = GrowthEvaluator(p.profile, params, p.horizon, depth=p.lattice_depth, validate=False)
    checks += growth_checks(ev, p.spectrum.eigenvalues)
    checks += direct_checks(p)
    if shape is None:
        shape = SourceProfile(ConstantFn(1.0), 0.5 * p.horizon, p.horizon)
    checks += inverse_checks(p, shape, rng)
    if op is not None:
        checks += involution_checks(op, rng)
    else:
        checks += [Check(n, True, 0.0, {"reason": "involution operator only"}, skipped=True)
                   for n in ("plancherel_bridge", "eigenpair", "orthonormality")]
    return checks
