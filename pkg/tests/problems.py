"""Seeded random problem generators shared by the test modules."""
import numpy as np

from qheat import AffineFn, CoefficientProfile, DirectProblem, QParams, involution_spectrum, landau_spectrum
from qheat.direct import AffineModeSource, SeparableSource, solve_direct
from qheat.inverse import InverseProblem, SourceProfile


def random_spectrum(rng, K, kind=None):
    """Involution or Landau spectrum; ``kind=None`` picks one at random."""
    if kind is None:
        kind = "involution" if rng.random() < 0.5 else "landau"
    if kind == "involution":
        return involution_spectrum(float(rng.uniform(-0.8, 0.8)), K)
    return landau_spectrum(float(rng.uniform(0.2, 3.0)), K)


def random_profile(rng, T=1.0):
    """Affine ``v(t) = a + b t`` with exact bounds over ``[0, T]``."""
    a = float(rng.uniform(0.3, 3.0))
    b = float(rng.uniform(-0.8, 0.8)) * a / T
    lo, hi = sorted((a, a + b * T))
    return CoefficientProfile(AffineFn(a, b), lo * (1 - 1e-12), hi * (1 + 1e-12))


def smooth_coeffs(rng, lam, d=0.0):
    return rng.normal(size=lam.size) * lam ** (-(d + 2) / 2 - 1)


def random_direct_problem(seed, q_values=(0.5, 0.9), K_max=16, d=0.0, kind=None):
    rng = np.random.default_rng(seed)
    q = float(rng.choice(q_values))
    K = int(rng.integers(1, K_max + 1))
    T = float(rng.uniform(0.5, 2.0))
    s = random_spectrum(rng, K, kind)
    lam = s.eigenvalues
    src = AffineModeSource(smooth_coeffs(rng, lam, d), smooth_coeffs(rng, lam, d))
    return DirectProblem(s, random_profile(rng, T), smooth_coeffs(rng, lam, d), src, T, QParams(q), d)


def random_inverse_problem(seed):
    """Direct solve with source ``g(t) f*``, then the inverse problem on its endpoint data.

    Returns ``(inverse_problem, f_star, direct_trajectory)``.
    """
    rng = np.random.default_rng(1000 + seed)
    q = float(rng.choice([0.5, 0.9]))
    T = float(rng.uniform(0.5, 2.0))
    s = random_spectrum(rng, int(rng.integers(1, 17)))
    lam = s.eigenvalues
    profile = random_profile(rng, T)
    c = float(rng.uniform(0.0, 1.0))
    shape = SourceProfile(AffineFn(1.0, c / T), 0.5 * T, (1 + c) * T)
    phi, f_star = smooth_coeffs(rng, lam), smooth_coeffs(rng, lam)
    dp = DirectProblem(s, profile, phi, SeparableSource(f_star, shape.g), T, QParams(q))
    u = solve_direct(dp, diagnostics=False).trajectory
    ip = InverseProblem(s, profile, QParams(q), T, phi, u.final, shape, lattice_depth=dp.lattice_depth)
    return ip, f_star, u
