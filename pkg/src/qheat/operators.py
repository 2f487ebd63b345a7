"""Concrete spatial operators: involution on [0, pi], Landau levels, user spectra.

Involution operator: ``l(u) = -u''(x) + eps u''(pi - x)`` with Dirichlet data.
Its eigenfunctions are ``sqrt(2/pi) sin(n x)`` with eigenvalue
``n^2 (1 + eps (-1)^n)``, i.e. ``4(1+eps)k^2`` for ``n = 2k`` and
``(1-eps)(2k+1)^2`` for ``n = 2k+1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .spectral import Spectrum

SQRT_2_PI = math.sqrt(2.0 / math.pi)


def _check_eps(eps):
    if not abs(eps) < 1:
        raise ValueError(f"involution parameter needs |eps| < 1, got eps={eps!r}")


def involution_eigenvalue(n, eps):
    return n * n * (1.0 + eps * (-1) ** n)


def involution_spectrum(eps, K) -> Spectrum:
    """The ``K`` smallest involution eigenvalues, ascending, labelled by ``n``.

    Ties between the two families go to the smaller ``n``.
    """
    _check_eps(eps)
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    K = int(K)
    # n^2 (1 - |eps|) > K^2 (1 + |eps|) cannot be among the K smallest
    n_max = math.ceil(K * math.sqrt((1 + abs(eps)) / (1 - abs(eps)))) + 1
    cand = sorted((involution_eigenvalue(n, eps), n) for n in range(1, n_max + 1))[:K]
    lam = np.array([c[0] for c in cand])
    return Spectrum(lam, 0.5 * lam[0], labels=tuple(c[1] for c in cand))


def landau_spectrum(B, K) -> Spectrum:
    """Landau levels ``(2n+1) B``, ``n = 0 .. K-1``, one coefficient per level."""
    if not B > 0:
        raise ValueError(f"magnetic field B must be positive, got B={B!r}")
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K!r}")
    return Spectrum((2.0 * np.arange(int(K)) + 1.0) * B, 0.5 * B)


def custom_spectrum(values, lambda0) -> Spectrum:
    return Spectrum(np.asarray(values, dtype=float), float(lambda0))


def simpson_weights(n_intervals, h):
    if n_intervals < 2 or n_intervals % 2:
        raise ValueError(f"Simpson's rule needs an even number of intervals, got {n_intervals}")
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


@dataclass(frozen=True)
class InvolutionOperator:
    """Involution operator truncated to its ``modes`` lowest eigenpairs.

    ``N_x`` is the number of grid intervals on ``[0, pi]`` (even, Simpson).
    The grid must resolve the highest retained eigenfunction index, so
    ``N_x >= 8 max(K, n_max)``; with the default ``None`` that minimum is used.
    """

    epsilon: float
    modes: int
    N_x: int | None = None
    spectrum: Spectrum = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_eps(self.epsilon)
        s = involution_spectrum(self.epsilon, self.modes)
        object.__setattr__(self, "spectrum", s)
        need = 8 * max(self.modes, max(s.labels))
        if self.N_x is None:
            object.__setattr__(self, "N_x", need)
        if int(self.N_x) != self.N_x or self.N_x % 2:
            raise ValueError(f"N_x must be an even integer, got {self.N_x!r}")
        if self.N_x < need:
            raise ValueError(
                f"N_x={self.N_x} does not resolve mode n={max(s.labels)}; need N_x >= {need}"
            )
        object.__setattr__(self, "N_x", int(self.N_x))

    @property
    def labels(self):
        return np.array(self.spectrum.labels)

    @property
    def h(self):
        return math.pi / self.N_x

    @property
    def grid(self):
        return np.linspace(0.0, math.pi, self.N_x + 1)

    @property
    def weights(self):
        return simpson_weights(self.N_x, self.h)

    def basis(self):
        """Eigenfunction samples, shape ``(N_x + 1, K)``."""
        return SQRT_2_PI * np.sin(np.outer(self.grid, self.labels))

    def eigenfunction(self, k) -> SpatialFn:
        """The ``k``-th retained eigenfunction (0-based, ascending eigenvalue)."""
        return SpatialFn(self.grid, self.basis()[:, k])

    def sample(self, f) -> SpatialFn:
        return SpatialFn(self.grid, np.asarray(f(self.grid), dtype=float))


@dataclass(frozen=True)
class SpatialFn:
    """Samples on a uniform grid over ``[0, pi]``, endpoints included."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values)
        if x.ndim != 1 or v.shape[:1] != x.shape:
            raise ValueError(f"grid and samples disagree: {x.shape} vs {v.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    def boundary_violation(self, tol=1e-10):
        """Largest endpoint magnitude relative to ``max(1, sup|f|)`` when it exceeds ``tol``, else 0."""
        scale = max(1.0, float(np.max(np.abs(self.values)))) if self.values.size else 1.0
        b = max(abs(self.values[0]), abs(self.values[-1])) / scale
        return float(b) if b > tol else 0.0

    def l2_norm(self):
        n = self.x.size - 1
        w = simpson_weights(n, (self.x[-1] - self.x[0]) / n)
        return float(np.sqrt(np.sum(w * np.abs(self.values) ** 2)))

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.x, self.values]), delimiter=",",
                   header="x,value", comments="", fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


def _check_grid(f: SpatialFn, op: InvolutionOperator):
    if f.x.size != op.N_x + 1 or not np.allclose(f.x, op.grid, rtol=0, atol=1e-12):
        raise ValueError(f"function is not sampled on the operator grid ({op.N_x + 1} points on [0, pi])")


def forward_transform(f: SpatialFn, op: InvolutionOperator, strict=True):
    """Coefficients ``c_n = <f, sqrt(2/pi) sin(n x)>`` by composite Simpson.

    With ``strict`` a nonzero endpoint (non-Dirichlet data) raises.
    """
    _check_grid(f, op)
    if strict:
        b = f.boundary_violation()
        if b:
            raise ValueError(f"spatial data violates the Dirichlet condition (endpoint value {b:.3g})")
    return (op.weights * f.values) @ op.basis()


def inverse_transform(c, op: InvolutionOperator) -> SpatialFn:
    """Synthesis ``sum_n c_n sqrt(2/pi) sin(n x)`` on the grid."""
    c = np.asarray(c)
    if c.shape != (op.modes,):
        raise ValueError(f"expected {op.modes} coefficients, got shape {c.shape}")
    return SpatialFn(op.grid, op.basis() @ c)


def apply_involution(f: SpatialFn, eps) -> SpatialFn:
    """``-f''(x) + eps f''(pi - x)`` by second-order central differences.

    ``pi - x_i`` is grid point ``N - i``. Boundary rows are set to 0 and are
    not meaningful.
    """
    _check_eps(eps)
    v = np.asarray(f.values, dtype=float)
    n = v.size - 1
    h = (f.x[-1] - f.x[0]) / n
    d2 = np.zeros_like(v)
    d2[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    out = -d2 + eps * d2[::-1]
    out[0] = out[-1] = 0.0
    return SpatialFn(f.x, out)
