"""Diagonal operator L in coefficient space: spectra, norms, trajectories.

A coefficient vector is a plain 1-D numpy array whose entry k is the
Fourier coefficient against the k-th eigenfunction (ascending eigenvalue
order). Complex entries are allowed; everything defaults to real.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpectrumError
from .qlattice import LatticeFn, QLattice, dq


@dataclass(frozen=True)
class Spectrum:
    """Nondecreasing eigenvalues ``lambda_1 <= ... <= lambda_K`` with ``lambda_k > lambda0 > 0``.

    ``labels`` optionally records which eigenfunction each entry belongs to
    (e.g. the sine index ``n`` for the involution operator).
    """

    eigenvalues: np.ndarray
    lambda0: float
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size == 0:
            raise SpectrumError("spectrum needs a nonempty 1-D eigenvalue sequence")
        if not self.lambda0 > 0:
            raise SpectrumError(f"lambda0 must be positive, got {self.lambda0!r}")
        if not np.all(np.isfinite(ev)):
            bad = int(np.flatnonzero(~np.isfinite(ev))[0])
            raise SpectrumError(f"eigenvalue {bad + 1} is not finite", index=bad + 1)
        for k in range(ev.size):
            if k > 0 and ev[k] < ev[k - 1]:
                raise SpectrumError(
                    f"eigenvalues must be nondecreasing: entry {k + 1} ({ev[k]}) < entry {k} ({ev[k - 1]})",
                    index=k + 1,
                )
            if not ev[k] > self.lambda0:
                raise SpectrumError(
                    f"eigenvalue {k + 1} ({ev[k]}) does not exceed lambda0={self.lambda0}",
                    index=k + 1,
                )
        if self.labels is not None and len(self.labels) != ev.size:
            raise SpectrumError("labels must match the number of eigenvalues")
        ev.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def K(self):
        return self.eigenvalues.size

    def __len__(self):
        return self.K


def _coeffs(c, s=None):
    c = np.asarray(c)
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficient vector has non-finite entries")
    if s is not None and c.shape[-1] != s.K:
        raise ValueError(f"coefficient vector has {c.shape[-1]} modes, spectrum has {s.K}")
    return c


def plancherel_norm(c):
    return float(np.sqrt(np.sum(np.abs(_coeffs(c)) ** 2)))


def sobolev_norm(c, d, s: Spectrum):
    """``(sum_k lambda_k^d |c_k|^2)^(1/2)``."""
    c = _coeffs(c, s)
    return float(np.sqrt(np.sum(s.eigenvalues**d * np.abs(c) ** 2)))


def apply_L(c, s: Spectrum):
    return s.eigenvalues * _coeffs(c, s)


def tail_estimate(c, d, s: Spectrum):
    """Last-mode contribution ``lambda_K^((d+2)/2) |c_K|``, a proxy for the truncation tail."""
    c = _coeffs(c, s)
    return float(s.eigenvalues[-1] ** ((d + 2) / 2) * abs(c[-1]))


def tail_nonincreasing(c, d, s: Spectrum, last=5):
    """Whether ``lambda_k^((d+2)/2) |c_k|`` is non-increasing over the last ``last`` modes."""
    c = _coeffs(c, s)
    w = s.eigenvalues[-last:] ** ((d + 2) / 2) * np.abs(c[-last:])
    return bool(np.all(np.diff(w) <= 0))


@dataclass(frozen=True)
class CoeffTrajectory:
    """Coefficients ``u_k(t)`` at every lattice point; ``values`` has shape ``(len(lattice), K)``."""

    lattice: QLattice
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] != len(self.lattice):
            raise ValueError(
                f"trajectory needs shape ({len(self.lattice)}, K), got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("trajectory has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def K(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.lattice.points

    def at(self, t):
        return self.values[self.lattice.index_of(t)]

    @property
    def initial(self):
        return self.values[self.lattice.zero_index]

    @property
    def final(self):
        return self.values[0]

    def mode(self, k):
        """Mode ``k`` (0-based) as a :class:`LatticeFn`."""
        return LatticeFn(self.lattice, self.values[:, k])

    def dq_values(self):
        """Quotient ``D_q`` per mode at interior points, shape ``(depth, K)``."""
        lat = self.lattice
        t = lat.points[: lat.depth]
        return (self.values[: lat.depth] - self.values[1 : lat.depth + 1]) / (
            (1.0 - lat.q) * t[:, None]
        )


@dataclass(frozen=True)
class TrajectoryNorms:
    sup_norm: float
    sup_dq_norm: float


def trajectory_norms(tr: CoeffTrajectory, d, s: Spectrum, dq_values=None):
    """Sup over the lattice of ``||u(t)||_{H^d}`` and of ``||D_q u(t)||_{H^d}``.

    ``D_q`` is the lattice quotient at interior points unless ``dq_values``
    (shape ``(depth, K)``) is supplied, e.g. from the governing equation.
    """
    if len(tr.lattice) < 2:
        raise ValueError("trajectory needs at least two lattice points")
    w = s.eigenvalues**d
    sup_u = float(np.sqrt(np.max(np.sum(w * np.abs(tr.values) ** 2, axis=1))))
    if dq_values is None:
        dq_values = tr.dq_values()
    sup_dq = float(np.sqrt(np.max(np.sum(w * np.abs(dq_values) ** 2, axis=1))))
    return TrajectoryNorms(sup_u, sup_dq)


def mode_dq(tr: CoeffTrajectory, k, idx):
    """Single-entry quotient through :func:`qheat.qlattice.dq`."""
    return dq(tr.mode(k), idx)
