"""YAML run configuration: strict dataclass schema and problem builders.

Every mapping is checked against its dataclass fields, so a misspelt key is
an error rather than a silently ignored default. Paths inside a config are
resolved relative to the config file.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .direct import AffineModeSource, DirectProblem, SeparableSource, zero_source
from .growth import AffineFn, CoefficientProfile, ConstantFn
from .inverse import InverseProblem, SourceProfile
from .operators import InvolutionOperator, SpatialFn, custom_spectrum, forward_transform, landau_spectrum
from .qlattice import QParams, _check_q

COMMANDS = ("direct", "inverse", "verify", "sweep")


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit status 2)."""


@dataclass(frozen=True)
class OperatorConfig:
    kind: str
    epsilon: float | None = None
    N_x: int | None = None
    B: float | None = None
    values: list | None = None
    lambda0: float | None = None


@dataclass(frozen=True)
class ProfileConfig:
    """``constant`` (value ``a``) or ``affine`` (``a + b t``) with declared bounds."""

    kind: str
    a: float
    b: float = 0.0
    alpha: float | None = None
    beta: float | None = None
    alpha0: float | None = None
    beta0: float | None = None

    def function(self):
        if self.kind == "constant":
            if self.b:
                raise ConfigError("constant profile takes no slope b")
            return ConstantFn(float(self.a))
        if self.kind == "affine":
            return AffineFn(float(self.a), float(self.b))
        raise ConfigError(f"unknown profile kind {self.kind!r}; expected 'constant' or 'affine'")


@dataclass(frozen=True)
class SourceConfig:
    """Per-mode ``f_k(t) = a_k + b_k t``, or a time-independent spatial CSV."""

    a: list | None = None
    b: list | None = None
    csv: str | None = None


@dataclass(frozen=True)
class SweepConfig:
    q_values: list
    lam: float = 1.0
    phi: float = 1.0


@dataclass(frozen=True)
class VerifyConfig:
    cases: int = 100


@dataclass(frozen=True)
class RunConfig:
    command: str
    q: float | None = None
    T: float = 1.0
    lattice_depth: int | None = None
    n_terms: int | None = None
    tol: float = 1e-12
    modes: int | None = None
    d: float = 0.0
    operator: OperatorConfig | None = None
    upsilon: ProfileConfig = field(default_factory=lambda: ProfileConfig("constant", 1.0, alpha=1.0, beta=1.0))
    g: ProfileConfig | None = None
    phi: Any = None
    eta: Any = None
    source: SourceConfig | None = None
    sweep: SweepConfig | None = None
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    base_dir: Path = field(default=Path("."), compare=False)


_NESTED = {
    "operator": OperatorConfig,
    "upsilon": ProfileConfig,
    "g": ProfileConfig,
    "source": SourceConfig,
    "sweep": SweepConfig,
    "verify": VerifyConfig,
}


def _strict(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    missing = [
        f.name for f in dataclasses.fields(cls)
        if f.name in names and f.name not in data
        and f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
    ]
    if missing:
        raise ConfigError(f"missing required field(s) in {where}: {', '.join(missing)}")
    kw = {}
    for k, v in data.items():
        sub = _NESTED.get(k) if cls is RunConfig else None
        kw[k] = _strict(sub, v, f"{where}.{k}") if sub is not None and v is not None else v
    try:
        return cls(**kw)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from None


def parse_config(data, base_dir=Path(".")) -> RunConfig:
    cfg = _strict(RunConfig, data, "config")
    cfg = dataclasses.replace(cfg, base_dir=Path(base_dir))
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"config {path} is not valid YAML: {e}") from None
    return parse_config(data, path.parent)


def _number(v, name, positive=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if not math.isfinite(v) or (positive and not v > 0):
        raise ConfigError(f"{name} must be a {'positive ' if positive else ''}finite number, got {v!r}")
    return v


def validate(cfg: RunConfig):
    """Schema-level checks; module invariants are re-checked when problems are built."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {cfg.command!r}")
    if cfg.command == "sweep":
        if cfg.sweep is None:
            raise ConfigError("sweep command needs a 'sweep' section with q_values")
        if not isinstance(cfg.sweep.q_values, list) or not cfg.sweep.q_values:
            raise ConfigError("sweep.q_values must be a nonempty list")
        for q in cfg.sweep.q_values:
            _check_q(_number(q, "sweep.q_values entry"))
        _number(cfg.sweep.lam, "sweep.lam", positive=True)
        _number(cfg.sweep.phi, "sweep.phi")
    else:
        if cfg.q is None:
            raise ConfigError(f"missing required field q for command {cfg.command}")
        if cfg.operator is None:
            raise ConfigError(f"missing required field operator for command {cfg.command}")
    if cfg.q is not None:
        _check_q(_number(cfg.q, "q"))
    _number(cfg.T, "T", positive=True)
    _number(cfg.tol, "tol", positive=True)
    _number(cfg.d, "d")
    for name in ("lattice_depth", "n_terms", "modes"):
        v = getattr(cfg, name)
        if v is not None:
            _number(v, name, positive=True, integer=True)
    if cfg.command == "direct" and cfg.phi is None:
        raise ConfigError("missing required field phi for command direct")
    if cfg.command == "inverse":
        for name in ("phi", "eta", "g"):
            if getattr(cfg, name) is None:
                raise ConfigError(f"missing required field {name} for command inverse")
    _number(cfg.verify.cases, "verify.cases", positive=True, integer=True)


# -- builders ------------------------------------------------------------------

def qparams(cfg: RunConfig, q=None) -> QParams:
    return QParams(cfg.q if q is None else q, cfg.n_terms, cfg.tol)


def build_operator(cfg: RunConfig):
    """Return ``(spectrum, involution_operator_or_None)``."""
    op = cfg.operator
    if op.kind == "involution":
        if op.epsilon is None or cfg.modes is None:
            raise ConfigError("involution operator needs operator.epsilon and modes")
        inv = InvolutionOperator(_number(op.epsilon, "operator.epsilon"), cfg.modes, op.N_x)
        return inv.spectrum, inv
    if op.kind == "landau":
        if op.B is None or cfg.modes is None:
            raise ConfigError("landau operator needs operator.B and modes")
        return landau_spectrum(_number(op.B, "operator.B"), cfg.modes), None
    if op.kind == "custom":
        if op.values is None or op.lambda0 is None:
            raise ConfigError("custom operator needs operator.values and operator.lambda0")
        s = custom_spectrum(op.values, op.lambda0)
        if cfg.modes is not None and cfg.modes != s.K:
            raise ConfigError(f"modes={cfg.modes} disagrees with {s.K} custom eigenvalues")
        return s, None
    raise ConfigError(f"unknown operator kind {op.kind!r}; expected involution, landau or custom")


def build_upsilon(cfg: RunConfig) -> CoefficientProfile:
    u = cfg.upsilon
    if u.alpha is None or u.beta is None:
        raise ConfigError("upsilon needs declared bounds alpha and beta")
    return CoefficientProfile(u.function(), u.alpha, u.beta)


def build_source_shape(cfg: RunConfig) -> SourceProfile:
    g = cfg.g
    if g.alpha0 is None or g.beta0 is None:
        raise ConfigError("g needs declared bounds alpha0 and beta0")
    return SourceProfile(g.function(), g.alpha0, g.beta0)


def _spatial(ref, cfg, inv, name):
    if inv is None:
        raise ConfigError(f"{name} given as spatial CSV, which needs the involution operator")
    f = SpatialFn.from_csv(cfg.base_dir / ref)
    return forward_transform(f, inv)


def coeff_vector(value, cfg, spectrum, inv, name):
    """A coefficient list, or ``{csv: path}`` projected onto the involution eigenbasis."""
    if isinstance(value, dict):
        if set(value) != {"csv"}:
            raise ConfigError(f"{name} mapping must have exactly the key 'csv'")
        c = _spatial(value["csv"], cfg, inv, name)
    else:
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list of coefficients or {{csv: path}}")
        c = np.array([_number(v, f"{name} entry") for v in value], dtype=float)
    if c.shape != (spectrum.K,):
        raise ConfigError(f"{name} has {c.size} coefficients, operator has {spectrum.K} modes")
    return c


def build_source(cfg, spectrum, inv):
    s, K = cfg.source, spectrum.K
    if s is None:
        return zero_source(K)
    if s.csv is not None:
        if s.a is not None or s.b is not None:
            raise ConfigError("source takes either csv or a/b, not both")
        return SeparableSource(_spatial(s.csv, cfg, inv, "source"), ConstantFn(1.0))
    a = coeff_vector(s.a if s.a is not None else [0.0] * K, cfg, spectrum, inv, "source.a")
    b = coeff_vector(s.b if s.b is not None else [0.0] * K, cfg, spectrum, inv, "source.b")
    return AffineModeSource(a, b)


def build_direct(cfg: RunConfig, validate=True) -> DirectProblem:
    spectrum, inv = build_operator(cfg)
    phi = coeff_vector(cfg.phi, cfg, spectrum, inv, "phi")
    return DirectProblem(
        spectrum, build_upsilon(cfg), phi, build_source(cfg, spectrum, inv),
        float(cfg.T), qparams(cfg), float(cfg.d), cfg.lattice_depth, validate=validate,
    )


def build_inverse(cfg: RunConfig, validate=True) -> InverseProblem:
    spectrum, inv = build_operator(cfg)
    phi = coeff_vector(cfg.phi, cfg, spectrum, inv, "phi")
    eta = coeff_vector(cfg.eta, cfg, spectrum, inv, "eta")
    return InverseProblem(
        spectrum, build_upsilon(cfg), qparams(cfg), float(cfg.T), phi, eta,
        build_source_shape(cfg), float(cfg.d), cfg.lattice_depth, validate=validate,
    )
