"""Experiment configuration: a YAML file validated into typed sections.

Numbers inside the scheme and window sections may be given as strings
(``"2 - tau"``, ``"sqrt(2)"``, ``"1/3"``) and are then kept exact.
Validation errors carry the dotted field path (``vanhove.radii``) and,
when the field can be located in the source text, its line number.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .quadratic import QuadraticNumber, parse_scalar, to_exact
from .scheme import CutProjectScheme, SchemeError, VanHoveSequence, Window, build_scheme

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "config_hash",
    "build_scheme_from",
    "build_window",
    "build_sampler",
    "k_grid_values",
]

Scalar = Union[int, float, str]


class ConfigError(ValueError):
    """Config parse or validation failure; the message names field and line."""


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SchemeSpec(_Model):
    preset: Literal["fibonacci", "silver_mean", "custom"] = "fibonacci"
    matrix: Optional[list[list[Scalar]]] = None
    d: int = Field(1, ge=1)
    e: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _matrix_for_custom(self):
        if self.preset == "custom" and self.matrix is None:
            raise ValueError("custom preset requires matrix")
        if self.preset != "custom" and self.matrix is not None:
            raise ValueError("matrix is only allowed with preset 'custom'")
        return self


class WindowSpec(_Model):
    intervals: list[tuple[Scalar, Scalar]] = Field(default_factory=lambda: [(0, 1)], min_length=1)


class SamplerSpec(_Model):
    kind: Literal["independent", "block", "shifted_window", "moving_average", "ou_path"] = "independent"
    # independent
    law: Optional[str] = None
    p: float = 0.5
    mean: float = 0.0
    sd: float = 1.0
    value: float = 1.0
    profile: Literal["flat", "tent"] = "flat"
    # block (the window section is the base window V)
    translations: Optional[list[list[int]]] = None
    m: Optional[list[float]] = None
    S: Optional[list[list[float]]] = None
    q: Optional[list[float]] = None
    # shifted_window
    shift_range: Optional[tuple[Scalar, Scalar]] = None
    shift_density: Literal["uniform", "tent"] = "uniform"
    # moving_average
    stencil: Optional[list[list[int]]] = None
    coefficients: Optional[list[float]] = None
    # ou_path
    rate: float = 5.0
    sigma: float = 1.0
    ou_mean: float = 0.5
    grid_points: int = Field(1001, ge=2)

    @model_validator(mode="after")
    def _kind_fields(self):
        if self.kind == "block" and not self.translations:
            raise ValueError("block sampler requires translations")
        if self.kind == "shifted_window" and self.shift_range is None:
            raise ValueError("shifted_window sampler requires shift_range")
        if self.kind == "moving_average":
            if not self.stencil or self.coefficients is None:
                raise ValueError("moving_average sampler requires stencil and coefficients")
            if len(self.stencil) != len(self.coefficients):
                raise ValueError("stencil and coefficients must have equal length")
        return self


class VanHoveSpec(_Model):
    radii: list[float] = Field(default_factory=lambda: [500.0, 1000.0, 2000.0, 10000.0], min_length=1)

    @field_validator("radii")
    @classmethod
    def _increasing(cls, v):
        if v[0] <= 0:
            raise ValueError("radii must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("radii must be strictly increasing")
        return v


class KGridSpec(_Model):
    min: float = 0.0
    max: float = 1.0
    count: int = Field(200, ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.max > self.min:
            raise ValueError("k_grid.max must exceed k_grid.min")
        return self


class PeakSpec(_Model):
    threshold: float = Field(0.05, ge=0, description="fraction of the strongest predicted amplitude")
    max_count: int = Field(10, ge=0)


class CandidateSpec(_Model):
    radius: Optional[float] = Field(None, gt=0)
    extra: int = Field(5, ge=0)


class SeedSpec(_Model):
    count: int = Field(50, ge=1)
    base: int = Field(0, ge=0, lt=2**64)


class PartitionSpec(_Model):
    g: Optional[list[int]] = None
    dset: Optional[list[list[int]]] = None
    region: tuple[float, float] = (0.0, 1000.0)
    representatives: Optional[list[list[int]]] = None

    @field_validator("dset")
    @classmethod
    def _valid_dset(cls, v):
        if v is None:
            return v
        keys = {tuple(x) for x in v}
        if len({len(x) for x in keys}) > 1:
            raise ValueError("dependency vectors have different lengths")
        if not keys or tuple([0] * len(next(iter(keys)))) not in keys:
            raise ValueError("dependency set must contain 0")
        for x in keys:
            if tuple(-a for a in x) not in keys:
                raise ValueError(f"dependency set is not symmetric: {list(x)} without its negation")
        return v


class ToleranceSpec(_Model):
    density: float = 0.01
    peak: float = 0.05
    background: float = 0.10
    background_fraction: float = 0.95
    se_multiple: float = 4.0


class OutputSpec(_Model):
    dir: str = "out"


class ExperimentConfig(_Model):
    scheme: SchemeSpec = Field(default_factory=SchemeSpec)
    window: WindowSpec = Field(default_factory=WindowSpec)
    sampler: SamplerSpec = Field(default_factory=SamplerSpec)
    vanhove: VanHoveSpec = Field(default_factory=VanHoveSpec)
    k_grid: KGridSpec = Field(default_factory=KGridSpec)
    peaks: PeakSpec = Field(default_factory=PeakSpec)
    candidates: CandidateSpec = Field(default_factory=CandidateSpec)
    seeds: SeedSpec = Field(default_factory=SeedSpec)
    partition: PartitionSpec = Field(default_factory=PartitionSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)


# ---------------------------------------------------------------------------
# loading


def _line_of(node, path: tuple) -> int | None:
    """1-based line of the YAML node at ``path`` (deepest reachable)."""
    line = None
    for part in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == str(part)), None)
            if nxt is None:
                break
            line = next(k for k, v in node.value if v is nxt).start_mark.line + 1
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Validate YAML text; raises :class:`ConfigError` with field/line diagnostics."""
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ConfigError(f"{where}: YAML parse error: {getattr(exc, 'problem', exc)}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = tuple(err["loc"])
            path = ".".join(str(p) for p in loc) or "<root>"
            line = _line_of(root, loc) if root is not None else None
            where = f"{source}:{line}" if line else source
            msgs.append(f"{where}: {path}: {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config: {exc.strerror}") from exc
    return parse_config(text, str(p))


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of the validated config."""
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# building objects


def _scalar(value, field: int | None, path: str):
    try:
        return parse_scalar(value, field)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_scheme_from(cfg: ExperimentConfig) -> CutProjectScheme:
    s = cfg.scheme
    if s.preset != "custom":
        return build_scheme(s.preset)
    rows = [[_scalar(x, None, f"scheme.matrix.{i}.{j}") for j, x in enumerate(r)] for i, r in enumerate(s.matrix)]
    return build_scheme("custom", rows, s.d, s.e)


def build_window(cfg: ExperimentConfig, scheme: CutProjectScheme, intervals=None) -> Window:
    if scheme.e != 1:
        raise ConfigError("window: only one-dimensional internal spaces are configurable")
    ivs = intervals if intervals is not None else cfg.window.intervals
    parsed = []
    for i, (a, b) in enumerate(ivs):
        lo = to_exact(_scalar(a, scheme.field, f"window.intervals.{i}.0"))
        hi = to_exact(_scalar(b, scheme.field, f"window.intervals.{i}.1"))
        if not lo < hi:
            raise ConfigError(f"window.intervals.{i}: empty interval")
        parsed.append((lo, hi))
    try:
        return Window.from_intervals(parsed)
    except SchemeError as exc:
        raise ConfigError(f"window.intervals: {exc}") from None


def build_sampler(cfg: ExperimentConfig, scheme: CutProjectScheme, window: Window):
    from . import randfield as rf

    s = cfg.sampler
    if s.kind == "independent":
        return rf.IndependentSampler(
            scheme, window, law=s.law or "bernoulli", p=s.p, mean=s.mean, sd=s.sd, value=s.value, profile=s.profile
        )
    if s.kind == "block":
        law = s.law or "gaussian"
        return rf.BlockSampler(
            scheme,
            window,
            tuple(tuple(t) for t in s.translations),
            law=law,
            m=tuple(s.m or ()),
            S=tuple(map(tuple, s.S or ())),
            q=tuple(s.q or ()),
        )
    if s.kind == "shifted_window":
        a, b = (to_exact(_scalar(x, scheme.field, f"sampler.shift_range.{i}")) for i, x in enumerate(s.shift_range))
        return rf.ShiftedWindowSampler(scheme, window, (a, b), s.shift_density)
    if s.kind == "moving_average":
        return rf.MovingAverageSampler(
            scheme, window, tuple(tuple(d) for d in s.stencil), tuple(s.coefficients), mean=s.mean
        )
    return rf.OUPathSampler(scheme, window, rate=s.rate, sigma=s.sigma, mean=s.ou_mean, grid_points=s.grid_points)


def vanhove_of(cfg: ExperimentConfig, d: int) -> VanHoveSequence:
    return VanHoveSequence(tuple(cfg.vanhove.radii), d)


def k_grid_values(cfg: ExperimentConfig) -> np.ndarray:
    """Cell-centred grid: ``min + (i + 1/2)(max - min)/count``."""
    g = cfg.k_grid
    return g.min + (np.arange(g.count) + 0.5) * (g.max - g.min) / g.count


def exact_repr(x) -> Any:
    """JSON-friendly form of an exact scalar."""
    if isinstance(x, QuadraticNumber):
        return str(x)
    return float(x)
