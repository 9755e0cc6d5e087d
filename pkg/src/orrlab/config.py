"""Experiment configuration: JSON files validated into typed sections.

Unknown keys are rejected everywhere, and every validation failure is
reported with the dotted path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "parse_config",
    "config_from_dict",
    "config_hash",
]

EXPERIMENTS = (
    "linear-damping",
    "nonlinear-damping",
    "echo",
    "enstrophy-cascade",
    "sobolev-growth",
    "lemmas",
    "toy",
    "elliptic",
    "energy-monitor",
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridConfig(_Section):
    k_max: int = 64
    n_y: int = 512
    L_y: float = 8 * math.pi

    @field_validator("k_max")
    @classmethod
    def _k(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("n_y")
    @classmethod
    def _n(cls, v):
        if v < 8 or v & (v - 1):
            raise ValueError("must be a power of two >= 8")
        return v

    @field_validator("L_y")
    @classmethod
    def _l(cls, v):
        if not (v > 0 and math.isfinite(v)):
            raise ValueError("must be positive and finite")
        return v


class TimeConfig(_Section):
    dt: float = 0.01
    t_end: float = 100.0
    output_stride: int = 100
    checkpoint_stride: int = 0
    fit_window: tuple[float, float] = (10.0, 100.0)

    @field_validator("dt", "t_end")
    @classmethod
    def _pos(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("output_stride")
    @classmethod
    def _stride(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("checkpoint_stride")
    @classmethod
    def _ck(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @model_validator(mode="after")
    def _window(self):
        lo, hi = self.fit_window
        if not 0 < lo < hi:
            raise ValueError("fit_window must satisfy 0 < lo < hi")
        return self


class InitConfig(_Section):
    kind: Literal["gevrey_bump", "two_mode_echo", "custom", "random"] = "gevrey_bump"
    epsilon: float = 0.01
    width: float = 2.0
    k: int = 1
    eta0: float = 20.0
    modes: list[tuple[int, float, float, float]] = Field(default_factory=list)
    decay: float = 1.0

    @field_validator("epsilon")
    @classmethod
    def _eps(cls, v):
        if v < 0 or not math.isfinite(v):
            raise ValueError("must be finite and >= 0")
        return v

    @field_validator("width", "decay")
    @classmethod
    def _w(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("k")
    @classmethod
    def _kk(cls, v):
        if v == 0:
            raise ValueError("must be nonzero")
        return v


class MultiplierConfig(_Section):
    s: float = 0.55
    lambda0: float = 0.2
    lambda_prime: float = 0.1
    sigma: float = 13.0
    c_kappa: float = 0.5
    q_tilde: float = 0.506
    delta_lambda: Optional[float] = None

    @field_validator("s")
    @classmethod
    def _s(cls, v):
        if not 0.5 < v <= 1.0:
            raise ValueError(f"s={v} must lie in (1/2, 1]")
        return v

    @field_validator("sigma")
    @classmethod
    def _sigma(cls, v):
        if not v > 12:
            raise ValueError(f"sigma={v} must exceed 12")
        return v

    @field_validator("c_kappa")
    @classmethod
    def _ck(cls, v):
        if not 1.5 < 1 + 2 * v < 10:
            raise ValueError(f"c_kappa={v}: 1 + 2 c_kappa must lie in (3/2, 10)")
        return v

    @model_validator(mode="after")
    def _cross(self):
        if not self.lambda0 > self.lambda_prime > 0:
            raise ValueError("need lambda0 > lambda_prime > 0")
        hi = self.s / 8 + 7 / 16
        if not 0.5 < self.q_tilde <= hi + 1e-15:
            raise ValueError(f"q_tilde={self.q_tilde} must lie in (1/2, s/8 + 7/16 = {hi:.6g}]")
        return self

    def build(self):
        from .weights import MultiplierSpec

        return MultiplierSpec(**self.model_dump())


class EnergyConfig(_Section):
    K_D: float = 1.0
    K_v: float = 100.0

    @field_validator("K_D", "K_v")
    @classmethod
    def _p(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v


class LemmaConfig(_Section):
    ids: list[str] = Field(default_factory=lambda: ["wellsep", "dtw", "WFreqCompare", "Jswap", "basic"])
    samples: int = 2000

    @field_validator("ids")
    @classmethod
    def _ids(cls, v):
        from .lemmas import LEMMA_IDS

        bad = [x for x in v if x not in LEMMA_IDS]
        if bad:
            raise ValueError(f"unknown lemma ids {bad}; expected a subset of {list(LEMMA_IDS)}")
        return v

    @field_validator("samples")
    @classmethod
    def _n(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v


class ToyConfig(_Section):
    eta_over_k2: float = 1.0e4
    kappa: float = 0.25
    k: int = 1
    self_interaction: bool = False

    @field_validator("kappa")
    @classmethod
    def _kap(cls, v):
        if not 0 < v < 0.5:
            raise ValueError(f"kappa={v} must lie in (0, 1/2)")
        return v

    @field_validator("eta_over_k2")
    @classmethod
    def _r(cls, v):
        if not v > 1:
            raise ValueError("must exceed 1")
        return v

    @field_validator("k")
    @classmethod
    def _k(cls, v):
        if v < 1:
            raise ValueError("must be >= 1")
        return v


class EllipticConfig(_Section):
    perturb: float = 0.1
    k_max: int = 16
    n_y: int = 128
    L_y: float = 8 * math.pi
    t: float = 5.0
    tol: float = 1e-12
    max_iter: int = 100

    @field_validator("perturb")
    @classmethod
    def _p(cls, v):
        if not 0 <= v < 1:
            raise ValueError("must lie in [0, 1)")
        return v


class ExperimentConfig(_Section):
    experiment: Literal[
        "linear-damping",
        "nonlinear-damping",
        "echo",
        "enstrophy-cascade",
        "sobolev-growth",
        "lemmas",
        "toy",
        "elliptic",
        "energy-monitor",
    ]
    grid: GridConfig = Field(default_factory=GridConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    init: InitConfig = Field(default_factory=InitConfig)
    multipliers: MultiplierConfig = Field(default_factory=MultiplierConfig)
    energy: EnergyConfig = Field(default_factory=EnergyConfig)
    lemmas: LemmaConfig = Field(default_factory=LemmaConfig)
    toy: ToyConfig = Field(default_factory=ToyConfig)
    elliptic: EllipticConfig = Field(default_factory=EllipticConfig)
    output: str = "orrlab-out"
    seed: int = 0

    @field_validator("seed")
    @classmethod
    def _seed(cls, v):
        if not 0 <= v < 2 ** 64:
            raise ValueError("must be a 64-bit unsigned integer")
        return v


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        msg = err["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        lines.append(f"{path}: {msg}")
    return "; ".join(lines)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a mapping into an ExperimentConfig (ConfigError on failure)."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {_format_errors(exc)}") from None


def parse_config(path) -> ExperimentConfig:
    """Read and validate a JSON configuration file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form of the configuration."""
    text = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
