"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored; unknown keys are errors. Lists are
comma separated. Example::

    task = mean
    kernel = brownian
    filter = cutoff
    alpha = 0.5
    b = 2
    h_rule = polynomial:0.55
    xi_rule = polynomial:2
    xi_scale = 0.05
    sigma0 = 1.0
    n = 25,50,100,200,400
    m = 5
    replications = 50
    seed = 20240101
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .. import constants
from ..errors import ConfigError
from ..filters import filter_from_name
from ..kernels import Kernel1, ProductKernel, kernel_from_name, mercer_system
from ..numerics import trapezoid_grid
from ..synthetic import (Constant, ExplicitH, FiniteXi, FixedUnit, PolynomialH, PolynomialXi,
                         TwoPoint, make_process, make_source_mean)


@dataclass
class ExperimentConfig:
    task: str = "mean"
    kernel: str = "brownian"
    bandwidth: float = 1.0
    smoothness: float = 1.5
    lengthscale: float = 0.2
    filter: str = "cutoff"
    mean_filter: str = ""  # covariance runs: filter for the mean step, defaults to `filter`
    compare_filter: str = "tikhonov"  # saturation: the second arm
    alpha: float = 0.5
    b: float = 2.0
    alpha1: float = 0.5
    b1: float = 2.0
    h_rule: str = "polynomial:0.55"
    xi_rule: str = "polynomial:2"
    xi_scale: float = 1.0
    sigma0: float = 0.5
    n: list = field(default_factory=lambda: [25, 50, 100, 200, 400])
    m: list = field(default_factory=lambda: [5])
    m_scheme: str = "constant"
    replications: int = constants.REPLICATIONS
    seed: int = 12345
    lam: str = "oracle"
    eta: str = "oracle"
    solver: str = "auto"
    mercer_L: int = constants.MERCER_TRUNCATION
    kl_L: int = constants.KL_TRUNCATION
    grid_nodes: int = constants.NORM_GRID_1D
    grid2_nodes: int = constants.NORM_GRID_2D
    slope_tolerance: float = float("nan")  # nan -> task default
    slope_against: str = "nm"
    pair_cap: int = constants.PAIR_CAP
    include_diagonal: bool = False
    centering: str = "estimated"
    gammas: list = field(default_factory=lambda: [0.25, 1.0])
    max_points: int = 2100
    band: float = 0.1
    threads: int = 1

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    def validate(self) -> None:
        if self.task not in ("mean", "covariance"):
            raise ConfigError(f"task must be mean or covariance, got {self.task!r}")
        for name in (self.filter, self.compare_filter, self.mean_filter or self.filter):
            try:
                filter_from_name(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.n or any(int(v) < 1 for v in self.n):
            raise ConfigError("n must be a nonempty list of positive integers")
        if len(self.m) not in (1, len(self.n)):
            raise ConfigError("m must have one entry or one per n")
        if any(float(v) < 1 for v in self.m):
            raise ConfigError("m entries must be >= 1")
        if self.task == "covariance" and any(float(v) < 2 for v in self.m):
            raise ConfigError("covariance runs need m >= 2")
        if self.slope_against not in ("nm", "n"):
            raise ConfigError("slope_against must be nm or n")
        if self.centering not in ("estimated", "true"):
            raise ConfigError("centering must be estimated or true")
        if self.solver not in ("auto", "eigen", "direct", "partial"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.b <= 1 or self.b1 <= 1:
            raise ConfigError("eigen-decay exponents must exceed 1")
        if self.alpha <= 0 or self.alpha1 <= 0:
            raise ConfigError("smoothness parameters must be positive")
        _parse_policy(self.lam)
        _parse_policy(self.eta)
        self.h()
        self.xi()
        self.scheme()
        if self.lam.startswith("gridcv") and self.task != "mean":
            raise ConfigError("gridcv lambda selection is only available for mean runs")

    # ------------------------------------------------------------------
    @property
    def tolerance(self) -> float:
        if not math.isnan(self.slope_tolerance):
            return self.slope_tolerance
        return (constants.COV_SLOPE_TOLERANCE if self.task == "covariance"
                else constants.SLOPE_TOLERANCE)

    def cells(self) -> list[tuple[int, float]]:
        ms = self.m if len(self.m) == len(self.n) else self.m * len(self.n)
        return [(int(n), _int_or_float(m)) for n, m in zip(self.n, ms)]

    def kernel1(self) -> Kernel1:
        try:
            return kernel_from_name(self.kernel, bandwidth=self.bandwidth,
                                    smoothness=self.smoothness, lengthscale=self.lengthscale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def kernel2(self) -> ProductKernel:
        return ProductKernel(self.kernel1())

    def main_filter(self):
        return filter_from_name(self.filter)

    def centering_filter(self):
        return filter_from_name(self.mean_filter or self.filter)

    def h(self):
        kind, args = _split_rule(self.h_rule)
        if kind == "unit":
            return FixedUnit()
        if kind == "zero":
            return ExplicitH((0.0,))
        if kind == "polynomial" and len(args) == 1:
            if args[0] <= 0.5:
                raise ConfigError(f"h_rule exponent must exceed 1/2, got {args[0]}")
            return PolynomialH(args[0])
        if kind == "explicit" and args:
            return ExplicitH(tuple(args))
        raise ConfigError(f"bad h_rule {self.h_rule!r}")

    def xi(self):
        kind, args = _split_rule(self.xi_rule)
        if kind == "none":
            return FiniteXi(())
        if kind == "polynomial" and len(args) == 1:
            if args[0] <= 1:
                raise ConfigError(f"xi_rule exponent must exceed 1, got {args[0]}")
            return PolynomialXi(args[0], self.xi_scale)
        if kind == "finite" and args:
            return FiniteXi(tuple(self.xi_scale * a for a in args))
        raise ConfigError(f"bad xi_rule {self.xi_rule!r}")

    def scheme(self):
        kind, args = _split_rule(self.m_scheme)
        if kind == "constant" and not args:
            return Constant()
        if kind == "twopoint" and len(args) == 3:
            return TwoPoint(int(args[0]), int(args[1]), args[2])
        raise ConfigError(f"bad m_scheme {self.m_scheme!r}")

    def process(self, sigma0: float | None = None):
        k = self.kernel1()
        ms = mercer_system(k, self.mercer_L)
        mean = make_source_mean(ms, self.alpha, self.h())
        return make_process(mean, self.xi(), self.sigma0 if sigma0 is None else sigma0,
                            self.scheme(), kl_size=self.kl_L)

    def grid(self):
        return trapezoid_grid(self.grid_nodes)

    def grid2(self):
        return trapezoid_grid(self.grid2_nodes)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            key = _KEY_ALIASES_REV.get(f.name, f.name)
            out[key] = getattr(self, f.name)
        return out


# ----------------------------------------------------------------------
# parsing

_KEY_ALIASES = {"lambda": "lam"}
_KEY_ALIASES_REV = {v: k for k, v in _KEY_ALIASES.items()}
_LIST_INT = {"n"}
_LIST_FLOAT = {"m", "gammas"}


def _int_or_float(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def _split_rule(text: str):
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    try:
        args = [float(a) for a in rest.split(",") if a.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad rule {text!r}") from exc
    return kind, args


def _parse_policy(text: str):
    kind, args = _split_rule(text)
    if kind == "oracle" and not args:
        return kind, args
    if kind == "fixed" and len(args) == 1 and args[0] > 0:
        return kind, args
    if kind == "gridcv" and args and all(a > 0 for a in args):
        return kind, args
    raise ConfigError(f"bad regularization policy {text!r}")


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key = key.strip()
        name = _KEY_ALIASES.get(key, key)
        if name not in fields:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[name] = _coerce(name, fields[name], value.strip(), f"{source}:{lineno}")
    return ExperimentConfig(**values)


def _coerce(name, f, value: str, where: str):
    try:
        if name in _LIST_INT:
            return [int(v) for v in value.split(",") if v.strip()]
        if name in _LIST_FLOAT:
            return [float(v) for v in value.split(",") if v.strip()]
        default = f.default
        if isinstance(default, bool):
            if value.lower() in ("true", "yes", "1"):
                return True
            if value.lower() in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value {value!r} for {name}") from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, list):
            value = ",".join(format(v, "g") if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = format(value, ".17g")
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
