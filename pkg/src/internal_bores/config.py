"""Run configuration: JSON schema, defaults and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from . import dj
from .conjugate_flow import make_parameters
from .continuation import DIRECTIONS, StepControl, Thresholds
from .errors import ConfigError, InvalidParameterError


@dataclass(frozen=True)
class PhysicsConfig:
    rho1: float = 2.0
    rho2: float = 1.0


@dataclass(frozen=True)
class GridConfig:
    L: float | None = None
    n_q: int = 401
    n_low: int = 41
    n_up: int = 41


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 50


@dataclass(frozen=True)
class ContinuationConfig:
    directions: tuple[str, ...] = DIRECTIONS
    steps: int = 30
    ds0: float = 0.01
    ds_min: float = 1e-5
    ds_max: float = 0.1
    delta_lambda0: float | None = None
    thresholds: Thresholds = field(default_factory=Thresholds)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "bore_out"
    formats: tuple[str, ...] = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def params(self):
        return make_parameters(self.physics.rho1, self.physics.rho2)

    @property
    def delta_lambda0(self) -> float:
        d = self.continuation.delta_lambda0
        return 0.02 * self.params.lambda_star if d is None else d

    @property
    def length(self) -> float:
        """Truncation half-length; the decay-rate rule at the slower of the two seeds when unset."""
        if self.grid.L is not None:
            return self.grid.L
        p = self.params
        seeds = [p.lambda_star - self.delta_lambda0, p.lambda_star + self.delta_lambda0]
        return max(dj.default_length(p, s) for s in seeds if 0.0 < s < 1.0)

    def grid_kwargs(self) -> dict:
        return {"L": self.length, "n_q": self.grid.n_q, "n_low": self.grid.n_low, "n_up": self.grid.n_up}

    def step_control(self) -> StepControl:
        c = self.continuation
        return StepControl(ds0=c.ds0, ds_min=c.ds_min, ds_max=c.ds_max, max_newton=10, tol=self.solver.tol)

    def resolved(self) -> dict:
        """Fully resolved echo written next to the outputs."""
        out = asdict(self)
        out["grid"]["L"] = self.length
        out["continuation"]["delta_lambda0"] = self.delta_lambda0
        out["continuation"]["directions"] = list(self.continuation.directions)
        out["output"]["formats"] = list(self.output.formats)
        p = self.params
        out["derived"] = {"froude_sq": p.froude_sq, "lambda_star": p.lambda_star}
        return out


def _section(cls, data, name: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key")
    return {k: v for k, v in data.items()}


def _number(value, key: str, positive: bool = True, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key}: must be a finite number")
    if positive and value <= 0:
        raise ConfigError(f"{key}: must be positive")
    return float(value)


def _integer(value, key: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: must be an integer")
    if value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration; top-level ``rho1``/``rho2`` are accepted as shorthand."""
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    raw = dict(raw)
    physics = dict(raw.pop("physics", {}) or {})
    for key in ("rho1", "rho2"):
        if key in raw:
            if key in physics:
                raise ConfigError(f"{key}: given both at top level and in physics")
            physics[key] = raw.pop(key)
    sections = {f.name for f in fields(RunConfig)} - {"physics"}
    unknown = sorted(set(raw) - sections)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")

    ph = _section(PhysicsConfig, physics, "physics")
    rho1 = _number(ph.get("rho1", PhysicsConfig.rho1), "physics.rho1")
    rho2 = _number(ph.get("rho2", PhysicsConfig.rho2), "physics.rho2")
    if rho1 <= rho2:
        raise ConfigError("physics: rho1 must exceed rho2")

    gr = _section(GridConfig, raw.get("grid", {}), "grid")
    grid = GridConfig(
        L=_number(gr.get("L"), "grid.L", allow_none=True),
        n_q=_integer(gr.get("n_q", 401), "grid.n_q", 3),
        n_low=_integer(gr.get("n_low", 41), "grid.n_low", 3),
        n_up=_integer(gr.get("n_up", 41), "grid.n_up", 3),
    )
    if grid.n_q % 2 == 0:
        raise ConfigError("grid.n_q: must be odd")

    so = _section(SolverConfig, raw.get("solver", {}), "solver")
    solver = SolverConfig(
        tol=_number(so.get("tol", 1e-10), "solver.tol"),
        max_iter=_integer(so.get("max_iter", 50), "solver.max_iter", 1),
    )

    co = _section(ContinuationConfig, raw.get("continuation", {}), "continuation")
    dirs = co.get("directions", list(DIRECTIONS))
    if isinstance(dirs, str):
        dirs = [dirs]
    if not isinstance(dirs, list) or not dirs or any(d not in DIRECTIONS for d in dirs):
        raise ConfigError("continuation.directions: must be a non-empty list drawn from ['minus', 'plus']")
    th_raw = _section(Thresholds, co.get("thresholds", {}), "continuation.thresholds")
    try:
        thresholds = Thresholds(**{k: _number(v, f"continuation.thresholds.{k}") for k, v in th_raw.items()})
    except InvalidParameterError as exc:
        raise ConfigError(f"continuation.thresholds: {exc}") from exc
    cont = ContinuationConfig(
        directions=tuple(dict.fromkeys(dirs)),
        steps=_integer(co.get("steps", 30), "continuation.steps", 0),
        ds0=_number(co.get("ds0", 0.01), "continuation.ds0"),
        ds_min=_number(co.get("ds_min", 1e-5), "continuation.ds_min"),
        ds_max=_number(co.get("ds_max", 0.1), "continuation.ds_max"),
        delta_lambda0=_number(co.get("delta_lambda0"), "continuation.delta_lambda0", allow_none=True),
        thresholds=thresholds,
    )
    if not cont.ds_min <= cont.ds0 <= cont.ds_max:
        raise ConfigError("continuation.ds0: must satisfy ds_min <= ds0 <= ds_max")

    ou = _section(OutputConfig, raw.get("output", {}), "output")
    directory = ou.get("directory", OutputConfig.directory)
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory: must be a non-empty string")
    formats = ou.get("formats", ["json", "csv"])
    if not isinstance(formats, list) or any(f not in ("json", "csv") for f in formats):
        raise ConfigError("output.formats: must be a list drawn from ['json', 'csv']")

    cfg = RunConfig(PhysicsConfig(rho1, rho2), grid, solver, cont, OutputConfig(directory, tuple(formats)))
    dl = cfg.delta_lambda0
    lam_star = cfg.params.lambda_star
    for d in cont.directions:
        seed = lam_star - dl if d == "minus" else lam_star + dl
        if not 0.0 < seed < 1.0:
            raise ConfigError(f"continuation.delta_lambda0: seed lambda {seed} for '{d}' leaves (0, 1)")
    return cfg
