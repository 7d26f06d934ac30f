from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config import get_settings
from core.domain.enums.method_enums import Method
from core.domain.enums.powerflow_enums import FlowModel
from core.domain.schemas.solver_types import SolverConfig
from core.services.exceptions import ConfigError


class SynthGridParams(BaseModel):
    n_buses: int = Field(20, ge=1)
    degree_bias: float = Field(1.0, ge=0)

    model_config = ConfigDict(extra="forbid")


class SynthProfileParams(BaseModel):
    T: int = Field(240, ge=1)
    base_load: float = Field(0.005, gt=0)
    volatility: float = Field(0.3, ge=0)
    solar_fraction: float = Field(0.3, ge=0, le=1)
    v0: float = Field(1.0, gt=0)

    model_config = ConfigDict(extra="forbid")


class RunConfig(BaseModel):
    """
    One experiment: grid (file or synthetic) -> profiles (file or synthetic) -> series -> kernels -> report.

    TOML layout mirrors the fields; nested tables are `[synth_grid]`, `[synth_profiles]` and `[solver]`
    (solver keys as in SolverConfig, `lambda` accepted for lam).
    """

    grid: Optional[Path] = None
    synth_grid: SynthGridParams = Field(default_factory=SynthGridParams)
    profiles: Optional[Path] = None
    synth_profiles: SynthProfileParams = Field(default_factory=SynthProfileParams)
    model: FlowModel = FlowModel.EXACT
    solver: SolverConfig = Field(default_factory=SolverConfig)
    methods: List[Method] = Field(default_factory=lambda: list(Method))
    noise_std: float = Field(0.0, ge=0)
    seed: Optional[int] = None
    output_dir: Optional[Path] = None
    jobs: int = Field(1, ge=1)

    model_config = ConfigDict(extra="forbid", use_enum_values=True)

    @model_validator(mode="before")
    @classmethod
    def _settings_defaults(cls, data: Any) -> Any:
        """
        Solver tol / max_iter and jobs fall back to the environment settings. A solver table without
        explicit weights (lambda / mu) selects them per bus with the sweep.
        """
        if not isinstance(data, dict):
            return data
        settings = get_settings()
        out = dict(data)
        solver = out.get("solver")
        if solver is None or isinstance(solver, dict):
            solver = {"tol": settings.SOLVER_TOL, "max_iter": settings.SOLVER_MAX_ITER, **(solver or {})}
            if not {"lambda", "lam", "mu"} & solver.keys():
                solver.setdefault("sweep", True)
            out["solver"] = solver
        if out.get("jobs") is None:
            out["jobs"] = settings.JOBS
        return out

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            first = exc.errors()[0]
            field = ".".join(str(p) for p in first.get("loc", ()))
            raise ConfigError(f"Invalid run configuration: {exc}", field=field or None) from exc

    @classmethod
    def from_toml(cls, path: str | Path, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"No such file: {p}")
        try:
            data = tomllib.loads(p.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p} is not valid TOML: {exc}", field=str(p)) from exc
        return cls.from_mapping(merge_overrides(data, overrides or {}))

    def check_inputs(self) -> "RunConfig":
        """Referenced input files must exist."""
        for path in (self.grid, self.profiles):
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"No such file: {path}")
        return self


def merge_overrides(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """
    Recursive merge; None values in `overrides` leave the base untouched.
    """
    out = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_overrides(out[key], value)
        else:
            out[key] = value
    return out
