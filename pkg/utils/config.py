import json
import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from physics.pt_model import EXPERIMENT_TIMES, PTParams
from utils.errors import InvalidValue, MissingField

logger = logging.getLogger(__name__)

FALLBACK_RUN_DEFAULTS: Dict[str, Any] = {
    "shots_per_axis": 10_000,
    "mc_resamples": 500,
    "seed": 42,
    "output_dir": "outputs",
    "sweep_steps": 200,
}


def load_config() -> Dict[str, Any]:
    """
    Load application configuration from JSON file.

    Returns:
        Dict containing application configuration
    """
    config_path = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'configs', 'app_config.json')

    with open(config_path, 'r') as f:
        config = json.load(f)

    return config


def run_defaults() -> Dict[str, Any]:
    """Run defaults from app_config.json, falling back to the built-in values."""
    try:
        configured = load_config().get('run_defaults', {})
    except (OSError, json.JSONDecodeError) as e:
        logger.warning(f"Could not read app_config.json, using built-in defaults: {e}")
        configured = {}
    return {**FALLBACK_RUN_DEFAULTS, **configured}


class TimeGrid(BaseModel):
    """Uniform time grid with ``steps`` points from t_start to t_end inclusive."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    t_start: float
    t_end: float
    steps: int = Field(ge=1)

    def points(self) -> List[float]:
        return [float(t) for t in np.linspace(self.t_start, self.t_end, self.steps)]


class RunConfig(BaseModel):
    """A complete, validated experiment run."""

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    params: PTParams
    times: Optional[List[float]] = Field(default=None, min_length=1)
    grid: Optional[TimeGrid] = None
    shots_per_axis: int = Field(ge=1)
    mc_resamples: int = Field(ge=2)
    seed: int = Field(ge=0)
    output_dir: str = Field(min_length=1)
    sweep_steps: int = Field(ge=1)

    @model_validator(mode="after")
    def _single_time_source(self) -> "RunConfig":
        if self.times is not None and self.grid is not None:
            raise InvalidValue("times", "give either times or grid, not both")
        return self

    def time_points(self) -> List[float]:
        """Times for the per-time products (density matrices, tomography, table)."""
        if self.times is not None:
            return list(self.times)
        if self.grid is not None:
            return self.grid.points()
        return list(EXPERIMENT_TIMES)

    def sweep_points(self) -> List[float]:
        """Times for the P(|0>_w) sweep: the grid, else 0 .. max(times) in sweep_steps points."""
        if self.grid is not None:
            return self.grid.points()
        end = max(self.time_points())
        return [float(t) for t in np.linspace(0.0, end, self.sweep_steps)]

    def with_overrides(self, output_dir: Optional[str] = None, seed: Optional[int] = None) -> "RunConfig":
        """
        Apply command-line overrides and re-validate the result.

        Args:
            output_dir: Replacement output directory (``--out``)
            seed: Replacement master seed (``--seed``)

        Returns:
            A new RunConfig

        Raises:
            InvalidValue: an override fails validation (e.g. empty directory, negative seed)
        """
        update: Dict[str, Any] = {}
        if output_dir is not None:
            update["output_dir"] = output_dir
        if seed is not None:
            update["seed"] = seed
        if not update:
            return self
        return _validate_run({**self.model_dump(), **update})


def _field_path(loc) -> str:
    return ".".join(str(part) for part in loc) or "<document>"


def parse_config(text: str) -> RunConfig:
    """
    Parse a JSON run document into a RunConfig.

    Unspecified run fields take the defaults from app_config.json; times
    default to the four experiment times when neither ``times`` nor ``grid``
    is given.

    Raises:
        MissingField: a required field is absent (e.g. "params.r")
        InvalidValue: malformed document or a value fails validation
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidValue("<document>", f"not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise InvalidValue("<document>", "top level must be an object")

    for key, value in run_defaults().items():
        data.setdefault(key, value)

    return _validate_run(data)


def _validate_run(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        path = _field_path(first["loc"])
        if first["type"] == "missing":
            raise MissingField(path) from e
        raise InvalidValue(path, first["msg"]) from e


def load_run_config(path: str) -> RunConfig:
    """Read and parse a run document; OSError propagates to the caller."""
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    logger.info(f"Loaded run configuration from {path}")
    return parse_config(text)
