"""Numeric defaults and run configuration.

Defaults live in ``Tolerances``. A JSON settings file may override any of
them; explicit command-line flags override the file.
"""
import json
import logging
import os
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ahlfors_fredholm.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

WORKERS_ENV = "AHLFORS_FREDHOLM_WORKERS"


class Tolerances(BaseModel):
    """Every numeric threshold used by estimators, solvers and experiments."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    residual: float = Field(1e-10, gt=0)
    bootstrap: float = Field(1e-10, gt=0)
    condition_limit: float = Field(1e12, gt=1)
    neumann_tol: float = Field(1e-12, gt=0)
    neumann_max_terms: int = Field(500, ge=1)
    stability_factor: float = Field(2.0, gt=1)
    growth_ceiling: float = Field(1.25, gt=1)
    jump_shrink_ceiling: float = Field(0.9, gt=0, lt=1)
    ahlfors_ceiling: float = Field(100.0, gt=0)
    grid_ratio: float = Field(2 ** 0.25, gt=1)
    eps: float = Field(1e-3, gt=0)
    max_nodes: int = Field(4096, ge=1)
    triple_cap: int = Field(512, ge=2)
    irregular_kernel_factor: float = Field(10.0, gt=0)
    exponent_tol: float = Field(1e-12, ge=0)


DEFAULT_TOLERANCES = Tolerances()


class RunConfig(BaseModel):
    """Fully resolved configuration of one command-line run."""
    model_config = ConfigDict(extra='forbid')

    command: str
    space: Optional[str] = None
    meshes: List[int] = Field(default_factory=list)
    kernel: Optional[str] = None
    datum: Optional[str] = None
    upsilon: Optional[float] = None
    kernel_class: Optional[str] = None
    split: Optional[str] = None
    t1: Optional[float] = None
    theorem: Optional[str] = None
    bound: Optional[str] = None
    theta: Optional[float] = None
    beta: Optional[float] = None
    modulus: Optional[str] = None
    s: Optional[float] = None
    s2: Optional[float] = None
    a: Optional[float] = None
    mass_budget: Optional[float] = None
    min_dist: Optional[float] = None
    r_cutoff: Optional[float] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    strong: bool = False
    scale: bool = True
    target_norm: float = Field(0.5, gt=0, lt=1)
    seed: int = 0
    out: Optional[str] = None
    dump_mu: Optional[str] = None
    workers: int = 1
    tolerances: Tolerances = Field(default_factory=Tolerances)


def load_tolerances(path: Optional[Union[str, Path]] = None,
                    overrides: Optional[Dict[str, object]] = None) -> Tolerances:
    """Merge defaults, an optional settings file and explicit overrides."""
    values: Dict[str, object] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise InvalidArgumentError(f"settings file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                file_values = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"settings file {path} is not valid JSON: {e}") from e
        if not isinstance(file_values, dict):
            raise InvalidArgumentError(f"settings file {path} must hold a JSON object")
        logger.debug("loaded %d settings from %s", len(file_values), path)
        values.update(file_values)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    try:
        return Tolerances(**values)
    except ValidationError as e:
        raise InvalidArgumentError(f"invalid tolerance settings: {e}") from e


def save_tolerances(tolerances: Tolerances, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(tolerances.model_dump(), f, indent=4, sort_keys=True)


def worker_count() -> int:
    """Worker threads for internal scans, read from the environment."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise InvalidArgumentError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    if workers < 1:
        raise InvalidArgumentError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return workers
