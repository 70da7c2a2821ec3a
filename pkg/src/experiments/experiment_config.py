"""
Experiment Config
=================

Flat key-value experiment files in dotenv syntax. Sections are key
prefixes (GRAPH_, POLY_, SOLVER_, DENOISE_, RUN_); RUN_ keys drop their
prefix, the others keep it:

    RUN_EXPERIMENT=table2
    RUN_TRIALS=200
    GRAPH_N=1000
    GRAPH_GENERATORS=1,2,5
    POLY_DEGREE=1
    SOLVER_ITERS=5
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from src.config import OUTPUT_DIR, SEED, TRIALS
from src.errors import InvalidConfigError

logger = logging.getLogger(__name__)

EXPERIMENTS = ("table1", "table2", "convergence", "distributed-check", "denoise-sweep", "graph-gen")
SECTIONS = ("GRAPH_", "POLY_", "SOLVER_", "DENOISE_", "RUN_")


class ExperimentConfig(BaseModel):
    experiment: str = "table1"
    seed: int = SEED
    trials: int = TRIALS
    out: str = OUTPUT_DIR
    plot: bool = True

    graph_kind: str = "circulant"
    graph_n: int = 1000
    graph_generators: List[int] = [1, 2, 5]
    graph_sizes: List[int] = [100, 500, 1000]
    graph_k: int = 5
    graph_interval: str = "dense-eig"

    poly_degree: int = 1
    poly_degrees: List[int] = [0, 1, 2, 3, 4]
    poly_grid: Optional[int] = None

    solver_iters: int = 5

    denoise_t: int = 30
    denoise_points: int = 300
    denoise_k: int = 5
    denoise_smoothness: float = 10.0
    denoise_fractions: List[float] = [0.2]
    denoise_gammas: List[float] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
    denoise_solvers: List[str] = ["cipa", "ogda", "arma"]
    denoise_trials: int = 1

    @field_validator(
        "graph_generators", "graph_sizes", "poly_degrees", "denoise_fractions", "denoise_gammas",
        "denoise_solvers", mode="before",
    )
    @classmethod
    def split_comma_list(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return value

    @field_validator("poly_grid", mode="before")
    @classmethod
    def empty_is_none(cls, value):
        return None if value in ("", None) else value

    @model_validator(mode="after")
    def check_ranges(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got '{self.experiment}'")
        if self.trials < 1 or self.denoise_trials < 1:
            raise ValueError("trials must be at least 1")
        if self.solver_iters < 1:
            raise ValueError("SOLVER_ITERS must be at least 1")
        if self.poly_degree < 0 or any(M < 0 for M in self.poly_degrees):
            raise ValueError("polynomial degrees must be nonnegative")
        if self.poly_grid is not None and self.poly_grid < 2:
            raise ValueError("POLY_GRID needs at least 2 points")
        if any(g < 0 for g in self.denoise_gammas):
            raise ValueError("DENOISE_GAMMAS must be nonnegative")
        return self


def _key_to_field(key: str) -> str:
    key = key.strip().upper()
    if key.startswith("RUN_"):
        key = key[len("RUN_"):]
    elif not key.startswith(SECTIONS):
        raise InvalidConfigError(f"Config key '{key}' is outside the sections {SECTIONS}")
    return key.lower()


def build_config(values: Dict[str, Any] = None, **overrides) -> ExperimentConfig:
    """Validate raw values; ``overrides`` that are None are ignored."""
    data = dict(values or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise InvalidConfigError(f"Invalid experiment config: {e}") from e


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read an experiment file (optional) and apply CLI overrides on top."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise InvalidConfigError(f"Config file {path} not found")
        raw = dotenv_values(path)
        known = set(ExperimentConfig.model_fields)
        for key, value in raw.items():
            name = _key_to_field(key)
            if name not in known:
                raise InvalidConfigError(f"Unknown config key '{key}'")
            values[name] = value
        logger.info(f"Loaded {len(values)} config values from {path}")
    return build_config(values, **overrides)
