"""Environment-driven defaults for sampling, tolerances and expression guards."""
import os
from functools import lru_cache
from typing import Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

# Load environment variables
load_dotenv()

DEFAULT_SEED = 0xDA7A


class Settings(BaseModel):
    """Library-wide defaults, overridable through HYPERCR_* environment variables."""

    samples: int = Field(12, ge=1, description="Accepted samples per numeric zero test")
    seed: int = Field(DEFAULT_SEED, ge=0, description="PRNG seed for sampling")
    tolerance: float = Field(1e-9, gt=0, description="Absolute/relative zero tolerance")
    margin: float = Field(0.05, ge=0, description="Distance kept from branch points and poles")
    box: Tuple[float, float] = Field((-2.0, 2.0), description="Coordinate interval for sampling")
    max_nodes: int = Field(2_000_000, ge=1, description="Expression size guard")
    expand_limit: int = Field(
        400, ge=0, description="Largest radical expression to try expanding"
    )
    log_level: str = Field("WARNING", description="Default logging level for the CLI")

    @field_validator("box", mode="before")
    @classmethod
    def _parse_box(cls, value):
        if isinstance(value, str):
            parts = [p for p in value.replace(" ", "").split(",") if p]
            if len(parts) != 2:
                raise ValueError("box must be 'low,high'")
            value = (float(parts[0]), float(parts[1]))
        low, high = value
        if not low < high:
            raise ValueError("box must be nonempty (low < high)")
        return (float(low), float(high))


def _from_env() -> dict:
    mapping = {
        "samples": "HYPERCR_SAMPLES",
        "seed": "HYPERCR_SEED",
        "tolerance": "HYPERCR_TOLERANCE",
        "margin": "HYPERCR_MARGIN",
        "box": "HYPERCR_BOX",
        "max_nodes": "HYPERCR_MAX_NODES",
        "expand_limit": "HYPERCR_EXPAND_LIMIT",
        "log_level": "HYPERCR_LOG_LEVEL",
    }
    values = {}
    for field, env_name in mapping.items():
        raw = os.getenv(env_name)
        if raw is None or raw == "":
            continue
        if field == "seed":
            values[field] = int(raw, 0)
        else:
            values[field] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings, read once from the environment."""
    return Settings(**_from_env())
