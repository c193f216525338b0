"""
Univalence Checks - Run Configuration
Defaults for grids, series order and search come from the environment,
optionally through a `.env` file at the repository root.

Version: 1.0.0
"""

import logging
import os
from pathlib import Path
from typing import Dict, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import ConfigError

logger = logging.getLogger(__name__)

TOOL_VERSION = "1.0.0"
REPORT_SCHEMA = 1

ENV_PATH = Path(__file__).parent.parent / ".env"

# Environment variable -> Settings field
ENV_FIELDS: Dict[str, str] = {
    "UNIVALENCE_SERIES_ORDER": "series_order",
    "UNIVALENCE_EVAL_RADIUS_CAP": "eval_radius_cap",
    "UNIVALENCE_RADII_LEVELS": "radii_levels",
    "UNIVALENCE_ANGLES": "angles",
    "UNIVALENCE_MARGIN_FRACTION": "margin_fraction",
    "UNIVALENCE_SINGULAR_TOLERANCE": "singular_tolerance",
    "UNIVALENCE_ZERO_SCAN_TOLERANCE": "zero_scan_tolerance",
    "UNIVALENCE_PENALTY_LAMBDA": "penalty_lambda",
    "UNIVALENCE_WORKERS": "workers",
    "UNIVALENCE_LOG_LEVEL": "log_level",
}


class Settings(BaseModel):
    """Validated run defaults"""

    model_config = ConfigDict(frozen=True)

    series_order: int = Field(64, ge=1)
    eval_radius_cap: float = Field(1.0 - 2.0 ** -12, gt=0.0, lt=1.0)
    radii_levels: int = Field(12, ge=2)
    angles: int = Field(4096, ge=16)
    margin_fraction: float = Field(0.02, gt=0.0, lt=1.0)
    singular_tolerance: float = Field(1e-14, gt=0.0)
    zero_scan_tolerance: float = Field(1e-8, gt=0.0)
    penalty_lambda: float = Field(100.0, gt=0.0)
    workers: int = Field(1, ge=1)
    log_level: str = Field("INFO", pattern=r"^(DEBUG|INFO|WARNING|ERROR|CRITICAL)$")


_settings: Optional[Settings] = None


def get_settings(reload: bool = False) -> Settings:
    """
    Return the process-wide settings, loading them on first use.

    Args:
        reload: Re-read `.env` and the environment instead of using the cache

    Returns:
        Settings instance

    Raises:
        ConfigError: if any variable fails validation
    """
    global _settings
    if _settings is not None and not reload:
        return _settings

    # Shell variables win over .env entries
    load_dotenv(dotenv_path=ENV_PATH, override=False)

    values = {field: os.environ[var] for var, field in ENV_FIELDS.items() if var in os.environ}
    try:
        _settings = Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid environment configuration: {e.errors()[0]['msg']}",
                          fields=sorted(values)) from e

    if values:
        logger.debug(f"⚙️ Settings overridden from environment: {sorted(values)}")
    return _settings
