"""
Configuration model: read from environment variables through pydantic-settings.
Every value has a default and can be overridden with a ``REGIME_SWK_`` variable.

Usage::

    from regime_swk import meta_config

    limiter_size = meta_config.WORKERS
    if meta_config.LOG_LEVEL == "DEBUG":
        ...
"""
import os
import sys

from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from regime_swk import __version__

CONFIG_ERROR_EXIT_CODE: int = 2


class MetaConfig(BaseSettings):
    """Settings schema, read from the environment by pydantic-settings."""

    model_config = SettingsConfigDict(
        env_prefix='REGIME_SWK_',
        case_sensitive=True,
        env_file_encoding='utf-8',
    )

    # ----- Concurrency -----
    WORKERS: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    """Maximum number of clustering runs executing at the same time"""

    # ----- Logging -----
    LOG_LEVEL: str = "INFO"
    """loguru level for the stderr sink"""

    # ----- Experiment defaults -----
    DEFAULT_RUNS: int = Field(default=100, ge=1)
    """Runs per experiment cell at desk scale"""

    FULL_SCALE_RUNS: int = Field(default=1000, ge=1)
    """Runs per cell with --full-scale (accuracy tables use 1,000)"""

    EPSILON: float = Field(default=1e-6, gt=0)
    """Convergence tolerance on the summed centroid shift"""

    MAX_ITERATIONS: int = Field(default=300, ge=1)
    """Iteration cap for a single clustering run"""

    # ----- Artifacts -----
    ARTIFACT_VERSION: str = f"regime-swk/{__version__}"
    """Version string written into every manifest"""

    @model_validator(mode='before')
    @classmethod
    def _strip_empty_strings(cls, values: dict) -> dict:
        """Treat empty strings as unset so the defaults apply"""
        if isinstance(values, dict):
            return {k: v for k, v in values.items() if v != ''}
        return values


def _load_meta_config() -> MetaConfig:
    """
    Load the settings; on validation failure print a readable summary and exit.

    Output example::

        [CONFIG ERROR] configuration validation failed:
          1 setting(s) have an invalid value:
            - WORKERS (Input should be greater than or equal to 1)
        Fix the REGIME_SWK_* environment variables and retry.
    """
    try:
        return MetaConfig()  # pyright: ignore[reportCallIssue]
    except ValidationError as e:
        missing: list[str] = []
        invalid: list[str] = []
        for err in e.errors():
            field_name = '.'.join(str(loc) for loc in err['loc'])
            if err['type'] == 'missing':
                missing.append(field_name)
            else:
                invalid.append(f"{field_name} ({err['msg']})")

        lines = ["\n[CONFIG ERROR] configuration validation failed:"]
        if missing:
            lines.append(f"  {len(missing)} required setting(s) are missing:")
            for name in missing:
                lines.append(f"    - {name}")
        if invalid:
            lines.append(f"  {len(invalid)} setting(s) have an invalid value:")
            for desc in invalid:
                lines.append(f"    - {desc}")
        lines.append("Fix the REGIME_SWK_* environment variables and retry.")

        print('\n'.join(lines), file=sys.stderr)
        sys.exit(CONFIG_ERROR_EXIT_CODE)


meta_config: MetaConfig = _load_meta_config()

WORKERS: int = meta_config.WORKERS
LOG_LEVEL: str = meta_config.LOG_LEVEL
DEFAULT_RUNS: int = meta_config.DEFAULT_RUNS
FULL_SCALE_RUNS: int = meta_config.FULL_SCALE_RUNS
EPSILON: float = meta_config.EPSILON
MAX_ITERATIONS: int = meta_config.MAX_ITERATIONS
ARTIFACT_VERSION: str = meta_config.ARTIFACT_VERSION
