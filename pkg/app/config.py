import logging
import logging.config
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Values already present in the process environment win over the .env file
load_dotenv(override=False)


def _int_env(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


@dataclass
class Settings:
    workers: Optional[int] = None
    output_dir: str = "outputs"
    log_level: str = "INFO"
    log_config: str = "logging.conf"
    max_j: float = 40

    def __post_init__(self):
        if self.workers is not None and self.workers < 1:
            raise ValueError("KT_WORKERS must be at least 1")
        if self.max_j <= 0:
            raise ValueError("KT_MAX_J must be positive")

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            workers=_int_env("KT_WORKERS", None),
            output_dir=os.getenv("KT_OUTPUT_DIR", "outputs"),
            log_level=os.getenv("KT_LOG_LEVEL", "INFO").upper(),
            log_config=os.getenv("KT_LOG_CONFIG", "logging.conf"),
            max_j=float(os.getenv("KT_MAX_J", "40")),
        )


def get_settings() -> Settings:
    return Settings.from_env()


def configure_logging(settings: Optional[Settings] = None) -> None:
    """Use the INI file written by setup.sh when present, else a basic console setup."""
    settings = settings or get_settings()
    config_path = Path(settings.log_config)
    if config_path.is_file():
        Path("logs").mkdir(exist_ok=True)
        logging.config.fileConfig(config_path, disable_existing_loggers=False)
        logging.getLogger().setLevel(settings.log_level)
    else:
        logging.basicConfig(level=settings.log_level, format=LOG_FORMAT)


def check_spin_ceiling(j: float, allow_large_j: bool = False, settings: Optional[Settings] = None) -> None:
    """Refuse Liouville-space work above KT_MAX_J; the dense superoperator grows as (2j+1)^4."""
    settings = settings or get_settings()
    if j > settings.max_j and not allow_large_j:
        raise ValueError(
            f"j={j} exceeds the memory ceiling KT_MAX_J={settings.max_j:g}; pass allow_large_j to override"
        )
