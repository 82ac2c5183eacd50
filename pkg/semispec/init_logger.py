"""
Logging setup for semispec.

The configuration is read from an INI file (``config/logging.conf`` by
default, or the path in ``SEMISPEC_LOG_CONF``). The file handler target is
rewritten so each CLI run logs to its own timestamped file under logs/.

Library modules only call ``get_logger(__name__)``; importing semispec never
configures handlers. The CLI calls ``ensure_logging()`` once at startup.
"""

from __future__ import annotations

import io
import logging
import logging.config
import os
from configparser import ConfigParser
from datetime import datetime
from pathlib import Path

CONFIG_PATH = Path("config/logging.conf")
PACKAGED_CONFIG = Path(__file__).resolve().parents[1] / "config" / "logging.conf"
LOG_DIR = Path("logs")
ENV_VAR = "SEMISPEC_LOG_CONF"


def resolve_config_path() -> Path | None:
    """Return the first logging config found: env override, cwd, then checkout."""
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    for candidate in (CONFIG_PATH, PACKAGED_CONFIG):
        if candidate.exists():
            return candidate
    return None


def get_timestamped_logfile() -> Path:
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return LOG_DIR / f"semispec_{timestamp}.log"


def init_logging(config_path: Path | None = None) -> logging.Logger:
    """
    Configure logging from the INI file and return the 'semispec' logger.

    Raises FileNotFoundError if no configuration can be located.
    """
    path = config_path or resolve_config_path()
    if path is None or not path.exists():
        raise FileNotFoundError(f"Logging configuration not found: {path or CONFIG_PATH}")

    LOG_DIR.mkdir(parents=True, exist_ok=True)

    parser = ConfigParser()
    parser.read(path, encoding="utf-8")
    log_file = get_timestamped_logfile()
    if parser.has_section("handler_fileHandler"):
        parser.set("handler_fileHandler", "args", f"('{log_file.as_posix()}', 'a', 'utf-8')")

    buffer = io.StringIO()
    parser.write(buffer)
    buffer.seek(0)
    logging.config.fileConfig(buffer, disable_existing_loggers=False)

    logger = logging.getLogger("semispec")
    logger.debug("Logging initialized from %s", path)
    logger.debug("Active log file: %s", log_file)
    return logger


def ensure_logging() -> logging.Logger:
    """Initialize logging once; fall back to a stderr handler without a config file."""
    root_logger = logging.getLogger("semispec")
    if root_logger.handlers:
        return root_logger
    try:
        return init_logging()
    except FileNotFoundError:
        logging.basicConfig(
            level=logging.INFO,
            format="%(asctime)s [%(levelname)s] %(name)s - %(message)s",
        )
        root_logger.warning("No logging configuration found; using basic stderr logging")
        return root_logger


def get_logger(name: str) -> logging.Logger:
    """Return a child of the 'semispec' logger, e.g. get_logger('weight') -> semispec.weight."""
    short = name.rsplit(".", 1)[-1] if name.startswith("semispec.") else name
    return logging.getLogger(f"semispec.{short}")
