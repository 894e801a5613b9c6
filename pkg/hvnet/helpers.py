import hashlib
import logging
import re
from logging.handlers import RotatingFileHandler
from typing import Iterable, Optional

import numpy as np

from hvnet.errors import InvalidInputError, ShapeError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def configure_logging(
    level: int = logging.INFO,
    log_file: Optional[str] = None,
    names: Iterable[str] = ("hvnet", "experiments", "cli"),
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 3,
) -> None:
    """
    Attach console (and optionally rotating file) handlers to the package loggers.

    Calling it again only updates levels, so handlers are never duplicated.
    """
    fmt = logging.Formatter(LOG_FORMAT)
    for name in names:
        log = logging.getLogger(name)
        log.setLevel(level)
        if log.handlers:
            for h in log.handlers:
                h.setLevel(level)
            continue
        ch = logging.StreamHandler()
        ch.setLevel(level)
        ch.setFormatter(fmt)
        log.addHandler(ch)
        if log_file:
            fh = RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
            fh.setLevel(level)
            fh.setFormatter(fmt)
            log.addHandler(fh)
        log.propagate = False


def sanitize_filename(name: str) -> str:
    """Sanitize the filename by replacing characters not allowed in filenames."""
    sanitized = re.sub(r'[\\/*?:"<>| ]', "_", name)
    logger.debug(f"Sanitized filename: {sanitized}")
    return sanitized


def derive_seed(base: int, *keys) -> int:
    """
    Mix a base seed with string keys into an independent 64-bit seed.

    seed = first 8 bytes (big-endian) of SHA-256("base|key1|key2|...").
    """
    text = "|".join([str(int(base))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def as_float_array(x, name: str = "array", ndim: Optional[int] = None) -> np.ndarray:
    """Convert to a float64 array, checking dimensionality and finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr
