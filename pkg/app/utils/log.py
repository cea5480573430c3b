"""
Tagged logging helpers.

Lines look like ``[SIM] round 12 scheduled 9 users`` and the threshold comes
from the ``CLCP_LOG`` environment variable (read through python-dotenv).
"""

import logging
import os
import sys

from dotenv import load_dotenv

load_dotenv()

_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}

_ROOT = "clcp"
_configured = False


def _configure() -> None:
    global _configured
    if _configured:
        return
    level = _LEVELS.get(os.getenv("CLCP_LOG", "warning").strip().lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(tag)s] %(message)s"))
    root = logging.getLogger(_ROOT)
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    _configured = True


class _TagAdapter(logging.LoggerAdapter):
    def process(self, msg, kwargs):
        kwargs.setdefault("extra", {})["tag"] = self.extra["tag"]
        return msg, kwargs


def get_logger(tag: str) -> logging.LoggerAdapter:
    """Return a logger whose lines are prefixed with ``[TAG]``."""
    _configure()
    return _TagAdapter(logging.getLogger(f"{_ROOT}.{tag.lower()}"), {"tag": tag.upper()})


def set_level(name: str) -> None:
    """Override the ``CLCP_LOG`` threshold at runtime (used by ``--verbose``)."""
    _configure()
    try:
        logging.getLogger(_ROOT).setLevel(_LEVELS[name.lower()])
    except KeyError as e:
        raise ValueError(f"Unknown log level: {name}") from e


def progress_enabled() -> bool:
    """tqdm bars are shown only at info verbosity or chattier."""
    _configure()
    return logging.getLogger(_ROOT).getEffectiveLevel() <= logging.INFO
