"""Root logging setup shared by the command-line entry points."""

import logging
import os

_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """Configure the root logger once.

    *level* falls back to ``COURT_FUSION_LOG_LEVEL`` and then ``WARNING``.
    """
    name = (level or os.getenv("COURT_FUSION_LOG_LEVEL") or "WARNING").upper()
    logging.basicConfig(level=getattr(logging, name, logging.WARNING), format=_FORMAT)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
