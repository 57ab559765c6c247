import logging
import logging.config

from core import settings

_configured = False


def configure_logging(level=None):
    """Apply settings.LOGGING once; `level` overrides the root level."""
    global _configured
    if not _configured:
        logging.config.dictConfig(settings.LOGGING)
        _configured = True
    if level:
        logging.getLogger().setLevel(level.upper())
