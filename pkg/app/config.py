"""Config class for the experiment runner."""
from os import getenv


class Config:
    """Runner config object."""

    # Artifacts
    OUTPUT_DIR = getenv("BGK_OUTPUT_DIR", "output")
    FLOAT_FORMAT = getenv("BGK_FLOAT_FORMAT", "%.12g")

    # Logging
    LOG_LEVEL = getenv("BGK_LOG_LEVEL", "INFO")

    # Ensembles
    MAX_WORKERS = int(getenv("BGK_MAX_WORKERS", "4"))
