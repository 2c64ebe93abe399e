"""Classify-and-rank sentence-pair scoring."""

from ._core import *  # noqa: F401,F403
from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    IoError,
    MixspError,
    NumericError,
    ParseError,
    UndefinedMetric,
)
