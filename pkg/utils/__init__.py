"""
Utilities package for ScatterLab.
"""
from .common import (
    ensure_directory_exists,
    to_jsonable,
    safe_json_dump,
    safe_json_load,
    chunk_ranges,
    timed,
    format_seconds
)
from .exceptions import (
    ScatteringError,
    ConfigurationError,
    ValidationError,
    DegenerateCurveError,
    DomainError,
    SingularityError,
    ResonanceError,
    ConvergenceError,
    UsageError,
    ArtifactError
)

__all__ = [
    'ensure_directory_exists',
    'to_jsonable',
    'safe_json_dump',
    'safe_json_load',
    'chunk_ranges',
    'timed',
    'format_seconds',
    'ScatteringError',
    'ConfigurationError',
    'ValidationError',
    'DegenerateCurveError',
    'DomainError',
    'SingularityError',
    'ResonanceError',
    'ConvergenceError',
    'UsageError',
    'ArtifactError'
]
