"""
Core модули grasp-service.

Экспортирует конфигурацию и исключения для удобного импорта.
"""
from .config import PipelineConfig, load_pipeline_config
from .constants import *
from .errors import (
    ConfigError,
    DegenerateSegmentError,
    EmptyCagedSetError,
    EmptyContactsError,
    EmptyMeshError,
    GraspServiceError,
    MeshLoadError,
    MissingOpenDirectionError,
    NoSurroundingStructureError,
    SamplingError,
    ShapeSpecError,
    UnsupportedFormatError,
)

__all__ = [
    'PipelineConfig',
    'load_pipeline_config',
    'ConfigError',
    'DegenerateSegmentError',
    'EmptyCagedSetError',
    'EmptyContactsError',
    'EmptyMeshError',
    'GraspServiceError',
    'MeshLoadError',
    'MissingOpenDirectionError',
    'NoSurroundingStructureError',
    'SamplingError',
    'ShapeSpecError',
    'UnsupportedFormatError',
]
