"""
Services package for ScatterLab.
"""
from .artifact_service import ArtifactService
from .experiment_service import ExperimentService, ForwardResult, ImageResult
from .validation_service import ValidationService, CriterionResult

__all__ = ['ArtifactService', 'ExperimentService', 'ForwardResult', 'ImageResult',
           'ValidationService', 'CriterionResult']
