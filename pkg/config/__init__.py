"""
Configuration package for ScatterLab.
"""
from .settings import settings
from .experiment import ExperimentConfig

__all__ = ['settings', 'ExperimentConfig']
