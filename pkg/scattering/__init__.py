"""
Scattering package for ScatterLab.

Forward solvers for point scatterers and sound-soft obstacles, far-field
response matrices and NUFFT-accelerated imaging.
"""
from .scene import (
    ParametricCurve,
    PointScattererSet,
    IncidentWave,
    HarmonicSet,
    Nonlinearity,
    Scene,
    sample_boundary,
    place_aligned_point_scatterers,
    place_annulus_point_scatterers
)
from .coupled_solver import CoupledSolver, CoupledSolution
from .farfield import DirectionGrid, Modality, ResponseMatrix, build_response_matrix, far_field
from .imaging import ImageDomain, ImageGrid, imaging_direct, imaging_nufft, run_imaging_experiment

__all__ = [
    'ParametricCurve',
    'PointScattererSet',
    'IncidentWave',
    'HarmonicSet',
    'Nonlinearity',
    'Scene',
    'sample_boundary',
    'place_aligned_point_scatterers',
    'place_annulus_point_scatterers',
    'CoupledSolver',
    'CoupledSolution',
    'DirectionGrid',
    'Modality',
    'ResponseMatrix',
    'build_response_matrix',
    'far_field',
    'ImageDomain',
    'ImageGrid',
    'imaging_direct',
    'imaging_nufft',
    'run_imaging_experiment'
]
