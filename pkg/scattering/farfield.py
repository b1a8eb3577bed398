"""
Far-field patterns and multistatic response matrices.

The far-field pattern at harmonic j of a solution is

    psi_inf(r_hat) = gamma_j [ sum_k s_k^{(j)} e^{-i kappa_j r_hat.r_k}
                               - int_Gamma d_nu phi^{(j)} e^{-i kappa_j r_hat.r'} ds ]

with gamma_j = e^{i pi/4} / sqrt(8 pi kappa_j).

Column j of a response matrix belongs to the transmitter at the direction
b_j = (cos beta_j, sin beta_j); its plane wave travels along -b_j. Moving
point scatterers for that column sit at radii * b_j, between the transmitter
and the obstacles.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np

from config.settings import settings
from scattering import foldy_lax
from scattering.boundary_integral import nodes
from scattering.coupled_solver import CoupledSolution, CoupledSolver
from scattering.foldy_lax import ExternalFields
from scattering.scene import IncidentWave, Scene
from utils.common import timed
from utils.exceptions import ScatteringError, UsageError, ValidationError
from utils.logging import logger

Solution = Union[ExternalFields, CoupledSolution]


def far_field_constant(kappa: float) -> complex:
    """gamma = e^{i pi/4} / sqrt(8 pi kappa)."""
    return np.exp(0.25j * np.pi) / np.sqrt(8.0 * np.pi * kappa)


class Modality(str, Enum):
    """How a response-matrix column is formed."""
    PLAIN = "plain"
    GFL_MINUS_FL = "gfl_minus_fl"


@dataclass(frozen=True)
class DirectionGrid:
    """Uniform observation angles 2 pi i / M and transmitter angles 2 pi j / N."""
    observations: int
    incidences: int

    def __post_init__(self):
        if self.observations < 1 or self.incidences < 1:
            raise ValidationError(f"direction counts must be positive, got {self.observations}x{self.incidences}")

    @classmethod
    def square(cls, count: int) -> "DirectionGrid":
        return cls(count, count)

    @property
    def observation_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.observations) / self.observations

    @property
    def incidence_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.incidences) / self.incidences

    @property
    def observation_directions(self) -> np.ndarray:
        a = self.observation_angles
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    @property
    def transmitter_directions(self) -> np.ndarray:
        b = self.incidence_angles
        return np.stack([np.cos(b), np.sin(b)], axis=-1)

    def incident_wave(self, wavenumber: float, index: int, amplitude: Optional[float] = None) -> IncidentWave:
        """Plane wave emitted by transmitter ``index``."""
        return IncidentWave.from_angle(wavenumber, self.incidence_angles[index] + np.pi, amplitude)


@dataclass
class ResponseMatrix:
    """M x N far-field samples at harmonic ``harmonic`` of the base wavenumber."""
    values: np.ndarray
    wavenumber: float
    grid: DirectionGrid
    harmonic: int = 1
    modality: Modality = Modality.PLAIN
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (self.grid.observations, self.grid.incidences):
            raise ValidationError(
                f"response matrix shape {self.values.shape} does not match the "
                f"{self.grid.observations}x{self.grid.incidences} direction grid"
            )

    @property
    def shape(self):
        return self.values.shape


def _unit_directions(r_hat) -> np.ndarray:
    r_hat = np.asarray(r_hat, dtype=float).reshape(-1, 2)
    if np.any(np.abs(np.hypot(r_hat[:, 0], r_hat[:, 1]) - 1.0) > 1e-12):
        raise ValidationError("far-field directions must be unit vectors")
    return r_hat


def far_field(solution: Solution, scene: Scene, r_hat, harmonic: int = 1):
    """
    Far-field pattern of a Foldy-Lax or generalized Foldy-Lax solution.

    Args:
        solution: ExternalFields for scatterer-only scenes, CoupledSolution otherwise
        scene: Scene the solution belongs to
        r_hat: Unit direction (2,) or directions (M, 2)
        harmonic: Harmonic order j

    Returns:
        Complex scalar for one direction, otherwise an (M,) array

    Raises:
        UsageError: When the solution does not belong to the scene
    """
    directions = _unit_directions(r_hat)
    kappa = harmonic * solution.wave.wavenumber

    if isinstance(solution, ExternalFields):
        if scene.has_obstacles:
            raise UsageError("Foldy-Lax fields cannot describe a scene with obstacles")
        positions, strengths = solution.scatterers.positions, solution.strengths(harmonic)
        boundary_term = np.zeros(directions.shape[0], dtype=complex)
    elif isinstance(solution, CoupledSolution):
        if solution.scene is not scene and not solution.scene.shares_geometry(scene):
            raise UsageError("solution was computed for a different scene")
        if harmonic not in solution.harmonics:
            raise UsageError(f"harmonic {harmonic} not present in solution harmonics {solution.harmonics}")
        if solution.has_scatterers:
            positions, strengths = solution.scatterers.positions, solution.strengths(harmonic)
        else:
            positions, strengths = np.zeros((0, 2)), np.zeros(0, dtype=complex)
        if scene.has_obstacles:
            if harmonic not in solution.densities:
                raise UsageError("solution has no boundary density for a scene with obstacles")
            density = solution.densities[harmonic]
            points, _, weights = nodes(density.discretizations)
            boundary_term = np.exp(-1j * kappa * directions @ points.T) @ (weights * density.values)
        else:
            boundary_term = np.zeros(directions.shape[0], dtype=complex)
    else:
        raise UsageError(f"unsupported solution type {type(solution).__name__}")

    point_term = np.exp(-1j * kappa * directions @ positions.T) @ strengths
    values = far_field_constant(kappa) * (point_term - boundary_term)
    return values[0] if np.asarray(r_hat).ndim == 1 else values


def _check_request(scene: Scene, harmonics: Sequence[int], modalities: Dict[int, Modality]) -> None:
    available = scene.nonlinearity.harmonics
    for harmonic in harmonics:
        if harmonic not in available:
            raise UsageError(f"harmonic {harmonic} is not generated by {scene.nonlinearity.value} scatterers")
        if modalities[harmonic] is Modality.GFL_MINUS_FL and (harmonic == 1 or not scene.has_scatterers):
            raise UsageError("far-field differencing applies only to higher harmonics of nonlinear scenes")


def build_response_matrices(scene: Scene, grid: DirectionGrid, wavenumber: float,
                            harmonics: Iterable[int] = (1,),
                            modality: Union[Modality, str, Dict[int, Modality]] = Modality.PLAIN,
                            eta: Optional[float] = None, threads: int = 0,
                            solver: Optional[CoupledSolver] = None,
                            amplitude: Optional[float] = None,
                            solver_options: Optional[Dict[str, float]] = None) -> Dict[int, ResponseMatrix]:
    """
    Response matrices for several harmonics from one solve per transmitter.

    Args:
        scene: Scene to illuminate
        grid: Observation and transmitter directions
        wavenumber: Base wavenumber
        harmonics: Harmonic orders to record
        modality: One modality for all harmonics or one per harmonic
        eta: Coupling parameter override
        threads: Worker cap
        solver: Existing solver to reuse its factorizations
        amplitude: Incident amplitude, INCIDENT_AMPLITUDE when None
        solver_options: Keyword options for the nonlinear solvers

    Returns:
        Mapping harmonic -> ResponseMatrix

    Raises:
        ScatteringError: Solver failures, tagged with ``details["incidence_index"]``
    """
    harmonics = tuple(harmonics)
    if isinstance(modality, dict):
        modalities = {h: Modality(modality.get(h, Modality.PLAIN)) for h in harmonics}
    else:
        modalities = {h: Modality(modality) for h in harmonics}
    _check_request(scene, harmonics, modalities)

    solver = solver or CoupledSolver(scene, wavenumber, eta, threads)
    directions = grid.observation_directions
    values = {h: np.zeros((grid.observations, grid.incidences), dtype=complex) for h in harmonics}
    timings: Dict[str, float] = {"solver": 0.0, "ffp": 0.0}
    differencing = any(m is Modality.GFL_MINUS_FL for m in modalities.values())
    options = dict(solver_options or {})

    def column(index: int) -> Dict[str, float]:
        local: Dict[str, float] = {}
        try:
            wave = grid.incident_wave(wavenumber, index, amplitude)
            scatterers = scene.scatterers_for(grid.incidence_angles[index])
            with timed(local, "solver"):
                solution = solver.solve(wave, scatterers, **options)
                reference = None
                if differencing:
                    reference = foldy_lax.solve_fl(scatterers, wave, **options)
            with timed(local, "ffp"):
                for harmonic in harmonics:
                    col = far_field(solution, scene, directions, harmonic)
                    if modalities[harmonic] is Modality.GFL_MINUS_FL:
                        col = col - far_field(reference, scene.without_obstacles(), directions, harmonic)
                    values[harmonic][:, index] = col
        except ScatteringError as e:
            e.details["incidence_index"] = index
            logger.error(f"Solve failed for incidence {index}: {e}")
            raise
        return local

    with ThreadPoolExecutor(max_workers=settings.worker_count(threads)) as pool:
        per_column = list(pool.map(column, range(grid.incidences)))
    for local in per_column:
        for key, seconds in local.items():
            timings[key] += seconds

    timings["invert"] = solver.timings.get("invert", 0.0)
    logger.info(
        f"Built {grid.observations}x{grid.incidences} response matrices for harmonics "
        f"{harmonics} at kappa={wavenumber:g}"
    )
    return {
        h: ResponseMatrix(values[h], h * wavenumber, grid, h, modalities[h], dict(timings))
        for h in harmonics
    }


def build_response_matrix(scene: Scene, grid: DirectionGrid, wavenumber: float, harmonic: int = 1,
                          modality: Union[Modality, str] = Modality.PLAIN,
                          eta: Optional[float] = None, threads: int = 0) -> ResponseMatrix:
    """Response matrix of one harmonic; see ``build_response_matrices``."""
    return build_response_matrices(scene, grid, wavenumber, (harmonic,), modality, eta, threads)[harmonic]
