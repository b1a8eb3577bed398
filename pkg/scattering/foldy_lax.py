"""
Foldy-Lax systems for scenes made only of point scatterers.
"""
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from scattering import kernels
from scattering.nonlinear import (
    NonlinearResult, ReducedSystem, StrengthMap, solve_fixed_point, solve_newton
)
from scattering.scene import IncidentWave, Nonlinearity, PointScattererSet
from utils.exceptions import ResonanceError, UsageError
from utils.logging import logger

LINEAR_RESIDUAL_FACTOR = 1e-12


@dataclass
class ExternalFields:
    """External fields phi^{(j)} acting on each point scatterer, keyed by harmonic."""
    scatterers: PointScattererSet
    wave: IncidentWave
    fields: Dict[int, np.ndarray]
    residual: float = 0.0
    iterations: int = 0
    meta: Dict[str, float] = field(default_factory=dict)

    @property
    def harmonics(self) -> Tuple[int, ...]:
        return tuple(sorted(self.fields))

    def __getitem__(self, harmonic: int) -> np.ndarray:
        return self.fields[harmonic]

    def strengths(self, harmonic: int) -> np.ndarray:
        """Point-source strengths radiating at ``harmonic``."""
        if harmonic not in self.fields:
            raise UsageError(f"harmonic {harmonic} not present in {self.harmonics}")
        higher = self.scatterers.nonlinearity.higher_harmonic
        s1, sh = StrengthMap(self.scatterers).strengths(
            self.fields[1], self.fields.get(higher) if higher else None
        )
        return s1 if harmonic == 1 else sh


def factorize(matrix: np.ndarray, what: str = "system") -> Tuple[np.ndarray, np.ndarray]:
    """LU factorization with partial pivoting; singular matrices raise ResonanceError."""
    if matrix.shape[0] == 0:
        return matrix, np.zeros(0, dtype=np.int32)
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            lu, piv = linalg.lu_factor(matrix)
        except (linalg.LinAlgWarning, linalg.LinAlgError, ValueError) as e:
            raise ResonanceError(f"{what} matrix is singular: {e}") from e
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(float).eps * max(pivots.max(), 1.0) * matrix.shape[0]:
        raise ResonanceError(f"{what} matrix is numerically singular", smallest_pivot=float(pivots.min()))
    return lu, piv


def lu_apply(factors: Tuple[np.ndarray, np.ndarray], rhs: np.ndarray) -> np.ndarray:
    if factors[0].shape[0] == 0:
        return np.zeros_like(rhs, dtype=complex)
    return linalg.lu_solve(factors, rhs)


def interaction_matrix(scatterers: PointScattererSet, kappa: float) -> np.ndarray:
    """G_kappa(r_i, r_k) for i != k, zero on the diagonal."""
    return kernels.green_matrix(kappa, scatterers.positions, scatterers.positions, skip_self=True)


def assemble_foldy_lax_matrix(scatterers: PointScattererSet, kappa: float, harmonic: int = 1) -> np.ndarray:
    """
    Foldy-Lax matrix A with A[i][i] = 1 and A[i][k] = -sigma_k G_kappa(r_i, r_k).

    Args:
        scatterers: Point scatterers
        kappa: Wavenumber of the harmonic
        harmonic: Selects which linear coefficient is active

    Returns:
        m x m complex matrix
    """
    sigma = scatterers.linear_coefficients(harmonic)
    return np.eye(scatterers.count, dtype=complex) - interaction_matrix(scatterers, kappa) * sigma[None, :]


def solve_linear_fl(scatterers: PointScattererSet, wave: IncidentWave) -> ExternalFields:
    """Solve A phi = phi_inc(r_k) for the external fields at the base harmonic."""
    matrix = assemble_foldy_lax_matrix(scatterers, wave.wavenumber)
    rhs = wave.field(scatterers.positions)
    phi = lu_apply(factorize(matrix, "Foldy-Lax"), rhs)
    residual = float(np.max(np.abs(matrix @ phi - rhs), initial=0.0))
    bound = LINEAR_RESIDUAL_FACTOR * (1.0 + float(np.max(np.abs(phi), initial=0.0)))
    if residual > bound:
        logger.warning(f"Foldy-Lax residual {residual:.2e} exceeds {bound:.2e}")
    return ExternalFields(scatterers, wave, {1: phi}, residual=residual)


def fl_reduced_system(scatterers: PointScattererSet, wave: IncidentWave) -> ReducedSystem:
    """Reduced nonlinear system whose transfer operators are the Green matrices."""
    higher = scatterers.nonlinearity.higher_harmonic
    if higher is None:
        raise UsageError("reduced nonlinear systems need quadratic or cubic scatterers")
    kappa = wave.wavenumber
    return ReducedSystem(
        strength_map=StrengthMap(scatterers),
        transfer=(interaction_matrix(scatterers, kappa), interaction_matrix(scatterers, higher * kappa)),
        rhs=(wave.field(scatterers.positions), np.zeros(scatterers.count, dtype=complex)),
    )


def _linearized_start(scatterers: PointScattererSet, wave: IncidentWave) -> np.ndarray:
    linear = solve_linear_fl(scatterers.as_linear(), wave)
    return np.concatenate([linear[1], np.zeros(scatterers.count, dtype=complex)])


def _nonlinear_fields(scatterers: PointScattererSet, wave: IncidentWave,
                      result: NonlinearResult) -> ExternalFields:
    higher = scatterers.nonlinearity.higher_harmonic
    return ExternalFields(
        scatterers, wave, {1: result.u, higher: result.w},
        residual=result.residual, iterations=result.iterations
    )


def _solve_nonlinear_fl(scatterers: PointScattererSet, wave: IncidentWave,
                        expected: Nonlinearity, **solver_options) -> ExternalFields:
    if scatterers.nonlinearity is not expected:
        raise UsageError(f"expected {expected.value} scatterers, got {scatterers.nonlinearity.value}")
    system = fl_reduced_system(scatterers, wave)
    result = solve_newton(system, _linearized_start(scatterers, wave), **solver_options)
    logger.debug(
        f"{expected.value} Foldy-Lax solved for {scatterers.count} scatterers "
        f"in {result.iterations} evaluations"
    )
    return _nonlinear_fields(scatterers, wave, result)


def solve_quadratic_fl(scatterers: PointScattererSet, wave: IncidentWave, **solver_options) -> ExternalFields:
    """Second-harmonic Foldy-Lax system, fields at harmonics 1 and 2."""
    return _solve_nonlinear_fl(scatterers, wave, Nonlinearity.QUADRATIC, **solver_options)


def solve_cubic_fl(scatterers: PointScattererSet, wave: IncidentWave, **solver_options) -> ExternalFields:
    """Third-harmonic Foldy-Lax system, fields at harmonics 1 and 3."""
    return _solve_nonlinear_fl(scatterers, wave, Nonlinearity.CUBIC, **solver_options)


def solve_fl(scatterers: PointScattererSet, wave: IncidentWave, **solver_options) -> ExternalFields:
    """Dispatch on the nonlinearity of ``scatterers``."""
    if scatterers.nonlinearity is Nonlinearity.LINEAR:
        return solve_linear_fl(scatterers, wave)
    if scatterers.nonlinearity is Nonlinearity.QUADRATIC:
        return solve_quadratic_fl(scatterers, wave, **solver_options)
    return solve_cubic_fl(scatterers, wave, **solver_options)


def solve_fl_fixed_point(scatterers: PointScattererSet, wave: IncidentWave,
                         tolerance: Optional[float] = None) -> ExternalFields:
    """Picard iteration from phi^{(1)} = phi_inc, phi^{(h)} = 0."""
    system = fl_reduced_system(scatterers, wave)
    start = np.concatenate([wave.field(scatterers.positions), np.zeros(scatterers.count, dtype=complex)])
    return _nonlinear_fields(scatterers, wave, solve_fixed_point(system, start, tolerance=tolerance))


def scattered_field_fl(scatterers: PointScattererSet, fields: ExternalFields,
                       r: np.ndarray, harmonic: int = 1) -> np.ndarray:
    """
    Scattered field sum_k s_k^{(j)} G_{kappa_j}(r, r_k) radiated by the point scatterers.

    Args:
        scatterers: Point scatterers the fields were computed for
        fields: External fields
        r: Evaluation point (2,) or points (n, 2)
        harmonic: Harmonic order j

    Returns:
        Complex scalar for a single point, otherwise an (n,) array
    """
    points = np.asarray(r, dtype=float)
    kappa = harmonic * fields.wave.wavenumber
    strengths = fields.strengths(harmonic)
    values = kernels.green_matrix(kappa, points.reshape(-1, 2), scatterers.positions) @ strengths
    return values[0] if points.ndim == 1 else values
