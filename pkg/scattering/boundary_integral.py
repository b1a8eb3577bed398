"""
Nystrom discretization of the combined-field boundary integral equation

    (1/2) phi' + int_Gamma (d_nu - i eta) G(r, r') phi'(r') ds(r') = (d_nu - i eta) phi_inc

for the normal derivative phi' of the total field on sound-soft obstacles.

The logarithmic singularities of the single layer and of its normal
derivative are split off and integrated with the logarithmic product rule for
periodic analytic integrands (Martensen-Kussmaul splitting), which converges
spectrally on smooth closed curves. Interactions between distinct obstacles
are smooth and use the plain trapezoid rule.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from scattering import kernels
from scattering.foldy_lax import factorize, lu_apply
from scattering.scene import BoundaryDiscretization, IncidentWave
from utils.common import chunk_ranges
from utils.exceptions import DomainError, ValidationError
from utils.logging import logger

EULER_GAMMA = 0.57721566490153286061
NEAR_BOUNDARY_SPACINGS = 2.0
MIN_NODES = 16
ROW_CHUNK = 64

Discretizations = Union[BoundaryDiscretization, Sequence[BoundaryDiscretization]]


class NearBoundaryWarning(UserWarning):
    """Layer potential evaluated closer to the boundary than the quadrature resolves."""


def as_discretizations(disc: Discretizations) -> Tuple[BoundaryDiscretization, ...]:
    if isinstance(disc, BoundaryDiscretization):
        return (disc,)
    return tuple(disc)


def default_coupling(kappa: float) -> float:
    """eta = COUPLING_FACTOR * kappa."""
    return settings.solver.coupling_factor * kappa


@dataclass
class PointSources:
    """Incident field radiated by point sources, sum_k q_k G_kappa(r, p_k)."""
    wavenumber: float
    positions: np.ndarray
    strengths: np.ndarray

    def field(self, points: np.ndarray) -> np.ndarray:
        return kernels.green_matrix(self.wavenumber, points, self.positions) @ self.strengths

    def normal_derivative(self, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        return kernels.green_dnu_matrix(self.wavenumber, points, normals, self.positions) @ self.strengths


IncidentField = Union[IncidentWave, PointSources]


@dataclass
class BoundaryDensity:
    """Values of d_nu phi at every boundary node, obstacles concatenated."""
    values: np.ndarray
    wavenumber: float
    discretizations: Tuple[BoundaryDiscretization, ...]
    residual: float = 0.0

    def __post_init__(self):
        expected = sum(d.count for d in self.discretizations)
        if self.values.shape != (expected,):
            raise ValidationError(f"density has shape {self.values.shape}, expected ({expected},)")

    @property
    def count(self) -> int:
        return int(self.values.shape[0])

    def split(self) -> Tuple[np.ndarray, ...]:
        offsets = np.cumsum([0] + [d.count for d in self.discretizations])
        return tuple(self.values[a:b] for a, b in zip(offsets[:-1], offsets[1:]))


def nodes(discs: Sequence[BoundaryDiscretization]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked points, normals and trapezoid weights."""
    if not discs:
        return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0)
    return (np.concatenate([d.points for d in discs]),
            np.concatenate([d.normals for d in discs]),
            np.concatenate([d.weights for d in discs]))


def log_weights(count: int) -> np.ndarray:
    """
    Weights R_k of the product rule for int ln(4 sin^2((t - tau)/2)) f(tau) dtau.

    Args:
        count: Number of nodes 2n

    Returns:
        Array indexed by |i - j| (mod count)
    """
    n = count // 2
    k = np.arange(count)
    m = np.arange(1, n)
    series = np.cos(np.outer(k, m) * (np.pi / n)) / m
    return -(2.0 * np.pi / n) * series.sum(axis=1) - (np.pi / n ** 2) * np.cos(np.pi * k)


def _self_rows(disc: BoundaryDiscretization, kappa: float, eta: float,
               rows: Tuple[int, int], weights: np.ndarray) -> np.ndarray:
    start, stop = rows
    count = disc.count
    n = count // 2
    i = np.arange(start, stop)
    j = np.arange(count)
    diag = i[:, None] == j[None, :]

    diff = disc.points[i][:, None, :] - disc.points[None, :, :]
    r = np.where(diag, 1.0, np.hypot(diff[..., 0], diff[..., 1]))
    h0 = kernels.hankel1_0(kappa * r)
    h1 = kernels.hankel1_1(kappa * r)
    speed = disc.speed[None, :]
    projection = np.einsum("ik,ijk->ij", disc.normals[i], diff)
    log_sin = np.log(4.0 * np.sin((disc.t[i][:, None] - disc.t[None, :]) / 2.0) ** 2, where=~diag,
                     out=np.zeros(diag.shape))

    single = 0.25j * h0 * speed
    single_log = np.where(diag, -speed / (4.0 * np.pi), -h0.real * speed / (4.0 * np.pi))
    single_smooth = single - single_log * log_sin
    double = -0.25j * kappa * h1 * projection / r * speed
    double_log = np.where(diag, 0.0, kappa / (4.0 * np.pi) * projection * h1.real / r * speed)
    double_smooth = double - double_log * log_sin

    sp = disc.speed[i]
    single_smooth[diag] = (0.25j - EULER_GAMMA / (2.0 * np.pi)
                           - np.log(kappa * sp / 2.0) / (2.0 * np.pi)) * sp
    normal_second = np.einsum("ik,ik->i", disc.normals[i], disc.second[i])
    double_smooth[diag] = normal_second / (4.0 * np.pi * sp)

    product_rule = weights[np.abs(i[:, None] - j[None, :])]
    block = (product_rule * (double_log - 1j * eta * single_log)
             + (np.pi / n) * (double_smooth - 1j * eta * single_smooth))
    block[diag] += 0.5
    return block


def _cross_block(target: BoundaryDiscretization, source: BoundaryDiscretization,
                 kappa: float, eta: float) -> np.ndarray:
    g = kernels.green_matrix(kappa, target.points, source.points)
    dg = kernels.green_dnu_matrix(kappa, target.points, target.normals, source.points)
    return (dg - 1j * eta * g) * source.weights[None, :]


def assemble_cfie(disc: Discretizations, kappa: float, eta: Optional[float] = None,
                  threads: int = 0) -> np.ndarray:
    """
    Nystrom matrix of (1/2) I + (d_nu - i eta) S_kappa.

    Args:
        disc: One discretization or one per obstacle
        kappa: Wavenumber
        eta: Coupling parameter, defaults to COUPLING_FACTOR * kappa
        threads: Worker cap for the row-parallel assembly

    Returns:
        N x N complex matrix over all boundary nodes
    """
    discs = as_discretizations(disc)
    eta = default_coupling(kappa) if eta is None else eta
    if not eta > 0:
        raise ValidationError(f"coupling parameter must be positive, got {eta}")
    for d in discs:
        if d.count < MIN_NODES:
            raise ValidationError(f"combined-field quadrature needs at least {MIN_NODES} nodes, got {d.count}")

    offsets = np.cumsum([0] + [d.count for d in discs])
    total = int(offsets[-1])
    matrix = np.empty((total, total), dtype=complex)

    tasks = []
    for a, target in enumerate(discs):
        weights = log_weights(target.count)
        for rows in chunk_ranges(target.count, ROW_CHUNK):
            tasks.append((a, target, rows, weights))

    def fill(task):
        a, target, rows, weights = task
        base = offsets[a]
        matrix[base + rows[0]:base + rows[1], offsets[a]:offsets[a + 1]] = _self_rows(
            target, kappa, eta, rows, weights
        )

    with ThreadPoolExecutor(max_workers=settings.worker_count(threads)) as pool:
        list(pool.map(fill, tasks))

    for a, target in enumerate(discs):
        for b, source in enumerate(discs):
            if a != b:
                matrix[offsets[a]:offsets[a + 1], offsets[b]:offsets[b + 1]] = _cross_block(
                    target, source, kappa, eta
                )

    logger.debug(f"Assembled {total}x{total} combined-field matrix at kappa={kappa}")
    return matrix


def boundary_rhs(disc: Discretizations, eta: float, incident: IncidentField) -> np.ndarray:
    """(d_nu - i eta) phi_inc sampled at the boundary nodes."""
    points, normals, _ = nodes(as_discretizations(disc))
    return incident.normal_derivative(points, normals) - 1j * eta * incident.field(points)


@dataclass
class CfieOperator:
    """Assembled and factorized combined-field operator, reusable across right-hand sides."""
    discretizations: Tuple[BoundaryDiscretization, ...]
    wavenumber: float
    eta: float
    matrix: np.ndarray
    factors: Tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)

    @classmethod
    def build(cls, disc: Discretizations, kappa: float, eta: Optional[float] = None,
              threads: int = 0) -> "CfieOperator":
        discs = as_discretizations(disc)
        eta = default_coupling(kappa) if eta is None else eta
        matrix = assemble_cfie(discs, kappa, eta, threads)
        return cls(discs, kappa, eta, matrix, factorize(matrix, "combined-field"))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_apply(self.factors, rhs)

    def density(self, incident: IncidentField) -> BoundaryDensity:
        rhs = boundary_rhs(self.discretizations, self.eta, incident)
        values = self.solve(rhs)
        residual = float(np.max(np.abs(self.matrix @ values - rhs), initial=0.0))
        return BoundaryDensity(values, self.wavenumber, self.discretizations, residual)


def solve_cfie(disc: Discretizations, kappa: float, eta: Optional[float],
               incident: IncidentField) -> BoundaryDensity:
    """
    Solve the combined-field equation for a plane wave or point-source incident field.

    Raises:
        ResonanceError: When the assembled matrix is singular
    """
    return CfieOperator.build(disc, kappa, eta).density(incident)


def single_layer(discs: Sequence[BoundaryDiscretization], density: np.ndarray,
                 kappa: float, points: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature of int_Gamma G_kappa(r, r') density(r') ds(r')."""
    boundary, _, weights = nodes(discs)
    return kernels.green_matrix(kappa, np.asarray(points, dtype=float).reshape(-1, 2), boundary) @ (weights * density)


def evaluate_scattered_field(density: BoundaryDensity, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Scattered field -int_Gamma G phi' ds at exterior points, with near-boundary flags.

    Raises:
        DomainError: When a point lies inside or on an obstacle
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    near = np.zeros(points.shape[0], dtype=bool)
    for index, disc in enumerate(density.discretizations):
        if np.any(disc.curve.contains(points)):
            raise DomainError(f"evaluation point lies inside or on obstacle {index}")
        near |= disc.distance_to(points) < NEAR_BOUNDARY_SPACINGS * disc.spacing
    if np.any(near):
        warnings.warn(
            f"{int(near.sum())} evaluation points are within {NEAR_BOUNDARY_SPACINGS:g} node "
            f"spacings of the boundary", NearBoundaryWarning, stacklevel=2
        )
    values = -single_layer(density.discretizations, density.values, density.wavenumber, points)
    return values, near


def scattered_field_bie(disc: Discretizations, density: Union[BoundaryDensity, np.ndarray],
                        kappa: float, r: np.ndarray) -> Union[complex, np.ndarray]:
    """Scattered field of a sound-soft obstacle at one point (2,) or many (n, 2)."""
    if not isinstance(density, BoundaryDensity):
        density = BoundaryDensity(np.asarray(density, dtype=complex), kappa, as_discretizations(disc))
    values, _ = evaluate_scattered_field(density, r)
    return values[0] if np.asarray(r).ndim == 1 else values

