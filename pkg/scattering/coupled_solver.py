"""
Generalized Foldy-Lax systems coupling point scatterers with sound-soft obstacles.

Unknowns per harmonic j are the external fields phi^{(j)} at the point
scatterers and the boundary density d_nu phi^{(j)}. With s^{(j)} the
point-source strengths the equations read

    phi^{(j)} - Gm_j s^{(j)} + M_j d_nu phi^{(j)} = b_j
    K_j d_nu phi^{(j)} - B_j s^{(j)}            = c_j

where Gm_j is the zero-diagonal Green matrix between scatterers, M_j the
single-layer quadrature at the scatterers, B_j = (d_nu - i eta) G_j(x_l, r_k)
and K_j the combined-field matrix. Linear scenes are solved as one dense
block system; nonlinear scenes eliminate the densities (Schur complement)
and run Newton on the reduced system in the scatterer fields only.
"""
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from scattering import foldy_lax
from scattering.boundary_integral import (
    BoundaryDensity, CfieOperator, assemble_cfie, boundary_rhs, default_coupling, nodes
)
from scattering.foldy_lax import ExternalFields, factorize, interaction_matrix, lu_apply
from scattering.kernels import green_dnu_matrix, green_matrix
from scattering.nonlinear import (
    NonlinearResult, ReducedSystem, StrengthMap, solve_fixed_point, solve_newton
)
from scattering.scene import IncidentWave, Nonlinearity, PointScattererSet, Scene
from utils.common import timed
from utils.exceptions import ConvergenceError, UsageError
from utils.logging import logger

BLOCK_RESIDUAL_FACTOR = 1e-10
NONLINEAR_RESIDUAL_FACTOR = 1e-9


def transmitter_angle(wave: IncidentWave) -> float:
    """Angle of the transmitter that emits ``wave``; the wave travels away from it."""
    return float(np.mod(np.arctan2(-wave.direction[1], -wave.direction[0]), 2.0 * np.pi))


@dataclass
class CoupledSolution:
    """Fields at the point scatterers and boundary densities, keyed by harmonic."""
    scene: Scene
    scatterers: Optional[PointScattererSet]
    wave: IncidentWave
    fields: Dict[int, np.ndarray]
    densities: Dict[int, BoundaryDensity]
    residuals: Dict[str, float] = field(default_factory=dict)
    iterations: int = 0

    @property
    def harmonics(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.fields) | set(self.densities)))

    @property
    def has_scatterers(self) -> bool:
        return self.scatterers is not None and self.scatterers.count > 0

    def external_fields(self) -> ExternalFields:
        if not self.has_scatterers:
            raise UsageError("solution has no point scatterers")
        return ExternalFields(self.scatterers, self.wave, dict(self.fields),
                              residual=max(self.residuals.values(), default=0.0),
                              iterations=self.iterations)

    def strengths(self, harmonic: int) -> np.ndarray:
        if not self.has_scatterers:
            return np.zeros(0, dtype=complex)
        return self.external_fields().strengths(harmonic)

    @property
    def residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


@dataclass
class GflBlockSystem:
    """Blocks [[A, M], [N, K]] of the linear coupled system at one wavenumber."""
    wavenumber: float
    eta: float
    a: np.ndarray
    m: np.ndarray
    n: np.ndarray
    k: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        size = self.a.shape[0] + self.k.shape[0]
        return size, size

    def matrix(self) -> np.ndarray:
        return np.block([[self.a, self.m], [self.n, self.k]])

    def rhs(self, scatterer_values: np.ndarray, boundary_values: np.ndarray) -> np.ndarray:
        return np.concatenate([scatterer_values, boundary_values])


@dataclass
class _HarmonicCoupling:
    """Scatterer-dependent blocks at one harmonic plus their Schur pieces."""
    green: np.ndarray
    boundary_source: np.ndarray
    single_layer: np.ndarray
    operator: CfieOperator

    @cached_property
    def transfer(self) -> np.ndarray:
        """Gm - M K^-1 B."""
        return self.green - self.single_layer @ self.operator.solve(self.boundary_source)


class CoupledSolver:
    """
    Solver for one scene at one base wavenumber.

    Combined-field factorizations are built once per harmonic and shared by
    every incident wave; blocks depending on the point-scatterer positions are
    cached for fixed scatterers only. Instances are safe to share between
    worker threads.
    """

    def __init__(self, scene: Scene, wavenumber: float, eta: Optional[float] = None, threads: int = 0):
        self.scene = scene
        self.wavenumber = float(wavenumber)
        self.eta = eta
        self.threads = threads
        self.discretizations = scene.discretizations
        self._lock = threading.Lock()
        self._operators: Dict[int, CfieOperator] = {}
        self._couplings: Dict[int, _HarmonicCoupling] = {}
        self._linear_factors = None
        self._linear_matrix = None
        self.timings: Dict[str, float] = {}

    # ------------------------------------------------------------------ blocks

    def coupling_parameter(self, harmonic: int) -> float:
        if self.eta is not None:
            return float(self.eta)
        return default_coupling(harmonic * self.wavenumber)

    def operator(self, harmonic: int) -> CfieOperator:
        """Factorized combined-field operator at kappa_j, built on first use."""
        with self._lock:
            if harmonic not in self._operators:
                kappa = harmonic * self.wavenumber
                logger.info(f"Factorizing combined-field operator at kappa={kappa:g}")
                with timed(self.timings, "invert"):
                    self._operators[harmonic] = CfieOperator.build(
                        self.discretizations, kappa, self.coupling_parameter(harmonic), self.threads
                    )
            return self._operators[harmonic]

    def _is_cached(self, scatterers: PointScattererSet) -> bool:
        return scatterers is self.scene.scatterers and not self.scene.is_moving

    def coupling(self, scatterers: PointScattererSet, harmonic: int) -> _HarmonicCoupling:
        cached = self._is_cached(scatterers)
        if cached:
            with self._lock:
                if harmonic in self._couplings:
                    return self._couplings[harmonic]
        kappa = harmonic * self.wavenumber
        eta = self.coupling_parameter(harmonic)
        points, normals, weights = nodes(self.discretizations)
        positions = scatterers.positions
        boundary_source = (green_dnu_matrix(kappa, points, normals, positions)
                           - 1j * eta * green_matrix(kappa, points, positions))
        single_layer = green_matrix(kappa, positions, points) * weights[None, :]
        result = _HarmonicCoupling(
            green=interaction_matrix(scatterers, kappa),
            boundary_source=boundary_source,
            single_layer=single_layer,
            operator=self.operator(harmonic),
        )
        if cached:
            with self._lock:
                self._couplings[harmonic] = result
        return result

    def blocks(self, scatterers: PointScattererSet, harmonic: int = 1) -> GflBlockSystem:
        """Blocks of the linear coupled system at harmonic ``harmonic``."""
        kappa = harmonic * self.wavenumber
        sigma = scatterers.linear_coefficients(harmonic)
        op = self.operator(harmonic)
        coupling = self.coupling(scatterers, harmonic)
        return GflBlockSystem(
            wavenumber=kappa,
            eta=op.eta,
            a=np.eye(scatterers.count, dtype=complex) - coupling.green * sigma[None, :],
            m=coupling.single_layer,
            n=-coupling.boundary_source * sigma[None, :],
            k=op.matrix,
        )

    # ------------------------------------------------------------------ solves

    def scatterers_for(self, wave: IncidentWave) -> Optional[PointScattererSet]:
        return self.scene.scatterers_for(transmitter_angle(wave))

    def _boundary_only(self, wave: IncidentWave, harmonics: Tuple[int, ...],
                       scatterers: Optional[PointScattererSet]) -> CoupledSolution:
        density = self.operator(1).density(wave)
        densities = {1: density}
        for harmonic in harmonics[1:]:
            zero = np.zeros(density.count, dtype=complex)
            densities[harmonic] = BoundaryDensity(zero, harmonic * self.wavenumber, self.discretizations)
        fields = {h: np.zeros(0, dtype=complex) for h in harmonics}
        return CoupledSolution(self.scene, scatterers, wave, fields, densities,
                               residuals={"boundary": density.residual})

    def _scatterers_only(self, wave: IncidentWave, scatterers: PointScattererSet,
                         **solver_options) -> CoupledSolution:
        ext = foldy_lax.solve_fl(scatterers, wave, **solver_options)
        return CoupledSolution(self.scene, scatterers, wave, dict(ext.fields), {},
                               residuals={"foldy_lax": ext.residual}, iterations=ext.iterations)

    def solve_linear(self, wave: IncidentWave,
                     scatterers: Optional[PointScattererSet] = None) -> CoupledSolution:
        """Dense direct solve of the linear block system."""
        scatterers = self.scatterers_for(wave) if scatterers is None else scatterers
        if scatterers is not None and scatterers.nonlinearity is not Nonlinearity.LINEAR:
            scatterers = scatterers.as_linear()
        if not self.discretizations:
            return self._scatterers_only(wave, scatterers)
        if scatterers is None or scatterers.count == 0:
            return self._boundary_only(wave, (1,), scatterers)

        cached = self._is_cached(scatterers)
        blocks = self.blocks(scatterers)
        if cached:
            with self._lock:
                if self._linear_factors is None:
                    with timed(self.timings, "invert"):
                        self._linear_matrix = blocks.matrix()
                        self._linear_factors = factorize(self._linear_matrix, "generalized Foldy-Lax")
                matrix, factors = self._linear_matrix, self._linear_factors
        else:
            with timed(self.timings, "invert"):
                matrix = blocks.matrix()
                factors = factorize(matrix, "generalized Foldy-Lax")

        rhs = blocks.rhs(wave.field(scatterers.positions), boundary_rhs(self.discretizations, blocks.eta, wave))
        solution = lu_apply(factors, rhs)
        residual = float(np.max(np.abs(matrix @ solution - rhs)))
        bound = BLOCK_RESIDUAL_FACTOR * (1.0 + float(np.max(np.abs(solution))))
        if residual > bound:
            logger.warning(f"Generalized Foldy-Lax residual {residual:.2e} exceeds {bound:.2e}")

        m = scatterers.count
        density = BoundaryDensity(solution[m:], self.wavenumber, self.discretizations, residual)
        return CoupledSolution(self.scene, scatterers, wave, {1: solution[:m]}, {1: density},
                               residuals={"block": residual})

    def reduced_system(self, wave: IncidentWave, scatterers: PointScattererSet) -> ReducedSystem:
        """Schur-reduced nonlinear system T_j = Gm_j - M_j K_j^-1 B_j."""
        higher = scatterers.nonlinearity.higher_harmonic
        if higher is None:
            raise UsageError("reduced systems need quadratic or cubic scatterers")
        base = self.coupling(scatterers, 1)
        upper = self.coupling(scatterers, higher)
        eta = self.coupling_parameter(1)
        k_inv_c = self.operator(1).solve(boundary_rhs(self.discretizations, eta, wave))
        rhs = wave.field(scatterers.positions) - base.single_layer @ k_inv_c
        return ReducedSystem(
            strength_map=StrengthMap(scatterers),
            transfer=(base.transfer, upper.transfer),
            rhs=(rhs, np.zeros(scatterers.count, dtype=complex)),
        )

    def _back_substitute(self, wave: IncidentWave, scatterers: PointScattererSet,
                         result: NonlinearResult) -> CoupledSolution:
        higher = scatterers.nonlinearity.higher_harmonic
        s1, sh = StrengthMap(scatterers).strengths(result.u, result.w)
        eta1 = self.coupling_parameter(1)
        c = boundary_rhs(self.discretizations, eta1, wave)
        fields = {1: result.u, higher: result.w}
        strengths = {1: s1, higher: sh}
        rhs_boundary = {1: c, higher: np.zeros_like(c)}
        rhs_points = {1: wave.field(scatterers.positions), higher: np.zeros(scatterers.count, dtype=complex)}

        densities, residuals = {}, {"reduced": result.residual}
        for harmonic in (1, higher):
            op = self.operator(harmonic)
            coupling = self.coupling(scatterers, harmonic)
            values = op.solve(rhs_boundary[harmonic] + coupling.boundary_source @ strengths[harmonic])
            densities[harmonic] = BoundaryDensity(values, harmonic * self.wavenumber, self.discretizations)
            point_eq = (fields[harmonic] - coupling.green @ strengths[harmonic]
                        + coupling.single_layer @ values - rhs_points[harmonic])
            boundary_eq = op.matrix @ values - coupling.boundary_source @ strengths[harmonic] - rhs_boundary[harmonic]
            residuals[f"harmonic_{harmonic}"] = float(max(np.max(np.abs(point_eq)), np.max(np.abs(boundary_eq))))

        worst = max(residuals[f"harmonic_{h}"] for h in (1, higher))
        scale = 1.0 + max(float(np.max(np.abs(v.values))) for v in densities.values())
        if worst > NONLINEAR_RESIDUAL_FACTOR * scale:
            logger.warning(f"Coupled nonlinear residual {worst:.2e} above tolerance")
        return CoupledSolution(self.scene, scatterers, wave, fields, densities,
                               residuals=residuals, iterations=result.iterations)

    def _linearized_start(self, system: ReducedSystem) -> np.ndarray:
        sigma = system.strength_map.scatterers.linear
        m = system.size
        matrix = np.eye(m, dtype=complex) - system.transfer[0] * sigma[None, :]
        u0 = lu_apply(factorize(matrix, "reduced Foldy-Lax"), system.rhs[0])
        return np.concatenate([u0, np.zeros(m, dtype=complex)])

    def solve_nonlinear(self, wave: IncidentWave, scatterers: Optional[PointScattererSet] = None,
                        **solver_options) -> CoupledSolution:
        """Schur complement plus trust-region Newton for quadratic or cubic scatterers."""
        scatterers = self.scatterers_for(wave) if scatterers is None else scatterers
        nonlinearity = self.scene.nonlinearity if scatterers is None else scatterers.nonlinearity
        if not self.discretizations:
            return self._scatterers_only(wave, scatterers, **solver_options)
        if scatterers is None or scatterers.count == 0:
            return self._boundary_only(wave, nonlinearity.harmonics, scatterers)
        system = self.reduced_system(wave, scatterers)
        result = solve_newton(system, self._linearized_start(system), **solver_options)
        logger.debug(f"Reduced Newton solve took {result.iterations} evaluations")
        return self._back_substitute(wave, scatterers, result)

    def solve_fixed_point(self, wave: IncidentWave, scatterers: Optional[PointScattererSet] = None,
                          tolerance: Optional[float] = None) -> CoupledSolution:
        """Picard iteration of the reduced system started from phi_inc."""
        scatterers = self.scatterers_for(wave) if scatterers is None else scatterers
        if not self.discretizations:
            ext = foldy_lax.solve_fl_fixed_point(scatterers, wave, tolerance=tolerance)
            return CoupledSolution(self.scene, scatterers, wave, dict(ext.fields), {},
                                   residuals={"foldy_lax": ext.residual}, iterations=ext.iterations)
        system = self.reduced_system(wave, scatterers)
        start = np.concatenate([wave.field(scatterers.positions), np.zeros(scatterers.count, dtype=complex)])
        return self._back_substitute(wave, scatterers, solve_fixed_point(system, start, tolerance=tolerance))

    def solve(self, wave: IncidentWave, scatterers: Optional[PointScattererSet] = None,
              **solver_options) -> CoupledSolution:
        """Dispatch on the nonlinearity of the scene."""
        if self.scene.nonlinearity is Nonlinearity.LINEAR:
            return self.solve_linear(wave, scatterers)
        return self.solve_nonlinear(wave, scatterers, **solver_options)

    def solve_gmres(self, wave: IncidentWave, scatterers: Optional[PointScattererSet] = None,
                    tolerance: float = 1e-12, restart: int = 200, maxiter: int = 50) -> CoupledSolution:
        """Unpreconditioned GMRES on the linear block system, as a cross-check."""
        scatterers = self.scatterers_for(wave) if scatterers is None else scatterers
        blocks = self.blocks(scatterers.as_linear())
        matrix = blocks.matrix()
        rhs = blocks.rhs(wave.field(scatterers.positions), boundary_rhs(self.discretizations, blocks.eta, wave))
        operator = LinearOperator(matrix.shape, matvec=lambda x: matrix @ x, dtype=complex)
        solution, info = gmres(operator, rhs, rtol=tolerance, atol=0.0, restart=restart, maxiter=maxiter)
        residual = float(np.max(np.abs(matrix @ solution - rhs)))
        if info != 0:
            raise ConvergenceError("GMRES did not converge", residual=residual, iterations=info)
        m = scatterers.count
        density = BoundaryDensity(solution[m:], self.wavenumber, self.discretizations, residual)
        return CoupledSolution(self.scene, scatterers, wave, {1: solution[:m]}, {1: density},
                               residuals={"gmres": residual})


def assemble_gfl_linear(scene: Scene, kappa: float, eta: Optional[float] = None) -> GflBlockSystem:
    """Blocks of the linear generalized Foldy-Lax system for the scene's fixed scatterers."""
    eta = default_coupling(kappa) if eta is None else eta
    scatterers = scene.scatterers.as_linear() if scene.has_scatterers else None
    if not scene.has_obstacles:
        a = foldy_lax.assemble_foldy_lax_matrix(scatterers, kappa)
        m = scatterers.count
        return GflBlockSystem(kappa, eta, a, np.zeros((m, 0), dtype=complex),
                              np.zeros((0, m), dtype=complex), np.zeros((0, 0), dtype=complex))
    if scatterers is None:
        k = assemble_cfie(scene.discretizations, kappa, eta)
        size = k.shape[0]
        return GflBlockSystem(kappa, eta, np.zeros((0, 0), dtype=complex), np.zeros((0, size), dtype=complex),
                              np.zeros((size, 0), dtype=complex), k)
    return CoupledSolver(scene, kappa, eta).blocks(scatterers)


def solve_gfl_linear(scene: Scene, wave: IncidentWave, eta: Optional[float] = None) -> CoupledSolution:
    return CoupledSolver(scene, wave.wavenumber, eta).solve_linear(wave)


def _solve_nonlinear(scene: Scene, wave: IncidentWave, eta: Optional[float],
                     expected: Nonlinearity, **solver_options) -> CoupledSolution:
    if scene.has_scatterers and scene.nonlinearity is not expected:
        raise UsageError(f"expected {expected.value} scatterers, got {scene.nonlinearity.value}")
    solver = CoupledSolver(scene, wave.wavenumber, eta)
    scatterers = solver.scatterers_for(wave)
    if scatterers is None:
        return solver._boundary_only(wave, expected.harmonics, None)
    return solver.solve_nonlinear(wave, scatterers, **solver_options)


def solve_gfl_quadratic(scene: Scene, wave: IncidentWave, eta: Optional[float] = None,
                        **solver_options) -> CoupledSolution:
    """Harmonics 1 and 2 for quadratic scatterers next to obstacles."""
    return _solve_nonlinear(scene, wave, eta, Nonlinearity.QUADRATIC, **solver_options)


def solve_gfl_cubic(scene: Scene, wave: IncidentWave, eta: Optional[float] = None,
                    **solver_options) -> CoupledSolution:
    """Harmonics 1 and 3 for cubic scatterers next to obstacles."""
    return _solve_nonlinear(scene, wave, eta, Nonlinearity.CUBIC, **solver_options)


def solve_gfl_fixed_point(scene: Scene, wave: IncidentWave, eta: Optional[float] = None,
                          tolerance: Optional[float] = None) -> CoupledSolution:
    return CoupledSolver(scene, wave.wavenumber, eta).solve_fixed_point(wave, tolerance=tolerance)
