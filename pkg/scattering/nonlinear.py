"""
Reduced nonlinear systems shared by the Foldy-Lax and coupled solvers.

Both solvers end up with the same fixed-point structure for the external
fields z = (u, w) at the point scatterers, u at the base harmonic and w at the
generated harmonic:

    u = rhs_1 + T_1 s_1(u, w)
    w = rhs_h + T_h s_h(u, w)

where s_1, s_h are the point-source strengths. Conjugates in the strengths
make the system non-holomorphic, so Newton runs on the real and imaginary
parts with a Jacobian built from the Wirtinger derivatives of the strengths.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import optimize

from config.settings import settings
from scattering.scene import Nonlinearity, PointScattererSet
from utils.exceptions import ConvergenceError, UsageError
from utils.logging import logger


@dataclass(frozen=True, eq=False)
class StrengthMap:
    """Source strengths of point scatterers as functions of their external fields."""
    scatterers: PointScattererSet

    @property
    def nonlinearity(self) -> Nonlinearity:
        return self.scatterers.nonlinearity

    def strengths(self, u: np.ndarray, w: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Strengths at the base and the generated harmonic.

        Args:
            u: External field at the base harmonic
            w: External field at the generated harmonic (ignored for linear sets)

        Returns:
            Tuple (s_1, s_h); s_h is empty for linear sets
        """
        sc = self.scatterers
        if self.nonlinearity is Nonlinearity.LINEAR:
            return sc.linear * u, np.zeros(0, dtype=complex)
        if w is None:
            w = np.zeros_like(u)
        c = sc.nonlinear
        if self.nonlinearity is Nonlinearity.QUADRATIC:
            s1 = sc.linear * u + c[:, 0] * np.conj(u) * w
            s2 = sc.harmonic_linear * w + c[:, 1] * u ** 2
            return s1, s2
        s1 = sc.linear * u + c[:, 0] * np.abs(u) ** 2 * u + c[:, 1] * np.conj(u) ** 2 * w
        s3 = sc.harmonic_linear * w + c[:, 2] * u ** 3
        return s1, s3

    def wirtinger(self, u: np.ndarray, w: np.ndarray) -> Dict[str, np.ndarray]:
        """Per-scatterer derivatives of (s_1, s_h) with respect to u, conj(u) and w.

        Keys follow ``<strength>_<variable>``; derivatives with respect to
        conj(w) vanish for both nonlinearities and are omitted.
        """
        sc = self.scatterers
        c = sc.nonlinear
        zeros = np.zeros_like(u)
        if self.nonlinearity is Nonlinearity.QUADRATIC:
            return {
                "s1_u": sc.linear + zeros,
                "s1_ubar": c[:, 0] * w,
                "s1_w": c[:, 0] * np.conj(u),
                "sh_u": 2.0 * c[:, 1] * u,
                "sh_ubar": zeros,
                "sh_w": sc.harmonic_linear + zeros,
            }
        if self.nonlinearity is Nonlinearity.CUBIC:
            return {
                "s1_u": sc.linear + 2.0 * c[:, 0] * np.abs(u) ** 2,
                "s1_ubar": c[:, 0] * u ** 2 + 2.0 * c[:, 1] * np.conj(u) * w,
                "s1_w": c[:, 1] * np.conj(u) ** 2,
                "sh_u": 3.0 * c[:, 2] * u ** 2,
                "sh_ubar": zeros,
                "sh_w": sc.harmonic_linear + zeros,
            }
        raise UsageError("linear scatterers have no nonlinear strength derivatives")


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """The pair of coupled fixed-point equations for (u, w).

    ``transfer`` holds the m x m operators (T_1, T_h) and ``rhs`` the
    right-hand sides; for the Foldy-Lax problem T_j is the zero-diagonal Green
    matrix, for the coupled problem it also carries the obstacle response.
    """
    strength_map: StrengthMap
    transfer: Tuple[np.ndarray, np.ndarray]
    rhs: Tuple[np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return self.strength_map.scatterers.count

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        m = self.size
        return z[:m], z[m:]

    def residual(self, z: np.ndarray) -> np.ndarray:
        """F(z) = z - T s(z) - rhs, stacked over both harmonics."""
        u, w = self.split(z)
        s1, sh = self.strength_map.strengths(u, w)
        return np.concatenate([
            u - self.transfer[0] @ s1 - self.rhs[0],
            w - self.transfer[1] @ sh - self.rhs[1],
        ])

    def fixed_point_map(self, z: np.ndarray) -> np.ndarray:
        u, w = self.split(z)
        s1, sh = self.strength_map.strengths(u, w)
        return np.concatenate([self.rhs[0] + self.transfer[0] @ s1, self.rhs[1] + self.transfer[1] @ sh])

    def complex_jacobians(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """dF/dz and dF/dconj(z) as 2m x 2m complex matrices."""
        u, w = self.split(z)
        d = self.strength_map.wirtinger(u, w)
        t1, th = self.transfer
        m = self.size
        p = np.eye(2 * m, dtype=complex)
        q = np.zeros((2 * m, 2 * m), dtype=complex)
        p[:m, :m] -= t1 * d["s1_u"][None, :]
        p[:m, m:] -= t1 * d["s1_w"][None, :]
        p[m:, :m] -= th * d["sh_u"][None, :]
        p[m:, m:] -= th * d["sh_w"][None, :]
        q[:m, :m] -= t1 * d["s1_ubar"][None, :]
        q[m:, :m] -= th * d["sh_ubar"][None, :]
        return p, q

    def real_residual(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Residual and Jacobian over x = [Re z, Im z]."""
        n = x.shape[0] // 2
        z = x[:n] + 1j * x[n:]
        f = self.residual(z)
        p, q = self.complex_jacobians(z)
        plus, minus = p + q, p - q
        jac = np.block([[plus.real, -minus.imag], [plus.imag, minus.real]])
        return np.concatenate([f.real, f.imag]), jac


@dataclass
class NonlinearResult:
    """Outcome of a reduced nonlinear solve."""
    u: np.ndarray
    w: np.ndarray
    residual: float
    iterations: int


def solve_newton(system: ReducedSystem, initial: np.ndarray,
                 tolerance: Optional[float] = None,
                 step_tolerance: Optional[float] = None,
                 max_iterations: Optional[int] = None,
                 trust_radius: Optional[float] = None) -> NonlinearResult:
    """
    Trust-region dogleg Newton (MINPACK hybrj) on the real form of the system.

    Args:
        system: Reduced system to solve
        initial: Complex starting point (u, w) stacked
        tolerance: Accepted infinity-norm residual
        step_tolerance: Relative step tolerance passed to the solver
        max_iterations: Cap on residual evaluations
        trust_radius: Initial step bound factor

    Returns:
        NonlinearResult with the converged fields

    Raises:
        ConvergenceError: When the final residual exceeds ``tolerance``
    """
    cfg = settings.solver
    tolerance = cfg.newton_tolerance if tolerance is None else tolerance
    step_tolerance = cfg.step_tolerance if step_tolerance is None else step_tolerance
    max_iterations = cfg.max_iterations if max_iterations is None else max_iterations
    trust_radius = cfg.trust_radius if trust_radius is None else trust_radius

    z0 = np.asarray(initial, dtype=complex)
    initial_residual = float(np.max(np.abs(system.residual(z0)), initial=0.0))
    if initial_residual <= tolerance:
        u, w = system.split(z0)
        return NonlinearResult(u.copy(), w.copy(), initial_residual, 0)

    x0 = np.concatenate([z0.real, z0.imag])
    result = optimize.root(
        system.real_residual, x0, jac=True, method="hybr",
        options={"xtol": step_tolerance, "maxfev": max_iterations, "factor": trust_radius},
    )
    n = x0.shape[0] // 2
    z = result.x[:n] + 1j * result.x[n:]
    residual = float(np.max(np.abs(system.residual(z)), initial=0.0))
    iterations = int(result.nfev)
    logger.debug(f"Newton finished after {iterations} evaluations, residual {residual:.3e}")

    if residual > tolerance:
        raise ConvergenceError(
            f"trust-region Newton did not converge: {result.message}",
            residual=residual, iterations=iterations
        )
    u, w = system.split(z)
    return NonlinearResult(u, w, residual, iterations)


def solve_fixed_point(system: ReducedSystem, initial: np.ndarray,
                      tolerance: Optional[float] = None,
                      max_iterations: Optional[int] = None) -> NonlinearResult:
    """Picard iteration z <- rhs + T s(z); the reference solution for Newton."""
    cfg = settings.solver
    tolerance = cfg.fixed_point_tolerance if tolerance is None else tolerance
    max_iterations = cfg.fixed_point_max_iterations if max_iterations is None else max_iterations

    z = np.asarray(initial, dtype=complex)
    change = np.inf
    for iteration in range(1, max_iterations + 1):
        updated = system.fixed_point_map(z)
        change = float(np.max(np.abs(updated - z), initial=0.0))
        z = updated
        if change <= tolerance:
            u, w = system.split(z)
            residual = float(np.max(np.abs(system.residual(z)), initial=0.0))
            return NonlinearResult(u, w, residual, iteration)

    raise ConvergenceError("fixed-point iteration did not converge", residual=change,
                           iterations=max_iterations)
