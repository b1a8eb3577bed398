"""
Reference solutions that share no code with the solvers they check.
"""
import math
from typing import Tuple

import numpy as np
from scipy import special

from scattering.farfield import DirectionGrid

EULER_GAMMA = 0.57721566490153286061


def _series_orders(kappa: float, radius: float) -> np.ndarray:
    top = int(np.ceil(kappa * radius + 10.0 * (kappa * radius) ** (1.0 / 3.0) + 20))
    return np.arange(-top, top + 1)


def circle_far_field(kappa: float, radius: float, observation: np.ndarray,
                     propagation: float) -> np.ndarray:
    """
    Far field of a sound-soft disk centred at the origin.

        psi_inf(theta) = -sqrt(2 / (pi kappa)) e^{-i pi/4}
                         sum_n J_n(kappa a) / H_n(kappa a) e^{i n (theta - beta)}

    Args:
        kappa: Wavenumber
        radius: Disk radius a
        observation: Observation angles theta
        propagation: Angle beta of the plane wave's direction of travel
    """
    n = _series_orders(kappa, radius)
    ratio = special.jv(n, kappa * radius) / special.hankel1(n, kappa * radius)
    phase = np.exp(1j * np.outer(np.asarray(observation, dtype=float) - propagation, n))
    return -np.sqrt(2.0 / (np.pi * kappa)) * np.exp(-0.25j * np.pi) * (phase @ ratio)


def circle_density(kappa: float, radius: float, theta: np.ndarray, propagation: float) -> np.ndarray:
    """Normal derivative of the total field on the disk boundary."""
    n = _series_orders(kappa, radius)
    coefficients = (1j ** n) / special.hankel1(n, kappa * radius)
    phase = np.exp(1j * np.outer(np.asarray(theta, dtype=float) - propagation, n))
    return -(2j / (np.pi * radius)) * (phase @ coefficients)


def hankel1_0_series(z: float, terms: int = 60) -> complex:
    """Power series of H_0^(1)(z) = J_0(z) + i Y_0(z), accurate for moderate z."""
    half = z / 2.0
    j0, y0_sum, harmonic = 0.0, 0.0, 0.0
    for k in range(terms):
        term = (-1) ** k * half ** (2 * k) / math.factorial(k) ** 2
        j0 += term
        if k:
            harmonic += 1.0 / k
            y0_sum -= term * harmonic
    y0 = (2.0 / np.pi) * (math.log(half) + EULER_GAMMA) * j0 + (2.0 / np.pi) * y0_sum
    return complex(j0, y0)


def direct_nufft1d(xi: np.ndarray, c: np.ndarray, m: int) -> np.ndarray:
    k = np.arange(m) - m // 2
    return np.exp(1j * np.outer(k, xi)) @ c


def direct_nufft2d(xi: np.ndarray, eta: np.ndarray, c: np.ndarray, m: int,
                   picks=None) -> np.ndarray:
    """Direct double sum, on the whole grid or at ``picks`` = (rows, cols) index arrays."""
    k = np.arange(m) - m // 2
    if picks is None:
        ex = np.exp(1j * np.outer(k, xi))
        ey = np.exp(1j * np.outer(k, eta))
        return (ex * c[None, :]) @ ey.T
    rows, cols = picks
    phase = np.outer(k[rows], xi) + np.outer(k[cols], eta)
    return np.exp(1j * phase) @ c


def born_point_matrix(point, wavenumber: float, grid: DirectionGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Rank-one data w w^T of a Born point scatterer, with w_i = e^{-i kappa r0.r_hat_i} / sqrt(M)."""
    point = np.asarray(point, dtype=float)
    w_obs = np.exp(-1j * wavenumber * grid.observation_directions @ point) / np.sqrt(grid.observations)
    w_inc = np.exp(-1j * wavenumber * grid.transmitter_directions @ point) / np.sqrt(grid.incidences)
    return np.outer(w_obs, w_inc), w_obs
