"""
Hankel functions and the 2D Helmholtz Green's function.

G_kappa(r, r') = (i/4) H_0^(1)(kappa |r - r'|). All functions broadcast over
leading axes; points are arrays whose last axis has length 2.
"""
from typing import Tuple, Union

import numpy as np
from scipy import special

from utils.exceptions import DomainError, SingularityError

COINCIDENCE_THRESHOLD = 1e-13

Complex = Union[complex, np.ndarray]


def _positive_argument(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not np.all(z > 0):
        raise DomainError(
            "Hankel functions are only evaluated for positive real arguments",
            smallest=float(np.min(z)) if z.size else float("nan")
        )
    return z


def hankel1_0(z) -> Complex:
    """H_0^(1)(z) = J_0(z) + i Y_0(z) for z > 0."""
    return special.hankel1(0, _positive_argument(z))


def hankel1_1(z) -> Complex:
    """H_1^(1)(z) = J_1(z) + i Y_1(z) for z > 0."""
    return special.hankel1(1, _positive_argument(z))


def _separation(r, rp) -> Tuple[np.ndarray, np.ndarray]:
    diff = np.asarray(r, dtype=float) - np.asarray(rp, dtype=float)
    distance = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(distance < COINCIDENCE_THRESHOLD):
        raise SingularityError(
            "Green's function evaluated at coincident points",
            distance=float(np.min(distance))
        )
    return diff, distance


def green(kappa: float, r, rp) -> Complex:
    """(i/4) H_0^(1)(kappa |r - rp|)."""
    _, distance = _separation(r, rp)
    return 0.25j * hankel1_0(kappa * distance)


def green_dnu(kappa: float, r, rp, nu) -> Complex:
    """Normal derivative of G with respect to r along the unit normal ``nu`` at r."""
    diff, distance = _separation(r, rp)
    projection = np.sum(np.asarray(nu, dtype=float) * diff, axis=-1)
    return -0.25j * kappa * hankel1_1(kappa * distance) * projection / distance


def green_matrix(kappa: float, targets: np.ndarray, sources: np.ndarray,
                 skip_self: bool = False) -> np.ndarray:
    """
    Green's function between every target and every source.

    Args:
        kappa: Wavenumber
        targets: (n, 2) evaluation points
        sources: (m, 2) source points
        skip_self: Zero the diagonal instead of failing on it; targets and
            sources must then be the same point set

    Returns:
        (n, m) complex matrix
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    sources = np.asarray(sources, dtype=float).reshape(-1, 2)
    if targets.shape[0] == 0 or sources.shape[0] == 0:
        return np.zeros((targets.shape[0], sources.shape[0]), dtype=complex)
    diff = targets[:, None, :] - sources[None, :, :]
    distance = np.hypot(diff[..., 0], diff[..., 1])
    if skip_self:
        np.fill_diagonal(distance, 1.0)
    if np.any(distance < COINCIDENCE_THRESHOLD):
        raise SingularityError(
            "Green's function evaluated at coincident points",
            distance=float(np.min(distance))
        )
    values = 0.25j * hankel1_0(kappa * distance)
    if skip_self:
        np.fill_diagonal(values, 0.0)
    return values


def green_dnu_matrix(kappa: float, targets: np.ndarray, normals: np.ndarray,
                     sources: np.ndarray) -> np.ndarray:
    """Normal derivative of G at each target (with its normal) for every source."""
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    sources = np.asarray(sources, dtype=float).reshape(-1, 2)
    if targets.shape[0] == 0 or sources.shape[0] == 0:
        return np.zeros((targets.shape[0], sources.shape[0]), dtype=complex)
    diff = targets[:, None, :] - sources[None, :, :]
    distance = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(distance < COINCIDENCE_THRESHOLD):
        raise SingularityError(
            "Green's function evaluated at coincident points",
            distance=float(np.min(distance))
        )
    projection = np.einsum("ik,ijk->ij", np.asarray(normals, dtype=float).reshape(-1, 2), diff)
    return -0.25j * kappa * hankel1_1(kappa * distance) * projection / distance
