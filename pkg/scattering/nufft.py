"""
Type-1 non-uniform FFT by Gaussian gridding.

    f(k) = sum_j c_j e^{i xi_j k},   k = -m/2, ..., m/2 - 1

Sources are spread onto an oversampled periodic grid with a truncated
Gaussian, the grid is transformed with a standard FFT and the Gaussian is
divided out in frequency space.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config.settings import settings
from utils.common import chunk_ranges
from utils.exceptions import DomainError, ValidationError
from utils.logging import logger

FREQUENCY_SLACK = 1e-12


@dataclass(frozen=True)
class NufftPlan:
    """Grid sizes and Gaussian width for an m-point type-1 transform."""
    size: int
    oversampling: int = 2
    spread_width: int = 12

    def __post_init__(self):
        if self.size < 1:
            raise ValidationError(f"NUFFT output size must be positive, got {self.size}")
        if self.oversampling < 2 or self.spread_width < 2:
            raise ValidationError("NUFFT needs oversampling >= 2 and spread width >= 2")

    @classmethod
    def create(cls, size: int) -> "NufftPlan":
        return cls(size, settings.nufft.oversampling, settings.nufft.spread_width)

    @property
    def grid_size(self) -> int:
        return self.oversampling * self.size

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.grid_size

    @property
    def tau(self) -> float:
        r = self.oversampling
        return np.pi * self.spread_width / (self.size ** 2 * r * (r - 0.5))

    @property
    def targets(self) -> np.ndarray:
        return np.arange(self.size) - self.size // 2

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.spread_width, self.spread_width + 1)

    def deconvolution(self) -> np.ndarray:
        """sqrt(pi / tau) e^{tau k^2} at every target."""
        k = self.targets.astype(float)
        return np.sqrt(np.pi / self.tau) * np.exp(self.tau * k ** 2)

    def spread_weights(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Grid indices and Gaussian weights of each source along one axis.

        The weights e^{-(l h - delta)^2 / 4 tau} factor into a per-source term,
        a per-source ratio raised to the offset and a shared table.
        """
        h, tau = self.spacing, self.tau
        nearest = np.rint(xi / h).astype(np.int64)
        delta = xi - nearest * h
        offsets = self.offsets
        table = np.exp(-(offsets * h) ** 2 / (4.0 * tau))
        ratio = np.exp(h * delta / (2.0 * tau))
        weights = (np.exp(-delta ** 2 / (4.0 * tau))[:, None]
                   * np.power(ratio[:, None], offsets[None, :]) * table[None, :])
        indices = np.mod(nearest[:, None] + offsets[None, :], self.grid_size)
        return indices, weights


def _check_frequencies(*axes: np.ndarray) -> None:
    for axis in axes:
        if axis.size and np.max(np.abs(axis)) > np.pi * (1.0 + FREQUENCY_SLACK):
            raise DomainError(
                f"NUFFT frequencies must lie in [-pi, pi], got max |xi| = {np.max(np.abs(axis)):.6g}"
            )


def _accumulate(total: int, indices: np.ndarray, values: np.ndarray) -> np.ndarray:
    flat = indices.ravel()
    values = values.ravel()
    return (np.bincount(flat, weights=values.real, minlength=total)
            + 1j * np.bincount(flat, weights=values.imag, minlength=total))


def _spread(total: int, count: int, task, threads: int) -> np.ndarray:
    """Run ``task`` over source chunks and merge the partial grids in chunk order."""
    chunks = chunk_ranges(count, settings.nufft.chunk_size)
    workers = settings.worker_count(threads)
    grid = np.zeros(total, dtype=complex)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for batch in chunk_ranges(len(chunks), workers):
            partials: List[np.ndarray] = list(pool.map(task, chunks[batch[0]:batch[1]]))
            for partial in partials:
                grid += partial
    return grid


def nufft1d_type1(xi: np.ndarray, c: np.ndarray, m: int,
                  plan: Optional[NufftPlan] = None, threads: int = 0) -> np.ndarray:
    """
    One-dimensional type-1 NUFFT.

    Args:
        xi: Source frequencies in [-pi, pi]
        c: Complex source strengths
        m: Number of output points
        plan: Optional precomputed plan
        threads: Worker cap for spreading

    Returns:
        f at the integer targets -m/2 .. m/2 - 1

    Raises:
        DomainError: When a frequency lies outside [-pi, pi]
    """
    xi = np.asarray(xi, dtype=float).ravel()
    c = np.asarray(c, dtype=complex).ravel()
    if xi.shape != c.shape:
        raise ValidationError(f"frequency and strength counts differ: {xi.shape} vs {c.shape}")
    _check_frequencies(xi)
    plan = plan or NufftPlan.create(m)
    size = plan.grid_size

    def task(rows):
        start, stop = rows
        indices, weights = plan.spread_weights(xi[start:stop])
        return _accumulate(size, indices, weights * c[start:stop, None])

    grid = _spread(size, xi.shape[0], task, threads)
    transformed = np.fft.ifft(grid)
    return transformed[np.mod(plan.targets, size)] * plan.deconvolution()


def nufft2d_type1(xi: np.ndarray, eta: np.ndarray, c: np.ndarray, m: int,
                  plan: Optional[NufftPlan] = None, threads: int = 0) -> np.ndarray:
    """
    Two-dimensional type-1 NUFFT on an m x m grid.

    Returns:
        Array f[a, b] = sum_j c_j e^{i (xi_j k_a + eta_j k_b)} with
        k = -m/2 .. m/2 - 1 along both axes
    """
    xi = np.asarray(xi, dtype=float).ravel()
    eta = np.asarray(eta, dtype=float).ravel()
    c = np.asarray(c, dtype=complex).ravel()
    if not xi.shape == eta.shape == c.shape:
        raise ValidationError("frequency and strength arrays must have the same length")
    _check_frequencies(xi, eta)
    plan = plan or NufftPlan.create(m)
    size = plan.grid_size

    def task(rows):
        start, stop = rows
        ix, wx = plan.spread_weights(xi[start:stop])
        iy, wy = plan.spread_weights(eta[start:stop])
        indices = ix[:, :, None] * size + iy[:, None, :]
        values = (c[start:stop, None, None] * wx[:, :, None]) * wy[:, None, :]
        return _accumulate(size * size, indices, values)

    grid = _spread(size * size, xi.shape[0], task, threads).reshape(size, size)
    transformed = np.fft.ifft2(grid)
    picks = np.mod(plan.targets, size)
    deconv = plan.deconvolution()
    result = transformed[np.ix_(picks, picks)] * np.outer(deconv, deconv)
    logger.debug(f"2D NUFFT of {xi.shape[0]} sources onto a {m}x{m} grid")
    return result
