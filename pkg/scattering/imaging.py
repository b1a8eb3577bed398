"""
Direct imaging from multistatic far-field data.

The imaging function at a sampling point r is

    I(r) = u(r)^T P v(r),   u_i = e^{i kappa r.r_hat_i} / sqrt(M),
                            v_j = e^{i kappa r.b_j} / sqrt(N)

with r_hat_i the receivers and b_j the transmitters of the direction grid.
Images are stored with rows along y and columns along x, ``values[iy, ix]``.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Union

import numpy as np

from config.settings import settings
from scattering.farfield import (
    DirectionGrid, Modality, ResponseMatrix, build_response_matrices
)
from scattering.nufft import NufftPlan, nufft2d_type1
from scattering.scene import Scene
from utils.common import chunk_ranges
from utils.exceptions import ConfigurationError, UsageError, ValidationError
from utils.logging import logger


@dataclass(frozen=True)
class ImageDomain:
    """Square sampling domain [-L, L]^2 with N_s points per axis."""
    half_width: float
    samples: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValidationError(f"image half width must be positive, got {self.half_width}")
        if self.samples < 4:
            raise ValidationError(f"image needs at least 4 samples per axis, got {self.samples}")

    @classmethod
    def default(cls) -> "ImageDomain":
        return cls(settings.imaging.half_width, settings.imaging.samples)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.samples

    @property
    def coordinates(self) -> np.ndarray:
        """x = -L + (2L / N_s) n, n = 0 .. N_s - 1; also used for y."""
        return -self.half_width + self.spacing * np.arange(self.samples)

    def minimal_samples(self, wavenumber: float) -> int:
        return int(np.ceil(4.0 * wavenumber * self.half_width / np.pi - 1e-9))

    def check_frequency_bound(self, wavenumber: float) -> None:
        """
        Raise when N_s < 4 kappa L / pi.

        Raises:
            ConfigurationError: Carries ``minimal_samples`` in its details
        """
        needed = self.minimal_samples(wavenumber)
        if self.samples < needed:
            raise ConfigurationError(
                f"{self.samples} samples cannot resolve kappa={wavenumber:g} on [-{self.half_width:g}, "
                f"{self.half_width:g}]^2; use at least {needed}",
                minimal_samples=needed,
            )


@dataclass
class IlluminationVectors:
    """Receiver and transmitter illumination vectors at one sampling point."""
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def at(cls, point, wavenumber: float, grid: DirectionGrid) -> "IlluminationVectors":
        point = np.asarray(point, dtype=float)
        u = np.exp(1j * wavenumber * grid.observation_directions @ point) / np.sqrt(grid.observations)
        v = np.exp(1j * wavenumber * grid.transmitter_directions @ point) / np.sqrt(grid.incidences)
        return cls(u, v)

    def apply(self, values: np.ndarray) -> complex:
        return complex(self.u @ values @ self.v)


@dataclass
class ImageGrid:
    """Complex imaging-function values on an ImageDomain."""
    values: np.ndarray
    domain: ImageDomain
    wavenumber: float
    harmonic: int = 1

    def __post_init__(self):
        expected = (self.domain.samples, self.domain.samples)
        if self.values.shape != expected:
            raise ValidationError(f"image has shape {self.values.shape}, expected {expected}")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def normalized(self) -> np.ndarray:
        """|I| scaled to [0, 1]; a zero image stays zero."""
        magnitude = self.magnitude
        peak = magnitude.max(initial=0.0)
        return magnitude / peak if peak > 0 else magnitude


def imaging_value(response: ResponseMatrix, point) -> complex:
    """I(r) at a single point."""
    return IlluminationVectors.at(point, response.wavenumber, response.grid).apply(response.values)


def imaging_direct(response: ResponseMatrix, domain: ImageDomain, threads: int = 0) -> ImageGrid:
    """
    Reference evaluation of u^T P v at every sample by explicit products.

    Rows of the image are computed in parallel chunks.
    """
    p = response.values
    kappa, grid = response.wavenumber, response.grid
    coords = domain.coordinates
    cos_a, sin_a = np.cos(grid.observation_angles), np.sin(grid.observation_angles)
    cos_b, sin_b = np.cos(grid.incidence_angles), np.sin(grid.incidence_angles)
    scale = 1.0 / np.sqrt(grid.observations * grid.incidences)
    values = np.empty((domain.samples, domain.samples), dtype=complex)
    u_x = np.exp(1j * kappa * np.outer(coords, cos_a))
    v_x = np.exp(1j * kappa * np.outer(coords, cos_b))

    def rows(block):
        for iy in range(*block):
            y = coords[iy]
            u = u_x * np.exp(1j * kappa * y * sin_a)[None, :]
            v = v_x * np.exp(1j * kappa * y * sin_b)[None, :]
            values[iy] = np.einsum("xj,xj->x", u @ p, v) * scale

    with ThreadPoolExecutor(max_workers=settings.worker_count(threads)) as pool:
        list(pool.map(rows, chunk_ranges(domain.samples, settings.imaging.direct_row_chunk)))
    return ImageGrid(values, domain, kappa, response.harmonic)


def imaging_nufft(response: ResponseMatrix, domain: ImageDomain, threads: int = 0) -> ImageGrid:
    """
    Imaging function through one 2D type-1 NUFFT.

    Each entry P[i][j] is a source at frequency kappa (r_hat_i + b_j), scaled
    by the sample spacing into [-pi, pi]^2; the phase e^{i x_0 (xi + eta)}
    moves the transform's integer targets to the physical grid.

    Raises:
        ConfigurationError: When N_s < 4 kappa L / pi
    """
    kappa, grid = response.wavenumber, response.grid
    domain.check_frequency_bound(kappa)
    p = response.values
    h = domain.spacing
    alpha, beta = grid.observation_angles, grid.incidence_angles
    fx = kappa * (np.cos(alpha)[:, None] + np.cos(beta)[None, :])
    fy = kappa * (np.sin(alpha)[:, None] + np.sin(beta)[None, :])
    origin = -domain.half_width + h * (domain.samples // 2)
    strengths = p * np.exp(1j * origin * (fx + fy)) / np.sqrt(grid.observations * grid.incidences)

    transformed = nufft2d_type1(
        (h * fx).ravel(), (h * fy).ravel(), strengths.ravel(), domain.samples,
        plan=NufftPlan.create(domain.samples), threads=threads,
    )
    return ImageGrid(transformed.T.copy(), domain, kappa, response.harmonic)


@dataclass
class ImagingRun:
    """Images, the response matrices they came from and stage timings."""
    images: Dict[int, ImageGrid]
    matrices: Dict[int, ResponseMatrix]
    timings: Dict[str, float] = field(default_factory=dict)


def default_modality(scene: Scene, harmonic: int) -> Modality:
    """Differencing for higher harmonics of moving nonlinear scatterers, plain otherwise."""
    if harmonic > 1 and scene.is_moving and scene.has_obstacles:
        return Modality.GFL_MINUS_FL
    return Modality.PLAIN


def run_imaging_experiment(scene: Scene, wavenumber: float, grid: DirectionGrid,
                           domain: ImageDomain, harmonics: Optional[Iterable[int]] = None,
                           modality: Union[str, Modality, None] = "auto",
                           eta: Optional[float] = None, threads: int = 0,
                           method: str = "nufft", amplitude: Optional[float] = None,
                           solver_options: Optional[Dict[str, float]] = None) -> ImagingRun:
    """
    Build response matrices for the requested harmonics and image each one.

    Args:
        scene: Scene to illuminate
        wavenumber: Base wavenumber
        grid: Direction grid
        domain: Image sampling domain
        harmonics: Harmonics to image, all harmonics of the scene when None
        modality: "auto", "plain" or "gfl_minus_fl"
        eta: Coupling parameter override
        threads: Worker cap
        method: "nufft" or "direct"
        amplitude: Incident amplitude, INCIDENT_AMPLITUDE when None
        solver_options: Keyword options for the nonlinear solvers

    Returns:
        ImagingRun keyed by harmonic order
    """
    harmonics = tuple(harmonics) if harmonics else scene.nonlinearity.harmonics
    for harmonic in harmonics:
        domain.check_frequency_bound(harmonic * wavenumber)
    if method not in ("nufft", "direct"):
        raise UsageError(f"unknown imaging method {method!r}")

    if modality in (None, "auto"):
        modalities = {h: default_modality(scene, h) for h in harmonics}
    else:
        modalities = {h: Modality(modality) if h > 1 else Modality.PLAIN for h in harmonics}

    matrices = build_response_matrices(scene, grid, wavenumber, harmonics, modalities, eta, threads,
                                       amplitude=amplitude, solver_options=solver_options)
    timings = dict(next(iter(matrices.values())).timings)

    imager = imaging_nufft if method == "nufft" else imaging_direct
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=len(harmonics)) as pool:
        images = dict(zip(harmonics, pool.map(lambda h: imager(matrices[h], domain, threads), harmonics)))
    timings["nufft" if method == "nufft" else "direct"] = time.perf_counter() - start

    logger.info(f"Imaged harmonics {harmonics} on a {domain.samples}x{domain.samples} grid")
    return ImagingRun(images, matrices, timings)
