"""
Quantitative measurements on imaging-function magnitudes.

Profiles are sampled across the true obstacle boundaries with bilinear
interpolation of |I|.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from scattering.imaging import ImageGrid
from scattering.scene import ParametricCurve
from utils.exceptions import ValidationError

PROFILE_POINTS = 161
BOUNDARY_SAMPLES = 256


@dataclass
class RidgeMetrics:
    """Cross-ridge width, contrast and localization of one image."""
    mean_fwhm: float
    contrast: float
    localized_fraction: float
    measured_fraction: float


def sample(image: ImageGrid, points: np.ndarray) -> np.ndarray:
    """Bilinear |I| at physical points (n, 2)."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    domain = image.domain
    ix = (points[:, 0] + domain.half_width) / domain.spacing
    iy = (points[:, 1] + domain.half_width) / domain.spacing
    return ndimage.map_coordinates(image.magnitude, [iy, ix], order=1, mode="nearest")


def peak_location(image: ImageGrid) -> np.ndarray:
    iy, ix = np.unravel_index(np.argmax(image.magnitude), image.values.shape)
    coords = image.domain.coordinates
    return np.array([coords[ix], coords[iy]])


def half_power_radius(image: ImageGrid, center=None, rays: int = 72) -> float:
    """
    Mean radius at which |I| first drops 3 dB below its value at ``center``.

    Args:
        image: Image to measure
        center: Peak location, the brightest pixel when None
        rays: Number of radial directions averaged

    Returns:
        Radius in length units
    """
    center = peak_location(image) if center is None else np.asarray(center, dtype=float)
    level = sample(image, center)[0] * 10.0 ** (-3.0 / 20.0)
    step = image.domain.spacing / 8.0
    radii = np.arange(1, 4 * image.domain.samples) * step
    crossings = []
    for angle in 2.0 * np.pi * np.arange(rays) / rays:
        direction = np.array([np.cos(angle), np.sin(angle)])
        values = sample(image, center[None, :] + radii[:, None] * direction[None, :])
        below = np.nonzero(values < level)[0]
        if below.size:
            k = below[0]
            if k == 0:
                crossings.append(radii[0])
            else:
                r0, r1, v0, v1 = radii[k - 1], radii[k], values[k - 1], values[k]
                crossings.append(r0 + (v0 - level) / (v0 - v1) * (r1 - r0))
    if not crossings:
        raise ValidationError("image never drops 3 dB below its peak")
    return float(np.mean(crossings))


def _boundary_frame(curves: Sequence[ParametricCurve], samples: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = 2.0 * np.pi * np.arange(samples) / samples
    points, normals, weights = [], [], []
    for curve in curves:
        position, first, _ = curve.derivatives(t)
        speed = np.hypot(first[:, 0], first[:, 1])
        points.append(position)
        normals.append(np.stack([first[:, 1], -first[:, 0]], axis=-1) / speed[:, None])
        weights.append(speed)
    return np.concatenate(points), np.concatenate(normals), np.concatenate(weights)


def _fwhm(offsets: np.ndarray, profile: np.ndarray, search: float) -> float:
    """Full width at half maximum of the ridge peak nearest the centre of ``profile``."""
    window = np.abs(offsets) <= search
    candidates = np.nonzero(window)[0]
    peak = candidates[np.argmax(profile[candidates])]
    half = profile[peak] / 2.0
    left = peak
    while left > 0 and profile[left] >= half:
        left -= 1
    right = peak
    while right < profile.size - 1 and profile[right] >= half:
        right += 1
    if profile[left] >= half or profile[right] >= half:
        return np.nan

    def crossing(inside, outside):
        a, b = profile[inside], profile[outside]
        return offsets[inside] + (a - half) / (a - b) * (offsets[outside] - offsets[inside])

    return float(crossing(right - 1, right) - crossing(left + 1, left))


def ridge_metrics(image: ImageGrid, curves: Sequence[ParametricCurve],
                  samples: int = BOUNDARY_SAMPLES) -> RidgeMetrics:
    """
    Measure how well |I| traces the true obstacle boundaries.

    The ridge is probed along the normal of every boundary sample over one
    wavelength on either side. Contrast compares the mean |I| on the curves
    with the mean |I| at grid points more than one wavelength away from every
    curve. A sample is localized when the profile maximum lies within half a
    wavelength of the curve.
    """
    if not curves:
        raise ValidationError("ridge metrics need at least one obstacle curve")
    wavelength = 2.0 * np.pi / image.wavenumber
    points, normals, weights = _boundary_frame(curves, samples)
    offsets = np.linspace(-wavelength, wavelength, PROFILE_POINTS)
    probes = points[:, None, :] + offsets[None, :, None] * normals[:, None, :]
    profiles = sample(image, probes.reshape(-1, 2)).reshape(points.shape[0], PROFILE_POINTS)

    widths = np.array([_fwhm(offsets, profile, wavelength / 2.0) for profile in profiles])
    measured = np.isfinite(widths)
    mean_fwhm = float(np.mean(widths[measured])) if np.any(measured) else np.nan

    argmax = offsets[np.argmax(profiles, axis=1)]
    localized = np.abs(argmax) <= wavelength / 2.0
    localized_fraction = float(np.sum(weights[localized]) / np.sum(weights))

    coords = image.domain.coordinates
    gx, gy = np.meshgrid(coords, coords)
    grid_points = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    dense_points, _, _ = _boundary_frame(curves, 4 * samples)
    distance, _ = cKDTree(dense_points).query(grid_points)
    far = distance > wavelength
    background = float(np.mean(image.magnitude.ravel()[far])) if np.any(far) else np.nan
    ridge = float(np.mean(sample(image, points)))
    contrast = ridge / background if background > 0 else np.inf

    return RidgeMetrics(mean_fwhm, contrast, localized_fraction, float(np.mean(measured)))
