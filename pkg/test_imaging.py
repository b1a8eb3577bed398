#!/usr/bin/env python3
"""
Tests for the direct imaging function and image measurements
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from scattering.farfield import DirectionGrid, Modality, ResponseMatrix
from scattering.image_metrics import half_power_radius, peak_location, ridge_metrics
from scattering.imaging import (
    ImageDomain, ImageGrid, default_modality, imaging_direct, imaging_nufft, imaging_value,
    run_imaging_experiment
)
from scattering.oracles import born_point_matrix
from scattering.scene import ParametricCurve, PointScattererSet, Scene
from utils.exceptions import ConfigurationError, UsageError, ValidationError


def random_response(kappa, count, seed=11):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(count, count)) + 1j * rng.normal(size=(count, count))
    return ResponseMatrix(values, kappa, DirectionGrid.square(count))


def test_domain_coordinates():
    domain = ImageDomain(5.0, 500)
    assert domain.spacing == 0.02
    assert domain.coordinates[0] == -5.0
    assert np.isclose(domain.coordinates[-1], 4.98)
    with pytest.raises(ValidationError):
        ImageDomain(0.0, 10)


def test_frequency_bound():
    with pytest.raises(ConfigurationError) as info:
        ImageDomain(5.0, 60).check_frequency_bound(10.0)
    assert info.value.details["minimal_samples"] == 64
    ImageDomain(5.0, 64).check_frequency_bound(10.0)
    with pytest.raises(ConfigurationError):
        imaging_nufft(random_response(10.0, 4), ImageDomain(5.0, 60))


def test_zero_matrix_gives_zero_image():
    response = ResponseMatrix(np.zeros((8, 8), dtype=complex), 2.0, DirectionGrid.square(8))
    domain = ImageDomain(2.0, 16)
    assert np.all(imaging_nufft(response, domain).values == 0)
    assert np.all(imaging_direct(response, domain).values == 0)
    assert np.all(imaging_nufft(response, domain).normalized() == 0)


def test_single_direction_gives_constant_magnitude():
    response = ResponseMatrix(np.array([[0.3 - 0.4j]]), 2.0, DirectionGrid.square(1))
    image = imaging_nufft(response, ImageDomain(1.0, 16))
    assert np.allclose(image.magnitude, 0.5, atol=1e-10)


def test_nufft_matches_direct_evaluation():
    response = random_response(10.0, 16)
    domain = ImageDomain(5.0, 64)
    fast = imaging_nufft(response, domain, threads=2)
    slow = imaging_direct(response, domain, threads=2)
    assert np.max(np.abs(fast.values - slow.values)) <= 1e-8 * np.max(np.abs(slow.values))


def test_direct_evaluation_matches_pointwise_value():
    response = random_response(3.0, 6)
    domain = ImageDomain(2.0, 16)
    image = imaging_direct(response, domain)
    coords = domain.coordinates
    # rows along y, columns along x
    assert np.isclose(image.values[3, 10], imaging_value(response, [coords[10], coords[3]]))


def test_born_point_peaks_at_its_position():
    kappa, domain = 10.0, ImageDomain(2.0, 64)
    grid = DirectionGrid.square(128)
    point = np.array([domain.coordinates[40], domain.coordinates[21]])
    matrix, _ = born_point_matrix(point, kappa, grid)
    for imager in (imaging_nufft, imaging_direct):
        image = imager(ResponseMatrix(matrix, kappa, grid), domain)
        assert np.allclose(peak_location(image), point)
        assert np.isclose(image.magnitude.max(), 1.0, atol=1e-6)


def test_born_point_half_power_radius():
    # |I| = J0(kappa rho)^2 drops 3 dB at kappa rho = 0.8128
    kappa, domain = 10.0, ImageDomain(1.0, 128)
    grid = DirectionGrid.square(128)
    matrix, _ = born_point_matrix([0.0, 0.0], kappa, grid)
    image = imaging_nufft(ResponseMatrix(matrix, kappa, grid), domain)
    assert half_power_radius(image, [0.0, 0.0]) == pytest.approx(0.8128 / kappa, rel=0.03)


def test_ridge_metrics_on_a_synthetic_ring():
    domain = ImageDomain(2.0, 200)
    gx, gy = np.meshgrid(domain.coordinates, domain.coordinates)
    values = np.exp(-((np.hypot(gx, gy) - 1.0) / 0.1) ** 2).astype(complex)
    metrics = ridge_metrics(ImageGrid(values, domain, 10.0), [ParametricCurve.circle(1.0)])
    assert metrics.mean_fwhm == pytest.approx(2.0 * 0.1 * np.sqrt(np.log(2.0)), rel=0.02)
    assert metrics.localized_fraction == 1.0
    assert metrics.measured_fraction == 1.0
    assert metrics.contrast > 100
    with pytest.raises(ValidationError):
        ridge_metrics(ImageGrid(values, domain, 10.0), [])


def test_image_grid_shape_is_checked():
    with pytest.raises(ValidationError):
        ImageGrid(np.zeros((4, 5)), ImageDomain(1.0, 4), 1.0)


def test_default_modality():
    obstacle = ParametricCurve.five_leaf()
    coefficients = PointScattererSet.quadratic_set([[13.0, 0.0], [14.0, 0.0]], 0.5, 0.5, [0.4, 0.4])
    moving = Scene((obstacle,), coefficients, 64, moving_radii=(13.0, 14.0))
    fixed = Scene((obstacle,), coefficients, 64)
    assert default_modality(moving, 2) is Modality.GFL_MINUS_FL
    assert default_modality(moving, 1) is Modality.PLAIN
    assert default_modality(fixed, 2) is Modality.PLAIN


def test_imaging_run_for_moving_quadratic_scene():
    coefficients = PointScattererSet.quadratic_set([[13.0, 0.0], [14.0, 0.0]], 0.5, 0.5, [0.4, 0.4])
    scene = Scene((ParametricCurve.five_leaf(),), coefficients, 64, moving_radii=(13.0, 14.0))
    run = run_imaging_experiment(scene, 2.0, DirectionGrid.square(8), ImageDomain(5.0, 32), threads=2)
    assert set(run.images) == {1, 2}
    assert run.matrices[2].modality is Modality.GFL_MINUS_FL
    assert run.images[2].wavenumber == 4.0
    assert run.images[1].values.shape == (32, 32)
    assert "nufft" in run.timings
    with pytest.raises(UsageError):
        run_imaging_experiment(scene, 2.0, DirectionGrid.square(8), ImageDomain(5.0, 32), method="fast")
    with pytest.raises(ConfigurationError):
        run_imaging_experiment(scene, 2.0, DirectionGrid.square(8), ImageDomain(5.0, 16))


@pytest.mark.slow
@pytest.mark.parametrize("name,higher", [("example3", 2), ("example5", 3)])
def test_moving_presets_sharpen_the_higher_harmonic(name, higher):
    from services.validation_service import load_preset

    config = load_preset(name)
    scene = config.build_scene()
    run = run_imaging_experiment(
        scene, config.wavenumber, DirectionGrid.square(config.directions),
        ImageDomain(config.half_width, config.samples), amplitude=config.amplitude,
    )
    assert set(run.images) == {1, higher}
    base = ridge_metrics(run.images[1], scene.obstacles)
    enhanced = ridge_metrics(run.images[higher], scene.obstacles)
    assert enhanced.mean_fwhm < 0.8 * base.mean_fwhm


def test_translated_data_shift_the_image():
    kappa, domain = 4.0, ImageDomain(2.0, 32)
    grid = DirectionGrid.square(24)
    response = random_response(kappa, 24, seed=5)
    steps = np.array([5, -3])
    shift = steps * domain.spacing
    phase = np.exp(-1j * kappa * (grid.observation_directions @ shift)[:, None]
                   - 1j * kappa * (grid.transmitter_directions @ shift)[None, :])
    moved = ResponseMatrix(response.values * phase, kappa, grid)
    for imager in (imaging_direct, imaging_nufft):
        before = imager(response, domain).values
        after = imager(moved, domain).values
        # rows along y, columns along x
        overlap = after[:29, 5:] - before[3:, :27]
        assert np.max(np.abs(overlap)) <= 1e-8 * np.max(np.abs(before))


def test_born_peak_follows_the_scatterer():
    kappa, domain = 10.0, ImageDomain(2.0, 64)
    grid = DirectionGrid.square(128)
    start = np.array([domain.coordinates[30], domain.coordinates[34]])
    shift = np.array([0.41, -0.27])
    peaks = []
    for point in (start, start + shift):
        matrix, _ = born_point_matrix(point, kappa, grid)
        peaks.append(peak_location(imaging_nufft(ResponseMatrix(matrix, kappa, grid), domain)))
    lattice = np.round(shift / domain.spacing) * domain.spacing
    assert np.allclose(peaks[1] - peaks[0], lattice, atol=1e-12)
