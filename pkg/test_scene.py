#!/usr/bin/env python3
"""
Tests for curves, boundary sampling, point scatterers and scene rules
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest
from scipy import integrate

from scattering.scene import (
    HarmonicSet, IncidentWave, Nonlinearity, ParametricCurve, PointScattererSet, Scene,
    place_aligned_point_scatterers, place_annulus_point_scatterers, rotate, sample_boundary
)
from utils.exceptions import DegenerateCurveError, ValidationError


def test_unit_circle_four_nodes():
    """Unit circle sampled at four nodes lands on the axes with unit speed"""
    disc = sample_boundary(ParametricCurve.circle(1.0), 4)
    expected = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    assert np.allclose(disc.points, expected, atol=1e-15)
    assert np.allclose(disc.speed, 1.0)
    assert np.allclose(disc.normals, expected, atol=1e-15)


def test_five_leaf_arclength_matches_adaptive_quadrature():
    curve = ParametricCurve.five_leaf()
    disc = sample_boundary(curve, 600)

    def speed(t):
        _, first, _ = curve.derivatives(np.array([t]))
        return float(np.hypot(first[0, 0], first[0, 1]))

    reference, _ = integrate.quad(speed, 0.0, 2.0 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-13)
    assert abs(disc.arclength - reference) / reference < 1e-10


def test_five_leaf_normals_point_outwards():
    disc = sample_boundary(ParametricCurve.five_leaf(rotation=0.7), 256)
    assert np.all(np.einsum("ij,ij->i", disc.normals, disc.points) > 0)
    assert np.allclose(np.hypot(disc.normals[:, 0], disc.normals[:, 1]), 1.0)


def test_translation_shifts_every_node():
    centred = sample_boundary(ParametricCurve.five_leaf(), 64)
    shifted = sample_boundary(ParametricCurve.five_leaf(center=(3.0, 0.0)), 64)
    assert np.allclose(shifted.points - centred.points, [3.0, 0.0], atol=1e-14)
    assert np.allclose(shifted.normals, centred.normals)


def test_derivatives_match_finite_differences():
    curve = ParametricCurve.five_leaf(center=(1.0, -2.0), rotation=0.4)
    t, h = np.array([0.3, 2.1]), 1e-5
    _, first, second = curve.derivatives(t)
    assert np.allclose((curve.position(t + h) - curve.position(t - h)) / (2 * h), first, atol=1e-8)
    plus, minus = curve.derivatives(t + h)[1], curve.derivatives(t - h)[1]
    assert np.allclose((plus - minus) / (2 * h), second, atol=1e-6)


def test_sample_boundary_rejects_odd_and_tiny_counts():
    with pytest.raises(ValidationError):
        sample_boundary(ParametricCurve.circle(), 7)
    with pytest.raises(ValidationError):
        sample_boundary(ParametricCurve.circle(), 2)


def test_non_positive_radius_is_degenerate():
    curve = ParametricCurve("custom", (0.0, 0.0), 0.0, (0.5, 1.0))
    with pytest.raises(DegenerateCurveError):
        sample_boundary(curve, 32)


def test_contains():
    curve = ParametricCurve.five_leaf()
    inside = curve.contains(np.array([[0.0, 0.0], [2.4, 0.0], [3.0, 0.0]]))
    assert inside.tolist() == [True, True, False]


def test_aligned_placement():
    assert np.allclose(place_aligned_point_scatterers([13, 14], 0.0), [[13, 0], [14, 0]])
    assert np.allclose(place_aligned_point_scatterers([13, 14], np.pi / 3),
                       [[6.5, 11.258330249197702], [7.0, 12.124355652982141]])
    assert np.allclose(place_aligned_point_scatterers([130, 131], np.pi), [[-130, 0], [-131, 0]])
    with pytest.raises(ValidationError):
        place_aligned_point_scatterers([14, 13], 0.0)


def test_annulus_placement_is_reproducible():
    first = place_annulus_point_scatterers(200, 10.0, 11.0, seed=7)
    second = place_annulus_point_scatterers(200, 10.0, 11.0, seed=7)
    radius = np.hypot(first[:, 0], first[:, 1])
    assert np.array_equal(first, second)
    assert np.all((radius >= 10.0) & (radius <= 11.0))
    assert not np.array_equal(first, place_annulus_point_scatterers(200, 10.0, 11.0, seed=8))


def test_point_scatterer_rules():
    with pytest.raises(ValidationError):
        PointScattererSet.linear_set([[0.0, 0.0], [0.0, 0.0]], 0.5)
    with pytest.raises(ValidationError):
        PointScattererSet.linear_set([[0.0, 0.0]], -0.1)
    with pytest.raises(ValidationError):
        PointScattererSet.quadratic_set([[0.0, 0.0]], 0.5, 0.5, [0.4, 0.4, 0.4])


def test_quadratic_set_helpers():
    scatterers = PointScattererSet.quadratic_set([[-13.0, 0.0], [-14.0, 0.0]], 0.5, 0.25, [0.4, 0.3])
    assert scatterers.nonlinear.shape == (2, 2)
    assert np.allclose(scatterers.linear_coefficients(2), 0.25)
    assert np.all(scatterers.linearized().nonlinear == 0)
    assert scatterers.as_linear().nonlinearity is Nonlinearity.LINEAR


def test_nonlinearity_harmonics():
    assert Nonlinearity.LINEAR.harmonics == (1,)
    assert Nonlinearity.QUADRATIC.harmonics == (1, 2)
    assert Nonlinearity.CUBIC.harmonics == (1, 3)
    assert HarmonicSet.for_nonlinearity(2.0, Nonlinearity.CUBIC).wavenumbers == (2.0, 6.0)
    with pytest.raises(ValidationError):
        HarmonicSet.for_nonlinearity(2.0, Nonlinearity.QUADRATIC).wavenumber(3)


def test_incident_wave():
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    assert np.allclose(wave.field(np.array([[np.pi / 2, 0.0]])), [-1.0])
    with pytest.raises(ValidationError):
        IncidentWave(2.0, (1.0, 1.0))
    with pytest.raises(ValidationError):
        IncidentWave(0.0, (1.0, 0.0))


def test_scene_rules():
    with pytest.raises(ValidationError):
        Scene((), None)
    with pytest.raises(ValidationError):
        Scene((ParametricCurve.five_leaf(),), PointScattererSet.linear_set([[0.5, 0.0]], 0.5), 64)
    with pytest.raises(ValidationError):
        Scene((ParametricCurve.five_leaf(),), None, 15)


def test_moving_scene_places_scatterers_per_transmitter():
    coefficients = PointScattererSet.quadratic_set([[13.0, 0.0], [14.0, 0.0]], 0.5, 0.5, [0.4, 0.4])
    scene = Scene((ParametricCurve.five_leaf(),), coefficients, 64, moving_radii=(13.0, 14.0))
    moved = scene.scatterers_for(np.pi / 2)
    assert scene.is_moving
    assert np.allclose(moved.positions, [[0.0, 13.0], [0.0, 14.0]], atol=1e-12)
    assert np.allclose(moved.nonlinear, coefficients.nonlinear)


def test_rotating_the_curve_rotates_nodes_and_normals():
    angle = 0.9
    plain = sample_boundary(ParametricCurve.five_leaf(), 128)
    turned = sample_boundary(ParametricCurve.five_leaf(rotation=angle), 128)
    assert np.max(np.abs(turned.points - rotate(plain.points, angle))) < 1e-12
    assert np.max(np.abs(turned.normals - rotate(plain.normals, angle))) < 1e-12


def test_doubling_the_node_count_keeps_common_nodes():
    curve = ParametricCurve.five_leaf(center=(1.5, -0.5), rotation=0.3)
    coarse = sample_boundary(curve, 64)
    fine = sample_boundary(curve, 128)
    assert np.array_equal(fine.t[::2], coarse.t)
    assert np.array_equal(fine.points[::2], coarse.points)


def test_shares_geometry():
    scene = Scene((ParametricCurve.five_leaf(),), None, 64)
    points = PointScattererSet.linear_set([[5.0, 0.0]], 0.5)
    assert scene.shares_geometry(scene.with_scatterers(points))
    assert scene.shares_geometry(Scene((ParametricCurve.five_leaf(),), None, 64))
    assert not scene.shares_geometry(Scene((ParametricCurve.five_leaf(),), None, 128))
    assert not scene.shares_geometry(Scene((ParametricCurve.five_leaf(center=(3.0, 0.0)),), None, 64))
    assert not scene.shares_geometry(Scene((), points))
