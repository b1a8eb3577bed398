#!/usr/bin/env python3
"""
Tests for the linear and nonlinear Foldy-Lax solvers
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from scattering import foldy_lax, kernels
from scattering.scene import IncidentWave, PointScattererSet
from utils.exceptions import UsageError

PAIR = np.array([[-13.0, 0.0], [-14.0, 0.0]])


def test_single_scatterer_matrix_and_field():
    scatterers = PointScattererSet.linear_set([[0.3, 0.4]], 0.5)
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    assert np.array_equal(foldy_lax.assemble_foldy_lax_matrix(scatterers, 2.0), [[1.0]])
    fields = foldy_lax.solve_linear_fl(scatterers, wave)
    assert np.allclose(fields[1], np.exp(1j * 2.0 * 0.3))


def test_zero_coefficients_give_identity_and_incident_field():
    scatterers = PointScattererSet.linear_set([[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]], 0.0)
    wave = IncidentWave.from_angle(5.0, 0.7, amplitude=1.0)
    assert np.array_equal(foldy_lax.assemble_foldy_lax_matrix(scatterers, 5.0), np.eye(3))
    assert np.allclose(foldy_lax.solve_linear_fl(scatterers, wave)[1], wave.field(scatterers.positions))


def test_two_scatterers_against_explicit_inverse():
    scatterers = PointScattererSet.linear_set([[0.0, 0.0], [1.0, 0.0]], 0.5)
    matrix = foldy_lax.assemble_foldy_lax_matrix(scatterers, 10.0)
    off = -0.5 * 0.25j * kernels.hankel1_0(10.0)
    assert np.isclose(matrix[0, 1], off) and np.isclose(matrix[1, 0], off)

    wave = IncidentWave.from_angle(10.0, 0.0, amplitude=1.0)
    rhs = wave.field(scatterers.positions)
    det = 1.0 - off * off
    expected = np.array([rhs[0] - off * rhs[1], rhs[1] - off * rhs[0]]) / det
    assert np.allclose(foldy_lax.solve_linear_fl(scatterers, wave)[1], expected, atol=1e-14)


def test_quadratic_with_zero_nonlinearity_decouples():
    scatterers = PointScattererSet.quadratic_set(PAIR, 0.5, 0.5, [0.0, 0.0])
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    fields = foldy_lax.solve_quadratic_fl(scatterers, wave)
    linear = foldy_lax.solve_linear_fl(scatterers.as_linear(), wave)
    assert np.allclose(fields[1], linear[1], atol=1e-14)
    assert np.all(fields[2] == 0)


def test_single_nonlinear_scatterer_has_no_generated_field():
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    for factory, higher, terms in ((PointScattererSet.quadratic_set, 2, 2), (PointScattererSet.cubic_set, 3, 3)):
        scatterers = factory([[1.0, 2.0]], 0.5, 0.5, [0.4] * terms)
        fields = foldy_lax.solve_fl(scatterers, wave)
        assert np.allclose(fields[1], wave.field(scatterers.positions))
        assert np.allclose(fields[higher], 0.0)


@pytest.mark.parametrize("factory,higher,terms", [
    (PointScattererSet.quadratic_set, 2, 2),
    (PointScattererSet.cubic_set, 3, 3),
])
def test_newton_matches_fixed_point(factory, higher, terms):
    scatterers = factory(PAIR, 0.5, 0.5, [0.4] * terms)
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    newton = foldy_lax.solve_fl(scatterers, wave)
    picard = foldy_lax.solve_fl_fixed_point(scatterers, wave, tolerance=1e-13)
    for harmonic in (1, higher):
        assert np.allclose(newton[harmonic], picard[harmonic], atol=1e-9, rtol=0)
    assert np.max(np.abs(picard[higher])) > 0


def test_nonlinear_solver_rejects_wrong_set():
    scatterers = PointScattererSet.cubic_set(PAIR, 0.5, 0.5, [0.4, 0.4, 0.4])
    with pytest.raises(UsageError):
        foldy_lax.solve_quadratic_fl(scatterers, IncidentWave.from_angle(2.0, 0.0))


def test_scattered_field():
    scatterers = PointScattererSet.linear_set([[0.0, 0.0]], 0.5)
    wave = IncidentWave.from_angle(3.0, 0.0, amplitude=1.0)
    fields = foldy_lax.solve_linear_fl(scatterers, wave)
    r = np.array([2.0, 1.0])
    assert np.isclose(foldy_lax.scattered_field_fl(scatterers, fields, r),
                      0.5 * fields[1][0] * kernels.green(3.0, r, [0.0, 0.0]))


def test_scattered_field_superposition():
    pair = PointScattererSet(np.array([[0.0, 0.0], [2.0, 0.0]]), linear=np.array([0.5, 0.0]))
    single = PointScattererSet.linear_set([[0.0, 0.0]], 0.5)
    wave = IncidentWave.from_angle(3.0, 0.4, amplitude=1.0)
    phi = np.array([0.7 - 0.2j, 1.1 + 0.5j])
    points = np.array([[5.0, 1.0], [-3.0, 4.0]])
    both = foldy_lax.scattered_field_fl(pair, foldy_lax.ExternalFields(pair, wave, {1: phi}), points)
    one = foldy_lax.scattered_field_fl(single, foldy_lax.ExternalFields(single, wave, {1: phi[:1]}), points)
    assert np.allclose(both, one)


def test_zero_fields_radiate_nothing():
    scatterers = PointScattererSet.linear_set([[0.0, 0.0], [1.0, 1.0]], 0.5)
    wave = IncidentWave.from_angle(3.0, 0.0)
    fields = foldy_lax.ExternalFields(scatterers, wave, {1: np.zeros(2, dtype=complex)})
    assert foldy_lax.scattered_field_fl(scatterers, fields, np.array([4.0, 4.0])) == 0


def test_born_limit_of_weak_scatterers():
    positions = [[0.0, 0.0], [1.3, 0.4], [-0.7, 2.1], [2.5, -1.8]]
    base = np.array([0.5, 0.2, 0.9, 0.4])
    epsilon = 1e-6
    wave = IncidentWave.from_angle(3.0, 0.6, amplitude=1.0)
    scatterers = PointScattererSet.linear_set(positions, epsilon * base)
    incident = wave.field(scatterers.positions)
    fields = foldy_lax.solve_linear_fl(scatterers, wave)
    first_order = foldy_lax.interaction_matrix(scatterers, 3.0) @ (base * incident)
    assert np.max(np.abs((fields[1] - incident) / epsilon - first_order)) <= 1e-4 * np.max(np.abs(first_order))


@pytest.mark.parametrize("factory,higher,terms", [
    (PointScattererSet.quadratic_set, 2, 2),
    (PointScattererSet.cubic_set, 3, 3),
])
def test_nonlinear_fields_satisfy_their_equations(factory, higher, terms):
    positions = [[-13.0, 0.0], [-14.0, 0.0], [3.0, 5.0], [6.0, -2.0]]
    scatterers = factory(positions, 0.5, 0.5, [0.4] * terms)
    wave = IncidentWave.from_angle(2.0, 0.0, amplitude=1.0)
    fields = foldy_lax.solve_fl(scatterers, wave)
    base = foldy_lax.interaction_matrix(scatterers, 2.0)
    generated = foldy_lax.interaction_matrix(scatterers, 2.0 * higher)
    first = fields[1] - wave.field(scatterers.positions) - base @ fields.strengths(1)
    second = fields[higher] - generated @ fields.strengths(higher)
    assert np.max(np.abs(first)) <= 1e-10
    assert np.max(np.abs(second)) <= 1e-10
    assert np.max(np.abs(fields[higher])) > 0
