#!/usr/bin/env python3
"""
Tests for mapping susceptibilities onto scattering coefficients
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from scattering.coefficients import SusceptibilitySet, coefficients_from_susceptibilities
from scattering.scene import HarmonicSet, Nonlinearity
from utils.exceptions import ValidationError


def test_linear_coefficient_from_first_order_susceptibility():
    kappa = 3.0
    s = SusceptibilitySet(2).set([1], 1.0 / (4.0 * np.pi * kappa ** 2))
    coefficients = coefficients_from_susceptibilities(s, HarmonicSet(kappa), Nonlinearity.LINEAR)
    assert np.allclose(coefficients.linear, 1.0)
    assert coefficients.nonlinear is None


def test_quadratic_coefficients():
    s = SusceptibilitySet.from_dict(1, {"1": 0.0, "2": 0.0, "2,-1": 0.01, "1,1": 0.0})
    harmonics = HarmonicSet.for_nonlinearity(2.0, Nonlinearity.QUADRATIC)
    coefficients = coefficients_from_susceptibilities(s, harmonics, "quadratic")
    assert coefficients.nonlinear.shape == (1, 2)
    assert coefficients.nonlinear[0, 0] == pytest.approx(1.0053096491487339)
    assert coefficients.nonlinear[0, 1] == 0.0


def test_zero_second_order_susceptibility_gives_linear_scatterers():
    s = SusceptibilitySet.from_dict(2, {"1": 0.02, "2": 0.02, "2,-1": 0.0, "1,1": 0.0})
    coefficients = coefficients_from_susceptibilities(s, HarmonicSet(1.5, (1, 2)), Nonlinearity.QUADRATIC)
    assert np.all(coefficients.nonlinear == 0)
    scatterers = coefficients.scatterers(np.array([[0.0, 0.0], [2.0, 0.0]]))
    assert scatterers.nonlinearity is Nonlinearity.QUADRATIC
    assert np.allclose(scatterers.harmonic_linear, 4.0 * np.pi * 3.0 ** 2 * 0.02)


def test_linear_coefficients_scale_with_squared_wavenumber():
    s = SusceptibilitySet(3).set([1], [0.1, 0.2, 0.3]).set([3], [0.1, 0.2, 0.3])
    s.set([1, 1, -1], 0.0).set([3, -1, -1], 0.0).set([1, 1, 1], 0.0)
    coefficients = coefficients_from_susceptibilities(s, HarmonicSet(2.0, (1, 3)), Nonlinearity.CUBIC)
    assert np.allclose(coefficients.harmonic_linear / coefficients.linear, 9.0)
    assert coefficients.nonlinear.shape == (3, 3)


def test_cubic_columns():
    s = SusceptibilitySet.from_dict(1, {"1": 0, "3": 0, "1,1,-1": 1.0, "3,-1,-1": 2.0, "1,1,1": 3.0})
    coefficients = coefficients_from_susceptibilities(s, HarmonicSet(1.0, (1, 3)), "cubic")
    assert np.allclose(coefficients.nonlinear[0], [12.0 * np.pi, 24.0 * np.pi, 4.0 * np.pi * 9.0 * 3.0])


def test_keys_ignore_order():
    s = SusceptibilitySet(1).set([-1, 2], 0.5)
    assert s.has(2, -1)
    assert s.get(2, -1)[0] == 0.5


def test_missing_and_malformed_susceptibilities():
    with pytest.raises(ValidationError):
        coefficients_from_susceptibilities(SusceptibilitySet(1), HarmonicSet(1.0), Nonlinearity.LINEAR)
    with pytest.raises(ValidationError):
        SusceptibilitySet.from_dict(1, {"a,b": 1.0})
    with pytest.raises(ValidationError):
        SusceptibilitySet.from_dict(1, {"1,1,1,1": 1.0})
    with pytest.raises(ValidationError):
        SusceptibilitySet(2).set([1], [1.0, 2.0, 3.0])
