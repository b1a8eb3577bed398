#!/usr/bin/env python3
"""
Tests for the Gaussian-gridding type-1 NUFFT
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import time

import numpy as np
import pytest

from scattering.nufft import NufftPlan, nufft1d_type1, nufft2d_type1
from scattering.oracles import direct_nufft1d, direct_nufft2d
from utils.exceptions import DomainError, ValidationError


def random_sources(rng, n):
    return rng.uniform(-np.pi, np.pi, n), rng.normal(size=n) + 1j * rng.normal(size=n)


def test_plan_parameters():
    plan = NufftPlan(512)
    assert plan.grid_size == 1024
    assert np.isclose(plan.tau, 4.0 * np.pi / 512 ** 2)
    assert plan.targets[0] == -256 and plan.targets[-1] == 255
    with pytest.raises(ValidationError):
        NufftPlan(0)


def test_constant_mode():
    assert np.allclose(nufft1d_type1(np.array([0.0]), np.array([1.0]), 16), 1.0, atol=1e-12)
    assert np.allclose(nufft2d_type1(np.array([0.0]), np.array([0.0]), np.array([1.0]), 16), 1.0, atol=1e-12)


def test_sources_on_the_grid_reproduce_the_dft():
    m = 64
    xi = 2.0 * np.pi * np.arange(m) / m - np.pi
    c = np.random.default_rng(1).normal(size=m) + 0j
    assert np.allclose(nufft1d_type1(xi, c, m), direct_nufft1d(xi, c, m), atol=1e-10 * np.sum(np.abs(c)))


def test_1d_accuracy_against_direct_sum():
    rng = np.random.default_rng(2)
    xi, c = random_sources(rng, 1000)
    error = np.max(np.abs(nufft1d_type1(xi, c, 512) - direct_nufft1d(xi, c, 512)))
    assert error <= 1e-10 * np.sum(np.abs(c))


def test_odd_output_size():
    rng = np.random.default_rng(3)
    xi, c = random_sources(rng, 200)
    error = np.max(np.abs(nufft1d_type1(xi, c, 101) - direct_nufft1d(xi, c, 101)))
    assert error <= 1e-10 * np.sum(np.abs(c))


def test_frequencies_at_the_interval_ends():
    xi = np.array([-np.pi, np.pi, np.pi * (1 + 1e-13)])
    c = np.ones(3, dtype=complex)
    assert np.allclose(nufft1d_type1(xi, c, 32), direct_nufft1d(xi, c, 32), atol=1e-9)


def test_frequency_out_of_range_raises():
    with pytest.raises(DomainError):
        nufft1d_type1(np.array([3.2]), np.array([1.0]), 8)
    with pytest.raises(DomainError):
        nufft2d_type1(np.array([0.0]), np.array([-3.3]), np.array([1.0]), 8)


def test_length_mismatch_raises():
    with pytest.raises(ValidationError):
        nufft1d_type1(np.zeros(3), np.zeros(2), 8)


def test_2d_separable_data_is_an_outer_product():
    rng = np.random.default_rng(4)
    a_xi, a_c = random_sources(rng, 30)
    b_xi, b_c = random_sources(rng, 40)
    xi = np.repeat(a_xi, 40)
    eta = np.tile(b_xi, 30)
    c = np.outer(a_c, b_c).ravel()
    expected = np.outer(nufft1d_type1(a_xi, a_c, 64), nufft1d_type1(b_xi, b_c, 64))
    assert np.max(np.abs(nufft2d_type1(xi, eta, c, 64) - expected)) <= 1e-10 * np.sum(np.abs(c))


def test_2d_spot_checks_against_direct_sum():
    rng = np.random.default_rng(5)
    xi, c = random_sources(rng, 10_000)
    eta = rng.uniform(-np.pi, np.pi, 10_000)
    picks = (rng.integers(0, 500, 16), rng.integers(0, 500, 16))
    fast = nufft2d_type1(xi, eta, c, 500)[picks]
    assert np.max(np.abs(fast - direct_nufft2d(xi, eta, c, 500, picks))) <= 1e-9 * np.sum(np.abs(c))


def test_small_2d_grid_matches_full_direct_sum():
    rng = np.random.default_rng(6)
    xi, c = random_sources(rng, 50)
    eta = rng.uniform(-np.pi, np.pi, 50)
    assert np.allclose(nufft2d_type1(xi, eta, c, 24), direct_nufft2d(xi, eta, c, 24),
                       atol=1e-10 * np.sum(np.abs(c)))


def test_result_does_not_depend_on_worker_count():
    rng = np.random.default_rng(7)
    xi, c = random_sources(rng, 10_000)
    assert np.array_equal(nufft1d_type1(xi, c, 256, threads=1), nufft1d_type1(xi, c, 256, threads=4))


@pytest.mark.slow
def test_cost_grows_like_k_log_k():
    rng = np.random.default_rng(8)
    seconds = {}
    for size in (2 ** 14, 2 ** 16, 2 ** 18):
        xi, c = random_sources(rng, size)
        nufft1d_type1(xi, c, size)
        start = time.perf_counter()
        nufft1d_type1(xi, c, size)
        seconds[size] = time.perf_counter() - start
    for size in (2 ** 14, 2 ** 16):
        assert seconds[4 * size] / seconds[size] <= 6.0


def test_transform_is_linear():
    rng = np.random.default_rng(9)
    xi, c = random_sources(rng, 2000)
    _, d = random_sources(rng, 2000)
    a, b = 0.7 - 1.2j, -2.5 + 0.3j
    combined = nufft1d_type1(xi, a * c + b * d, 256)
    separate = a * nufft1d_type1(xi, c, 256) + b * nufft1d_type1(xi, d, 256)
    scale = abs(a) * np.sum(np.abs(c)) + abs(b) * np.sum(np.abs(d))
    assert np.max(np.abs(combined - separate)) <= 1e-12 * scale


def test_real_symmetric_sources_give_hermitian_output():
    rng = np.random.default_rng(10)
    half = rng.uniform(0.0, np.pi, 500)
    xi = np.concatenate([half, -half])
    c = rng.normal(size=1000).astype(complex)
    m = 128
    f = nufft1d_type1(xi, c, m)
    x = np.arange(1, m // 2)
    assert np.max(np.abs(f[m // 2 - x] - np.conj(f[m // 2 + x]))) <= 1e-10 * np.sum(np.abs(c))
    assert abs(f[m // 2].imag) <= 1e-10 * np.sum(np.abs(c))

    eta = np.concatenate([rng.uniform(-np.pi, np.pi, 500)] * 2)
    eta[500:] *= -1.0
    g = nufft2d_type1(xi, eta, c, m)
    flipped = g[m // 2 - x][:, m // 2 - x]
    assert np.max(np.abs(flipped - np.conj(g[m // 2 + x][:, m // 2 + x]))) <= 1e-10 * np.sum(np.abs(c))
