#!/usr/bin/env python3
"""
Tests for experiment documents, presets and settings
"""

import sys
import os

# Add the project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import json
from pathlib import Path

import numpy as np
import pytest

from config.experiment import ExperimentConfig
from config.settings import settings
from scattering.scene import Nonlinearity
from services.validation_service import load_preset
from utils.exceptions import ValidationError

PRESETS = sorted(p.stem for p in Path(settings.app.presets_directory).glob("*.json"))


def document(**changes):
    data = {
        "schema_version": 1,
        "name": "small",
        "wavenumber": 2.0,
        "directions": 8,
        "boundary_points": 64,
        "imaging": {"half_width": 2.0, "samples": 16},
        "obstacles": [{"kind": "circle", "radius": 1.0}],
        "scatterers": {"placement": "fixed", "positions": [[3.0, 0.0]], "coefficients": {"linear": 0.5}},
    }
    data.update(changes)
    return data


def test_valid_document():
    config = ExperimentConfig.from_dict(document())
    assert config.wavenumber == 2.0 and config.samples == 16
    scene = config.build_scene()
    assert scene.has_obstacles and scene.scatterers.count == 1
    assert scene.nonlinearity is Nonlinearity.LINEAR


def test_all_problems_are_reported_together():
    data = document(wavenumber=-1.0, modality="sideways", schema_version=2)
    del data["directions"]
    with pytest.raises(ValidationError) as info:
        ExperimentConfig.from_dict(data)
    paths = [error.split(":")[0] for error in info.value.errors]
    assert {"wavenumber", "directions", "modality", "schema_version"} <= set(paths)


def test_empty_scene_is_rejected():
    with pytest.raises(ValidationError) as info:
        ExperimentConfig.from_dict(document(obstacles=[], scatterers=None))
    assert any(error.startswith("scene:") for error in info.value.errors)


def test_boundary_points_must_split_evenly():
    obstacles = [{"kind": "five-leaf", "center": [-4.0, 0.0]}, {"kind": "five-leaf", "center": [4.0, 0.0]}]
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(document(obstacles=obstacles, boundary_points=66))
    assert ExperimentConfig.from_dict(document(obstacles=obstacles, boundary_points=64)).build_scene().has_obstacles


def test_scatterer_rules():
    bad_radii = {"nonlinearity": "quadratic", "placement": "aligned", "radii": [14.0, 13.0],
                 "coefficients": {"linear": 0.5}}
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(document(scatterers=bad_radii))
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(document(scatterers={"placement": "fixed", "positions": [[1.0, 2.0]]}))
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(document(solver={"tolerance": 1e-3}))
    coincident = {"placement": "fixed", "positions": [[3.0, 0.0], [3.0, 0.0]], "coefficients": {"linear": 0.5}}
    with pytest.raises(ValidationError):
        ExperimentConfig.from_dict(document(scatterers=coincident)).build_scene()


def test_susceptibilities_build_coefficients():
    scatterers = {"nonlinearity": "quadratic", "placement": "fixed", "positions": [[3.0, 0.0], [5.0, 0.0]],
                  "susceptibilities": {"1": 0.01, "2": 0.01, "2,-1": 0.01, "1,1": 0.0}}
    scene = ExperimentConfig.from_dict(document(scatterers=scatterers)).build_scene()
    assert np.allclose(scene.scatterers.linear, 4.0 * np.pi * 4.0 * 0.01)
    assert np.allclose(scene.scatterers.nonlinear[:, 0], 8.0 * np.pi * 4.0 * 0.01)


def test_seed_override():
    config = ExperimentConfig.from_dict(document())
    assert config.with_overrides(seed=7).seed == 7
    with pytest.raises(ValidationError):
        config.with_overrides(seed=-1)


def test_load_errors(tmp_path):
    with pytest.raises(ValidationError):
        ExperimentConfig.load(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    with pytest.raises(ValidationError):
        ExperimentConfig.load(broken)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(document()))
    assert ExperimentConfig.load(good).name == "small"


def test_shipped_presets():
    assert {"example1", "example2", "example3", "example3_fixed", "example4", "example5", "example6"} <= set(PRESETS)
    for name in PRESETS:
        config = load_preset(name)
        scene = config.build_scene()
        highest = max(scene.nonlinearity.harmonics)
        needed = int(np.ceil(4.0 * highest * config.wavenumber * config.half_width / np.pi - 1e-9))
        assert config.samples >= needed, name
        assert scene.has_obstacles


def test_moving_presets_are_aligned():
    scene = load_preset("example3").build_scene()
    assert scene.is_moving
    assert np.allclose(scene.scatterers_for(np.pi / 2).positions, [[0.0, 13.0], [0.0, 14.0]], atol=1e-12)
    fixed = load_preset("example3_fixed").build_scene()
    assert not fixed.is_moving


def test_annulus_placement_is_reproducible():
    first = load_preset("example1").build_scene().scatterers.positions
    second = load_preset("example1").build_scene().scatterers.positions
    assert np.array_equal(first, second)
    radii = np.hypot(first[:, 0], first[:, 1])
    assert first.shape == (1000, 2) and radii.min() >= 10.0 and radii.max() <= 11.0


def test_settings_validate():
    settings.validate()
    assert settings.worker_count(3) == 3
    assert settings.worker_count(0) >= 1
