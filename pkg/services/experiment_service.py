"""
Forward and imaging pipelines driven by an experiment document.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config.experiment import ExperimentConfig
from config.settings import settings
from scattering.coupled_solver import CoupledSolver
from scattering.farfield import DirectionGrid, Modality, ResponseMatrix, build_response_matrices
from scattering.imaging import (
    ImageDomain, ImageGrid, default_modality, imaging_nufft
)
from scattering.scene import Scene
from services.artifact_service import ArtifactService
from utils.common import timed
from utils.exceptions import ArtifactError, UsageError
from utils.logging import logger

SOLVER_OPTION_NAMES = {
    "newton_tolerance": "tolerance",
    "step_tolerance": "step_tolerance",
    "max_iterations": "max_iterations",
    "trust_radius": "trust_radius",
}


@dataclass
class ForwardResult:
    """Response matrices of a forward run and where they were written."""
    matrices: Dict[int, ResponseMatrix]
    files: Dict[int, Path]
    solution_summary: Dict
    timings: Dict[int, Dict[str, float]] = field(default_factory=dict)


@dataclass
class ImageResult:
    """Images of an imaging run and their files."""
    images: Dict[int, ImageGrid]
    files: Dict[int, Dict[str, Path]]
    timings: Dict[int, Dict[str, float]] = field(default_factory=dict)


class ExperimentService:
    """Runs one experiment: scene construction, response matrices and images."""

    def __init__(self, config: ExperimentConfig, output_directory: Optional[str] = None, threads: int = 0):
        self.config = config
        self.threads = threads
        out = output_directory or config.output_directory or str(Path(settings.app.output_directory) / config.name)
        self.artifacts = ArtifactService(out)
        self.scene: Scene = config.build_scene()
        self.grid = DirectionGrid.square(config.directions)
        self.domain = ImageDomain(config.half_width, config.samples)
        logger.info(
            f"Experiment '{config.name}': {len(self.scene.obstacles)} obstacle(s), "
            f"{self.scene.scatterers.count if self.scene.has_scatterers else 0} "
            f"{self.scene.nonlinearity.value} point scatterer(s), kappa={config.wavenumber:g}"
        )

    @property
    def harmonics(self) -> Sequence[int]:
        available = self.scene.nonlinearity.harmonics
        requested = self.config.harmonics or available
        for harmonic in requested:
            if harmonic not in available:
                raise UsageError(f"harmonic {harmonic} is not generated by this scene (available {available})")
        return tuple(requested)

    def modalities(self) -> Dict[int, Modality]:
        if self.config.modality == "auto":
            return {h: default_modality(self.scene, h) for h in self.harmonics}
        return {h: Modality(self.config.modality) if h > 1 else Modality.PLAIN for h in self.harmonics}

    def solver_options(self) -> Dict[str, float]:
        return {SOLVER_OPTION_NAMES[key]: value for key, value in self.config.solver.items()}

    def _solution_summary(self, solver: CoupledSolver) -> Dict:
        """Residuals and field norms of the solve for transmitter 0."""
        wave = self.grid.incident_wave(self.config.wavenumber, 0, self.config.amplitude)
        solution = solver.solve(wave, self.scene.scatterers_for(self.grid.incidence_angles[0]),
                                **self.solver_options())
        summary = {
            "transmitter_angle": float(self.grid.incidence_angles[0]),
            "iterations": solution.iterations,
            "residuals": dict(solution.residuals),
            "harmonics": {},
        }
        for harmonic in solution.harmonics:
            entry = {}
            if harmonic in solution.fields and solution.fields[harmonic].size:
                entry["max_external_field"] = float(np.max(np.abs(solution.fields[harmonic])))
            if harmonic in solution.densities:
                entry["max_boundary_density"] = float(np.max(np.abs(solution.densities[harmonic].values)))
            summary["harmonics"][str(harmonic)] = entry
        return summary

    def _metadata(self) -> Dict:
        scatterers = self.scene.scatterers
        return {
            "experiment": self.config.summary(),
            "seed": self.config.seed,
            "scatterer_positions": None if scatterers is None or self.scene.is_moving else scatterers.positions,
        }

    def run_forward(self) -> ForwardResult:
        """
        Build and store the response matrix of every requested harmonic.

        Returns:
            ForwardResult with matrices, files and per-harmonic timings
        """
        config = self.config
        solver = CoupledSolver(self.scene, config.wavenumber, config.coupling, self.threads)
        matrices = build_response_matrices(
            self.scene, self.grid, config.wavenumber, self.harmonics, self.modalities(),
            config.coupling, self.threads, solver=solver, amplitude=config.amplitude,
            solver_options=self.solver_options(),
        )
        files = {
            h: self.artifacts.write_response_matrix(m.values, m.wavenumber, ArtifactService.matrix_name(h))
            for h, m in matrices.items()
        }
        summary = self._solution_summary(solver)
        timings = {h: dict(m.timings) for h, m in matrices.items()}

        self.artifacts.write_summary({
            **self._metadata(),
            "solution": summary,
            "matrices": {str(h): {"file": files[h].name, "wavenumber": m.wavenumber,
                                  "modality": m.modality.value, "shape": list(m.shape)}
                         for h, m in matrices.items()},
        }, "forward_summary.json")
        self.artifacts.write_summary({str(h): t for h, t in timings.items()}, "forward_timings.json")
        return ForwardResult(matrices, files, summary, timings)

    def load_matrices(self, paths: List[str]) -> Dict[int, ResponseMatrix]:
        """
        Read stored response matrices and check them against the direction grid.

        The harmonic of each file is the ratio of its recorded wavenumber to the
        experiment's base wavenumber.

        Raises:
            ArtifactError: On dimension or wavenumber mismatch
        """
        matrices = {}
        for path in paths:
            values, wavenumber = ArtifactService.read_response_matrix(path)
            if values.shape != (self.grid.observations, self.grid.incidences):
                raise ArtifactError(
                    f"{path} holds a {values.shape[0]}x{values.shape[1]} matrix, the experiment uses "
                    f"{self.grid.observations}x{self.grid.incidences} directions"
                )
            # header stores kappa as float32
            ratio = wavenumber / self.config.wavenumber
            harmonic = int(round(ratio))
            if harmonic < 1 or abs(ratio - harmonic) > 1e-5:
                raise ArtifactError(f"{path} records kappa={wavenumber:g}, not a harmonic of {self.config.wavenumber:g}")
            matrices[harmonic] = ResponseMatrix(values, harmonic * self.config.wavenumber, self.grid, harmonic)
        return matrices

    def run_image(self, matrix_paths: Optional[List[str]] = None,
                  forward: Optional[ForwardResult] = None) -> ImageResult:
        """
        Image every harmonic from stored matrices, a finished forward run or a fresh one.

        Returns:
            ImageResult with one image per harmonic
        """
        timings: Dict[int, Dict[str, float]] = {}
        if matrix_paths:
            matrices = self.load_matrices(matrix_paths)
        else:
            forward = forward or self.run_forward()
            matrices = forward.matrices
            timings = {h: dict(t) for h, t in forward.timings.items()}

        images, files = {}, {}
        for harmonic in sorted(matrices):
            stage = timings.setdefault(harmonic, {})
            stage.pop("nufft", None)
            with timed(stage, "nufft"):
                images[harmonic] = imaging_nufft(matrices[harmonic], self.domain, self.threads)
            files[harmonic] = self.artifacts.write_image(images[harmonic], f"image_h{harmonic}")

        self.artifacts.write_summary({
            **self._metadata(),
            "images": {str(h): {"wavenumber": img.wavenumber, "samples": self.domain.samples,
                                "half_width": self.domain.half_width,
                                "files": {k: p.name for k, p in files[h].items()}}
                       for h, img in images.items()},
        }, "image_summary.json")
        self.artifacts.write_summary({str(h): t for h, t in timings.items()}, "image_timings.json")
        return ImageResult(images, files, timings)

    def timing_table(self, timings: Dict[int, Dict[str, float]]) -> pd.DataFrame:
        return ArtifactService.timing_table(timings)
