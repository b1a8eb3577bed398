"""
Experiment documents for ScatterLab.

An experiment is a versioned JSON document describing the scene, the
direction grid, the image domain and solver options. Every field is checked
before any computation starts; all problems are reported together.
"""
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from config.settings import settings
from utils.common import safe_json_load
from utils.exceptions import ScatteringError, ValidationError

SCHEMA_VERSION = 1
OBSTACLE_KINDS = ("five-leaf", "circle", "custom")
PLACEMENTS = ("annulus", "fixed", "aligned")
NONLINEARITIES = ("linear", "quadratic", "cubic")
MODALITIES = ("auto", "plain", "gfl_minus_fl")
SOLVER_OPTIONS = ("newton_tolerance", "step_tolerance", "max_iterations", "trust_radius")


@dataclass(frozen=True)
class ObstacleSpec:
    kind: str = "five-leaf"
    center: Tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    radius: float = 1.0
    cos_coefficients: Tuple[float, ...] = ()
    sin_coefficients: Tuple[float, ...] = ()


@dataclass(frozen=True)
class ScattererSpec:
    nonlinearity: str = "linear"
    placement: str = "annulus"
    count: int = 0
    inner_radius: float = 10.0
    outer_radius: float = 11.0
    positions: Tuple[Tuple[float, float], ...] = ()
    radii: Tuple[float, ...] = ()
    coefficients: Dict[str, Any] = field(default_factory=dict)
    susceptibilities: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment document."""
    name: str
    wavenumber: float
    directions: int
    boundary_points: int = 0
    coupling: Optional[float] = None
    amplitude: float = 1.0
    seed: int = 0
    harmonics: Optional[Tuple[int, ...]] = None
    modality: str = "auto"
    half_width: float = field(default_factory=lambda: settings.imaging.half_width)
    samples: int = field(default_factory=lambda: settings.imaging.samples)
    obstacles: Tuple[ObstacleSpec, ...] = ()
    scatterers: Optional[ScattererSpec] = None
    solver: Dict[str, float] = field(default_factory=dict)
    output_directory: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Parse and validate an experiment document.

        Raises:
            ValidationError: With one ``field.path: message`` entry per problem
        """
        errors: List[str] = []
        if not isinstance(data, dict):
            raise ValidationError("experiment document must be a JSON object")

        def need(path: str, ok: bool, message: str) -> bool:
            if not ok:
                errors.append(f"{path}: {message}")
            return ok

        def number(source: Dict, key: str, path: str, default=None, positive=False, integer=False):
            value = source.get(key, default)
            if value is None:
                return None
            kind = int if integer else (int, float)
            if isinstance(value, bool) or not isinstance(value, kind):
                errors.append(f"{path}: expected {'an integer' if integer else 'a number'}, got {value!r}")
                return default
            if positive and not value > 0:
                errors.append(f"{path}: must be positive, got {value}")
            return value

        need("schema_version", data.get("schema_version") == SCHEMA_VERSION,
             f"unsupported schema version {data.get('schema_version')!r}, expected {SCHEMA_VERSION}")
        name = data.get("name", "experiment")
        need("name", isinstance(name, str) and bool(name), "must be a non-empty string")

        wavenumber = number(data, "wavenumber", "wavenumber", positive=True)
        need("wavenumber", wavenumber is not None, "is required")
        directions = number(data, "directions", "directions", integer=True)
        if need("directions", directions is not None, "is required"):
            need("directions", directions >= 1, f"must be at least 1, got {directions}")
        boundary_points = number(data, "boundary_points", "boundary_points", 0, integer=True)
        coupling = number(data, "coupling", "coupling", None, positive=True)
        amplitude = number(data, "amplitude", "amplitude", 1.0, positive=True)
        seed = number(data, "seed", "seed", 0, integer=True)
        need("seed", seed is None or seed >= 0, f"must be non-negative, got {seed}")

        harmonics = data.get("harmonics")
        if harmonics is not None:
            if need("harmonics", isinstance(harmonics, list)
                    and all(isinstance(h, int) and h >= 1 for h in harmonics), "must be a list of positive integers"):
                harmonics = tuple(harmonics)
            else:
                harmonics = None

        modality = data.get("modality", "auto")
        need("modality", modality in MODALITIES, f"must be one of {', '.join(MODALITIES)}, got {modality!r}")

        imaging = data.get("imaging", {}) or {}
        half_width = number(imaging, "half_width", "imaging.half_width", settings.imaging.half_width, positive=True)
        samples = number(imaging, "samples", "imaging.samples", settings.imaging.samples, integer=True)
        need("imaging.samples", samples is None or samples >= 4, f"must be at least 4, got {samples}")

        obstacles = []
        raw_obstacles = data.get("obstacles", []) or []
        if need("obstacles", isinstance(raw_obstacles, list), "must be a list"):
            for index, item in enumerate(raw_obstacles):
                path = f"obstacles[{index}]"
                if not need(path, isinstance(item, dict), "must be an object"):
                    continue
                kind = item.get("kind", "five-leaf")
                need(f"{path}.kind", kind in OBSTACLE_KINDS, f"must be one of {', '.join(OBSTACLE_KINDS)}")
                center = item.get("center", [0.0, 0.0])
                if not need(f"{path}.center", isinstance(center, list) and len(center) == 2, "must be [x, y]"):
                    center = [0.0, 0.0]
                rotation = number(item, "rotation", f"{path}.rotation", 0.0)
                radius = number(item, "radius", f"{path}.radius", 1.0, positive=True)
                cos_c = tuple(item.get("cos_coefficients", ()))
                sin_c = tuple(item.get("sin_coefficients", ()))
                if kind == "custom":
                    need(f"{path}.cos_coefficients", len(cos_c) >= 1, "custom curves need at least a_0")
                obstacles.append(ObstacleSpec(kind, (float(center[0]), float(center[1])), rotation,
                                              radius, cos_c, sin_c))
        if obstacles:
            per = boundary_points // len(obstacles) if boundary_points else 0
            need("boundary_points",
                 boundary_points % len(obstacles) == 0 and per >= 16 and per % 2 == 0,
                 f"must split into an even count of at least 16 per obstacle, got {boundary_points}")

        scatterers = None
        raw = data.get("scatterers")
        if raw is not None and need("scatterers", isinstance(raw, dict), "must be an object or null"):
            scatterers = cls._parse_scatterers(raw, errors, number)

        has_points = scatterers is not None and (
            scatterers.count > 0 or len(scatterers.positions) > 0 or len(scatterers.radii) > 0
        )
        need("scene", bool(obstacles) or has_points, "empty scene: no obstacles and no point scatterers")

        solver = data.get("solver", {}) or {}
        if need("solver", isinstance(solver, dict), "must be an object"):
            for key in solver:
                need(f"solver.{key}", key in SOLVER_OPTIONS, f"unknown option, expected one of {', '.join(SOLVER_OPTIONS)}")
            for key in SOLVER_OPTIONS:
                number(solver, key, f"solver.{key}", None, positive=True, integer=key == "max_iterations")
            solver = {k: v for k, v in solver.items() if k in SOLVER_OPTIONS}
        else:
            solver = {}

        output_directory = data.get("output_directory")
        need("output_directory", output_directory is None or isinstance(output_directory, str),
             "must be a string or null")

        if errors:
            raise ValidationError(errors=errors)

        return cls(
            name=name, wavenumber=float(wavenumber), directions=directions,
            boundary_points=boundary_points, coupling=coupling, amplitude=float(amplitude),
            seed=seed, harmonics=harmonics, modality=modality,
            half_width=float(half_width), samples=samples, obstacles=tuple(obstacles),
            scatterers=scatterers, solver=dict(solver), output_directory=output_directory,
        )

    @staticmethod
    def _parse_scatterers(raw: Dict[str, Any], errors: List[str], number) -> ScattererSpec:
        nonlinearity = raw.get("nonlinearity", "linear")
        if nonlinearity not in NONLINEARITIES:
            errors.append(f"scatterers.nonlinearity: must be one of {', '.join(NONLINEARITIES)}")
        placement = raw.get("placement", "annulus")
        if placement not in PLACEMENTS:
            errors.append(f"scatterers.placement: must be one of {', '.join(PLACEMENTS)}")

        count = number(raw, "count", "scatterers.count", 0, integer=True)
        inner = number(raw, "inner_radius", "scatterers.inner_radius", 10.0)
        outer = number(raw, "outer_radius", "scatterers.outer_radius", 11.0)
        positions = tuple(tuple(p) for p in raw.get("positions", []) or [])
        radii = tuple(raw.get("radii", []) or [])

        if placement == "annulus":
            if count is not None and count < 1:
                errors.append("scatterers.count: annulus placement needs at least one scatterer")
            if inner is not None and outer is not None and not 0 <= inner <= outer:
                errors.append(f"scatterers.inner_radius: must satisfy 0 <= inner <= outer, got [{inner}, {outer}]")
        elif placement == "fixed":
            if not positions or any(len(p) != 2 for p in positions):
                errors.append("scatterers.positions: fixed placement needs a list of [x, y] pairs")
        elif placement == "aligned":
            if not radii or any(not isinstance(r, (int, float)) or r <= 0 for r in radii):
                errors.append("scatterers.radii: aligned placement needs positive radii")
            elif any(b <= a for a, b in zip(radii, radii[1:])):
                errors.append("scatterers.radii: must be strictly increasing")

        coefficients = raw.get("coefficients", {}) or {}
        susceptibilities = raw.get("susceptibilities", {}) or {}
        if not coefficients and not susceptibilities:
            errors.append("scatterers.coefficients: give coefficients or susceptibilities")
        if coefficients and susceptibilities:
            errors.append("scatterers.susceptibilities: give either coefficients or susceptibilities, not both")
        for key in coefficients:
            if key not in ("linear", "harmonic_linear", "nonlinear"):
                errors.append(f"scatterers.coefficients.{key}: unknown coefficient group")

        return ScattererSpec(
            nonlinearity=nonlinearity, placement=placement, count=count or 0,
            inner_radius=float(inner if inner is not None else 10.0),
            outer_radius=float(outer if outer is not None else 11.0),
            positions=positions, radii=tuple(float(r) for r in radii if isinstance(r, (int, float))),
            coefficients=dict(coefficients), susceptibilities=dict(susceptibilities),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        """Read and validate an experiment file."""
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config: file {path} does not exist")
        data = safe_json_load(path)
        if data is None:
            raise ValidationError(f"config: {path} is not valid JSON")
        return cls.from_dict(data)

    def with_overrides(self, seed: Optional[int] = None,
                       output_directory: Optional[str] = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            if seed < 0:
                raise ValidationError(f"seed: must be non-negative, got {seed}")
            changes["seed"] = seed
        if output_directory is not None:
            changes["output_directory"] = output_directory
        return replace(self, **changes)

    def build_scene(self):
        """
        Construct the Scene described by this document.

        Raises:
            ValidationError: When the geometry violates a scene invariant
        """
        from scattering.coefficients import SusceptibilitySet, coefficients_from_susceptibilities
        from scattering.scene import (
            HarmonicSet, Nonlinearity, ParametricCurve, PointScattererSet, Scene,
            place_annulus_point_scatterers
        )

        curves = []
        for spec in self.obstacles:
            if spec.kind == "five-leaf":
                curves.append(ParametricCurve.five_leaf(spec.center, spec.rotation))
            elif spec.kind == "circle":
                curves.append(ParametricCurve.circle(spec.radius, spec.center, spec.rotation))
            else:
                curves.append(ParametricCurve("custom", spec.center, spec.rotation,
                                              spec.cos_coefficients, spec.sin_coefficients))

        scatterers, moving = None, None
        spec = self.scatterers
        if spec is not None:
            nonlinearity = Nonlinearity(spec.nonlinearity)
            if spec.placement == "annulus":
                positions = place_annulus_point_scatterers(spec.count, spec.inner_radius,
                                                           spec.outer_radius, self.seed)
            elif spec.placement == "fixed":
                positions = [list(p) for p in spec.positions]
            else:
                moving = spec.radii
                positions = [[r, 0.0] for r in spec.radii]

            if spec.susceptibilities:
                count = len(positions)
                coefficients = coefficients_from_susceptibilities(
                    SusceptibilitySet.from_dict(count, spec.susceptibilities),
                    HarmonicSet.for_nonlinearity(self.wavenumber, nonlinearity), nonlinearity,
                )
                scatterers = coefficients.scatterers(positions)
            else:
                c = spec.coefficients
                scatterers = PointScattererSet(
                    positions, nonlinearity, linear=c.get("linear", 0.0),
                    harmonic_linear=c.get("harmonic_linear"), nonlinear=c.get("nonlinear"),
                )

        try:
            return Scene(tuple(curves), scatterers, self.boundary_points, moving)
        except ValidationError:
            raise
        except ScatteringError as e:
            raise ValidationError(f"scene: {e}") from e

    @property
    def solver_options(self) -> Dict[str, float]:
        return dict(self.solver)

    def summary(self) -> Dict[str, Any]:
        """Plain-data view stored next to every run."""
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "wavenumber": self.wavenumber,
            "directions": self.directions,
            "boundary_points": self.boundary_points,
            "coupling": self.coupling,
            "amplitude": self.amplitude,
            "seed": self.seed,
            "harmonics": list(self.harmonics) if self.harmonics else None,
            "modality": self.modality,
            "imaging": {"half_width": self.half_width, "samples": self.samples},
            "obstacles": [spec.__dict__ for spec in self.obstacles],
            "scatterers": None if self.scatterers is None else self.scatterers.__dict__,
            "solver": self.solver,
        }
