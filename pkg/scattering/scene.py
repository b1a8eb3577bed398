"""
Physical configuration of a scattering experiment.

Extended obstacles are star-shaped closed curves with a trigonometric radial
function, point scatterers carry their (non)linear scattering coefficients and
the incident field is a plane wave. Every type here is immutable once built.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from config.settings import settings
from utils.exceptions import DegenerateCurveError, ValidationError

ArrayLike = Union[float, Sequence[float], np.ndarray]

FIVE_LEAF_COEFFICIENTS = (2.0, 0.0, 0.0, 0.0, 0.0, 0.5)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def rotate(vectors: np.ndarray, angle: float) -> np.ndarray:
    """Rotate row vectors counter-clockwise by ``angle``, elementwise."""
    c, s = np.cos(angle), np.sin(angle)
    x, y = vectors[..., 0], vectors[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


class CurveKind(str, Enum):
    """Supported obstacle shapes."""
    FIVE_LEAF = "five-leaf"
    CIRCLE = "circle"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ParametricCurve:
    """Star-shaped curve x(t) = c + R(rotation) r(t) (cos t, sin t).

    ``cos_coefficients`` holds a_0, a_1, ... and ``sin_coefficients`` holds
    b_1, b_2, ... of r(t) = a_0 + sum_m (a_m cos mt + b_m sin mt).
    """
    kind: CurveKind = CurveKind.CUSTOM
    center: Tuple[float, float] = (0.0, 0.0)
    rotation: float = 0.0
    cos_coefficients: Tuple[float, ...] = (1.0,)
    sin_coefficients: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "rotation", float(self.rotation))
        object.__setattr__(self, "cos_coefficients", tuple(float(a) for a in self.cos_coefficients))
        object.__setattr__(self, "sin_coefficients", tuple(float(b) for b in self.sin_coefficients))
        if not self.cos_coefficients:
            raise ValidationError("curve needs at least the constant coefficient a_0")

    @classmethod
    def five_leaf(cls, center=(0.0, 0.0), rotation: float = 0.0) -> "ParametricCurve":
        """The curve r(t) = 2 + 0.5 cos(5t)."""
        return cls(CurveKind.FIVE_LEAF, center, rotation, FIVE_LEAF_COEFFICIENTS, ())

    @classmethod
    def circle(cls, radius: float = 1.0, center=(0.0, 0.0), rotation: float = 0.0) -> "ParametricCurve":
        return cls(CurveKind.CIRCLE, center, rotation, (float(radius),), ())

    @property
    def radius(self) -> float:
        """Largest distance from the center, bounded by the coefficient sum."""
        return float(abs(self.cos_coefficients[0])
                     + np.sum(np.abs(self.cos_coefficients[1:]))
                     + np.sum(np.abs(self.sin_coefficients)))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def _coefficient_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        size = max(len(self.cos_coefficients), len(self.sin_coefficients) + 1)
        a = np.zeros(size)
        b = np.zeros(size)
        a[:len(self.cos_coefficients)] = self.cos_coefficients
        b[1:len(self.sin_coefficients) + 1] = self.sin_coefficients
        return a, b, np.arange(size, dtype=float)

    def radial(self, t: ArrayLike, derivative: int = 0) -> np.ndarray:
        """r(t) or its first or second derivative."""
        a, b, orders = self._coefficient_arrays()
        phase = np.multiply.outer(np.asarray(t, dtype=float), orders)
        c, s = np.cos(phase), np.sin(phase)
        if derivative == 0:
            return np.sum(c * a + s * b, axis=-1)
        if derivative == 1:
            return np.sum(orders * (c * b - s * a), axis=-1)
        if derivative == 2:
            return -np.sum(orders ** 2 * (c * a + s * b), axis=-1)
        raise ValueError(f"unsupported derivative order {derivative}")

    def _local(self, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = np.asarray(t, dtype=float)
        r, dr, ddr = self.radial(t), self.radial(t, 1), self.radial(t, 2)
        radial_dir = np.stack([np.cos(t), np.sin(t)], axis=-1)
        tangent_dir = np.stack([-np.sin(t), np.cos(t)], axis=-1)
        q = r[..., None] * radial_dir
        dq = dr[..., None] * radial_dir + r[..., None] * tangent_dir
        ddq = (ddr - r)[..., None] * radial_dir + 2.0 * dr[..., None] * tangent_dir
        return q, dq, ddq

    def position(self, t: ArrayLike) -> np.ndarray:
        q, _, _ = self._local(t)
        return np.asarray(self.center) + rotate(q, self.rotation)

    def derivatives(self, t: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Position, first and second derivative in the global frame."""
        q, dq, ddq = self._local(t)
        return (np.asarray(self.center) + rotate(q, self.rotation),
                rotate(dq, self.rotation), rotate(ddq, self.rotation))

    def contains(self, points: np.ndarray, tolerance: float = 0.0) -> np.ndarray:
        """True for points inside or on the curve."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        local = rotate(points - np.asarray(self.center), -self.rotation)
        angle = np.arctan2(local[:, 1], local[:, 0])
        return np.hypot(local[:, 0], local[:, 1]) <= self.radial(angle) + tolerance


@dataclass(frozen=True, eq=False)
class BoundaryDiscretization:
    """Uniform parameter sampling of one obstacle boundary."""
    curve: ParametricCurve
    t: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    speed: np.ndarray
    tangent: np.ndarray
    second: np.ndarray

    @property
    def count(self) -> int:
        return int(self.t.shape[0])

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights |x'(t_i)| 2 pi / n."""
        return _frozen(self.speed * (2.0 * np.pi / self.count))

    @property
    def arclength(self) -> float:
        return float(np.sum(self.weights))

    @property
    def spacing(self) -> float:
        """Mean distance between neighbouring nodes."""
        return self.arclength / self.count

    def distance_to(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the nearest boundary node."""
        distances, _ = cKDTree(self.points).query(np.atleast_2d(points))
        return distances


def sample_boundary(curve: ParametricCurve, n: int) -> BoundaryDiscretization:
    """
    Sample a curve at the uniform parameter nodes t_i = 2 pi i / n.

    Args:
        curve: Obstacle boundary
        n: Number of nodes, even

    Returns:
        BoundaryDiscretization with outward unit normals

    Raises:
        ValidationError: When n is odd or smaller than 4
        DegenerateCurveError: When r(t) <= 0 at a node or a normal points inwards
    """
    if n < 4 or n % 2:
        raise ValidationError(f"boundary node count must be even and at least 4, got {n}")

    t = np.arange(n) * (2.0 * np.pi) / n
    r = curve.radial(t)
    if np.any(r <= 0):
        bad = int(np.argmin(r))
        raise DegenerateCurveError(
            f"radial function is not positive at t={t[bad]:.6f}",
            radius=float(r[bad])
        )

    points, tangent, second = curve.derivatives(t)
    speed = np.hypot(tangent[:, 0], tangent[:, 1])
    normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=-1) / speed[:, None]
    if np.any(np.einsum("ij,ij->i", normals, points - np.asarray(curve.center)) <= 0):
        raise DegenerateCurveError("boundary normals are not directed into the exterior")

    return BoundaryDiscretization(
        curve=curve,
        t=_frozen(t),
        points=_frozen(points),
        normals=_frozen(normals),
        speed=_frozen(speed),
        tangent=_frozen(tangent),
        second=_frozen(second),
    )


class Nonlinearity(str, Enum):
    """Order of the point-scatterer nonlinearity."""
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CUBIC = "cubic"

    @property
    def higher_harmonic(self) -> Optional[int]:
        return {"linear": None, "quadratic": 2, "cubic": 3}[self.value]

    @property
    def harmonics(self) -> Tuple[int, ...]:
        return (1,) if self.higher_harmonic is None else (1, self.higher_harmonic)

    @property
    def nonlinear_terms(self) -> int:
        return {"linear": 0, "quadratic": 2, "cubic": 3}[self.value]


def _count(positions) -> int:
    return int(np.asarray(positions, dtype=float).reshape(-1, 2).shape[0])


def _per_scatterer(values: ArrayLike, count: int, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        values = np.full(count, float(values))
    if values.shape != (count,):
        raise ValidationError(f"{name} must have one entry per scatterer, got shape {values.shape}")
    return values


@dataclass(frozen=True, eq=False)
class PointScattererSet:
    """Point scatterers with their scattering coefficients.

    ``linear`` holds sigma_{k,1}^{(1)} (sigma_k for linear sets), ``harmonic_linear``
    holds sigma_{k,2}^{(1)} and ``nonlinear`` holds the columns
    (sigma_{k,1}^{(2)}, sigma_{k,2}^{(2)}) for quadratic sets or
    (sigma_{k,1}^{(3)}, sigma_{k,2}^{(3)}, sigma_{k,3}^{(3)}) for cubic sets.
    """
    positions: np.ndarray
    nonlinearity: Nonlinearity = Nonlinearity.LINEAR
    linear: Optional[np.ndarray] = None
    harmonic_linear: Optional[np.ndarray] = None
    nonlinear: Optional[np.ndarray] = None
    min_separation: float = field(default_factory=lambda: settings.solver.min_separation)

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        count = positions.shape[0]
        nonlinearity = Nonlinearity(self.nonlinearity)
        linear = _per_scatterer(0.0 if self.linear is None else self.linear, count, "linear coefficients")
        harmonic_linear = _per_scatterer(
            linear if self.harmonic_linear is None else self.harmonic_linear,
            count, "harmonic linear coefficients"
        )
        terms = nonlinearity.nonlinear_terms
        nonlinear = np.zeros((count, terms)) if self.nonlinear is None else np.asarray(self.nonlinear, dtype=float)
        if nonlinear.ndim <= 1 and terms:
            nonlinear = np.broadcast_to(nonlinear.reshape(1, -1), (count, terms)).copy()
        nonlinear = nonlinear.reshape(count, -1) if count else np.zeros((0, terms))
        if nonlinear.shape != (count, terms):
            raise ValidationError(
                f"{nonlinearity.value} scatterers need {terms} nonlinear coefficients each, "
                f"got shape {nonlinear.shape}"
            )

        if not np.all(np.isfinite(positions)):
            raise ValidationError("point-scatterer positions must be finite")
        if np.any(linear < 0) or np.any(harmonic_linear < 0):
            raise ValidationError("linear scattering coefficients must be non-negative")
        if count > 1:
            pairs = cKDTree(positions).query_pairs(r=self.min_separation)
            if pairs:
                i, k = sorted(pairs)[0]
                raise ValidationError(
                    f"point scatterers {i} and {k} are closer than {self.min_separation:g}",
                    pair=(i, k)
                )

        object.__setattr__(self, "positions", _frozen(positions))
        object.__setattr__(self, "nonlinearity", nonlinearity)
        object.__setattr__(self, "linear", _frozen(linear))
        object.__setattr__(self, "harmonic_linear", _frozen(harmonic_linear))
        object.__setattr__(self, "nonlinear", _frozen(nonlinear))

    @classmethod
    def linear_set(cls, positions, sigma: ArrayLike) -> "PointScattererSet":
        return cls(positions, Nonlinearity.LINEAR, linear=np.broadcast_to(sigma, (_count(positions),)))

    @classmethod
    def quadratic_set(cls, positions, linear: ArrayLike, harmonic_linear: ArrayLike,
                      nonlinear: ArrayLike) -> "PointScattererSet":
        """Quadratic set; ``nonlinear`` is (sigma_{k,1}^{(2)}, sigma_{k,2}^{(2)})."""
        count = _count(positions)
        return cls(positions, Nonlinearity.QUADRATIC,
                   linear=np.broadcast_to(linear, (count,)),
                   harmonic_linear=np.broadcast_to(harmonic_linear, (count,)),
                   nonlinear=nonlinear)

    @classmethod
    def cubic_set(cls, positions, linear: ArrayLike, harmonic_linear: ArrayLike,
                  nonlinear: ArrayLike) -> "PointScattererSet":
        """Cubic set; ``nonlinear`` is (sigma_{k,1}^{(3)}, sigma_{k,2}^{(3)}, sigma_{k,3}^{(3)})."""
        count = _count(positions)
        return cls(positions, Nonlinearity.CUBIC,
                   linear=np.broadcast_to(linear, (count,)),
                   harmonic_linear=np.broadcast_to(harmonic_linear, (count,)),
                   nonlinear=nonlinear)

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def __len__(self) -> int:
        return self.count

    def linear_coefficients(self, harmonic: int) -> np.ndarray:
        """Linear coefficient active at harmonic ``harmonic``."""
        return self.linear if harmonic == 1 else self.harmonic_linear

    def with_positions(self, positions: np.ndarray) -> "PointScattererSet":
        return replace(self, positions=np.asarray(positions, dtype=float))

    def linearized(self) -> "PointScattererSet":
        """Same set with every nonlinear coefficient set to zero."""
        return replace(self, nonlinear=np.zeros_like(self.nonlinear))

    def as_linear(self) -> "PointScattererSet":
        """Linear set carrying only sigma_{k,1}^{(1)}."""
        return PointScattererSet(self.positions, Nonlinearity.LINEAR, linear=self.linear,
                                 min_separation=self.min_separation)


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave amplitude * exp(i kappa r.d)."""
    wavenumber: float
    direction: Tuple[float, float]
    amplitude: float = field(default_factory=lambda: settings.solver.incident_amplitude)

    def __post_init__(self):
        direction = (float(self.direction[0]), float(self.direction[1]))
        object.__setattr__(self, "direction", direction)
        object.__setattr__(self, "wavenumber", float(self.wavenumber))
        if not self.wavenumber > 0:
            raise ValidationError(f"wavenumber must be positive, got {self.wavenumber}")
        if abs(np.hypot(*direction) - 1.0) > 1e-14:
            raise ValidationError(f"incident direction {direction} is not a unit vector")

    @classmethod
    def from_angle(cls, wavenumber: float, angle: float, amplitude: Optional[float] = None) -> "IncidentWave":
        direction = (np.cos(angle), np.sin(angle))
        if amplitude is None:
            return cls(wavenumber, direction)
        return cls(wavenumber, direction, amplitude)

    def field(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.amplitude * np.exp(1j * self.wavenumber * (points @ np.asarray(self.direction)))

    def normal_derivative(self, points: np.ndarray, normals: np.ndarray) -> np.ndarray:
        d = np.asarray(self.direction)
        return 1j * self.wavenumber * (np.asarray(normals) @ d) * self.field(points)


@dataclass(frozen=True)
class HarmonicSet:
    """Base wavenumber and the harmonic orders excited by the scatterers."""
    base_wavenumber: float
    orders: Tuple[int, ...] = (1,)

    @classmethod
    def for_nonlinearity(cls, wavenumber: float, nonlinearity: Nonlinearity) -> "HarmonicSet":
        return cls(float(wavenumber), Nonlinearity(nonlinearity).harmonics)

    def wavenumber(self, order: int) -> float:
        if order not in self.orders:
            raise ValidationError(f"harmonic {order} is not part of {self.orders}")
        return order * self.base_wavenumber

    @property
    def wavenumbers(self) -> Tuple[float, ...]:
        return tuple(order * self.base_wavenumber for order in self.orders)


def place_aligned_point_scatterers(radii: Sequence[float], angle: float) -> np.ndarray:
    """Positions radii_k (cos angle, sin angle), lined up towards a transmitter."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValidationError("aligned scatterer radii must be positive and strictly increasing")
    return np.outer(radii, [np.cos(angle), np.sin(angle)])


def place_annulus_point_scatterers(count: int, inner: float, outer: float, seed: int) -> np.ndarray:
    """Uniform angle and uniform radius in [inner, outer], reproducible from ``seed``."""
    if count < 0 or not 0 <= inner <= outer:
        raise ValidationError(f"invalid annulus placement: count={count}, radii=[{inner}, {outer}]")
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0.0, 2.0 * np.pi, count)
    radius = rng.uniform(inner, outer, count)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)


@dataclass(frozen=True, eq=False)
class Scene:
    """Obstacles plus point scatterers.

    When ``moving_radii`` is set the point scatterers are re-placed for every
    transmitter at radii (cos beta, sin beta); ``scatterers`` then only provides
    the coefficients.
    """
    obstacles: Tuple[ParametricCurve, ...] = ()
    scatterers: Optional[PointScattererSet] = None
    boundary_points: int = 0
    moving_radii: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.moving_radii is not None:
            object.__setattr__(self, "moving_radii", tuple(float(r) for r in self.moving_radii))
            if self.scatterers is None or self.scatterers.count != len(self.moving_radii):
                raise ValidationError("moving scatterers need one coefficient set per radius")
        if not self.obstacles and not self.has_scatterers:
            raise ValidationError("empty scene: no obstacles and no point scatterers")
        if self.obstacles:
            per = self.boundary_points // len(self.obstacles)
            if self.boundary_points % len(self.obstacles) or per < 16 or per % 2:
                raise ValidationError(
                    f"boundary_points={self.boundary_points} must split into an even count "
                    f"of at least 16 per obstacle over {len(self.obstacles)} obstacles"
                )
        if self.has_scatterers and self.moving_radii is None:
            self.check_outside(self.scatterers.positions)

    @property
    def has_obstacles(self) -> bool:
        return bool(self.obstacles)

    @property
    def has_scatterers(self) -> bool:
        return self.scatterers is not None and self.scatterers.count > 0

    @property
    def is_moving(self) -> bool:
        return self.moving_radii is not None

    @property
    def nonlinearity(self) -> Nonlinearity:
        return self.scatterers.nonlinearity if self.has_scatterers else Nonlinearity.LINEAR

    def harmonics(self, wavenumber: float) -> HarmonicSet:
        return HarmonicSet.for_nonlinearity(wavenumber, self.nonlinearity)

    def shares_geometry(self, other: "Scene") -> bool:
        """Same obstacle curves sampled with the same node count."""
        if self.obstacles != other.obstacles:
            return False
        return not self.obstacles or self.boundary_points == other.boundary_points

    @cached_property
    def discretizations(self) -> Tuple[BoundaryDiscretization, ...]:
        if not self.obstacles:
            return ()
        per = self.boundary_points // len(self.obstacles)
        return tuple(sample_boundary(curve, per) for curve in self.obstacles)

    def check_outside(self, points: np.ndarray) -> None:
        """Raise when a point lies inside or on an obstacle."""
        for index, curve in enumerate(self.obstacles):
            inside = curve.contains(points)
            if np.any(inside):
                raise ValidationError(
                    f"point scatterer {int(np.argmax(inside))} lies inside or on obstacle {index}"
                )

    def scatterers_for(self, angle: float) -> Optional[PointScattererSet]:
        """Point scatterers active for the transmitter at ``angle``."""
        if not self.has_scatterers:
            return None
        if not self.is_moving:
            return self.scatterers
        moved = self.scatterers.with_positions(place_aligned_point_scatterers(self.moving_radii, angle))
        self.check_outside(moved.positions)
        return moved

    def with_scatterers(self, scatterers: Optional[PointScattererSet]) -> "Scene":
        return Scene(self.obstacles, scatterers, self.boundary_points, None)

    def without_obstacles(self) -> "Scene":
        return Scene((), self.scatterers, 0, self.moving_radii)

    def without_scatterers(self) -> "Scene":
        return Scene(self.obstacles, None, self.boundary_points, None)
