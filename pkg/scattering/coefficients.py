"""
Scattering coefficients of point scatterers from their susceptibilities.

Susceptibilities are indexed by the signed harmonic orders of the frequencies
they couple; a key is the sorted multiset, so eta2(2, -1) and eta2(-1, 2) share
storage.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from scattering.scene import HarmonicSet, Nonlinearity, PointScattererSet
from utils.exceptions import ValidationError

Orders = Tuple[int, ...]


def _key(orders: Sequence[int]) -> Orders:
    return tuple(sorted(int(o) for o in orders))


@dataclass
class SusceptibilitySet:
    """First, second and third order susceptibilities of m point scatterers."""
    count: int
    values: Dict[Orders, np.ndarray] = field(default_factory=dict)

    def set(self, orders: Sequence[int], value) -> "SusceptibilitySet":
        value = np.asarray(value, dtype=float)
        if value.ndim == 0:
            value = np.full(self.count, float(value))
        if value.shape != (self.count,):
            raise ValidationError(f"susceptibility {tuple(orders)} needs {self.count} values, got {value.shape}")
        self.values[_key(orders)] = value
        return self

    def get(self, *orders: int) -> np.ndarray:
        key = _key(orders)
        if key not in self.values:
            raise ValidationError(f"missing susceptibility for harmonic orders {key}")
        return self.values[key]

    def has(self, *orders: int) -> bool:
        return _key(orders) in self.values

    @classmethod
    def from_dict(cls, count: int, data: Dict[str, object]) -> "SusceptibilitySet":
        """Keys are comma separated signed orders, e.g. ``"2,-1"``."""
        result = cls(count)
        for key, value in data.items():
            try:
                orders = [int(part) for part in str(key).split(",")]
            except ValueError:
                raise ValidationError(f"invalid susceptibility key {key!r}")
            if not 1 <= len(orders) <= 3:
                raise ValidationError(f"susceptibility key {key!r} must name one to three orders")
            result.set(orders, value)
        return result


@dataclass
class ScatteringCoefficients:
    """Coefficient columns in the layout PointScattererSet expects."""
    nonlinearity: Nonlinearity
    linear: np.ndarray
    harmonic_linear: Optional[np.ndarray] = None
    nonlinear: Optional[np.ndarray] = None

    def scatterers(self, positions: np.ndarray) -> PointScattererSet:
        if self.nonlinearity is Nonlinearity.LINEAR:
            return PointScattererSet.linear_set(positions, self.linear)
        factory = (PointScattererSet.quadratic_set if self.nonlinearity is Nonlinearity.QUADRATIC
                   else PointScattererSet.cubic_set)
        return factory(positions, self.linear, self.harmonic_linear, self.nonlinear)


def coefficients_from_susceptibilities(susceptibilities: SusceptibilitySet, harmonics: HarmonicSet,
                                       order: Nonlinearity) -> ScatteringCoefficients:
    """
    Map susceptibilities onto Foldy-Lax scattering coefficients.

    Args:
        susceptibilities: Susceptibilities keyed by signed harmonic orders
        harmonics: Base wavenumber and harmonic orders
        order: Nonlinearity of the target coefficient set

    Returns:
        ScatteringCoefficients for ``order``

    Raises:
        ValidationError: When a required susceptibility is missing
    """
    order = Nonlinearity(order)
    s = susceptibilities
    k1 = harmonics.base_wavenumber
    linear = 4.0 * np.pi * k1 ** 2 * s.get(1)
    if order is Nonlinearity.LINEAR:
        return ScatteringCoefficients(order, linear)

    h = order.higher_harmonic
    kh = h * k1
    harmonic_linear = 4.0 * np.pi * kh ** 2 * s.get(h)
    if order is Nonlinearity.QUADRATIC:
        nonlinear = np.stack([
            8.0 * np.pi * k1 ** 2 * s.get(2, -1),
            4.0 * np.pi * kh ** 2 * s.get(1, 1),
        ], axis=-1)
    else:
        nonlinear = np.stack([
            12.0 * np.pi * k1 ** 2 * s.get(1, 1, -1),
            12.0 * np.pi * k1 ** 2 * s.get(3, -1, -1),
            4.0 * np.pi * kh ** 2 * s.get(1, 1, 1),
        ], axis=-1)
    return ScatteringCoefficients(order, linear, harmonic_linear, nonlinear)
