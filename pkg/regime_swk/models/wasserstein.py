"""
Closed-form Wasserstein distance and barycentre for equal-size 1D empirical
measures, fixed projection grids on the unit sphere and the sliced distance.

For two measures with n atoms each, sorting both atom lists solves the
transport problem: W_p^p = (1/n) Σ |a*_i - b*_i|^p. The barycentre of a
family is the per-order-statistic median (p=1) or mean (p=2).
"""
import itertools
import math
from collections.abc import Sequence
from enum import StrEnum
from typing import ClassVar

import numpy as np
from pydantic import model_validator

from .base import ArrayModelBase
from .exceptions import ConfigError, EmptyClusterError, ShapeError, SizeGuardError
from .field_types import MAX_EXHAUSTIVE_ATOMS, NonNegativeInt, WassersteinOrder
from .measures import EmpiricalMeasure, LiftConfig, MeasureFamily

_UNIT_NORM_TOL: float = 1e-12
_GOLDEN_RATIO: float = (1.0 + math.sqrt(5.0)) / 2.0


class SortedAtoms(ArrayModelBase):
    """Atoms of a 1D empirical measure in ascending order."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'values': np.float64}

    values: np.ndarray

    @model_validator(mode='after')
    def _check_sorted(self) -> 'SortedAtoms':
        if self.values.ndim != 1 or self.values.size == 0:
            raise ShapeError(f"Sorted atoms must be a non-empty vector, got shape {self.values.shape}")
        if np.any(self.values[1:] < self.values[:-1]):
            raise ShapeError("Atoms are not sorted in ascending order")
        return self

    @classmethod
    def from_unsorted(cls, atoms: Sequence[float] | np.ndarray) -> 'SortedAtoms':
        return cls(values=np.sort(np.asarray(atoms, dtype=np.float64)))

    def __len__(self) -> int:
        return int(self.values.size)


class ProjectionScheme(StrEnum):
    GRID = "grid"
    """Deterministic grid: (+1) for d=1, half-circle angles for d=2, Fibonacci hemisphere for d=3."""
    CUSTOM = "custom"
    """Caller-supplied directions (required for d ≥ 4)."""


class ProjectionSet(ArrayModelBase):
    """L unit directions in R^d, fixed for the lifetime of a clustering run."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'directions': np.float64}

    directions: np.ndarray
    """L×d matrix; each row has unit Euclidean norm."""
    scheme: ProjectionScheme

    @model_validator(mode='after')
    def _check_directions(self) -> 'ProjectionSet':
        if self.directions.ndim != 2 or self.directions.shape[0] < 1 or self.directions.shape[1] < 1:
            raise ShapeError(f"Directions must be an L×d matrix, got shape {self.directions.shape}")
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
            raise ShapeError("Every projection direction must have unit norm")
        gram = np.abs(self.directions @ self.directions.T)
        np.fill_diagonal(gram, 0.0)
        if np.any(gram >= 1.0 - _UNIT_NORM_TOL):
            raise ShapeError("Projection directions must be pairwise distinct and non-antipodal")
        return self

    @property
    def count(self) -> int:
        return int(self.directions.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.directions.shape[1])


class ProjectedMeasure(ArrayModelBase):
    """Sorted projections of one empirical measure on every direction of a ProjectionSet."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'per_direction': np.float64}

    per_direction: np.ndarray
    """L×h1 matrix; row l holds the sorted projections on direction l."""
    window_index: NonNegativeInt

    def direction(self, index: int) -> SortedAtoms:
        return SortedAtoms(values=self.per_direction[index])


class ProjectedFamily(ArrayModelBase):
    """Sorted projections of a whole MeasureFamily, stored as an M×L×h1 array."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'sorted_atoms': np.float64, 'starts': np.int64}

    sorted_atoms: np.ndarray
    starts: np.ndarray
    lift: LiftConfig
    series_length: int

    def __len__(self) -> int:
        return int(self.sorted_atoms.shape[0])

    def __getitem__(self, m: int) -> ProjectedMeasure:
        return ProjectedMeasure(per_direction=self.sorted_atoms[m], window_index=m)

    @classmethod
    def from_sorted_atoms(cls, sorted_atoms: np.ndarray, lift: LiftConfig | None = None) -> 'ProjectedFamily':
        """Wrap an already sorted M×L×h1 array (used by the plain 1D pipeline and by tests)."""
        sorted_atoms = np.asarray(sorted_atoms, dtype=np.float64)
        m, _, h1 = sorted_atoms.shape
        lift = lift or LiftConfig(h1=h1, h2=h1)
        starts = lift.delta + lift.h2 * np.arange(m, dtype=np.int64)
        return cls(
            sorted_atoms=sorted_atoms,
            starts=starts,
            lift=lift,
            series_length=int(starts[-1] + h1) if m else h1,
        )


# =============================================================================
# 1D closed forms (vectorized over leading axes)
# =============================================================================

def _values(atoms: SortedAtoms | np.ndarray) -> np.ndarray:
    return atoms.values if isinstance(atoms, SortedAtoms) else np.asarray(atoms, dtype=np.float64)


def wp_sorted(a: np.ndarray, b: np.ndarray, p: WassersteinOrder) -> np.ndarray:
    """W_p between sorted atom arrays, reduced along the last axis with broadcasting."""
    diff = np.abs(a - b)
    if p == 1:
        return diff.mean(axis=-1)
    return np.sqrt((diff * diff).mean(axis=-1))


def barycentre_sorted(members: np.ndarray, p: WassersteinOrder) -> np.ndarray:
    """Per-index median (p=1) or mean (p=2) along axis 0 of sorted atom arrays."""
    if p == 1:
        return np.median(members, axis=0)
    return members.mean(axis=0)


def w1_distance(a: SortedAtoms | np.ndarray, b: SortedAtoms | np.ndarray, p: WassersteinOrder = 1) -> float:
    """((1/n) Σ_i |a_i - b_i|^p)^(1/p) for two sorted atom lists of equal length."""
    a_values, b_values = _values(a), _values(b)
    if a_values.shape != b_values.shape:
        raise ShapeError(f"Atom counts differ: {a_values.shape[-1]} vs {b_values.shape[-1]}")
    return float(wp_sorted(a_values, b_values, p))


def w1_barycentre(measures: Sequence[SortedAtoms | np.ndarray], p: WassersteinOrder = 1) -> SortedAtoms:
    """Wasserstein barycentre of equal-size sorted measures."""
    if len(measures) == 0:
        raise EmptyClusterError()
    stacked = [_values(m) for m in measures]
    if len({v.shape for v in stacked}) != 1:
        raise ShapeError("All measures of a barycentre must have the same atom count")
    return SortedAtoms(values=barycentre_sorted(np.stack(stacked), p))


def brute_force_w1(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray, p: WassersteinOrder = 1) -> float:
    """Exact transport cost by enumerating every assignment; test oracle for n ≤ 8."""
    a_values = np.asarray(a, dtype=np.float64)
    b_values = np.asarray(b, dtype=np.float64)
    if a_values.shape != b_values.shape or a_values.ndim != 1:
        raise ShapeError(f"Atom lists must have equal length, got {a_values.shape} and {b_values.shape}")
    n = a_values.size
    if n > MAX_EXHAUSTIVE_ATOMS:
        raise SizeGuardError("Atom list", n, MAX_EXHAUSTIVE_ATOMS)
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    costs = (np.abs(a_values[None, :] - b_values[perms]) ** p).mean(axis=1)
    return float(costs.min() ** (1.0 / p))


# =============================================================================
# Projections
# =============================================================================

def _half_circle(count: int) -> np.ndarray:
    angles = np.pi * np.arange(count) / count
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    directions[np.abs(directions) < 1e-15] = 0.0
    return directions


def _fibonacci_hemisphere(count: int) -> np.ndarray:
    # z stays strictly inside (0, 1), so no two directions are antipodal
    i = np.arange(count)
    z = 1.0 - (i + 0.5) / count
    radius = np.sqrt(1.0 - z * z)
    phi = 2.0 * np.pi * i / _GOLDEN_RATIO
    directions = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def make_projection_set(
    d: int,
    L: int,
    scheme: ProjectionScheme = ProjectionScheme.GRID,
    directions: np.ndarray | Sequence[Sequence[float]] | None = None,
) -> ProjectionSet:
    """
    Build the fixed set of projection directions.

    d=1 always yields the single direction (+1). d=2 uses the angles π·l/L on
    the half circle, d=3 a Fibonacci lattice on the upper hemisphere. Other
    dimensions need ``scheme=CUSTOM`` with explicit directions.
    """
    if d < 1 or L < 1:
        raise ConfigError(f"Projection sets need d ≥ 1 and L ≥ 1, got d={d}, L={L}")
    if scheme == ProjectionScheme.CUSTOM:
        if directions is None:
            raise ConfigError("The custom projection scheme needs explicit directions")
        matrix = np.asarray(directions, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != d:
            raise ShapeError(f"Custom directions must be an L×{d} matrix, got shape {matrix.shape}")
        return ProjectionSet(directions=matrix, scheme=scheme)

    match d:
        case 1:
            matrix = np.ones((1, 1))
        case 2:
            matrix = _half_circle(L)
        case 3:
            matrix = _fibonacci_hemisphere(L)
        case _:
            raise ConfigError(f"No grid is defined for d={d}; supply custom directions")
    return ProjectionSet(directions=matrix, scheme=scheme)


def project_measure(measure: EmpiricalMeasure, ps: ProjectionSet) -> ProjectedMeasure:
    """Project the atoms on every direction and sort each projection once."""
    if measure.dimension != ps.dimension:
        raise ShapeError(f"Measure has dimension {measure.dimension}, projections have {ps.dimension}")
    projected = np.sort(measure.atoms @ ps.directions.T, axis=0).T
    return ProjectedMeasure(per_direction=projected, window_index=measure.window_index)


def project_family(family: MeasureFamily, ps: ProjectionSet) -> ProjectedFamily:
    """Vectorized project_measure over every window of a family."""
    if family.dimension != ps.dimension:
        raise ShapeError(f"Family has dimension {family.dimension}, projections have {ps.dimension}")
    projected = np.sort(np.einsum('mhd,ld->mlh', family.atoms, ps.directions), axis=-1)
    return ProjectedFamily(
        sorted_atoms=projected,
        starts=family.starts,
        lift=family.lift,
        series_length=family.series_length,
    )


def sliced_distance(
    a: ProjectedMeasure | np.ndarray,
    b: ProjectedMeasure | np.ndarray,
    p: WassersteinOrder = 1,
) -> float:
    """(1/L) Σ_l W_p(a_l, b_l) over the shared projection directions."""
    a_values = a.per_direction if isinstance(a, ProjectedMeasure) else np.asarray(a, dtype=np.float64)
    b_values = b.per_direction if isinstance(b, ProjectedMeasure) else np.asarray(b, dtype=np.float64)
    if a_values.shape != b_values.shape:
        raise ShapeError(f"Projected measures differ in shape: {a_values.shape} vs {b_values.shape}")
    return float(sliced_sorted(a_values, b_values, p))


def sliced_sorted(a: np.ndarray, b: np.ndarray, p: WassersteinOrder) -> np.ndarray:
    """Sliced distance between ...×L×h1 arrays, reduced over the last two axes."""
    return wp_sorted(a, b, p).mean(axis=-1)
