"""Finite sampled metric measure spaces and the standard example spaces.

A space is a set of nodes with a materialized distance matrix and a point
mass per node. The masses are quadrature weights standing in for the
measure; every downstream quantity is a weighted sum or a ball mass.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from ahlfors_fredholm.errors import FredholmError, InvalidArgumentError
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

MAX_CANTOR_LEVEL = 14
DENSITIES = ('uniform', 'exp_cusp')


class ResourceLimitError(FredholmError):
    """The requested space exceeds a size guard."""


class PointCloudParseError(FredholmError):
    """Malformed point-cloud file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class SampledMeasureSpace:
    """Nodes, pairwise distances and node masses of a sampled space."""
    points: np.ndarray
    dist: np.ndarray
    weights: np.ndarray
    label: str = "space"
    total_mass: float = field(init=False)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        dist = np.array(self.dist, dtype=float)
        weights = np.array(self.weights, dtype=float)
        n = weights.shape[0] if weights.ndim == 1 else -1
        if n < 1:
            raise InvalidArgumentError("a space needs at least one node and a 1-d weight vector")
        if dist.shape != (n, n):
            raise InvalidArgumentError(f"distance matrix has shape {dist.shape}, expected {(n, n)}")
        if points.shape[0] != n:
            raise InvalidArgumentError(f"{points.shape[0]} points but {n} weights")
        if not np.all(np.isfinite(dist)):
            raise InvalidArgumentError("distances must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        for arr in (points, dist, weights):
            arr.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'dist', dist)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'total_mass', math.fsum(weights))

    @classmethod
    def from_points(cls, points, weights, label: str = "space") -> 'SampledMeasureSpace':
        """Build a space with Euclidean (chordal) distances between the points."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        dist = cdist(points, points)
        np.fill_diagonal(dist, 0.0)
        return cls(points=points, dist=dist, weights=weights, label=label)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max())

    @cached_property
    def mesh(self) -> Optional[float]:
        """Smallest positive pairwise distance, None for a space without one."""
        positive = self.dist[self.dist > 0]
        return float(positive.min()) if positive.size else None

    @cached_property
    def ordering(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-node sorted distances and cumulative masses in that order.

        ``cum[i, k]`` is the mass of the ``k`` nodes nearest to node ``i``, so
        the mass of the open ball of radius r is
        ``cum[i, searchsorted(sorted_dist[i], r, 'left')]``.
        """
        order = np.argsort(self.dist, axis=1, kind='stable')
        sorted_dist = np.take_along_axis(self.dist, order, axis=1)
        cum = np.zeros((self.n, self.n + 1))
        np.cumsum(self.weights[order], axis=1, out=cum[:, 1:])
        sorted_dist.setflags(write=False)
        cum.setflags(write=False)
        return sorted_dist, cum

    def check_index(self, index: int) -> int:
        if not 0 <= index < self.n:
            raise InvalidArgumentError(f"node index {index} outside 0..{self.n - 1}")
        return int(index)


def _check_size(n: int, max_nodes: Optional[int]) -> None:
    limit = DEFAULT_TOLERANCES.max_nodes if max_nodes is None else max_nodes
    if n > limit:
        raise ResourceLimitError(f"{n} nodes exceed the node cap {limit}")


def build_circle(n: int, radius: float = 1.0, max_nodes: Optional[int] = None) -> SampledMeasureSpace:
    """Equispaced nodes on a circle with equal arc-length weights."""
    if n < 3:
        raise InvalidArgumentError(f"a circle needs n >= 3 nodes, got {n}")
    if not radius > 0:
        raise InvalidArgumentError(f"radius must be positive, got {radius}")
    _check_size(n, max_nodes)
    angles = 2.0 * np.pi * np.arange(n) / n
    points = radius * np.column_stack((np.cos(angles), np.sin(angles)))
    weights = np.full(n, 2.0 * np.pi * radius / n)
    return SampledMeasureSpace.from_points(points, weights, label=f"circle:{n}:{radius:g}")


def build_cantor(level: int, max_nodes: Optional[int] = None) -> SampledMeasureSpace:
    """Left endpoints of the middle-thirds construction at the given level."""
    if level < 0:
        raise InvalidArgumentError(f"level must be nonnegative, got {level}")
    if level > MAX_CANTOR_LEVEL:
        raise ResourceLimitError(f"Cantor level {level} exceeds the guard {MAX_CANTOR_LEVEL}")
    _check_size(2 ** level, max_nodes)
    # integer numerators over 3**level keep every endpoint correctly rounded
    numerators = np.zeros(1, dtype=np.int64)
    for _ in range(level):
        numerators = np.concatenate((3 * numerators, 3 * numerators + 2))
    points = numerators.astype(float) / float(3 ** level)
    weights = np.full(points.shape[0], 0.5 ** level)
    return SampledMeasureSpace.from_points(points[:, None], weights, label=f"cantor:{level}")


def density(name: str, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if name == 'uniform':
        return np.ones_like(x)
    if name == 'exp_cusp':
        out = np.zeros_like(x)
        positive = x > 0
        out[positive] = np.exp(-1.0 / x[positive])
        return out
    raise InvalidArgumentError(f"unknown density {name!r}, expected one of {DENSITIES}")


def build_weighted_interval(n: int, weight_fn: str = 'uniform',
                            max_nodes: Optional[int] = None) -> SampledMeasureSpace:
    """Equispaced nodes on [0, 1] with weights w(x_i)/n."""
    if weight_fn not in DENSITIES:
        raise InvalidArgumentError(f"unknown density {weight_fn!r}, expected one of {DENSITIES}")
    if n < 2:
        raise InvalidArgumentError(f"an interval needs n >= 2 nodes, got {n}")
    _check_size(n, max_nodes)
    x = np.linspace(0.0, 1.0, n)
    weights = density(weight_fn, x) / n
    return SampledMeasureSpace.from_points(x[:, None], weights, label=f"interval:{n}:{weight_fn}")


def _parse_numbers(tokens: Sequence[str], line_number: int) -> List[float]:
    values = []
    for token in tokens:
        try:
            value = float(token)
        except ValueError:
            raise PointCloudParseError(f"not a number: {token!r}", line_number)
        if not math.isfinite(value):
            raise PointCloudParseError(f"non-finite value {token!r}", line_number)
        values.append(value)
    return values


def read_numeric_rows(path: Union[str, Path]) -> List[Tuple[int, List[float]]]:
    """Numeric rows of a text file, skipping blank lines and '#' comments."""
    path = Path(path)
    if not path.exists():
        raise PointCloudParseError(f"file not found: {path}")
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith('#'):
                continue
            rows.append((line_number, _parse_numbers(stripped.split(), line_number)))
    return rows


def load_point_cloud(path: Union[str, Path], max_nodes: Optional[int] = None) -> SampledMeasureSpace:
    """Read a "D n" header followed by n rows of D coordinates and a weight."""
    rows = read_numeric_rows(path)
    if not rows:
        raise PointCloudParseError(f"empty point-cloud file {path}")
    header_line, header = rows[0]
    if len(header) != 2 or not all(v.is_integer() and v >= 1 for v in header):
        raise PointCloudParseError("header must be 'D n' with positive integers", header_line)
    dim, n = int(header[0]), int(header[1])
    _check_size(n, max_nodes)
    body = rows[1:]
    if len(body) != n:
        last = body[-1][0] if body else header_line
        raise PointCloudParseError(f"expected {n} rows, found {len(body)}", last)
    points = np.empty((n, dim))
    weights = np.empty(n)
    for k, (line_number, values) in enumerate(body):
        if len(values) != dim + 1:
            raise PointCloudParseError(
                f"row {k + 1} has {len(values)} fields, expected {dim + 1}", line_number)
        if values[-1] < 0:
            raise PointCloudParseError(f"row {k + 1} has negative weight {values[-1]}", line_number)
        points[k] = values[:-1]
        weights[k] = values[-1]
    logger.info("loaded %d points in dimension %d from %s", n, dim, path)
    return SampledMeasureSpace.from_points(points, weights, label=f"file:{Path(path).name}")


def write_point_cloud(space: SampledMeasureSpace, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# {space.label}\n")
        f.write(f"{space.dim} {space.n}\n")
        for point, weight in zip(space.points, space.weights):
            f.write(" ".join(repr(float(v)) for v in point) + f" {float(weight)!r}\n")


def validate_space(space: SampledMeasureSpace, triples: int = 10_000, seed: int = 0,
                   rel_tol: float = 1e-12) -> List[str]:
    """Return the invariant violations of a space; an empty list means valid."""
    violations = []
    dist = space.dist
    scale = max(space.diameter, 1.0)
    if np.any(np.diag(dist) != 0):
        violations.append("nonzero diagonal distance")
    if not np.array_equal(dist, dist.T):
        violations.append("distance matrix is not symmetric")
    if np.any(dist < 0):
        violations.append("negative distance")
    if np.any(space.weights < 0):
        violations.append("negative weight")
    if not math.isclose(space.total_mass, float(np.sum(space.weights)), rel_tol=rel_tol, abs_tol=rel_tol):
        violations.append("total mass differs from the sum of weights")
    if space.n >= 3 and triples > 0:
        rng = np.random.default_rng(seed)
        i, j, k = rng.integers(0, space.n, size=(3, triples))
        excess = dist[i, j] - dist[i, k] - dist[k, j]
        bad = int(np.count_nonzero(excess > rel_tol * scale))
        if bad:
            violations.append(f"triangle inequality fails on {bad} of {triples} sampled triples")
    return violations
