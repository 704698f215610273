"""Built-in data ``g`` for the integral equation."""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.sampled_space import SampledMeasureSpace


@dataclass(frozen=True)
class Datum:
    """A named function on the nodes of any space."""
    spec: str
    build: Callable[[SampledMeasureSpace], np.ndarray]
    continuous: bool = True
    # (theta, bound) with |g|_theta <= bound when known a priori
    holder_bound: Optional[Tuple[float, float]] = None

    def __call__(self, space: SampledMeasureSpace) -> np.ndarray:
        return self.build(space)


def _number(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InvalidArgumentError(f"{what} is not a number: {token!r}")


def _index(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InvalidArgumentError(f"{what} is not an integer: {token!r}")


def _coordinate(space: SampledMeasureSpace, k: int) -> np.ndarray:
    if not 0 <= k < space.dim:
        raise InvalidArgumentError(f"coordinate {k} outside 0..{space.dim - 1} of {space.label}")
    return np.array(space.points[:, k])


def _const(args: List[str], spec: str) -> Datum:
    if len(args) != 1:
        raise InvalidArgumentError(f"const takes one value, got {args}")
    c = _number(args[0], "constant")
    return Datum(spec, lambda space: np.full(space.n, c), holder_bound=(1.0, 0.0))


def _coord(args: List[str], spec: str) -> Datum:
    k = _index(args[0], "coordinate") if args else 0
    return Datum(spec, lambda space: _coordinate(space, k), holder_bound=(1.0, 1.0))


def _dist(args: List[str], spec: str) -> Datum:
    if len(args) != 1:
        raise InvalidArgumentError(f"dist takes 'theta' or 'theta@node', got {args}")
    theta_text, _, node_text = args[0].partition('@')
    theta = _number(theta_text, "theta")
    if not 0 < theta <= 1:
        raise InvalidArgumentError(f"theta must lie in (0, 1], got {theta}")
    node = _index(node_text, "node") if node_text else 0

    def build(space: SampledMeasureSpace) -> np.ndarray:
        return space.dist[space.check_index(node)] ** theta

    # |a^θ - b^θ| <= |a - b|^θ and the triangle inequality
    return Datum(spec, build, holder_bound=(theta, 1.0))


def _step(args: List[str], spec: str) -> Datum:
    k = _index(args[0], "coordinate") if args else 0
    return Datum(spec, lambda space: np.where(_coordinate(space, k) >= 0, 1.0, -1.0), continuous=False)


def _cos(args: List[str], spec: str) -> Datum:
    if args:
        raise InvalidArgumentError(f"cos takes no arguments, got {args}")

    def build(space: SampledMeasureSpace) -> np.ndarray:
        if space.dim < 2:
            raise InvalidArgumentError(f"cos of the angle needs two coordinates, {space.label} has {space.dim}")
        x, y = space.points[:, 0], space.points[:, 1]
        radius = np.hypot(x, y)
        return np.divide(x, radius, out=np.zeros_like(x), where=radius > 0)

    return Datum(spec, build)


DATUM_BUILDERS: Dict[str, Callable[[List[str], str], Datum]] = {
    'const': _const,
    'coord': _coord,
    'dist': _dist,
    'step': _step,
    'cos': _cos,
}


def parse_datum_spec(text: str) -> Datum:
    """Parse ``const:c``, ``coord:k``, ``dist:theta[@node]``, ``step[:k]`` or ``cos``."""
    if not text or not text.strip():
        raise InvalidArgumentError("empty datum spec")
    head, *args = text.strip().split(':')
    builder = DATUM_BUILDERS.get(head.lower())
    if builder is None:
        raise InvalidArgumentError(f"unknown datum {head!r}, known: {sorted(DATUM_BUILDERS)}")
    return builder(args, text.strip())
