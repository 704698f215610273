"""Upper Ahlfors estimates, Riesz integrals and the integral bounds built on them.

Balls are open: ``B(x, r) = {y : d(x, y) < r}`` and ``B(x, 0)`` is empty.
Annuli are ``{y : r1 <= d(x, y) < r2}`` so that splitting a ball at any
radius is exactly additive.
"""
import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.parallel import map_chunks
from ahlfors_fredholm.sampled_space import SampledMeasureSpace
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

BoundKind = Literal['ball', 'complement_power', 'complement_log', 'whole', 'composite', 'annulus']


class WorstPair(BaseModel):
    node: int
    radius: float
    ratio: float
    inner_radius: Optional[float] = None


class AhlforsReport(BaseModel):
    """Estimated upper (and optionally strong upper) Ahlfors constants."""
    upsilon: float
    r_cutoff: float
    c_upper: float
    c_strong: Optional[float] = None
    worst_pairs: List[WorstPair] = Field(default_factory=list)
    ceiling: float
    passed: bool
    grid_size: int


class RieszBoundReport(BaseModel):
    """Measured sup of a normalized Riesz-type integral against its bound."""
    s: float
    upsilon: float
    bound_kind: BoundKind
    measured_sup: float
    bound_value: Optional[float] = None
    passed: Optional[bool] = None
    slack: Optional[float] = None
    ratio_by_scale: List[Tuple[float, float]] = Field(default_factory=list)


def compare_exponents(a: float, b: float, tol: Optional[float] = None) -> int:
    """Sign of ``a - b`` with ties decided by an absolute tolerance."""
    tol = DEFAULT_TOLERANCES.exponent_tol if tol is None else tol
    diff = a - b
    if abs(diff) <= tol * max(1.0, abs(a), abs(b)):
        return 0
    return 1 if diff > 0 else -1


def geometric_grid(r_min: float, r_max: float, ratio: Optional[float] = None) -> np.ndarray:
    """Radii ``r_min * ratio**k`` up to ``r_max``, with ``r_max`` always included."""
    ratio = DEFAULT_TOLERANCES.grid_ratio if ratio is None else ratio
    if not (r_min > 0 and r_max >= r_min):
        raise InvalidArgumentError(f"need 0 < r_min <= r_max, got {r_min}, {r_max}")
    if ratio <= 1:
        raise InvalidArgumentError(f"grid ratio must exceed 1, got {ratio}")
    steps = int(math.floor(math.log(r_max / r_min) / math.log(ratio) + 1e-9))
    radii = r_min * ratio ** np.arange(steps + 1)
    radii = radii[radii < r_max * (1 - 1e-12)]
    return np.append(radii, r_max)


def default_radius_grid(space: SampledMeasureSpace, ratio: Optional[float] = None) -> np.ndarray:
    if space.mesh is None:
        raise InvalidArgumentError(
            f"space {space.label} has no positive distance; pass an explicit radius grid")
    return geometric_grid(space.mesh, space.diameter, ratio)


def _resolve_grid(space: SampledMeasureSpace, radius_grid: Optional[Sequence[float]],
                  r_cutoff: Optional[float]) -> Tuple[np.ndarray, float]:
    grid = default_radius_grid(space) if radius_grid is None else np.asarray(radius_grid, dtype=float)
    grid = np.unique(grid.ravel())
    if grid.size == 0:
        raise InvalidArgumentError("radius grid is empty")
    if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise InvalidArgumentError("grid radii must be positive and finite")
    if r_cutoff is None:
        r_cutoff = space.diameter if space.diameter > 0 else float(grid[-1])
    if not r_cutoff > 0:
        raise InvalidArgumentError(f"r_cutoff must be positive, got {r_cutoff}")
    grid = grid[grid <= r_cutoff]
    if grid.size == 0:
        raise InvalidArgumentError(f"no grid radius lies in (0, {r_cutoff}]")
    return grid, float(r_cutoff)


def _resolve_centers(space: SampledMeasureSpace, centers: Optional[Sequence[int]]) -> np.ndarray:
    if centers is None:
        return np.arange(space.n)
    centers = np.asarray(sorted(set(int(c) for c in centers)), dtype=int)
    if centers.size == 0:
        raise InvalidArgumentError("evaluation subset is empty")
    for c in (centers[0], centers[-1]):
        space.check_index(int(c))
    return centers


def ball_measure(space: SampledMeasureSpace, center_index: int, r: float) -> float:
    """Mass of the open ball of radius ``r`` around a node."""
    center = space.check_index(center_index)
    if r < 0:
        raise InvalidArgumentError(f"radius must be nonnegative, got {r}")
    return math.fsum(space.weights[space.dist[center] < r])


def annulus_measure(space: SampledMeasureSpace, center_index: int, r1: float, r2: float) -> float:
    """Mass of ``{y : r1 <= d(x, y) < r2}``."""
    center = space.check_index(center_index)
    if r1 < 0:
        raise InvalidArgumentError(f"inner radius must be nonnegative, got {r1}")
    if r1 >= r2:
        raise InvalidArgumentError(f"annulus needs r1 < r2, got {r1} >= {r2}")
    if r1 == 0:
        return ball_measure(space, center, r2)
    row = space.dist[center]
    return math.fsum(space.weights[(row >= r1) & (row < r2)])


def ball_masses(space: SampledMeasureSpace, radius_grid: np.ndarray,
                centers: Optional[np.ndarray] = None) -> np.ndarray:
    """Ball masses for every center and grid radius, shape (centers, radii)."""
    sorted_dist, cum = space.ordering
    centers = np.arange(space.n) if centers is None else centers

    def scan(chunk: range) -> np.ndarray:
        out = np.empty((len(chunk), radius_grid.size))
        for row, k in enumerate(chunk):
            i = centers[k]
            out[row] = cum[i, np.searchsorted(sorted_dist[i], radius_grid, side='left')]
        return out

    return np.vstack(map_chunks(scan, centers.size))


def _worst(ratios: np.ndarray, centers: np.ndarray, outer: np.ndarray,
           inner: Optional[np.ndarray], top: int) -> List[WorstPair]:
    flat = ratios.ravel()
    if flat.size == 0:
        return []
    # stable ordering by descending ratio, ties broken by position
    order = np.argsort(-flat, kind='stable')[:top]
    pairs = []
    for idx in order:
        node_pos, col = np.unravel_index(idx, ratios.shape)
        pairs.append(WorstPair(node=int(centers[node_pos]), radius=float(outer[col]),
                               ratio=float(flat[idx]),
                               inner_radius=None if inner is None else float(inner[col])))
    return pairs


def estimate_upper_ahlfors(space: SampledMeasureSpace, upsilon: float,
                           radius_grid: Optional[Sequence[float]] = None,
                           r_cutoff: Optional[float] = None,
                           centers: Optional[Sequence[int]] = None,
                           ceiling: Optional[float] = None,
                           top: int = 10) -> AhlforsReport:
    """Sup of ``ball_measure(x, r) / r**upsilon`` over nodes and grid radii."""
    if not upsilon > 0:
        raise InvalidArgumentError(f"upsilon must be positive, got {upsilon}")
    grid, r_cutoff = _resolve_grid(space, radius_grid, r_cutoff)
    centers = _resolve_centers(space, centers)
    ceiling = DEFAULT_TOLERANCES.ahlfors_ceiling if ceiling is None else ceiling
    ratios = ball_masses(space, grid, centers) / grid ** upsilon
    c_upper = float(ratios.max())
    logger.info("upper Ahlfors estimate on %s: c=%.6g over %d radii", space.label, c_upper, grid.size)
    return AhlforsReport(upsilon=upsilon, r_cutoff=r_cutoff, c_upper=c_upper,
                         worst_pairs=_worst(ratios, centers, grid, None, top),
                         ceiling=ceiling, passed=c_upper <= ceiling, grid_size=int(grid.size))


def estimate_strong_upper_ahlfors(space: SampledMeasureSpace, upsilon: float,
                                  radius_grid: Optional[Sequence[float]] = None,
                                  r_cutoff: Optional[float] = None,
                                  centers: Optional[Sequence[int]] = None,
                                  ceiling: Optional[float] = None,
                                  top: int = 10) -> AhlforsReport:
    """Sup of annulus mass over ``r2**upsilon - r1**upsilon``, r1 in {0} and the grid."""
    if not upsilon > 0:
        raise InvalidArgumentError(f"upsilon must be positive, got {upsilon}")
    grid, r_cutoff = _resolve_grid(space, radius_grid, r_cutoff)
    centers = _resolve_centers(space, centers)
    ceiling = DEFAULT_TOLERANCES.ahlfors_ceiling if ceiling is None else ceiling
    masses = ball_masses(space, grid, centers)
    c_upper_ratios = masses / grid ** upsilon

    inner_radii = np.concatenate(([0.0], grid))
    inner_masses = np.hstack((np.zeros((centers.size, 1)), masses))
    i_idx, j_idx = np.nonzero(inner_radii[:, None] < grid[None, :])
    denom = grid[j_idx] ** upsilon - inner_radii[i_idx] ** upsilon
    ratios = (masses[:, j_idx] - inner_masses[:, i_idx]) / denom
    c_strong = float(ratios.max())
    c_upper = float(c_upper_ratios.max())
    logger.info("strong Ahlfors estimate on %s: c=%.6g (upper %.6g)", space.label, c_strong, c_upper)
    return AhlforsReport(upsilon=upsilon, r_cutoff=r_cutoff, c_upper=c_upper, c_strong=max(c_strong, c_upper),
                         worst_pairs=_worst(ratios, centers, grid[j_idx], inner_radii[i_idx], top),
                         ceiling=ceiling, passed=max(c_strong, c_upper) <= ceiling,
                         grid_size=int(grid.size))


def doubling_ratios(space: SampledMeasureSpace, center: int,
                    radius_grid: Optional[Sequence[float]] = None) -> List[Tuple[float, float]]:
    """``(r, mass(B(x, 2r)) / mass(B(x, r)))`` for grid radii with a nonempty inner ball."""
    center = space.check_index(center)
    grid = default_radius_grid(space) if radius_grid is None else np.asarray(radius_grid, dtype=float)
    ratios = []
    for r in grid:
        inner = ball_measure(space, center, float(r))
        if inner > 0:
            ratios.append((float(r), ball_measure(space, center, 2.0 * float(r)) / inner))
    return ratios


def potential_matrix(space: SampledMeasureSpace, s: float) -> np.ndarray:
    """``d(x, y)**-s`` off the diagonal; zero where the distance vanishes."""
    with np.errstate(divide='ignore'):
        out = np.where(space.dist > 0, space.dist, 1.0) ** (-s)
    out[space.dist == 0] = 0.0
    return out


def riesz_integrals(space: SampledMeasureSpace, s: float) -> np.ndarray:
    """``sum_{j != x} w_j d(x, j)**-s`` for every node x."""
    if s < 0:
        raise InvalidArgumentError(f"Riesz exponent must be nonnegative, got {s}")
    return potential_matrix(space, s) @ space.weights


def riesz_integral(space: SampledMeasureSpace, x_index: int, s: float) -> float:
    """Riesz integral at one node; the diagonal term is dropped."""
    x = space.check_index(x_index)
    if s < 0:
        raise InvalidArgumentError(f"Riesz exponent must be nonnegative, got {s}")
    row = space.dist[x]
    mask = row > 0
    return math.fsum(space.weights[mask] * row[mask] ** (-s))


def verify_ball_bound(space: SampledMeasureSpace, upsilon: float, s: float, a: float,
                      c_upper: Optional[float] = None,
                      r_cutoff: Optional[float] = None) -> RieszBoundReport:
    """Check ``sup_x riesz_integral(x, s) <= nu(Y) a**-s + c υ/(υ-s) a**(υ-s)``."""
    if s < 0 or compare_exponents(s, upsilon) >= 0:
        raise InvalidArgumentError(f"ball bound needs 0 <= s < upsilon, got s={s}, upsilon={upsilon}")
    measured = float(riesz_integrals(space, s).max())
    if s == 0:
        bound = space.total_mass
        kind = 'whole'
    else:
        r_cutoff = space.diameter if r_cutoff is None else r_cutoff
        if not 0 < a < r_cutoff:
            raise InvalidArgumentError(f"need 0 < a < r_cutoff={r_cutoff}, got a={a}")
        if c_upper is None:
            c_upper = estimate_upper_ahlfors(space, upsilon, r_cutoff=r_cutoff).c_upper
        bound = space.total_mass * a ** (-s) + c_upper * upsilon / (upsilon - s) * a ** (upsilon - s)
        kind = 'ball'
    return RieszBoundReport(s=s, upsilon=upsilon, bound_kind=kind, measured_sup=measured,
                            bound_value=bound, passed=measured <= bound, slack=bound - measured,
                            ratio_by_scale=[(float(a), measured / bound)])


def _sorted_partial_sums(space: SampledMeasureSpace, s: float, scales: np.ndarray) -> np.ndarray:
    """Per node and scale t, ``(sum over d < t, total)`` of ``w d**-s`` on d > 0."""

    def scan(chunk: range) -> np.ndarray:
        out = np.empty((len(chunk), scales.size + 1))
        for row, i in enumerate(chunk):
            d = space.dist[i]
            mask = d > 0
            order = np.argsort(d[mask], kind='stable')
            sd = d[mask][order]
            cum = np.concatenate(([0.0], np.cumsum((space.weights[mask] * d[mask] ** (-s))[order])))
            out[row, :-1] = cum[np.searchsorted(sd, scales, side='left')]
            out[row, -1] = cum[-1]
        return out

    return np.vstack(map_chunks(scan, space.n))


def verify_localized_bounds(space: SampledMeasureSpace, upsilon: float, s: float,
                            scale_grid: Optional[Sequence[float]] = None,
                            c_upper: Optional[float] = None) -> RieszBoundReport:
    """Normalized local Riesz integrals: ball part for s < υ, complement otherwise.

    The returned sup is finite on any finite sample; finiteness in the limit
    is judged by the caller through :func:`mesh_stability_ratio`.
    """
    if s < 0:
        raise InvalidArgumentError(f"exponent must be nonnegative, got {s}")
    branch = compare_exponents(s, upsilon)
    kind = {-1: 'ball', 1: 'complement_power', 0: 'complement_log'}[branch]
    scales = default_radius_grid(space) if scale_grid is None else np.asarray(scale_grid, dtype=float)
    if kind == 'complement_log':
        scales = scales[scales < math.exp(-1)]
    if scales.size == 0:
        raise InvalidArgumentError("scale grid is empty")
    partial = _sorted_partial_sums(space, s, scales)
    inside, total = partial[:, :-1], partial[:, -1:]
    if kind == 'ball':
        values = inside * scales ** (s - upsilon)
    elif kind == 'complement_power':
        values = (total - inside) * scales ** (s - upsilon)
    else:
        values = (total - inside) / np.abs(np.log(scales))
    by_scale = values.max(axis=0)
    measured = float(by_scale.max())
    bound = None
    passed = bool(np.isfinite(measured))
    if kind == 'ball' and c_upper is not None:
        bound = 2.0 * c_upper * upsilon / (upsilon - s)
        passed = passed and measured <= bound
    return RieszBoundReport(s=s, upsilon=upsilon, bound_kind=kind, measured_sup=measured,
                            bound_value=bound, passed=passed,
                            slack=None if bound is None else bound - measured,
                            ratio_by_scale=[(float(t), float(v)) for t, v in zip(scales, by_scale)])


def _composite_shape(d: np.ndarray, exponent: float, branch: int) -> np.ndarray:
    if branch < 0:
        return 1.0 + d ** exponent
    if branch == 0:
        return 1.0 + np.abs(np.log(d))
    return d ** exponent


def _binned_sup(d: np.ndarray, ratios: np.ndarray) -> List[Tuple[float, float]]:
    if d.size == 0:
        return []
    edges = geometric_grid(float(d.min()), float(d.max()) * (1 + 1e-9), 2.0)
    bins = np.searchsorted(edges, d, side='right')
    return [(float(edges[b - 1]), float(ratios[bins == b].max())) for b in np.unique(bins)]


def composite_integral_check(space: SampledMeasureSpace, upsilon: float, s1: float, s2: float,
                             pair_sample: Optional[int] = None, seed: int = 0,
                             strong_flag: Optional[bool] = None) -> RieszBoundReport:
    """Empirical constant of the three-case bound for ``∫ d(x,y)^-s1 d(y,z)^-s2 dν(y)``."""
    for name, value in (('s1', s1), ('s2', s2)):
        if value < 0 or compare_exponents(value, upsilon) >= 0:
            raise InvalidArgumentError(f"{name} must lie in [0, upsilon), got {value}")
    branch = compare_exponents(s1 + s2, upsilon)
    if branch == 0:
        if strong_flag is None:
            strong_flag = estimate_strong_upper_ahlfors(space, upsilon).passed
        if not strong_flag:
            raise InvalidArgumentError(
                "s1 + s2 = upsilon requires a strongly upper upsilon-Ahlfors regular space")
    p1 = potential_matrix(space, s1)
    p2 = potential_matrix(space, s2) * space.weights[:, None]
    if pair_sample is None:
        xs, zs = np.nonzero(space.dist > 0)
        integrals = (p1 @ p2)[xs, zs]
    else:
        rng = np.random.default_rng(seed)
        xs, zs = rng.integers(0, space.n, size=(2, pair_sample))
        keep = space.dist[xs, zs] > 0
        xs, zs = xs[keep], zs[keep]
        integrals = np.einsum('ij,ji->i', p1[xs], p2[:, zs])
    if xs.size == 0:
        raise InvalidArgumentError("no pair of distinct nodes to check")
    d = space.dist[xs, zs]
    ratios = integrals / _composite_shape(d, upsilon - s1 - s2, branch)
    return RieszBoundReport(s=s1 + s2, upsilon=upsilon, bound_kind='composite',
                            measured_sup=float(ratios.max()), passed=bool(np.isfinite(ratios.max())),
                            ratio_by_scale=_binned_sup(d, ratios))


def local_composite_check(space: SampledMeasureSpace, upsilon: float, s1: float, s2: float,
                          a: float = 1.0, samples: int = 2000, seed: int = 0) -> RieszBoundReport:
    """Empirical constant of the local composite bound near a close pair.

    For sampled ``x', x''`` at distance δ, ``ξ`` in ``{x', x''}`` and ``y``
    outside ``B(x', 2δ)`` compares
    ``sum over η in B(ξ, aδ) of w d(ξ,η)^-s1 d(η,y)^-s2`` with
    ``d(x',y)^-s2 δ^(υ-s1) + d(x',y)^-s1 δ^(υ-s2)``.
    """
    for name, value in (('s1', s1), ('s2', s2)):
        if value < 0 or compare_exponents(value, upsilon) >= 0:
            raise InvalidArgumentError(f"{name} must lie in [0, upsilon), got {value}")
    if not a > 0:
        raise InvalidArgumentError(f"a must be positive, got {a}")
    rng = np.random.default_rng(seed)
    dist, weights = space.dist, space.weights
    ratios, deltas = [], []
    for _ in range(samples):
        xp, xpp = rng.integers(0, space.n, size=2)
        delta = dist[xp, xpp]
        if delta == 0:
            continue
        far = np.nonzero(dist[xp] >= 2 * delta)[0]
        if far.size == 0:
            continue
        y = far[rng.integers(0, far.size)]
        xi = xp if rng.integers(0, 2) == 0 else xpp
        eta = np.nonzero((dist[xi] < a * delta) & (dist[xi] > 0) & (dist[:, y] > 0))[0]
        lhs = math.fsum(weights[eta] * dist[xi, eta] ** (-s1) * dist[eta, y] ** (-s2))
        dy = dist[xp, y]
        rhs = dy ** (-s2) * delta ** (upsilon - s1) + dy ** (-s1) * delta ** (upsilon - s2)
        ratios.append(lhs / rhs)
        deltas.append(delta)
    if not ratios:
        raise InvalidArgumentError("no admissible sample for the local composite bound")
    ratios = np.asarray(ratios)
    return RieszBoundReport(s=s1 + s2, upsilon=upsilon, bound_kind='annulus',
                            measured_sup=float(ratios.max()), passed=bool(np.isfinite(ratios.max())),
                            ratio_by_scale=_binned_sup(np.asarray(deltas), ratios))


def small_set_modulus(space: SampledMeasureSpace, s: float, mass_budget: float,
                      upsilon: Optional[float] = None) -> float:
    """Worst Riesz mass of a set of total mass at most ``mass_budget``.

    The set around each node is filled greedily with the nearest nodes,
    which maximizes the sum for a decreasing integrand.
    """
    if s < 0 or (upsilon is not None and compare_exponents(s, upsilon) >= 0):
        raise InvalidArgumentError(f"need 0 <= s < upsilon, got s={s}")
    if mass_budget < 0 or mass_budget > space.total_mass * (1 + 1e-12):
        raise InvalidArgumentError(f"mass budget {mass_budget} outside [0, {space.total_mass}]")
    if mass_budget == 0:
        return 0.0
    limit = mass_budget * (1 + 1e-12)

    def scan(chunk: range) -> List[float]:
        values = []
        for i in chunk:
            d = space.dist[i]
            mask = d > 0
            order = np.argsort(d[mask], kind='stable')
            w = space.weights[mask][order]
            count = int(np.searchsorted(np.cumsum(w), limit, side='right'))
            values.append(math.fsum(w[:count] * d[mask][order][:count] ** (-s)))
        return values

    return max(v for chunk in map_chunks(scan, space.n) for v in chunk)


def check_comparability(space: SampledMeasureSpace, rel_tol: float = 1e-12) -> int:
    """Count triples with ``y`` outside ``B(x', 2 d(x', x''))`` where
    ``d(x'', y)`` leaves ``[d(x', y) / 2, 2 d(x', y)]``."""
    dist = space.dist

    def scan(chunk: range) -> int:
        bad = 0
        for a in chunk:
            row = dist[a]
            admissible = row[None, :] >= 2 * row[:, None]
            admissible[a] = False
            lower = dist < 0.5 * row[None, :] * (1 - rel_tol)
            upper = dist > 2.0 * row[None, :] * (1 + rel_tol)
            bad += int(np.count_nonzero(admissible & (lower | upper)))
        return bad

    return sum(map_chunks(scan, space.n, chunk_size=16))


def mesh_stability_ratio(a: float, b: float) -> float:
    """``max/min`` of two nonnegative sups; two zeros count as perfectly stable."""
    if a < 0 or b < 0:
        raise InvalidArgumentError("stability ratio needs nonnegative values")
    if a == 0 and b == 0:
        return 1.0
    if a == 0 or b == 0:
        return math.inf
    return max(a, b) / min(a, b)
