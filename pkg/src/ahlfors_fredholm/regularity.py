"""Hölder-type seminorms of sampled functions and multi-mesh regularity experiments.

A statement "mu is omega-regular" is judged by refinement: the seminorm of
the computed solution under omega must stay bounded (growth ratio at most
``growth_ceiling``) as the mesh is refined.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ahlfors_fredholm.ahlfors import geometric_grid, mesh_stability_ratio
from ahlfors_fredholm.datum import Datum, parse_datum_spec
from ahlfors_fredholm.errors import FredholmError, InvalidArgumentError
from ahlfors_fredholm.kernels import (
    Kernel, SeminormReport, class_membership_report, parse_kernel_spec, potential_norm,
)
from ahlfors_fredholm.moduli import PowerModulus, combine_max, modulus_omega, modulus_varpi
from ahlfors_fredholm.operator import NystromSystem, apply, assemble, assemble_normalized, solve_direct
from ahlfors_fredholm.parallel import map_chunks
from ahlfors_fredholm.sampled_space import SampledMeasureSpace
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

KernelSource = Union[str, Kernel, Callable[[SampledMeasureSpace], Kernel]]
DatumSource = Union[str, Datum]

# relative size of differences treated as round-off when comparing seminorms
ROUNDOFF = 1e-12


class NoAdmissiblePairsError(InvalidArgumentError):
    """Every pair of nodes is closer than the seminorm cutoff."""


class ExperimentRefusedError(FredholmError):
    """A measured precondition of an experiment does not hold."""


class KernelClassError(ExperimentRefusedError):
    """Class seminorms of the kernel are not stable under refinement."""

    def __init__(self, message: str, totals: List[float]):
        self.totals = totals
        super().__init__(message)


class HypothesisError(ExperimentRefusedError):
    """``A[K, 1]`` is not regular enough under the improved modulus."""

    def __init__(self, message: str, seminorms: List[float]):
        self.seminorms = seminorms
        super().__init__(message)


@dataclass
class HolderEstimate:
    modulus: object
    min_dist: float
    seminorm: float
    argmax_pair: Tuple[int, int]
    pair_count: int
    by_scale: List[Tuple[float, float]] = field(default_factory=list)


class LargeScaleCheck(BaseModel):
    passed: bool
    lhs: float
    rhs: float
    slack: float
    a: float


class ContinuityExperimentReport(BaseModel):
    meshes: List[str]
    kernel: List[str]
    datum: str
    target_norm: Optional[float]
    scales: List[float]
    potential_norms: List[float] = Field(default_factory=list)
    solution_jumps: List[float]
    datum_jumps: List[float]
    jump_ratios: List[float]
    sup_norms: List[float]
    residuals: List[float]
    shrink_ceiling: float
    discontinuity_flag: bool
    passed: bool


class RegularityExperimentReport(BaseModel):
    meshes: List[str]
    kernel: List[str]
    datum: str
    s1: float
    s2: float
    s3: float
    upsilon: float
    theta: float
    beta: Optional[float] = None
    solution_modulus: str
    predicted_modulus: str
    tested_modulus: str
    min_dists: List[float]
    seminorms: List[float]
    growth_ratios: List[float]
    datum_seminorm: float
    datum_bound: Optional[float] = None
    class_reports: List[SeminormReport] = Field(default_factory=list)
    hypothesis_seminorms: Optional[List[float]] = None
    sup_norms: List[float]
    residuals: List[float]
    growth_ceiling: float
    passed: bool


def holder_seminorm(f, space: SampledMeasureSpace, modulus,
                    min_dist: Optional[float] = None) -> HolderEstimate:
    """``sup |f(x) - f(y)| / omega(d(x, y))`` over pairs with ``d >= min_dist``.

    ``min_dist`` defaults to twice the mesh. Coinciding points never count.
    """
    f = np.asarray(f)
    if f.shape != (space.n,):
        raise InvalidArgumentError(f"f has shape {f.shape}, expected ({space.n},)")
    if min_dist is None:
        if space.mesh is None:
            raise NoAdmissiblePairsError(f"space {space.label} has no pair of distinct points")
        min_dist = 2.0 * space.mesh
    if min_dist < 0:
        raise InvalidArgumentError(f"min_dist must be nonnegative, got {min_dist}")
    low = min_dist if min_dist > 0 else (space.mesh or 1.0)
    edges = geometric_grid(low, max(space.diameter, low) * (1 + 1e-9), 2.0)
    dist = space.dist

    def scan(chunk: range):
        best, pair, count = -1.0, (-1, -1), 0
        bins = np.zeros(edges.size)
        for i in chunk:
            d = dist[i, i + 1:]
            admitted = (d > 0) & (d >= min_dist)
            if not admitted.any():
                continue
            j = np.nonzero(admitted)[0]
            omega = np.asarray(modulus(d[j]), dtype=float)
            if np.any(omega <= 0):
                raise InvalidArgumentError(f"modulus {modulus} is not positive on realized distances")
            ratios = np.abs(f[i] - f[i + 1 + j]) / omega
            k = int(np.argmax(ratios))
            if ratios[k] > best:
                best, pair = float(ratios[k]), (i, int(i + 1 + j[k]))
            count += j.size
            which = np.clip(np.searchsorted(edges, d[j], side='right') - 1, 0, edges.size - 1)
            np.maximum.at(bins, which, ratios)
        return best, pair, count, bins

    results = map_chunks(scan, space.n, chunk_size=128)
    count = sum(r[2] for r in results)
    if count == 0:
        raise NoAdmissiblePairsError(f"no pair of {space.label} is at distance >= {min_dist:g}")
    best = max(results, key=lambda r: r[0])
    bins = np.maximum.reduce([r[3] for r in results])
    by_scale = [(float(edges[k]), float(bins[k])) for k in range(edges.size) if bins[k] > 0]
    return HolderEstimate(modulus=modulus, min_dist=float(min_dist), seminorm=best[0],
                          argmax_pair=best[1], pair_count=count, by_scale=by_scale)


def check_large_scale_bound(f, space: SampledMeasureSpace, modulus, a: float) -> LargeScaleCheck:
    """Check ``sup over d >= a of |f(x)-f(y)|/omega(d) <= 2 sup|f| / omega(a)``."""
    if not a > 0:
        raise InvalidArgumentError(f"a must be positive, got {a}")
    f = np.asarray(f)
    try:
        lhs = holder_seminorm(f, space, modulus, min_dist=a).seminorm
    except NoAdmissiblePairsError:
        lhs = 0.0
    rhs = (2.0 * float(np.max(np.abs(f)))) / float(modulus(a))
    passed = lhs <= rhs * (1 + ROUNDOFF)
    if not passed:
        logger.error("Large-scale bound violated: %.17g > %.17g", lhs, rhs)
    return LargeScaleCheck(passed=passed, lhs=lhs, rhs=rhs, slack=rhs - lhs, a=a)


def nearest_neighbor_jump(f, space: SampledMeasureSpace) -> float:
    """Largest ``|f(x) - f(y)|`` over nodes y nearest to x (distinct points only)."""
    f = np.asarray(f)
    jump = 0.0
    for i in range(space.n):
        d = space.dist[i]
        positive = d > 0
        if not positive.any():
            continue
        nearest = positive & (d <= d[positive].min() * (1 + 1e-12))
        jump = max(jump, float(np.max(np.abs(f[i] - f[nearest]))))
    return jump


def _kernel_for(source: KernelSource, space: SampledMeasureSpace) -> Kernel:
    if isinstance(source, Kernel):
        return source
    if isinstance(source, str):
        return parse_kernel_spec(source)
    if callable(source):
        return source(space)
    raise InvalidArgumentError(f"cannot build a kernel from {source!r}")


def _datum(source: DatumSource) -> Datum:
    return source if isinstance(source, Datum) else parse_datum_spec(source)


def _check_meshes(meshes: Sequence[SampledMeasureSpace]) -> None:
    if len(meshes) < 2:
        raise InvalidArgumentError(f"an experiment needs at least two meshes, got {len(meshes)}")


def _system(space: SampledMeasureSpace, kernel: Kernel, scale: bool,
            target_norm: float) -> Tuple[NystromSystem, float]:
    if scale:
        return assemble_normalized(space, kernel, target_norm)
    return assemble(space, kernel), 1.0


def growth_ratio(previous: float, current: float, floor: float = 0.0) -> float:
    """``current / previous`` with values at or below ``floor`` read as zero."""
    if previous <= floor and current <= floor:
        return 1.0
    if current <= floor:
        return 0.0
    if previous <= floor:
        return math.inf
    return current / previous


def _roundoff_floor(f: np.ndarray, modulus, min_dist: float) -> float:
    return ROUNDOFF * (1.0 + float(np.max(np.abs(f)))) / float(modulus(min_dist))


def run_continuity_experiment(meshes: Sequence[SampledMeasureSpace], kernel: KernelSource,
                              g: DatumSource, s: Optional[float] = None,
                              upsilon: Optional[float] = None, target_norm: float = 0.5,
                              scale: bool = True,
                              tolerances: Optional[Tolerances] = None) -> ContinuityExperimentReport:
    """Solve on every mesh and follow the largest nearest-neighbour jump of the solution.

    The jumps must shrink by at least ``tolerances.jump_shrink_ceiling``
    (0.9 by default) per refinement, not merely stay below 1: a solution
    with a genuine jump has jumps that approach their limit from above, so
    a ceiling of 1 would accept it. The ceiling used is in the report.
    Without ``s`` and ``upsilon`` the potential-type precondition is not
    checked.
    """
    tol = tolerances or DEFAULT_TOLERANCES
    _check_meshes(meshes)
    datum = _datum(g)
    if s is None or upsilon is None:
        logger.warning("potential exponent s or dimension upsilon not given; "
                       "the s < upsilon precondition is not checked")
    elif not 0 <= s < upsilon:
        raise InvalidArgumentError(f"continuity needs a kernel of potential type s < upsilon, got s={s}")
    kernels = [_kernel_for(kernel, space) for space in meshes]
    potentials = []
    if s is not None:
        potentials = [potential_norm(k, space, s) for k, space in zip(kernels, meshes)]
        for a, b in zip(potentials, potentials[1:]):
            if mesh_stability_ratio(a, b) > tol.stability_factor:
                raise KernelClassError(f"potential norms {potentials} are not stable under refinement",
                                       potentials)
    scales, jumps, datum_jumps, sups, residuals = [], [], [], [], []
    for space, k in zip(meshes, kernels):
        logger.info("continuity experiment: solving on %s", space.label)
        system, lam = _system(space, k, scale, target_norm)
        values = datum(space)
        report = solve_direct(system, values, tol.residual, tol.condition_limit)
        scales.append(lam)
        jumps.append(nearest_neighbor_jump(report.mu, space))
        datum_jumps.append(nearest_neighbor_jump(values, space))
        sups.append(float(np.max(np.abs(report.mu))))
        residuals.append(report.residual_inf)
    floor = ROUNDOFF * (1.0 + max(sups))
    ratios = [growth_ratio(a, b, floor) for a, b in zip(jumps, jumps[1:])]
    passed = all(r <= tol.jump_shrink_ceiling or (a <= floor and b <= floor)
                 for r, a, b in zip(ratios, jumps, jumps[1:]))
    if not passed:
        logger.warning("solution jumps %s do not shrink under refinement", jumps)
    return ContinuityExperimentReport(
        meshes=[m.label for m in meshes], kernel=[k.spec for k in kernels], datum=datum.spec,
        target_norm=target_norm if scale else None, scales=scales, potential_norms=potentials,
        solution_jumps=jumps, datum_jumps=datum_jumps, jump_ratios=ratios, sup_norms=sups,
        residuals=residuals, shrink_ceiling=tol.jump_shrink_ceiling,
        discontinuity_flag=not passed, passed=passed)


def _class_reports(kernels: List[Kernel], meshes: Sequence[SampledMeasureSpace], s1: float, s2: float,
                   s3: float, tol: Tolerances, seed: int) -> List[SeminormReport]:
    reports = [class_membership_report(k, space, s1, s2, s3, cap=tol.triple_cap, seed=seed,
                                       irregular_factor=tol.irregular_kernel_factor)
               for k, space in zip(kernels, meshes)]
    totals = [r.total for r in reports]
    for a, b in zip(totals, totals[1:]):
        if not (math.isfinite(a) and math.isfinite(b)) or mesh_stability_ratio(a, b) > tol.stability_factor:
            raise KernelClassError(
                f"class seminorms {totals} of ({s1:g}, {s2:g}, {s3:g}) are not stable under refinement", totals)
    return reports


def _hypothesis(systems: List[NystromSystem], omega, min_dist: Optional[float],
                tol: Tolerances) -> List[float]:
    seminorms, floors = [], []
    for system in systems:
        row_sums = apply(system, np.ones(system.n))
        estimate = holder_seminorm(row_sums, system.space, omega, min_dist)
        seminorms.append(estimate.seminorm)
        floors.append(_roundoff_floor(row_sums, omega, estimate.min_dist))
    growth = [growth_ratio(a, b, max(fa, fb))
              for a, b, fa, fb in zip(seminorms, seminorms[1:], floors, floors[1:])]
    if any(g > tol.growth_ceiling for g in growth):
        raise HypothesisError(f"A[K, 1] is not {omega}-regular under refinement: seminorms {seminorms}",
                              seminorms)
    return seminorms


def _run_regularity(meshes, kernel, g, s1, s2, s3, upsilon, theta, beta, solution_modulus, hypothesis,
                    target_norm, scale, test_modulus, min_dist, check_class, tolerances, seed):
    tol = tolerances or DEFAULT_TOLERANCES
    _check_meshes(meshes)
    if not 0 < theta <= 1:
        raise InvalidArgumentError(f"theta must lie in (0, 1], got {theta}")
    datum = _datum(g)
    predicted = combine_max(PowerModulus(beta=theta), solution_modulus)
    tested = predicted if test_modulus is None else test_modulus
    kernels = [_kernel_for(kernel, space) for space in meshes]
    systems = [_system(space, k, scale, target_norm)[0] for space, k in zip(meshes, kernels)]

    hypothesis_seminorms = None
    if hypothesis is not None:
        hypothesis_seminorms = _hypothesis(systems, hypothesis, min_dist, tol)
    reports = _class_reports(kernels, meshes, s1, s2, s3, tol, seed) if check_class else []

    seminorms, floors, dists, sups, residuals = [], [], [], [], []
    for system in systems:
        logger.info("regularity experiment: solving on %s", system.space.label)
        values = datum(system.space)
        solved = solve_direct(system, values, tol.residual, tol.condition_limit)
        estimate = holder_seminorm(solved.mu, system.space, tested, min_dist)
        seminorms.append(estimate.seminorm)
        floors.append(_roundoff_floor(solved.mu, tested, estimate.min_dist))
        dists.append(estimate.min_dist)
        sups.append(float(np.max(np.abs(solved.mu))))
        residuals.append(solved.residual_inf)
    growth = [growth_ratio(a, b, max(fa, fb))
              for a, b, fa, fb in zip(seminorms, seminorms[1:], floors, floors[1:])]
    finest = meshes[-1]
    datum_seminorm = holder_seminorm(datum(finest), finest, PowerModulus(beta=theta), min_dist).seminorm
    bound = None
    if datum.holder_bound is not None and datum.holder_bound[0] == theta:
        bound = datum.holder_bound[1]
    passed = all(r <= tol.growth_ceiling for r in growth)
    logger.info("seminorms under %s: %s (growth %s)", tested, seminorms, growth)
    return RegularityExperimentReport(
        meshes=[m.label for m in meshes], kernel=[k.spec for k in kernels], datum=datum.spec,
        s1=s1, s2=s2, s3=s3, upsilon=upsilon, theta=theta, beta=beta,
        solution_modulus=str(solution_modulus), predicted_modulus=str(predicted), tested_modulus=str(tested),
        min_dists=dists, seminorms=seminorms, growth_ratios=growth, datum_seminorm=datum_seminorm,
        datum_bound=bound, class_reports=reports, hypothesis_seminorms=hypothesis_seminorms,
        sup_norms=sups, residuals=residuals, growth_ceiling=tol.growth_ceiling, passed=passed)


def run_holder_experiment(meshes: Sequence[SampledMeasureSpace], s1: float, s2: float, s3: float,
                          theta: float, kernel: KernelSource, g: DatumSource, upsilon: float = 1.0,
                          strong: bool = False, target_norm: float = 0.5, scale: bool = True,
                          test_modulus=None, min_dist: Optional[float] = None, check_class: bool = True,
                          tolerances: Optional[Tolerances] = None, seed: int = 0) -> RegularityExperimentReport:
    """Solution seminorms under ``max(r^theta, varpi)`` for a kernel of class (s1, s2, s3)."""
    varpi = modulus_varpi(s1, s2, s3, upsilon, strong=strong)
    return _run_regularity(meshes, kernel, g, s1, s2, s3, upsilon, theta, None, varpi, None,
                           target_norm, scale, test_modulus, min_dist, check_class, tolerances, seed)


def run_improved_holder_experiment(meshes: Sequence[SampledMeasureSpace], s1: float, s2: float, s3: float,
                                   beta: float, theta: float, kernel: KernelSource, g: DatumSource,
                                   upsilon: float = 1.0, strong: bool = False, target_norm: float = 0.5,
                                   scale: bool = True, test_modulus=None, min_dist: Optional[float] = None,
                                   check_class: bool = True, tolerances: Optional[Tolerances] = None,
                                   seed: int = 0) -> RegularityExperimentReport:
    """As :func:`run_holder_experiment` with the modulus ``omega`` that uses beta-regularity of ``A[K, 1]``.

    The regularity of ``A[K, 1]`` is measured on every mesh first; an
    unstable seminorm refuses the experiment with :class:`HypothesisError`.
    """
    omega = modulus_omega(s1, s2, s3, beta, upsilon, strong=strong)
    return _run_regularity(meshes, kernel, g, s1, s2, s3, upsilon, theta, beta, omega, omega,
                           target_norm, scale, test_modulus, min_dist, check_class, tolerances, seed)
