"""Potential norm and smoothness seminorm of a kernel on a sampled space."""
import logging
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.kernels.base import Kernel
from ahlfors_fredholm.parallel import map_chunks
from ahlfors_fredholm.sampled_space import SampledMeasureSpace
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)


class SmoothnessEstimate(NamedTuple):
    value: float
    admissible_triple_count: int
    warning: bool


class SeminormReport(BaseModel):
    """Both class seminorms of a kernel, measured on one space."""
    s1: float
    potential_norm: float
    s2: float
    s3: float
    smoothness_seminorm: Optional[float] = None
    admissible_triple_count: int
    total: float
    irregular: bool = False
    warning: bool = False


def potential_norm(kernel: Kernel, space: SampledMeasureSpace, s: float,
                   table: Optional[np.ndarray] = None) -> float:
    """``max |K(x, y)| d(x, y)**s`` over pairs of distinct points."""
    table = kernel.tabulate(space) if table is None else table
    mask = space.dist > 0
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(table[mask]) * space.dist[mask] ** s))


def smoothness_seminorm(kernel: Kernel, space: SampledMeasureSpace, s2: float, s3: float,
                        cap: Optional[int] = None, seed: int = 0,
                        table: Optional[np.ndarray] = None) -> SmoothnessEstimate:
    """Sup of ``d(x',y)**s2 / d(x',x'')**s3 * |K(x',y) - K(x'',y)|``.

    Triples are admissible when ``d(x', y) >= 2 d(x', x'')``. Beyond ``cap``
    nodes the partners ``x''`` of each ``x'`` are a seeded uniform sample of
    size ``cap``.
    """
    if not s3 > 0:
        raise InvalidArgumentError(f"s3 must be positive, got {s3}")
    cap = DEFAULT_TOLERANCES.triple_cap if cap is None else cap
    table = kernel.tabulate(space) if table is None else table
    dist = space.dist
    n = space.n
    if n > cap:
        logger.warning("smoothness scan on %d nodes samples %d partners per node", n, cap)

    def scan(chunk: range):
        best, count = 0.0, 0
        for a in chunk:
            if n > cap:
                partners = np.random.default_rng([seed, a]).choice(n, size=cap, replace=False)
            else:
                partners = np.arange(n)
            partners = partners[dist[a, partners] > 0]
            if partners.size == 0:
                continue
            d_ab = dist[a, partners]
            d_ay = dist[a]
            admissible = d_ay[None, :] >= 2.0 * d_ab[:, None]
            k = int(np.count_nonzero(admissible))
            if k == 0:
                continue
            diff = np.abs(table[a][None, :] - table[partners])
            values = diff * (d_ay[None, :] ** s2) / (d_ab[:, None] ** s3)
            best = max(best, float(values[admissible].max()))
            count += k
        return best, count

    results = map_chunks(scan, n, chunk_size=32)
    value = max((r[0] for r in results), default=0.0)
    count = sum(r[1] for r in results)
    if count == 0:
        logger.warning("no admissible triples for the smoothness seminorm on %s", space.label)
    return SmoothnessEstimate(value=value, admissible_triple_count=count, warning=count == 0)


def class_membership_report(kernel: Kernel, space: SampledMeasureSpace, s1: float, s2: float,
                            s3: float, cap: Optional[int] = None, seed: int = 0,
                            irregular_factor: Optional[float] = None) -> SeminormReport:
    """Potential norm, smoothness seminorm and their sum (the class norm)."""
    factor = DEFAULT_TOLERANCES.irregular_kernel_factor if irregular_factor is None else irregular_factor
    table = kernel.tabulate(space)
    potential = potential_norm(kernel, space, s1, table=table)
    smooth = smoothness_seminorm(kernel, space, s2, s3, cap=cap, seed=seed, table=table)
    irregular = smooth.value > factor * potential if potential > 0 else smooth.value > 0
    if irregular:
        logger.warning("kernel %s: smoothness seminorm %.4g dwarfs potential norm %.4g",
                       kernel.spec, smooth.value, potential)
    return SeminormReport(s1=s1, potential_norm=potential, s2=s2, s3=s3,
                          smoothness_seminorm=smooth.value,
                          admissible_triple_count=smooth.admissible_triple_count,
                          total=potential + smooth.value, irregular=irregular, warning=smooth.warning)
