"""Nyström discretization of ``A[K, mu](x) = ∫ K(x, y) mu(y) dν(y)`` and its solvers.

The diagonal of every matrix is exactly zero: the point masses play the
role of a measure without atoms, so the node itself never contributes.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from ahlfors_fredholm.errors import FredholmError, InvalidArgumentError
from ahlfors_fredholm.kernels import Kernel, ScaledKernel, TabulatedKernel
from ahlfors_fredholm.sampled_space import SampledMeasureSpace
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)


class AssemblyError(FredholmError):
    """A kernel value off the diagonal is not finite."""

    def __init__(self, message: str, pair: Tuple[int, int]):
        self.pair = pair
        super().__init__(message)


class SolveError(FredholmError):
    """The discrete equation could not be solved to tolerance."""


class NeumannRefusedError(SolveError):
    """The Neumann series is not guaranteed to converge."""


@dataclass(frozen=True, eq=False)
class NystromSystem:
    """Kernel table, operator matrix ``A[i, j] = w_j K(x_i, x_j)`` and its max row sum."""
    space: SampledMeasureSpace
    kernel: Kernel
    kernel_matrix: np.ndarray
    matrix: np.ndarray
    row_sum_norm: float

    @property
    def n(self) -> int:
        return self.space.n


@dataclass
class SolveReport:
    mu: np.ndarray
    residual_inf: float
    method: str
    neumann_terms: Optional[int] = None
    condition_estimate: Optional[float] = None


def _row_sum_norm(matrix: np.ndarray) -> float:
    return float(np.abs(matrix).sum(axis=1).max())


def _freeze(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


def assemble(space: SampledMeasureSpace, kernel: Kernel) -> NystromSystem:
    table = np.array(kernel.tabulate(space))
    off_diagonal = ~np.eye(space.n, dtype=bool)
    bad = off_diagonal & ~np.isfinite(table)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise AssemblyError(f"kernel {kernel.spec} is not finite at node pair ({i}, {j})", pair=(i, j))
    np.fill_diagonal(table, 0)
    matrix = table * space.weights[None, :]
    _freeze(table, matrix)
    system = NystromSystem(space=space, kernel=kernel, kernel_matrix=table, matrix=matrix,
                           row_sum_norm=_row_sum_norm(matrix))
    logger.debug("assembled %s on %s, row-sum norm %.6g", kernel.spec, space.label, system.row_sum_norm)
    return system


def normalize_to(system: NystromSystem, target_norm: float) -> float:
    """Scale factor taking the row-sum norm of the system to ``target_norm``."""
    if not 0 < target_norm < 1:
        raise InvalidArgumentError(f"target norm must lie in (0, 1), got {target_norm}")
    if system.row_sum_norm == 0:
        raise InvalidArgumentError(f"kernel {system.kernel.spec} has zero row-sum norm; nothing to scale")
    return target_norm / system.row_sum_norm


def scaled_system(system: NystromSystem, lam: float) -> NystromSystem:
    table = lam * system.kernel_matrix
    matrix = lam * system.matrix
    _freeze(table, matrix)
    return NystromSystem(space=system.space, kernel=ScaledKernel(system.kernel, lam),
                         kernel_matrix=table, matrix=matrix, row_sum_norm=_row_sum_norm(matrix))


def assemble_normalized(space: SampledMeasureSpace, kernel: Kernel,
                        target_norm: float = 0.5) -> Tuple[NystromSystem, float]:
    """Assemble and scale to the target norm; a zero kernel is returned unscaled."""
    system = assemble(space, kernel)
    if system.row_sum_norm == 0:
        return system, 1.0
    lam = normalize_to(system, target_norm)
    return scaled_system(system, lam), lam


def _vector(system: NystromSystem, f, name: str) -> np.ndarray:
    f = np.asarray(f)
    if f.shape != (system.n,):
        raise InvalidArgumentError(f"{name} has shape {f.shape}, expected ({system.n},)")
    return f


def apply(system: NystromSystem, f) -> np.ndarray:
    return system.matrix @ _vector(system, f, "f")


def _same_space(system1: NystromSystem, system2: NystromSystem) -> None:
    s1, s2 = system1.space, system2.space
    if s1 is not s2 and (s1.label != s2.label or s1.n != s2.n):
        raise InvalidArgumentError(f"systems live on different spaces: {s1.label} and {s2.label}")


def _compose_tables(k1: np.ndarray, k2: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # zero diagonals of both factors drop t = i and t = j from the sum
    k3 = k1 @ (weights[:, None] * k2)
    np.fill_diagonal(k3, 0)
    return k3


def compose_numeric(system1: NystromSystem, system2: NystromSystem) -> TabulatedKernel:
    """``K3[i, j] = sum over t not in {i, j} of w_t K1(i, t) K2(t, j)``."""
    _same_space(system1, system2)
    space = system1.space
    k3 = _compose_tables(system1.kernel_matrix, system2.kernel_matrix, space.weights)
    return TabulatedKernel(k3, label=space.label)


def iterate_kernel(system: NystromSystem, r: int) -> TabulatedKernel:
    """The r-fold composite kernel ``K^(r)``, tabulated."""
    if r < 1:
        raise InvalidArgumentError(f"iteration count must be at least 1, got {r}")
    table = system.kernel_matrix
    for _ in range(r - 1):
        table = _compose_tables(table, system.kernel_matrix, system.space.weights)
    return TabulatedKernel(table, label=system.space.label)


def residual_inf(system: NystromSystem, mu: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(mu - system.matrix @ mu - g)))


def solve_direct(system: NystromSystem, g, residual_tol: Optional[float] = None,
                 condition_limit: Optional[float] = None) -> SolveReport:
    """LU solve of ``(I - A) mu = g`` with one refinement step if needed."""
    residual_tol = DEFAULT_TOLERANCES.residual if residual_tol is None else residual_tol
    condition_limit = DEFAULT_TOLERANCES.condition_limit if condition_limit is None else condition_limit
    g = _vector(system, g, "g")
    lhs = np.eye(system.n) - system.matrix
    condition = float(np.linalg.cond(lhs))
    if not np.isfinite(condition) or condition > condition_limit:
        raise SolveError(f"I - A is ill-conditioned (condition {condition:.3g} > {condition_limit:.3g})")
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            lu = scipy.linalg.lu_factor(lhs)
        except (scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            raise SolveError(f"LU factorization of I - A failed: {e}") from e
    mu = scipy.linalg.lu_solve(lu, g)
    budget = residual_tol * (1.0 + float(np.max(np.abs(g))))
    residual = residual_inf(system, mu, g)
    if residual > budget:
        logger.info("residual %.3g above %.3g, refining once", residual, budget)
        mu = mu + scipy.linalg.lu_solve(lu, g - (mu - system.matrix @ mu))
        residual = residual_inf(system, mu, g)
        if residual > budget:
            raise SolveError(f"direct solve residual {residual:.3g} exceeds {budget:.3g}")
    logger.debug("direct solve on %s: residual %.3g, condition %.3g", system.space.label, residual, condition)
    return SolveReport(mu=mu, residual_inf=residual, method='direct', condition_estimate=condition)


def solve_neumann(system: NystromSystem, g, tol: Optional[float] = None,
                  max_terms: Optional[int] = None) -> SolveReport:
    """Partial sums of ``sum_j A^j g``, stopped when a term drops below ``tol`` in max norm."""
    tol = DEFAULT_TOLERANCES.neumann_tol if tol is None else tol
    max_terms = DEFAULT_TOLERANCES.neumann_max_terms if max_terms is None else max_terms
    g = _vector(system, g, "g")
    if system.row_sum_norm >= 1:
        raise NeumannRefusedError(
            f"row-sum norm {system.row_sum_norm:.6g} >= 1, the Neumann series is not guaranteed to converge")
    mu = np.array(g, dtype=np.result_type(g, system.matrix, float))
    term = mu.copy()
    terms = 1
    while True:
        term = system.matrix @ term
        if np.max(np.abs(term)) < tol:
            break
        if terms >= max_terms:
            raise SolveError(f"Neumann series did not reach {tol:.3g} within {max_terms} terms")
        mu += term
        terms += 1
    return SolveReport(mu=mu, residual_inf=residual_inf(system, mu, g), method='neumann',
                       neumann_terms=terms)


def verify_bootstrap(system: NystromSystem, mu, g, r: int) -> float:
    """``max |A^r mu - mu + sum_{j<r} A^j g|``, zero up to round-off for a solution mu."""
    if r < 1:
        raise InvalidArgumentError(f"bootstrap order must be at least 1, got {r}")
    mu = _vector(system, mu, "mu")
    g = _vector(system, g, "g")
    power = mu
    partial = np.zeros_like(g, dtype=np.result_type(g, system.matrix, float))
    term = g
    for _ in range(r):
        power = system.matrix @ power
        partial = partial + term
        term = system.matrix @ term
    return float(np.max(np.abs(power - mu + partial)))


def bootstrap_scale(mu, g) -> float:
    """Scale against which bootstrap deviations are judged."""
    return max(1.0, float(np.max(np.abs(mu))), float(np.max(np.abs(g))))
