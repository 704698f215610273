"""Exponent algebra of kernel classes under composition and iteration.

Only exponents and flags are tracked, never the multiplicative constants.
A class whose statement holds "for every eps > 0" carries ``eps_slack``
together with the numeric eps used when a number is needed downstream.
"""
import logging
import math
import re
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ahlfors_fredholm.ahlfors import compare_exponents
from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.moduli import (
    LogPowerModulus, MaxModulus, PowerModulus, check_modulus_conditions, modulus_omega, modulus_varpi,
    omega_theta, parse_modulus,
)
from ahlfors_fredholm.settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

CASE_LABELS = ('i', 'ii', 'iii', 'iv', 'v', 'vi', 'vii', 'viii', 'ix')


class KernelClass(BaseModel):
    """Exponents (s1, s2, s3) of a kernel class in dimension upsilon."""
    model_config = ConfigDict(frozen=True)

    s1: float
    s2: Optional[float] = Field(default=None, ge=0)
    s3: Optional[float] = None
    upsilon: float = Field(gt=0)
    log_flag: bool = False
    eps_slack: bool = False
    eps: Optional[float] = None
    eps_in_first: bool = False
    eps_in_second: bool = False
    bounded_continuous: bool = False
    case: Optional[str] = None

    def __str__(self):
        first = 'ε' if self.eps_in_first else f"{self.s1:g}"
        if self.s2 is None:
            text = f"K({first})"
        else:
            second = 'ε' if self.eps_in_second and self.s2 == self.eps else f"{self.s2:g}"
            text = f"K({first}, {second}, {self.s3:g})"
        notes = []
        if self.case:
            notes.append(f"case ({self.case})")
        if self.log_flag:
            notes.append("log factor")
        if self.bounded_continuous:
            notes.append("bounded, continuous")
        if self.eps_slack:
            notes.append(f"every ε > 0, ε = {self.eps:g} used")
        return text + f" @ υ={self.upsilon:g}" + (f" [{'; '.join(notes)}]" if notes else "")


_CLASS_RE = re.compile(r'^class:([^,@]+),([^,@]+),([^,@]+)@(.+)$')
_SPLIT_RE = re.compile(r'^split:([^,]+),([^,]+)$')


def parse_kernel_class(text: str) -> KernelClass:
    """Parse ``class:s1,s2,s3@upsilon``."""
    match = _CLASS_RE.match(text.strip().replace(' ', ''))
    if not match:
        raise InvalidArgumentError(f"cannot parse kernel class {text!r}; expected class:s1,s2,s3@upsilon")
    try:
        s1, s2, s3, upsilon = (float(g) for g in match.groups())
    except ValueError as e:
        raise InvalidArgumentError(f"kernel class {text!r} has a non-numeric exponent") from e
    if not s3 > 0:
        raise InvalidArgumentError(f"s3 must be positive, got {s3}")
    try:
        return KernelClass(s1=s1, s2=s2, s3=s3, upsilon=upsilon)
    except ValueError as e:
        raise InvalidArgumentError(f"invalid kernel class {text!r}: {e}") from e


def parse_split(text: str) -> Tuple[float, float]:
    """Parse ``split:s2p,s2pp``."""
    match = _SPLIT_RE.match(text.strip().replace(' ', ''))
    if not match:
        raise InvalidArgumentError(f"cannot parse split {text!r}; expected split:s2p,s2pp")
    try:
        return float(match.group(1)), float(match.group(2))
    except ValueError as e:
        raise InvalidArgumentError(f"split {text!r} has a non-numeric part") from e


def compose_potential_classes(t1: float, t2: float, upsilon: float) -> KernelClass:
    """Potential class of ``∫ K1(x,t) K2(t,y) dν(t)`` for factors of exponents ``υ - t_l``."""
    for name, t in (('t1', t1), ('t2', t2)):
        if not (t > 0 and compare_exponents(t, upsilon) <= 0):
            raise InvalidArgumentError(f"{name} must lie in (0, upsilon], got {t}")
    total = t1 + t2
    branch = compare_exponents(total, upsilon)
    if branch < 0:
        return KernelClass(s1=upsilon - total, upsilon=upsilon)
    if branch == 0:
        return KernelClass(s1=0.0, upsilon=upsilon, log_flag=True)
    return KernelClass(s1=0.0, upsilon=upsilon, bounded_continuous=True)


def iterated_class(s: float, upsilon: float, r: int) -> KernelClass:
    """Potential class of the r-fold composite of a kernel of potential type s."""
    if r < 1:
        raise InvalidArgumentError(f"iteration count must be at least 1, got {r}")
    if s < 0 or compare_exponents(s, upsilon) >= 0:
        raise InvalidArgumentError(f"need 0 <= s < upsilon, got s={s}")
    current = KernelClass(s1=s, upsilon=upsilon)
    for _ in range(r - 1):
        if current.log_flag or current.bounded_continuous:
            return KernelClass(s1=0.0, upsilon=upsilon, bounded_continuous=True)
        current = compose_potential_classes(upsilon - current.s1, upsilon - s, upsilon)
    return current


def compose_general(klass: KernelClass, split: Tuple[float, float], t1: float,
                    strong: bool = False, eps: Optional[float] = None) -> KernelClass:
    """Class of ``K3 = ∫ K1(·,t) K2(t,·) dν(t)`` for ``K1`` in ``klass`` and ``K2`` of potential type t1.

    ``split = (s2p, s2pp)`` with ``s2p + s2pp = s2``. The two comparisons
    ``s1 + t1`` vs υ and ``s2p + t1`` vs υ pick one of nine cases.
    """
    eps = DEFAULT_TOLERANCES.eps if eps is None else eps
    upsilon, s1, s2, s3 = klass.upsilon, klass.s1, klass.s2, klass.s3
    s2p, s2pp = split
    if s2 is None or s3 is None:
        raise InvalidArgumentError("composition needs a class with all three exponents")
    if not math.isclose(s2p + s2pp, s2, rel_tol=1e-12, abs_tol=1e-12):
        raise InvalidArgumentError(f"split {s2p:g} + {s2pp:g} does not add up to s2 = {s2:g}")
    for name, value in (('s1', s1), ('t1', t1), ("s2'", s2p)):
        if value < 0 or compare_exponents(value, upsilon) >= 0:
            raise InvalidArgumentError(f"{name} must lie in [0, upsilon), got {value}")
    if not 0 < s3 <= 1:
        raise InvalidArgumentError(f"s3 must lie in (0, 1], got {s3}")
    if s2pp < 0 or compare_exponents(s2pp, s3) > 0:
        raise InvalidArgumentError(f"s2'' must lie in [0, s3], got {s2pp}")
    if not eps > 0:
        raise InvalidArgumentError(f"eps must be positive, got {eps}")

    outer = compare_exponents(s1 + t1, upsilon)
    inner = compare_exponents(s2p + t1, upsilon)
    if (outer == 0 or inner == 0) and not strong:
        raise InvalidArgumentError(
            "equality case of the composition requires Y strongly upper upsilon-Ahlfors regular")

    first = {-1: 0.0, 0: eps, 1: s1 + t1 - upsilon}[outer]
    second_terms = [s1, t1]
    if inner == 0:
        second_terms.append(eps)
    elif inner > 0:
        second_terms.append(s2p + t1 - upsilon)
    third = min(s3 - s2pp, upsilon - s1, upsilon - t1)
    case = CASE_LABELS[3 * (outer + 1) + (inner + 1)]
    slack = outer == 0 or inner == 0
    logger.debug("composition case (%s): outer=%d inner=%d", case, outer, inner)
    return KernelClass(s1=first, s2=max(second_terms), s3=third, upsilon=upsilon,
                       eps_slack=slack, eps=eps if slack else None,
                       eps_in_first=outer == 0, eps_in_second=inner == 0, case=case)


def suggest_split(klass: KernelClass, t1: float, strong: bool = False,
                  eps: Optional[float] = None, steps: int = 100) -> Tuple[float, float, KernelClass]:
    """Grid search over ``s2'' in [0, s3]`` for the split with the largest third exponent.

    Ties prefer the smaller second, then first, exponent.
    """
    if klass.s2 is None or klass.s3 is None:
        raise InvalidArgumentError("split search needs a class with all three exponents")
    best = None
    for s2pp in np.linspace(0.0, klass.s3, steps + 1):
        s2p = klass.s2 - float(s2pp)
        try:
            composed = compose_general(klass, (s2p, float(s2pp)), t1, strong=strong, eps=eps)
        except InvalidArgumentError:
            continue
        key = (-composed.s3, composed.s2, composed.s1)
        if best is None or key < best[0]:
            best = (key, s2p, float(s2pp), composed)
    if best is None:
        raise InvalidArgumentError(f"no admissible split of s2 = {klass.s2:g} for t1 = {t1:g}")
    return best[1], best[2], best[3]


def smoothing_order(s: float, upsilon: float) -> int:
    """Smallest iteration count after which a kernel of potential type s becomes bounded.

    With ``q = υ / (υ - s)``: a non-integer q gives ``floor(q) + 1``, an
    integer q (equality case, where one more step removes the log factor)
    gives ``q + 1``. ``s = 0`` falls in the integer case with ``q = 1``.
    """
    if s < 0 or compare_exponents(s, upsilon) >= 0:
        raise InvalidArgumentError(f"smoothing order needs 0 <= s < upsilon, got s={s}, upsilon={upsilon}")
    q = upsilon / (upsilon - s)
    nearest = round(q)
    if abs(q - nearest) <= 1e-9 * q:
        return int(nearest) + 1
    return int(math.floor(q)) + 1


def boundary_example(n: int, alpha: float):
    """Class and solution modulus of double-layer type kernels on an (n-1)-dimensional boundary.

    The kernel class is ``(n-1-alpha, n-alpha, 1)`` with ``υ = n-1``. For
    ``alpha < 1`` (Lipschitz-type boundary) the modulus is ``r^alpha``; for
    ``alpha = 1`` (C^1 boundary, strongly regular) it is ``max(r, omega_1)``.
    """
    if n < 2:
        raise InvalidArgumentError(f"ambient dimension must be at least 2, got {n}")
    if not 0 < alpha <= 1:
        raise InvalidArgumentError(f"alpha must lie in (0, 1], got {alpha}")
    upsilon = float(n - 1)
    klass = KernelClass(s1=upsilon - alpha, s2=n - alpha, s3=1.0, upsilon=upsilon)
    modulus = modulus_varpi(klass.s1, klass.s2, klass.s3, upsilon, strong=alpha == 1)
    return klass, modulus


__all__ = [
    'CASE_LABELS', 'KernelClass', 'LogPowerModulus', 'MaxModulus', 'PowerModulus',
    'check_modulus_conditions', 'parse_modulus',
    'boundary_example', 'compose_general', 'compose_potential_classes', 'iterated_class',
    'modulus_omega', 'modulus_varpi', 'omega_theta', 'parse_kernel_class', 'parse_split',
    'smoothing_order', 'suggest_split',
]
