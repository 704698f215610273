"""Moduli of continuity and the solution moduli of the regularity theorems."""
import logging
import math
import re
from typing import Annotated, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ahlfors_fredholm.ahlfors import compare_exponents
from ahlfors_fredholm.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def _as_output(r, values: np.ndarray):
    return float(values) if np.ndim(r) == 0 else values


def _radii(r) -> np.ndarray:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise InvalidArgumentError("moduli are defined on [0, +inf)")
    return arr


def omega_theta(theta: float, r):
    """``r**theta |ln r|`` up to ``r_theta = exp(-1/theta)``, constant beyond, 0 at 0."""
    if not 0 < theta <= 1:
        raise InvalidArgumentError(f"theta must lie in (0, 1], got {theta}")
    arr = _radii(r)
    cutoff = math.exp(-1.0 / theta)
    plateau = math.exp(-1.0) / theta
    out = np.full(arr.shape, plateau)
    inside = (arr > 0) & (arr <= cutoff)
    small = arr[inside]
    # the formula peaks at the cutoff; clamp so rounding cannot break monotonicity
    out[inside] = np.minimum(small ** theta * np.abs(np.log(small)), plateau)
    out[arr == 0] = 0.0
    return _as_output(r, out)


class PowerModulus(BaseModel):
    """``r**beta``."""
    model_config = ConfigDict(frozen=True)
    kind: Literal['power'] = 'power'
    beta: float = Field(gt=0)

    def __call__(self, r):
        arr = _radii(r)
        return _as_output(r, arr ** self.beta)

    def __str__(self):
        return f"r^{self.beta:g}"


class LogPowerModulus(BaseModel):
    """The capped log-power modulus ``omega_theta``."""
    model_config = ConfigDict(frozen=True)
    kind: Literal['log_power'] = 'log_power'
    theta: float = Field(gt=0, le=1)

    @property
    def cutoff(self) -> float:
        return math.exp(-1.0 / self.theta)

    @property
    def plateau(self) -> float:
        return math.exp(-1.0) / self.theta

    def __call__(self, r):
        return omega_theta(self.theta, r)

    def __str__(self):
        return f"omega_theta({self.theta:g})[plateau {self.plateau:.6g} beyond r={self.cutoff:.6g}]"


class MaxModulus(BaseModel):
    """Pointwise maximum of several moduli."""
    model_config = ConfigDict(frozen=True)
    kind: Literal['max'] = 'max'
    parts: List['Modulus'] = Field(min_length=1)

    def __call__(self, r):
        arr = _radii(r)
        values = np.maximum.reduce([np.asarray(part(arr), dtype=float) for part in self.parts])
        return _as_output(r, values)

    def __str__(self):
        return "max(" + ", ".join(str(p) for p in self.parts) + ")"


Modulus = Annotated[Union[PowerModulus, LogPowerModulus, MaxModulus], Field(discriminator='kind')]
MaxModulus.model_rebuild()


def combine_max(*moduli) -> Union[PowerModulus, LogPowerModulus, MaxModulus]:
    """Max of moduli, dropping repeated parts; a single part is returned as is."""
    parts = []
    for m in moduli:
        for part in (m.parts if isinstance(m, MaxModulus) else [m]):
            if part not in parts:
                parts.append(part)
    return parts[0] if len(parts) == 1 else MaxModulus(parts=parts)


_POWER_RE = re.compile(r'^r\^([0-9.eE+-]+)$')
_LOG_RE = re.compile(r'^omega_theta\(([0-9.eE+-]+)\)(\[.*\])?$')


def _split_top_level(text: str) -> List[str]:
    parts, depth, start = [], 0, 0
    for k, ch in enumerate(text):
        if ch in '([':
            depth += 1
        elif ch in ')]':
            depth -= 1
        elif ch == ',' and depth == 0:
            parts.append(text[start:k])
            start = k + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


def parse_modulus(text: str):
    """Parse ``r^b``, ``omega_theta(t)`` or ``max(m1, m2, ...)``."""
    text = text.strip().replace(' ', '')
    try:
        if text.startswith('max(') and text.endswith(')'):
            return MaxModulus(parts=[parse_modulus(p) for p in _split_top_level(text[4:-1])])
        match = _POWER_RE.match(text)
        if match:
            return PowerModulus(beta=float(match.group(1)))
        match = _LOG_RE.match(text)
        if match:
            return LogPowerModulus(theta=float(match.group(1)))
    except ValueError as e:
        raise InvalidArgumentError(f"invalid modulus {text!r}: {e}") from e
    raise InvalidArgumentError(f"cannot parse modulus {text!r}; use r^b, omega_theta(t) or max(...)")


class ModulusCheck(BaseModel):
    passed: bool
    zero_at_origin: bool
    positive: bool
    monotone: bool
    sup_ratio: float
    ratio_by_a: List[Tuple[float, float]]


def check_modulus_conditions(modulus, t_grid: Optional[Sequence[float]] = None,
                             a_grid: Optional[Sequence[float]] = None,
                             t_max: float = 10.0, ratio_ceiling: float = 10.0) -> ModulusCheck:
    """Check ``omega(0) = 0``, positivity, monotonicity and the doubling-type ratio.

    The ratio ``omega(a t) / (a omega(t))`` over the (a, t) grid is bounded by
    1 for every concave modulus; a sup above ``ratio_ceiling`` fails.
    """
    t = np.sort(np.geomspace(1e-6, t_max, 121) if t_grid is None else np.asarray(t_grid, dtype=float))
    a = np.geomspace(1.0, 1e4, 41) if a_grid is None else np.asarray(a_grid, dtype=float)
    if t.size == 0 or a.size == 0:
        raise InvalidArgumentError("modulus check needs a nonempty grid")
    values = np.asarray(modulus(t), dtype=float)
    zero = float(modulus(0.0)) == 0.0
    positive = bool(np.all(values > 0))
    monotone = bool(np.all(np.diff(values) >= -1e-15 * np.abs(values[1:])))
    ratio_by_a = []
    for factor in a:
        with np.errstate(divide='ignore', invalid='ignore'):
            ratios = np.asarray(modulus(factor * t), dtype=float) / (factor * values)
        ratio_by_a.append((float(factor), float(np.nanmax(ratios))))
    sup_ratio = max(r for _, r in ratio_by_a)
    passed = zero and positive and monotone and sup_ratio <= ratio_ceiling
    if not passed:
        logger.info("modulus %s fails: zero=%s positive=%s monotone=%s sup ratio=%.4g",
                    modulus, zero, positive, monotone, sup_ratio)
    return ModulusCheck(passed=passed, zero_at_origin=zero, positive=positive, monotone=monotone,
                        sup_ratio=sup_ratio, ratio_by_a=ratio_by_a)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidArgumentError(message)


def modulus_varpi(s1: float, s2: float, s3: float, upsilon: float, strong: bool = False):
    """Solution modulus for a kernel of class (s1, s2, s3) when only the class is known."""
    _require(upsilon > 0, f"upsilon must be positive, got {upsilon}")
    lower = max(0.0, upsilon - 1.0)
    _require(compare_exponents(s1, lower) >= 0 and compare_exponents(s1, upsilon) < 0,
             f"s1 must lie in [max(0, upsilon - 1), upsilon) = [{lower:g}, {upsilon:g}), got {s1}")
    _require(0 < s3 <= 1, f"s3 must lie in (0, 1], got {s3}")
    _require(s2 >= 0, f"s2 must be nonnegative, got {s2}")
    branch = compare_exponents(s2, upsilon)
    if branch > 0:
        _require(compare_exponents(s2, upsilon + s3) < 0,
                 f"s2 > upsilon requires s2 < upsilon + s3 = {upsilon + s3:g}, got {s2}")
        return PowerModulus(beta=min(upsilon - s1, s3 + upsilon - s2))
    if branch == 0:
        _require(strong, "s2 = upsilon requires Y strongly upper upsilon-Ahlfors regular")
        return combine_max(PowerModulus(beta=upsilon - s1), LogPowerModulus(theta=s3))
    return PowerModulus(beta=min(upsilon - s1, s3))


def modulus_omega(s1: float, s2: float, s3: float, beta: float, upsilon: float, strong: bool = False):
    """Solution modulus when additionally ``A[K, 1]`` is known to be beta-regular.

    Power exponents are capped at 1; on a bounded set a larger exponent
    defines the same function class.
    """
    _require(upsilon > 0, f"upsilon must be positive, got {upsilon}")
    _require(s1 >= 0 and compare_exponents(s1, upsilon) < 0,
             f"s1 must lie in [0, upsilon), got {s1}")
    _require(0 < beta <= 1, f"beta must lie in (0, 1], got {beta}")
    _require(compare_exponents(s2, beta) >= 0, f"s2 must be at least beta = {beta:g}, got {s2}")
    _require(0 < s3 <= 1, f"s3 must lie in (0, 1], got {s3}")
    shifted = s2 - beta
    lead = min(upsilon - s1 + beta, 1.0)
    branch = compare_exponents(shifted, upsilon)
    if branch > 0:
        tail = s3 + upsilon - shifted
        _require(tail > 0, f"s2 - beta > upsilon requires s3 + upsilon - (s2 - beta) > 0, got {tail:g}")
        return PowerModulus(beta=min(lead, tail))
    if branch == 0:
        _require(strong, "s2 - beta = upsilon requires Y strongly upper upsilon-Ahlfors regular")
        return combine_max(PowerModulus(beta=lead), LogPowerModulus(theta=s3))
    return PowerModulus(beta=min(lead, s3))
