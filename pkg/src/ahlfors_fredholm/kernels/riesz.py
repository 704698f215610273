from typing import List

import numpy as np

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.kernels.base import Kernel
from ahlfors_fredholm.sampled_space import SampledMeasureSpace


def _exponent(args: List[str], family: str) -> float:
    if len(args) != 1:
        raise InvalidArgumentError(f"{family} kernel takes one exponent, got {args}")
    try:
        s = float(args[0])
    except ValueError:
        raise InvalidArgumentError(f"{family} exponent is not a number: {args[0]!r}")
    if not np.isfinite(s) or s < 0:
        raise InvalidArgumentError(f"{family} exponent must be finite and nonnegative, got {s}")
    return s


class RieszKernel(Kernel):
    """``d(x, y)**-s``."""
    family = 'riesz'

    def __init__(self, s: float):
        if s < 0:
            raise InvalidArgumentError(f"riesz exponent must be nonnegative, got {s}")
        self.s = float(s)

    @classmethod
    def from_args(cls, args: List[str]) -> 'RieszKernel':
        return cls(_exponent(args, cls.family))

    @property
    def spec(self) -> str:
        return f"riesz:{self.s:g}"

    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return space.dist[rows, cols] ** (-self.s)


class LogRieszKernel(Kernel):
    """``d(x, y)**-s * (1 + |ln d(x, y)|)``."""
    family = 'logriesz'

    def __init__(self, s: float):
        if s < 0:
            raise InvalidArgumentError(f"logriesz exponent must be nonnegative, got {s}")
        self.s = float(s)

    @classmethod
    def from_args(cls, args: List[str]) -> 'LogRieszKernel':
        return cls(_exponent(args, cls.family))

    @property
    def spec(self) -> str:
        return f"logriesz:{self.s:g}"

    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        d = space.dist[rows, cols]
        return d ** (-self.s) * (1.0 + np.abs(np.log(d)))
