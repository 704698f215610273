from abc import ABC, abstractmethod
from typing import List, Optional

import numpy as np

from ahlfors_fredholm.errors import FredholmError
from ahlfors_fredholm.sampled_space import SampledMeasureSpace


class DiagonalAccessError(FredholmError):
    """A kernel was evaluated at a point pair with x = y."""


class Kernel(ABC):
    """Base class for all kernels defined off the diagonal of Y x Y."""
    family: str = ''

    @abstractmethod
    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Kernel values at node pairs ``(rows[k], cols[k])``, all off the diagonal."""

    @property
    @abstractmethod
    def spec(self) -> str:
        """Text expression that parses back into this kernel."""

    @classmethod
    @abstractmethod
    def from_args(cls, args: List[str]) -> 'Kernel':
        """Build the kernel from the ':'-separated arguments of its spec."""

    @property
    def is_complex(self) -> bool:
        return False

    @property
    def domain_label(self) -> Optional[str]:
        """Label of the only space the kernel is defined on, if any."""
        return None

    def eval(self, space: SampledMeasureSpace, i: int, j: int):
        i, j = space.check_index(i), space.check_index(j)
        if i == j:
            raise DiagonalAccessError(f"kernel {self.spec} evaluated on the diagonal at node {i}")
        value = self.values(space, np.array([i]), np.array([j]))[0]
        return complex(value) if self.is_complex else float(value)

    def tabulate(self, space: SampledMeasureSpace) -> np.ndarray:
        """Full n x n table; the diagonal holds 0 and is never read."""
        n = space.n
        rows, cols = np.indices((n, n))
        off = rows != cols
        out = np.zeros((n, n), dtype=complex if self.is_complex else float)
        with np.errstate(divide='ignore', invalid='ignore'):
            out[off] = self.values(space, rows[off], cols[off])
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r})"
