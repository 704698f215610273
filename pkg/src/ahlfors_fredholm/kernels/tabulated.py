"""Kernels that wrap another kernel or a stored table."""
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.kernels.base import Kernel
from ahlfors_fredholm.sampled_space import SampledMeasureSpace, read_numeric_rows


class ZeroKernel(Kernel):
    family = 'zero'

    @classmethod
    def from_args(cls, args: List[str]) -> 'ZeroKernel':
        if args:
            raise InvalidArgumentError(f"zero kernel takes no arguments, got {args}")
        return cls()

    @property
    def spec(self) -> str:
        return "zero"

    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return np.zeros(rows.shape)


class ScaledKernel(Kernel):
    """``lam * inner(x, y)``."""
    family = 'scale'

    def __init__(self, inner: Kernel, lam: Union[float, complex]):
        self.inner = inner
        self.lam = complex(lam) if isinstance(lam, complex) else float(lam)

    @classmethod
    def from_args(cls, args: List[str]) -> 'ScaledKernel':
        from ahlfors_fredholm.kernels import parse_kernel_spec

        if len(args) < 2:
            raise InvalidArgumentError(f"scale needs a factor and an inner kernel, got {args}")
        try:
            lam = float(args[0])
        except ValueError:
            raise InvalidArgumentError(f"scale factor is not a number: {args[0]!r}")
        return cls(parse_kernel_spec(":".join(args[1:])), lam)

    @property
    def spec(self) -> str:
        return f"scale:{self.lam!r}:{self.inner.spec}"

    @property
    def is_complex(self) -> bool:
        return isinstance(self.lam, complex) or self.inner.is_complex

    @property
    def domain_label(self) -> Optional[str]:
        return self.inner.domain_label

    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self.lam * self.inner.values(space, rows, cols)


class TabulatedKernel(Kernel):
    """Kernel given by an n x n table; the diagonal of the table is ignored.

    A table built for one space carries its label and refuses every other
    space; a table read from a file only checks the node count.
    """
    family = 'table'

    def __init__(self, matrix, label: Optional[str] = None, source: Optional[str] = None):
        matrix = np.array(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidArgumentError(f"kernel table must be square, got shape {matrix.shape}")
        if not np.iscomplexobj(matrix):
            matrix = matrix.astype(float)
        matrix.setflags(write=False)
        self.matrix = matrix
        self.label = label
        self.source = source

    @classmethod
    def from_args(cls, args: List[str]) -> 'TabulatedKernel':
        if not args:
            raise InvalidArgumentError("table kernel needs a file path")
        return cls.load(":".join(args))

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'TabulatedKernel':
        rows = [values for _, values in read_numeric_rows(path)]
        if not rows or any(len(r) != len(rows) for r in rows):
            raise InvalidArgumentError(f"kernel table {path} is not a square matrix")
        return cls(np.array(rows), source=str(path))

    @property
    def spec(self) -> str:
        if self.source is not None:
            return f"table:{self.source}"
        return f"table:<{self.label or 'memory'}>"

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix)

    @property
    def domain_label(self) -> Optional[str]:
        return self.label

    def values(self, space: SampledMeasureSpace, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if self.matrix.shape[0] != space.n:
            raise InvalidArgumentError(
                f"kernel table has {self.matrix.shape[0]} nodes, space {space.label} has {space.n}")
        if self.label is not None and self.label != space.label:
            raise InvalidArgumentError(
                f"kernel tabulated on {self.label!r} cannot be evaluated on {space.label!r}")
        return self.matrix[rows, cols]
