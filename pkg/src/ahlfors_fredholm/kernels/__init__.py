"""Kernel families, the spec parser and the class seminorms."""
import logging
from typing import Dict, Type

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.kernels.base import DiagonalAccessError, Kernel
from ahlfors_fredholm.kernels.riesz import LogRieszKernel, RieszKernel
from ahlfors_fredholm.kernels.seminorms import (
    SeminormReport, SmoothnessEstimate, class_membership_report, potential_norm, smoothness_seminorm,
)
from ahlfors_fredholm.kernels.tabulated import ScaledKernel, TabulatedKernel, ZeroKernel

logger = logging.getLogger(__name__)

# spec prefix -> kernel family
KERNEL_FAMILIES: Dict[str, Type[Kernel]] = {
    'riesz': RieszKernel,
    'logriesz': LogRieszKernel,
    'scale': ScaledKernel,
    'table': TabulatedKernel,
    'zero': ZeroKernel,
}


def _normalize(name: str) -> str:
    return name.strip().lower().replace('-', '').replace('_', '')


def get_kernel_family(name: str) -> Type[Kernel]:
    """Kernel class registered under ``name`` ('log_riesz' and 'log-riesz' also match)."""
    if name in KERNEL_FAMILIES:
        return KERNEL_FAMILIES[name]
    normalized = _normalize(name)
    for key, cls in KERNEL_FAMILIES.items():
        if _normalize(key) == normalized:
            return cls
    raise InvalidArgumentError(f"unknown kernel family {name!r}, known: {sorted(KERNEL_FAMILIES)}")


def parse_kernel_spec(text: str) -> Kernel:
    """Parse ``riesz:0.5``, ``logriesz:1``, ``scale:0.3:riesz:0.5``, ``table:<path>`` or ``zero``."""
    if not text or not text.strip():
        raise InvalidArgumentError("empty kernel spec")
    head, *args = text.strip().split(':')
    kernel = get_kernel_family(head).from_args(args)
    logger.debug("parsed kernel spec %r as %r", text, kernel)
    return kernel


__all__ = [
    'DiagonalAccessError', 'Kernel', 'KERNEL_FAMILIES', 'LogRieszKernel', 'RieszKernel',
    'ScaledKernel', 'SeminormReport', 'SmoothnessEstimate', 'TabulatedKernel', 'ZeroKernel',
    'class_membership_report', 'get_kernel_family', 'parse_kernel_spec', 'potential_norm',
    'smoothness_seminorm',
]
