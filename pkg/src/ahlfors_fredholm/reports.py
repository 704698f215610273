"""Structured report documents.

Reports are JSON (sorted keys, two-space indent, UTF-8) with the package
version and the resolved run configuration embedded, so identical runs
produce identical bytes. Vectors can be dumped separately as CSV.
"""
import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, TextIO, Union

import numpy as np
from pydantic import BaseModel

from ahlfors_fredholm import __version__
from ahlfors_fredholm.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert reports, numpy values and complex numbers into plain JSON types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, complex):
        return {'re': to_jsonable(value.real), 'im': to_jsonable(value.imag)}
    if isinstance(value, float) and not math.isfinite(value):
        # JSON has no infinities; keep them readable
        return repr(value)
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def build_document(command: str, config: Any, result: Any, passed: Optional[bool] = None) -> Dict[str, Any]:
    document = {
        'version': __version__,
        'command': command,
        'config': to_jsonable(config),
        'result': to_jsonable(result),
    }
    if passed is not None:
        document['passed'] = passed
    return document


def dumps(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(document: Dict[str, Any], out: Optional[Union[str, Path]] = None,
                 stream: Optional[TextIO] = None) -> None:
    """Write to ``out`` when given, else to ``stream``."""
    text = dumps(document)
    if out is None:
        if stream is not None:
            stream.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("report written to %s", out)


def write_vectors_csv(path: Union[str, Path], columns: Dict[str, Sequence[float]]) -> None:
    """One column per named vector, all of equal length."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) != 1:
        raise InvalidArgumentError(f"CSV columns have different lengths: {sorted(lengths)}")
    if any(np.iscomplexobj(a) for a in arrays):
        expanded_names, expanded = [], []
        for name, a in zip(names, arrays):
            if np.iscomplexobj(a):
                expanded_names += [f"{name}_re", f"{name}_im"]
                expanded += [a.real, a.imag]
            else:
                expanded_names.append(name)
                expanded.append(a)
        names, arrays = expanded_names, expanded
    np.savetxt(path, np.column_stack(arrays), delimiter=',', header=','.join(names), comments='',
               fmt='%.17g')
    logger.info("vectors %s written to %s", names, path)
