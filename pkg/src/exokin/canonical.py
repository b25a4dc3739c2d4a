"""Canonical JSON: sorted keys, no whitespace, floats at 12 significant digits."""

from __future__ import annotations

import json
import math
from enum import Enum
from typing import Any

import numpy as np

FLOAT_DIGITS = 12


def _float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"canonical JSON cannot encode {x!r}")
    text = format(x, f".{FLOAT_DIGITS}g")
    return "0" if text == "-0" else text


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, Enum):
        _encode(obj.value, out)
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(list(obj)):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    elif isinstance(obj, (set, frozenset)):
        _encode(sorted(obj, key=lambda v: str(getattr(v, "value", v))), out)
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def canonical_dumps(obj: Any) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)
