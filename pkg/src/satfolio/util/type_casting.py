from functools import lru_cache
from typing import Any

_BOOLEANS = {"true": True, "false": False}

Scalar = str | bool | int | float


def _parse_scalar(s: str) -> Scalar:
    """bool, then int, then float; anything else stays a string"""
    if s.lower() in _BOOLEANS:
        return _BOOLEANS[s.lower()]
    for parse in (int, float):
        try:
            return parse(s)
        except ValueError:
            pass
    return s


@lru_cache(maxsize=2048)
def _cast(s: str) -> Scalar | tuple[Scalar, ...]:
    """Comma-separated values, e.g. solver names or a range `0.2,0.8`, become a
    tuple of scalars"""
    s = s.strip()
    if "," in s:
        return tuple(_parse_scalar(e.strip()) for e in s.split(",") if e.strip())
    return _parse_scalar(s)


def cast(obj: Any) -> Any:
    """Recursively casts strings to the most specific type possible"""
    if isinstance(obj, str):
        value = _cast(obj)
        return list(value) if isinstance(value, tuple) else value
    if isinstance(obj, dict):
        return {k: cast(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [cast(e) for e in obj]
    return obj
