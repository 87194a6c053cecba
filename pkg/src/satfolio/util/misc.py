import hashlib
import time
from contextlib import contextmanager
from typing import Any, Iterator


def hash_obj(obj):
    """Recursively converts an object into a hashable, order-stable structure."""
    if isinstance(obj, dict):
        return tuple(sorted((k, hash_obj(v)) for k, v in obj.items()))
    elif isinstance(obj, (list, tuple)):
        return tuple(hash_obj(v) for v in obj)
    else:
        # Assume obj is hashable
        return obj


def stable_hash64(obj: Any) -> int:
    """Returns a 64-bit hash that is stable across processes and platforms,
    unlike the built-in `hash` which is salted per interpreter."""
    digest = hashlib.blake2b(repr(hash_obj(obj)).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def round_ms(seconds: float) -> float:
    """Rounds a duration to millisecond precision"""
    return round(float(seconds), 3)


@contextmanager
def stopwatch() -> Iterator[dict]:
    """Measures wall-clock time with a monotonic clock.
    The elapsed time in seconds is stored under the `seconds` key on exit."""
    result = {"seconds": 0.0}
    start = time.monotonic()
    try:
        yield result
    finally:
        result["seconds"] = time.monotonic() - start
