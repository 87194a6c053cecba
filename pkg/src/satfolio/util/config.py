"""Flat key-value configuration files.

Format: one `key = value` pair per line, `#` starts a comment, blank lines are
ignored. There is no nesting; dotted keys such as `oracle.alpha` are plain keys.
Values are cast to bool, int, float or comma-separated lists when possible.
"""

from pathlib import Path
from typing import Any

from loguru import logger

from satfolio.util.type_casting import cast


def parse_config(text: str) -> dict[str, Any]:
    config = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"Invalid config line {line_number}: `{raw_line}`")
        if key in config:
            logger.warning(f"Config key `{key}` defined twice, keeping the last value")
        config[key] = cast(value.strip())
    return config


def load_config(path: Path | str | None) -> dict[str, Any]:
    """Reads a config file. A missing `path` (None) yields an empty config."""
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def dump_config(config: dict[str, Any], path: Path | str, header: str | None = None):
    lines = [f"# {header}"] if header else []
    lines += [f"{key} = {_format_value(value)}" for key, value in config.items()]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def subsection(config: dict[str, Any], prefix: str) -> dict[str, Any]:
    """Returns the keys starting with `prefix.`, with the prefix removed"""
    prefix = prefix.rstrip(".") + "."
    return {k[len(prefix) :]: v for k, v in config.items() if k.startswith(prefix)}


def merge_overrides(config: dict[str, Any], **overrides: Any) -> dict[str, Any]:
    """Applies command-line flags on top of config-file values.
    Flags left unset (None) fall through to the file."""
    merged = dict(config)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return merged
