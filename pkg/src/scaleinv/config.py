"""Plain ``key = value`` run configuration files.

Keys may be dotted (``source.kind``).  Lists are comma separated; ``none`` marks an
unset optional value.  Lines starting with ``#`` are comments.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text())


def _scalar(kind, text: str):
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {text!r}")
    if kind is int:
        return int(float(text)) if "e" in text.lower() else int(text)
    return kind(text)


def coerce(text: str, kind, optional: bool = False):
    """Convert a config string to ``kind`` (a type or a one-element list ``[type]``)."""
    text = text.strip()
    if optional and text.lower() in ("none", ""):
        return None
    try:
        if isinstance(kind, list):
            return [_scalar(kind[0], t.strip()) for t in text.split(",") if t.strip()]
        return _scalar(kind, text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def dump_kv(values: dict) -> str:
    return "".join(f"{k} = {format_value(values[k])}\n" for k in sorted(values))
