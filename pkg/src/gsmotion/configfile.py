"""Flat key-value configuration files.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. Keys may repeat (used for kernel lists); order is preserved.
Example::

    # scene definition
    width = 121
    height = 121
    coords = normalized
    kernel = 0.0 0.0 4.8 4.8 0.0 1.0   # x y sigma_x sigma_y rho c
    motion_u = -0.01
    motion_v = -0.01
"""

from .exceptions import ConfigError


def parse_config(path) -> list[tuple[str, str]]:
    """Parse a config file into an ordered list of (key, value) pairs."""
    pairs: list[tuple[str, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key, value = key.strip(), value.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: missing key")
            if not value:
                raise ConfigError(f"{path}:{lineno}: missing value for key '{key}'")
            pairs.append((key, value))
    return pairs


def write_config(path, pairs, header: str | None = None) -> None:
    """Write (key, value) pairs in the flat key-value format (deterministic)."""
    lines = []
    if header:
        lines.extend(f"# {text}".rstrip() for text in header.splitlines())
    lines.extend(f"{key} = {value}" for key, value in pairs)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def reject_unknown(pairs, allowed, source) -> None:
    """Raise ConfigError naming the first key outside ``allowed``."""
    for key, _ in pairs:
        if key not in allowed:
            raise ConfigError(f"{source}: unknown configuration key '{key}'")


def parse_float(key: str, value: str, source) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{source}: key '{key}' expects a number, got {value!r}") from exc


def parse_int(key: str, value: str, source) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{source}: key '{key}' expects an integer, got {value!r}") from exc
