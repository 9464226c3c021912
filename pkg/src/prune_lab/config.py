"""Flat ``key = value`` experiment configs.

Syntax, one entry per line::

    # comment
    experiment = aux-prune-curve
    seed = 7
    kappa = 5/3          # fractions are allowed for reals
    lambdas = [0.5, 1, 5]
    loss = cross_entropy

Values are parsed as int, real (including ``a/b``), ``true``/``false``, a
bracketed list of those, or otherwise a string (optional quotes stripped).
``experiment``, ``seed`` and ``output_dir`` are reserved; every other key must
belong to the chosen experiment's schema.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError

RESERVED = ("experiment", "seed", "output_dir")
DEFAULT_OUTPUT_DIR = "results"

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_INT = re.compile(r"^[+-]?\d+$")
_FRAC = re.compile(r"^[+-]?\d+(\.\d*)?\s*/\s*\d+(\.\d*)?$")


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = DEFAULT_OUTPUT_DIR
    lines: dict = field(default_factory=dict)  # key -> line number in the source
    source: str = "<string>"


def parse_scalar(text: str):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        return t[1:-1]
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    if _INT.match(t):
        return int(t)
    if _FRAC.match(t):
        num, den = (Fraction(part.strip()) for part in t.split("/"))
        if den == 0:
            raise ValueError(f"zero denominator in {t!r}")
        return float(num / den)
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(text: str):
    t = text.strip()
    if t.startswith("["):
        if not t.endswith("]"):
            raise ValueError(f"unterminated list {t!r}")
        inner = t[1:-1].strip()
        if not inner:
            return []
        if "[" in inner or "]" in inner:
            raise ValueError("nested lists are not supported")
        return [parse_scalar(item) for item in inner.split(",")]
    if not t:
        raise ValueError("missing value")
    return parse_scalar(t)


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if ch in "\"'":
            quote = None if quote == ch else (quote or ch)
        elif ch == "#" and quote is None:
            return line[:i]
    return line


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse config text; syntax problems are collected and raised together."""
    problems = []
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"{source}:{lineno}: expected 'key = value', got {body!r}")
            continue
        key, _, value = body.partition("=")
        key = key.strip()
        if not _KEY.match(key):
            problems.append(f"{source}:{lineno}: invalid key {key!r}")
            continue
        if key in raw:
            problems.append(f"{source}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
            continue
        try:
            raw[key] = parse_value(value)
        except ValueError as exc:
            problems.append(f"{source}:{lineno}: key {key!r}: {exc}")
            continue
        lines[key] = lineno

    experiment = raw.pop("experiment", None)
    if experiment is None:
        problems.append(f"{source}: missing required key 'experiment'")
    elif not isinstance(experiment, str):
        problems.append(f"{source}:{lines['experiment']}: experiment must be a name")
    seed = raw.pop("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        problems.append(f"{source}:{lines.get('seed', '?')}: seed must be a non-negative integer")
        seed = 0
    output_dir = raw.pop("output_dir", DEFAULT_OUTPUT_DIR)
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(experiment, raw, seed, str(output_dir), lines, source)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config ({exc.strerror})"]) from exc
    return parse_config(text, str(path))


def format_value(value) -> str:
    """Canonical text for hashing and sidecars."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest text that round-trips exactly
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(format_value(v) for v in value) + "]"
    return str(value)


def config_hash(experiment: str, params: dict, seed: int) -> str:
    text = "\n".join([f"experiment={experiment}", f"seed={seed}"]
                     + [f"{k}={format_value(params[k])}" for k in sorted(params)])
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
