"""``key=value`` noise profiles.

Keys and units::

    heat_a, heat_b                 heating rate, quanta/s
    deph_spin, deph_spin_echo      spin dephasing rate 1/T2, 1/s
    deph_mode_a, deph_mode_b       motional dephasing gamma, 1/s
    nbar_a, nbar_b                 initial thermal occupation
    detect_err                     spin readout flip probability
    correlated_modes               true/false

Blank lines and ``#`` comments are ignored; missing keys default to zero.
"""
from __future__ import annotations

from dataclasses import fields
from importlib import resources
from pathlib import Path

from .noise import NoiseParams

_FIELDS = {f.name for f in fields(NoiseParams)}


class ProfileError(ValueError):
    pass


def parse_profile(text: str, source: str = "<profile>") -> NoiseParams:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ProfileError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ProfileError(f"{source}:{lineno}: missing key")
        if key not in _FIELDS:
            raise ProfileError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ProfileError(f"{source}:{lineno}: duplicate key {key!r}")
        if key == "correlated_modes":
            if value.lower() not in ("true", "false"):
                raise ProfileError(f"{source}:{lineno}: correlated_modes must be true or false")
            values[key] = value.lower() == "true"
            continue
        try:
            values[key] = float(value)
        except ValueError:
            raise ProfileError(f"{source}:{lineno}: malformed value {value!r} for {key}") from None
    try:
        return NoiseParams(**values)
    except ValueError as exc:
        raise ProfileError(f"{source}: {exc}") from None


def load_profile(path: str | Path) -> NoiseParams:
    """Read a profile file; the error message names the path on failure."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileError(f"{path}: {exc.strerror or exc}") from None
    return parse_profile(text, str(path))


def shipped_profile(name: str) -> NoiseParams:
    """Profile bundled with the package, e.g. ``"paper"`` or ``"noiseless"``."""
    ref = resources.files("cbsim") / "data" / f"{name}.profile"
    if not ref.is_file():
        raise ProfileError(f"no shipped profile named {name!r}")
    return parse_profile(ref.read_text(encoding="utf-8"), f"{name}.profile")


def paper_profile() -> NoiseParams:
    return shipped_profile("paper")
