"""Shot plans and the result record every protocol returns.

``ExperimentResult`` serializes to JSON (``to_json``) and to a flat CSV with
one row per setting (``to_csv``). Both outputs are deterministic: keys are
sorted and floats are written with ``repr`` precision.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ShotPlan:
    """``exact`` reports Born probabilities; ``sampled`` draws ``shots`` per setting."""

    mode: str = "exact"
    shots: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def sampled(self) -> bool:
        return self.mode == "sampled"

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(int(self.seed))

    def to_dict(self) -> dict:
        return {"mode": self.mode, "shots": self.shots, "seed": int(self.seed)}


EXACT = ShotPlan()


def jsonable(value: Any) -> Any:
    """Convert numpy and complex values into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "to_dict"):
        return jsonable(value.to_dict())
    raise TypeError(f"cannot serialize {type(value).__name__}")


@dataclass
class ExperimentResult:
    """Outcome of one protocol run.

    ``rows`` holds one dict per setting (phase, alpha, time, input state...)
    and becomes the CSV table. ``derived`` holds fitted or summary values and
    ``errors`` their standard errors under the same keys.
    """

    protocol: str
    settings: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    leakage: float = 0.0
    seed: int | None = None
    shot_plan: dict = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "protocol": self.protocol,
            "settings": self.settings,
            "rows": self.rows,
            "derived": self.derived,
            "errors": self.errors,
            "leakage": self.leakage,
            "seed": self.seed,
            "shot_plan": self.shot_plan,
            "flags": self.flags,
        }

    def to_json(self, extra: dict | None = None) -> str:
        payload = self.to_dict()
        if extra:
            payload.update(extra)
        return json.dumps(jsonable(payload), sort_keys=True, indent=2) + "\n"

    def columns(self) -> list[str]:
        cols: list[str] = []
        for row in self.rows:
            for key in row:
                if key not in cols:
                    cols.append(key)
        return cols

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns()
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_cell(row.get(c)) for c in cols])
        return buf.getvalue()


def _cell(value: Any) -> str:
    value = jsonable(value)
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def sample_counts(probabilities, shots: int, rng: np.random.Generator | int) -> np.ndarray:
    """Multinomial draw of ``shots`` outcomes; reproducible for a fixed seed."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("negative probability")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1) > 1e-9:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if shots == 0:
        return np.zeros(p.shape, dtype=int)
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.multinomial(shots, p / total)
