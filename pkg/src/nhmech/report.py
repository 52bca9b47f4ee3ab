"""Structured pass/fail reports, sample grids and 17-digit serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.stats import qmc


@dataclass
class CheckReport:
    """Result of a sampled residual check; ``passed`` iff ``max_residual <= tolerance``."""

    name: str
    points_tested: int
    max_residual: float
    tolerance: float
    passed: bool
    grid_spec: dict[str, Any] = field(default_factory=dict)
    details: list[dict[str, Any]] = field(default_factory=list)
    notes: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_residuals(
        cls,
        name: str,
        residuals: Sequence[float],
        tolerance: float,
        grid_spec: dict[str, Any] | None = None,
        details: list[dict[str, Any]] | None = None,
        notes: dict[str, Any] | None = None,
    ) -> "CheckReport":
        res = [float(r) for r in residuals]
        worst = max(res) if res else 0.0
        if any(math.isnan(r) for r in res):
            worst = math.inf
        return cls(
            name=name,
            points_tested=len(res),
            max_residual=worst,
            tolerance=float(tolerance),
            passed=worst <= tolerance,
            grid_spec=dict(grid_spec or {}),
            details=list(details or []),
            notes=dict(notes or {}),
        )

    def to_dict(self, per_point: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "points_tested": self.points_tested,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "grid_spec": self.grid_spec,
        }
        if self.notes:
            out["notes"] = self.notes
        if per_point:
            out["per_point"] = self.details
        return out

    def to_json(self, per_point: bool = False) -> str:
        return dumps(self.to_dict(per_point))


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating, bool)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0)


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def quasi_random_grid(box: Sequence[tuple[float, float]], count: int, seed: int = 0) -> tuple[np.ndarray, dict[str, Any]]:
    """Scrambled Halton points inside an axis-aligned box, plus grid metadata."""
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    sampler = qmc.Halton(d=len(box), scramble=True, seed=seed)
    pts = lo + (hi - lo) * sampler.random(count)
    spec = {"kind": "halton", "box": [[float(a), float(b)] for a, b in box], "count": int(count), "seed": int(seed)}
    return pts, spec


def tensor_grid(axes: Iterable[Sequence[float]]) -> tuple[np.ndarray, dict[str, Any]]:
    """Cartesian product grid of the given 1-D coordinate lists."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    spec = {
        "kind": "tensor",
        "axes": [[float(a.min()), float(a.max()), int(a.size)] for a in axes],
        "count": int(pts.shape[0]),
    }
    return pts, spec
