"""Separately 1-Lipschitz functionals of a finite trajectory.

Each catalog entry satisfies |f(x) - f(x')| <= sum_i |x_i - x'_i| with
per-coordinate constant at most one; a randomized perturbation probe checks
this at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import SpecError

_KINDS = ("sum", "sum_abs", "sum_clipped", "max")
_PROBE_TOL = 1e-9


@dataclass(frozen=True)
class FunctionalSpec:
    kind: str
    clip: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpecError(f"unknown functional kind {self.kind!r}")
        if self.kind == "sum_clipped":
            if self.clip is None or self.clip <= 0:
                raise SpecError("sum_clipped needs clip > 0")
        elif self.clip is not None:
            raise SpecError(f"{self.kind} takes no clip parameter")
        self._probe_lipschitz()

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """Applies f along the last axis."""
        v = np.asarray(values, dtype=float)
        if self.kind == "sum":
            return v.sum(axis=-1)
        if self.kind == "sum_abs":
            return np.abs(v).sum(axis=-1)
        if self.kind == "sum_clipped":
            return np.clip(v, -self.clip, self.clip).sum(axis=-1)
        return v.max(axis=-1)

    def _probe_lipschitz(self):
        gen = rng.stream(0, rng.PROBE)
        base = gen.normal(0.0, 2.0, (64, 8))
        deltas = gen.normal(0.0, 1.0, 64)
        coords = gen.integers(0, 8, 64)
        f0 = self.evaluate(base)
        perturbed = base.copy()
        perturbed[np.arange(64), coords] += deltas
        gap = np.abs(self.evaluate(perturbed) - f0)
        if np.any(gap > np.abs(deltas) * (1 + _PROBE_TOL) + _PROBE_TOL):
            raise SpecError(f"functional {self.kind} failed the 1-Lipschitz probe")

    def to_config(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "sum_clipped":
            out["clip"] = self.clip
        return out

    @classmethod
    def from_config(cls, obj: dict) -> "FunctionalSpec":
        from .serde import require_keys

        kind = obj.get("kind")
        allowed = {"kind", "clip"} if kind == "sum_clipped" else {"kind"}
        require_keys(obj, allowed, context="functional")
        return cls(kind, obj.get("clip"))
