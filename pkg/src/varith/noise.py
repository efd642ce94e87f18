"""Reproducible bounded noise streams."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .moments import DEFAULT_KAPPA, DistributionKind

__all__ = ["NoiseSpec", "rng_streams"]

_SQRT3 = math.sqrt(3.0)


def rng_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators split from one seed; stream ``i`` depends only on ``(seed, i)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


@dataclass(frozen=True)
class NoiseSpec:
    kind: DistributionKind
    deviation: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.deviation) and self.deviation >= 0):
            raise ValueError(f"noise deviation must be finite and non-negative, got {self.deviation!r}")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def sample(
        self, n: int, rng: np.random.Generator | None = None, kappa: float = DEFAULT_KAPPA
    ) -> np.ndarray:
        """``n`` draws with zero mean.

        Gaussian draws outside ``kappa`` deviations are rejected and redrawn,
        which keeps the mean at zero; uniform draws span ``±sqrt(3)`` deviations.
        """
        rng = self.generator() if rng is None else rng
        if self.kind is DistributionKind.UNIFORM:
            return rng.uniform(-_SQRT3, _SQRT3, n) * self.deviation
        out = rng.standard_normal(n)
        bad = np.abs(out) > kappa
        while bad.any():
            out[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(out) > kappa
        return out * self.deviation
