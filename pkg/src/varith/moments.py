"""Bounded even moments of the unit input distribution.

``zeta(2n)`` is the 2n-th moment of a zero-mean, unit-deviation distribution
truncated to ``[-kappa, +kappa]`` and renormalized to unit mass.  Odd moments
vanish by symmetry and are never stored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc

__all__ = [
    "DistributionKind",
    "MomentTable",
    "NonPositiveKappa",
    "UniformKappaMismatch",
    "OrderExceeded",
    "DomainError",
    "build_moment_table",
    "zeta",
    "bounding_leakage",
    "normal_density",
    "precision_correlation",
    "gaussian_table",
    "DEFAULT_KAPPA",
    "DEFAULT_MAX_N",
]

DEFAULT_KAPPA = 5.0
DEFAULT_MAX_N = 400
_SQRT3 = math.sqrt(3.0)
_LOG_MAX = math.log(np.finfo(float).max)


class NonPositiveKappa(ValueError):
    pass


class UniformKappaMismatch(ValueError):
    pass


class OrderExceeded(IndexError):
    """The requested moment lies past the last finite table entry."""


class DomainError(ValueError):
    pass


class DistributionKind(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class MomentTable:
    """Even moments ``zeta(0), zeta(2), ...`` for one distribution and range.

    ``scaled[n] = zeta(2n) / kappa**(2n)`` is kept alongside; it never
    overflows and is what the expansion engine multiplies against.
    """

    kind: DistributionKind
    kappa: float
    even_moments: tuple[float, ...]
    scaled: np.ndarray = field(repr=False, compare=False)

    @property
    def max_usable_order(self) -> int:
        return 2 * (len(self.even_moments) - 1)

    def zeta(self, n: int) -> float:
        return zeta(self, n)


def normal_density(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def bounding_leakage(kappa: float) -> float:
    """Two-sided Gaussian tail mass outside ``[-kappa, kappa]``."""
    if not kappa > 0:
        raise NonPositiveKappa(f"kappa must be positive, got {kappa!r}")
    return float(erfc(kappa / math.sqrt(2.0)))


def _gaussian_log_moment(n: int, kappa: float) -> float:
    """log of the unnormalized truncated moment of order 2n.

    Uses the all-positive series
    ``2 N(k) k^(2n) * sum_j k^(2j-1) / ((2n+1)(2n+3)...(2n+2j-1))``
    which is the solution of the downward-stable form of the recurrence.
    """
    k2 = kappa * kappa
    term = kappa / (2 * n + 1)
    total = 0.0
    j = 1
    while True:
        total += term
        if term < 1e-17 * total:
            break
        term *= k2 / (2 * n + 2 * j + 1)
        j += 1
    log_density = -0.5 * k2 - 0.5 * math.log(2.0 * math.pi)
    return math.log(2.0) + log_density + 2 * n * math.log(kappa) + math.log(total)


def build_moment_table(
    kind: DistributionKind,
    kappa: float = DEFAULT_KAPPA,
    requested_max_n: int = DEFAULT_MAX_N,
) -> MomentTable:
    """Build ``zeta(2n, kappa)`` for ``n = 0..requested_max_n``.

    Generation stops early at the first entry that would not be a finite
    positive double; the table length then records the usable ceiling.
    """
    if not kappa > 0 or not math.isfinite(kappa):
        raise NonPositiveKappa(f"kappa must be positive and finite, got {kappa!r}")
    if requested_max_n < 0:
        raise ValueError("requested_max_n must be non-negative")

    moments: list[float] = []
    scaled: list[float] = []
    if kind is DistributionKind.UNIFORM:
        if not math.isclose(kappa, _SQRT3, rel_tol=1e-12):
            raise UniformKappaMismatch(f"uniform bounding range is sqrt(3), got {kappa!r}")
        kappa = _SQRT3
        for n in range(requested_max_n + 1):
            log_v = n * math.log(3.0) - math.log(2 * n + 1)
            if log_v >= _LOG_MAX:
                break
            v = 3.0**n / (2 * n + 1)
            if not (math.isfinite(v) and v > 0):
                break
            moments.append(v)
            scaled.append(1.0 / (2 * n + 1))
    else:
        log_mass = math.log(float(erf(kappa / math.sqrt(2.0))))
        log_k2 = 2 * math.log(kappa)
        for n in range(requested_max_n + 1):
            log_v = _gaussian_log_moment(n, kappa) - log_mass
            if log_v >= _LOG_MAX:
                break
            v = math.exp(log_v)
            if not (math.isfinite(v) and v > 0):
                break
            moments.append(v)
            scaled.append(math.exp(log_v - n * log_k2))
        moments[0] = 1.0
        scaled[0] = 1.0
    return MomentTable(kind, float(kappa), tuple(moments), np.asarray(scaled))


def zeta(table: MomentTable, n: int) -> float:
    if n < 0:
        raise ValueError("moment order must be non-negative")
    if n > table.max_usable_order:
        raise OrderExceeded(f"order {n} beyond usable ceiling {table.max_usable_order}")
    if n % 2:
        return 0.0
    return table.even_moments[n // 2]


_TABLE_CACHE: dict[float, MomentTable] = {}


def gaussian_table(kappa: float = DEFAULT_KAPPA) -> MomentTable:
    """Shared Gaussian table for ``kappa`` (tables are immutable)."""
    table = _TABLE_CACHE.get(kappa)
    if table is None:
        table = build_moment_table(DistributionKind.GAUSSIAN, kappa)
        _TABLE_CACHE[kappa] = table
    return table


def precision_correlation(gamma: float, p: float) -> float:
    """Correlation left between two inputs after adding noise of precision ``p``.

    Solves ``1/g - 1 = (1/gamma - 1) / p**2`` for ``g``.
    """
    if not (0.0 < gamma < 1.0) or not (0.0 < p < 1.0):
        raise DomainError("gamma and p must lie in the open interval (0, 1)")
    return 1.0 / (1.0 + (1.0 / gamma - 1.0) / (p * p))
