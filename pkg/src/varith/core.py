"""Scalar uncertain values: construction, independent-operand arithmetic, comparison.

Binary operators assume the two operands are statistically independent.
Expressions that reuse one variable (``x - x``, ``x * x``) must be
evaluated as a single expansion through :mod:`varith.taylor` instead.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import math
import struct
from dataclasses import dataclass

from scipy.special import erf

from .moments import DEFAULT_KAPPA, gaussian_table

__all__ = [
    "UncertainValue",
    "Ordering",
    "ComparisonResult",
    "NonFiniteInput",
    "OverflowToNonFinite",
    "lsv",
    "is_precise_float",
    "from_float",
    "from_int",
    "exact",
    "compare",
    "settings",
    "variance_settings",
    "zeta2",
    "DEFAULT_Z_THRESHOLD",
]

DEFAULT_Z_THRESHOLD = 0.67448975
_LOW_BITS = 20
_LOW_MASK = (1 << _LOW_BITS) - 1
_MAX_EXACT_INT = 2**53 - 1


class NonFiniteInput(ValueError):
    pass


class OverflowToNonFinite(ArithmeticError):
    pass


@dataclass(frozen=True)
class _Settings:
    kappa: float = DEFAULT_KAPPA
    ideal_variance: bool = False


_settings: contextvars.ContextVar[_Settings] = contextvars.ContextVar(
    "varith_settings", default=_Settings()
)


def settings() -> _Settings:
    return _settings.get()


@contextlib.contextmanager
def variance_settings(*, kappa: float | None = None, ideal_variance: bool | None = None):
    """Temporarily change the bounding range or switch ``zeta(2)`` to exactly 1."""
    cur = _settings.get()
    new = _Settings(
        kappa=cur.kappa if kappa is None else float(kappa),
        ideal_variance=cur.ideal_variance if ideal_variance is None else bool(ideal_variance),
    )
    token = _settings.set(new)
    try:
        yield new
    finally:
        _settings.reset(token)


def zeta2() -> float:
    s = _settings.get()
    if s.ideal_variance:
        return 1.0
    return gaussian_table(s.kappa).even_moments[1]


def lsv(v: float) -> float:
    """Value of one unit in the last significand place of ``v``."""
    return math.ulp(v)


def is_precise_float(v: float) -> bool:
    """True when the low 20 significand bits of ``v`` are all zero."""
    bits = struct.unpack("<Q", struct.pack("<d", v))[0]
    return (bits & _LOW_MASK) == 0


@dataclass(frozen=True, slots=True)
class UncertainValue:
    value: float
    variance: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or not math.isfinite(self.variance):
            raise NonFiniteInput(f"non-finite uncertain value ({self.value!r}, {self.variance!r})")
        if self.variance < 0:
            raise ValueError(f"negative variance {self.variance!r}")

    @property
    def deviation(self) -> float:
        return math.sqrt(self.variance)

    @property
    def precision(self) -> float:
        if self.value == 0:
            return math.inf if self.variance > 0 else 0.0
        return self.deviation / abs(self.value)

    @property
    def is_precise(self) -> bool:
        return self.variance == 0

    # arithmetic -------------------------------------------------------
    def __neg__(self) -> UncertainValue:
        return UncertainValue(-self.value, self.variance)

    def __pos__(self) -> UncertainValue:
        return self

    def __add__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _checked(self.value + other.value, _sum_variance(self.variance, other.variance))

    __radd__ = __add__

    def __sub__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return _checked(self.value - other.value, _sum_variance(self.variance, other.variance))

    def __rsub__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other.__sub__(self)

    def __mul__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        a, b = self, other
        if b.variance == 0:
            # precise factor: exact scaling, no zeta(2) correction
            return _checked(a.value * b.value, a.variance * b.value * b.value)
        if a.variance == 0:
            return _checked(a.value * b.value, b.variance * a.value * a.value)
        z2 = zeta2()
        var = (
            z2 * a.variance * (b.value * b.value)
            + (a.value * a.value) * z2 * b.variance
            + z2 * z2 * a.variance * b.variance
        )
        return _checked(a.value * b.value, var)

    __rmul__ = __mul__

    def __truediv__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if other.variance == 0:
            if other.value == 0:
                raise ZeroDivisionError("division by precise zero")
            return _checked(self.value / other.value, self.variance / (other.value * other.value))
        from .taylor import pow_u

        return self * pow_u(other, -1).unwrap()

    def __rtruediv__(self, other) -> UncertainValue:
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other.__truediv__(self)

    # rendering --------------------------------------------------------
    def __str__(self) -> str:
        return f"{self.value!r}±{self.deviation:.6g}"

    def to_hex(self) -> str:
        return f"{self.value.hex()} {self.variance.hex()}"

    @classmethod
    def from_hex(cls, text: str) -> UncertainValue:
        v, var = text.split()
        return cls(float.fromhex(v), float.fromhex(var))

    @classmethod
    def parse(cls, text: str) -> UncertainValue:
        """Parse ``"v±d"`` (``+-`` also accepted); a bare number is precise."""
        t = text.strip().replace("+-", "±")
        if "±" in t:
            v, d = t.split("±", 1)
            dev = float(d)
            return cls(float(v), dev * dev)
        return cls(float(t), 0.0)


def _sum_variance(va: float, vb: float) -> float:
    # a precise operand is an exact shift and leaves the other variance alone
    if va == 0 or vb == 0:
        return va + vb
    z2 = zeta2()
    return z2 * va + z2 * vb


def _checked(value: float, variance: float) -> UncertainValue:
    if not math.isfinite(value) or not math.isfinite(variance):
        raise OverflowToNonFinite(f"result not finite: ({value!r}, {variance!r})")
    return UncertainValue(value, variance)


def _coerce(x):
    if isinstance(x, UncertainValue):
        return x
    if isinstance(x, bool):
        return NotImplemented
    if isinstance(x, int):
        return from_int(x)
    if isinstance(x, float):
        return from_float(x)
    return NotImplemented


def from_float(v: float) -> UncertainValue:
    """Float with its representation error, modeled as uniform noise of one LSV."""
    v = float(v)
    if not math.isfinite(v):
        raise NonFiniteInput(f"cannot represent {v!r}")
    if is_precise_float(v):
        return UncertainValue(v, 0.0)
    dev = lsv(v) / math.sqrt(3.0)
    return _checked(v, dev * dev)


def from_int(i: int) -> UncertainValue:
    if abs(i) <= _MAX_EXACT_INT:
        return UncertainValue(float(i), 0.0)
    return from_float(float(i))


def exact(v: float) -> UncertainValue:
    """A value declared precise regardless of its bit pattern."""
    return UncertainValue(float(v), 0.0)


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class ComparisonResult:
    ordering: Ordering
    not_equal_probability: float


def compare(
    a: UncertainValue, b: UncertainValue, z_threshold: float = DEFAULT_Z_THRESHOLD
) -> ComparisonResult:
    """z-statistic comparison of two independent values."""
    d = a - b
    if d.value == 0:
        return ComparisonResult(Ordering.EQUAL, 0.0)
    sign = Ordering.GREATER if d.value > 0 else Ordering.LESS
    if d.variance == 0:
        return ComparisonResult(sign, 1.0)
    z = d.value / math.sqrt(d.variance)
    p = float(erf(abs(z) / math.sqrt(2.0)))
    if abs(z) <= z_threshold:
        return ComparisonResult(Ordering.EQUAL, p)
    return ComparisonResult(sign, p)
