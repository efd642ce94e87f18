"""Radix-2 FFT over uncertain complex values.

Sine values come from a table addressed by an integer fraction of the
period, so the angle itself is never rounded.  The indexed table calls the
platform sine only on the first octant and fills the rest by exact
symmetry; the library table calls it for every index and is kept for
comparison.

The transform is vectorized per stage but applies the same variance rules
as :class:`varith.core.UncertainValue`: a precise factor scales exactly,
two imprecise operands pick up the ``zeta(2)`` correction.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import UncertainValue, from_float, zeta2
from .noise import NoiseSpec

__all__ = [
    "UncertainComplex",
    "SineTable",
    "Direction",
    "SignalKind",
    "OrderOutOfRange",
    "LengthMismatch",
    "FrequencyOutOfRange",
    "build_indexed_sine",
    "build_library_sine",
    "fft",
    "make_signal",
    "linear_spectrum_oracle",
    "bin_uncertainty",
    "spectrum_csv",
    "MAX_ORDER",
]

MAX_ORDER = 24


class OrderOutOfRange(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class FrequencyOutOfRange(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class UncertainComplex:
    re: UncertainValue
    im: UncertainValue = UncertainValue(0.0)

    def __add__(self, o: UncertainComplex) -> UncertainComplex:
        return UncertainComplex(self.re + o.re, self.im + o.im)

    def __sub__(self, o: UncertainComplex) -> UncertainComplex:
        return UncertainComplex(self.re - o.re, self.im - o.im)

    def __mul__(self, o: UncertainComplex) -> UncertainComplex:
        return UncertainComplex(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    def conj(self) -> UncertainComplex:
        return UncertainComplex(self.re, -self.im)

    @property
    def value(self) -> complex:
        return complex(self.re.value, self.im.value)

    @property
    def deviation(self) -> float:
        return math.sqrt(self.re.variance + self.im.variance)


@dataclass(frozen=True)
class SineTable:
    """``sin(2 pi j / 2**order)`` for ``j = 0 .. 2**order``."""

    order: int
    sines: np.ndarray
    cosines: np.ndarray
    indexed: bool = True

    @property
    def size(self) -> int:
        return 1 << self.order

    def sin(self, j: int) -> float:
        return float(self.sines[j % self.size])

    def cos(self, j: int) -> float:
        return float(self.cosines[j % self.size])


def _check_order(order: int) -> int:
    if not 1 <= order <= MAX_ORDER:
        raise OrderOutOfRange(f"order must be in [1, {MAX_ORDER}], got {order}")
    return 1 << order


def build_indexed_sine(order: int) -> SineTable:
    n = _check_order(order)
    s = np.zeros(n + 1)
    if order == 1:
        c = np.array([1.0, -1.0, 1.0])
    else:
        q, e = n // 4, n // 8
        base_s = [math.sin(2.0 * math.pi * j / n) for j in range(e + 1)]
        base_c = [math.cos(2.0 * math.pi * j / n) for j in range(e + 1)]
        base_c[0] = 1.0
        if e:
            base_c[e] = base_s[e]
        for j in range(q + 1):
            s[j] = base_s[j] if j <= e else base_c[q - j]
        for j in range(q + 1, 2 * q + 1):
            s[j] = s[2 * q - j]
        for j in range(2 * q + 1, n + 1):
            # 0.0 - x keeps the zero crossings at +0.0
            s[j] = 0.0 - s[j - 2 * q]
        c = np.array([s[(j + q) % n] for j in range(n + 1)])
    s.setflags(write=False)
    c.setflags(write=False)
    return SineTable(order, s, c, True)


def build_library_sine(order: int) -> SineTable:
    n = _check_order(order)
    s = np.array([math.sin(2.0 * math.pi * j / n) for j in range(n + 1)])
    c = np.array([math.cos(2.0 * math.pi * j / n) for j in range(n + 1)])
    s.setflags(write=False)
    c.setflags(write=False)
    return SineTable(order, s, c, False)


class Direction(enum.Enum):
    FORWARD = 1
    REVERSE = -1


def _mul_var(va, a, vb, b, z2):
    both = z2 * va * (b * b) + (a * a) * z2 * vb + z2 * z2 * va * vb
    return np.where(vb == 0, va * (b * b), np.where(va == 0, vb * (a * a), both))


def _add_var(va, vb, z2):
    return np.where((va == 0) | (vb == 0), va + vb, z2 * va + z2 * vb)


def _float_variance(x: np.ndarray) -> np.ndarray:
    return np.array([from_float(float(v)).variance for v in x])


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(
    data: Sequence[UncertainComplex], direction: Direction, sines: SineTable
) -> list[UncertainComplex]:
    """Forward uses ``exp(+i 2 pi j k / N)``; reverse uses the conjugate and divides by ``N``."""
    n = len(data)
    if n != sines.size:
        raise LengthMismatch(f"data length {n} does not match table size {sines.size}")
    z2 = zeta2()
    perm = _bit_reverse(n)
    re = np.array([d.re.value for d in data])[perm]
    im = np.array([d.im.value for d in data])[perm]
    vre = np.array([d.re.variance for d in data])[perm]
    vim = np.array([d.im.variance for d in data])[perm]
    sign = 1.0 if direction is Direction.FORWARD else -1.0

    half = 1
    while half < n:
        span = 2 * half
        k = np.arange(half)
        tidx = k * (n // span)
        c = sines.cosines[tidx]
        s = sign * sines.sines[tidx] + 0.0
        vc, vs = _float_variance(c), _float_variance(s)
        starts = np.arange(0, n, span)
        top = (starts[:, None] + k[None, :]).ravel()
        bot = top + half
        cc, ss = np.tile(c, len(starts)), np.tile(s, len(starts))
        vcc, vss = np.tile(vc, len(starts)), np.tile(vs, len(starts))
        br, bi, vbr, vbi = re[bot], im[bot], vre[bot], vim[bot]
        # t = w * b
        p1, p2 = br * cc, bi * ss
        p3, p4 = br * ss, bi * cc
        v1, v2 = _mul_var(vbr, br, vcc, cc, z2), _mul_var(vbi, bi, vss, ss, z2)
        v3, v4 = _mul_var(vbr, br, vss, ss, z2), _mul_var(vbi, bi, vcc, cc, z2)
        tr, ti = p1 - p2, p3 + p4
        vtr, vti = _add_var(v1, v2, z2), _add_var(v3, v4, z2)
        ar, ai, var_, vai = re[top], im[top], vre[top], vim[top]
        re[top], im[top] = ar + tr, ai + ti
        re[bot], im[bot] = ar - tr, ai - ti
        vre[top] = vre[bot] = _add_var(var_, vtr, z2)
        vim[top] = vim[bot] = _add_var(vai, vti, z2)
        half = span

    if direction is Direction.REVERSE:
        # precise divisor: exact scaling of the variance
        re, im = re / n, im / n
        vre, vim = vre / (n * n), vim / (n * n)
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ArithmeticError("transform overflowed")
    return [
        UncertainComplex(UncertainValue(float(re[i]), float(vre[i])), UncertainValue(float(im[i]), float(vim[i])))
        for i in range(n)
    ]


class SignalKind(enum.Enum):
    SIN = "sin"
    COS = "cos"
    LINEAR = "linear"


def make_signal(
    kind: SignalKind,
    order: int,
    freq: int,
    sines: SineTable,
    noise: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
) -> list[UncertainComplex]:
    """Real-valued test signal; optional noise is added to the value and declared as variance."""
    n = _check_order(order)
    if sines.size != n:
        raise LengthMismatch("sine table order does not match signal order")
    if kind is SignalKind.LINEAR:
        vals = np.arange(n, dtype=float)
    else:
        if not 1 <= freq <= n // 2 - 1:
            raise FrequencyOutOfRange(f"frequency must be in [1, {n // 2 - 1}], got {freq}")
        pick = sines.sines if kind is SignalKind.SIN else sines.cosines
        vals = np.array([pick[(freq * k) % n] for k in range(n)])
    var = 0.0
    if noise is not None and noise.deviation > 0:
        vals = vals + noise.sample(n, rng)
        var = noise.deviation**2
    return [UncertainComplex(UncertainValue(float(v), var)) for v in vals]


def linear_spectrum_oracle(order: int) -> list[complex]:
    """Forward spectrum of ``h[k] = k``; the cotangent is a ratio of table entries."""
    n = 1 << order
    if order < 1:
        raise OrderOutOfRange("order must be at least 1")
    # cot(pi m / N) = cos / sin at index m of a table with period 2N
    t = build_indexed_sine(order + 1)
    out = [complex(n * (n - 1) / 2, 0.0)]
    for m in range(1, n):
        cot = t.cos(m) / t.sin(m)
        out.append(complex(-n / 2, -n / 2 * cot))
    return out


def bin_uncertainty(spectrum: Sequence[UncertainComplex]) -> np.ndarray:
    return np.array([z.deviation for z in spectrum])


def spectrum_csv(spectrum: Sequence[UncertainComplex]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["bin", "re", "dre", "im", "dim"])
    for i, z in enumerate(spectrum):
        w.writerow([i, repr(z.re.value), repr(z.re.deviation), repr(z.im.value), repr(z.im.deviation)])
    return out.getvalue()
