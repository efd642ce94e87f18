"""Moving-window least-squares line fit over a series of uncertain values.

The window of ``2H + 1`` samples uses abscissas ``X = -H..H`` so that
``sum X = 0``.  With ``S = sum Y`` and ``B = sum X Y`` the fit is

    alpha = S / (2H + 1)          beta = B / (H (H + 1) (2H + 1) / 3)

Both sums are advanced one sample at a time.  Their variances are not
taken from that recurrence, which reuses each sample many times and would
double count it; they are recomputed directly from the window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import UncertainValue

__all__ = [
    "WindowFit",
    "SeriesTooShort",
    "moving_fit",
    "naive_progressive_fit",
    "direct_fit",
    "beta_scale",
    "read_series_csv",
    "write_fits_csv",
]


class SeriesTooShort(ValueError):
    pass


@dataclass(frozen=True)
class WindowFit:
    index: int
    alpha_raw: UncertainValue
    beta_raw: UncertainValue
    alpha: UncertainValue
    beta: UncertainValue


def beta_scale(h: int) -> int:
    return h * (h + 1) * (2 * h + 1) // 3


def _check(series: Sequence[UncertainValue], h: int) -> None:
    if h < 1:
        raise ValueError("half width H must be positive")
    if len(series) < 2 * h + 1:
        raise SeriesTooShort(f"need at least {2 * h + 1} samples, got {len(series)}")


def _descale(index: int, s: float, vs: float, b: float, vb: float, h: int) -> WindowFit:
    na, nb = 2 * h + 1, beta_scale(h)
    return WindowFit(
        index,
        UncertainValue(s, vs),
        UncertainValue(b, vb),
        UncertainValue(s / na, vs / (na * na)),
        UncertainValue(b / nb, vb / (nb * nb)),
    )


class _Running:
    """Running sum with a carried rounding remainder, so drift stays at one ulp."""

    __slots__ = ("hi", "lo")

    def __init__(self, v: float):
        self.hi, self.lo = v, 0.0

    def add(self, *deltas: float) -> None:
        parts = [self.hi, self.lo, *deltas]
        self.hi = math.fsum(parts)
        self.lo = math.fsum([*parts, -self.hi])


def moving_fit(series: Sequence[UncertainValue], h: int) -> list[WindowFit]:
    """Fit every full window; ``index`` is the window centre."""
    _check(series, h)
    w = 2 * h + 1
    y = [v.value for v in series]
    var = [v.variance for v in series]
    s = _Running(math.fsum(y[:w]))
    b = _Running(math.fsum((k - h) * y[k] for k in range(w)))
    fits = []
    for j in range(w - 1, len(series)):
        if j >= w:
            old, new = y[j - w], y[j]
            # shift abscissas by one before dropping the sum: uses the previous S
            b.add(-s.hi, -s.lo, (h + 1) * old, h * new)
            s.add(-old, new)
        lo = j - w + 1
        vs = sum(var[lo : j + 1])
        vb = sum((k - h) ** 2 * var[lo + k] for k in range(w))
        fits.append(_descale(j - h, s.hi, vs, b.hi, vb, h))
    return fits


def direct_fit(series: Sequence[UncertainValue], h: int) -> list[WindowFit]:
    """Same fit with every window summed from scratch."""
    _check(series, h)
    w = 2 * h + 1
    fits = []
    for j in range(w - 1, len(series)):
        lo = j - w + 1
        win = series[lo : j + 1]
        s = math.fsum(v.value for v in win)
        b = math.fsum((k - h) * win[k].value for k in range(w))
        vs = sum(v.variance for v in win)
        vb = sum((k - h) ** 2 * win[k].variance for k in range(w))
        fits.append(_descale(j - h, s, vs, b, vb, h))
    return fits


def naive_progressive_fit(series: Sequence[UncertainValue], h: int) -> list[WindowFit]:
    """The progressive recurrence run entirely in independent-operand arithmetic.

    Each step treats the previous sums as independent of the samples they
    contain, so the variance keeps growing.  Kept as the counterexample.
    """
    _check(series, h)
    w = 2 * h + 1
    s = UncertainValue(0.0, 0.0)
    b = UncertainValue(0.0, 0.0)
    for k in range(w):
        s = s + series[k]
        b = b + series[k] * UncertainValue(float(k - h))
    na, nb = float(w), float(beta_scale(h))
    fits = [WindowFit(h, s, b, s / na, b / nb)]
    for j in range(w, len(series)):
        old, new = series[j - w], series[j]
        b = b - s + old * UncertainValue(float(h + 1)) + new * UncertainValue(float(h))
        s = s - old + new
        fits.append(WindowFit(j - h, s, b, s / na, b / nb))
    return fits


def read_series_csv(text: str | Iterable[str]) -> list[UncertainValue]:
    """Columns ``index, y, dy``; rows are taken in file order."""
    lines = io.StringIO(text) if isinstance(text, str) else text
    rows = list(csv.DictReader(lines))
    return [UncertainValue(float(r["y"]), float(r["dy"]) ** 2) for r in rows]


def write_fits_csv(fits: Sequence[WindowFit]) -> str:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["index", "alpha", "dalpha", "beta", "dbeta"])
    for f in fits:
        wr.writerow(
            [f.index, repr(f.alpha.value), repr(f.alpha.deviation), repr(f.beta.value), repr(f.beta.deviation)]
        )
    return out.getvalue()
