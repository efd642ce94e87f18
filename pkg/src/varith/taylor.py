"""Mean and variance of ``f(x ± δx)`` from a Taylor coefficient stream.

With ``t(n) = v**n f^(n)(x) / n!`` (``v`` the expansion variable) and
bounded moments ``zeta``:

    mean     = f(x) + sum_n t(n) zeta(n)
    variance = sum_n sum_{j=1}^{n-1} t(j) t(n-j) (zeta(n) - zeta(j) zeta(n-j))

Odd moments vanish, so only even ``n`` contribute.  Internally every term
is multiplied by ``kappa**n`` and every moment divided by it, which keeps
both factors near unit magnitude out to the last usable order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .core import UncertainValue, settings
from .moments import MomentTable, bounding_leakage, gaussian_table

__all__ = [
    "Status",
    "ExpansionOutcome",
    "ExpansionRejected",
    "TaylorCoefficients",
    "NonPositiveValue",
    "ZeroBaseNonNatural",
    "NegativeBaseNonInteger",
    "DegreeExceeded",
    "expand_1d",
    "exp_u",
    "log_u",
    "sin_u",
    "cos_u",
    "pow_u",
    "polynomial_u",
    "MONOTONIC_WINDOW",
    "STABLE_EPSILON",
]

MONOTONIC_WINDOW = 20
STABLE_EPSILON = bounding_leakage(5.0)


class Status(enum.Enum):
    ACCEPTED = "Accepted"
    NOT_FINITE = "NotFinite"
    NOT_MONOTONIC = "NotMonotonic"
    NOT_STABLE = "NotStable"
    NOT_POSITIVE = "NotPositive"
    NOT_RELIABLE = "NotReliable"


class ExpansionRejected(ArithmeticError):
    def __init__(self, status: Status, order: int):
        super().__init__(f"expansion rejected: {status.value} at order {order}")
        self.status = status
        self.order = order


class NonPositiveValue(ValueError):
    pass


class ZeroBaseNonNatural(ValueError):
    pass


class NegativeBaseNonInteger(ValueError):
    pass


class DegreeExceeded(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionOutcome:
    status: Status
    mean: float | None
    variance: float | None
    terms_used: int

    @property
    def accepted(self) -> bool:
        return self.status is Status.ACCEPTED

    @property
    def deviation(self) -> float:
        if self.variance is None:
            raise ExpansionRejected(self.status, self.terms_used)
        return math.sqrt(self.variance)

    def unwrap(self) -> UncertainValue:
        if not self.accepted:
            raise ExpansionRejected(self.status, self.terms_used)
        return UncertainValue(self.mean, self.variance)


TermStream = Callable[[float], Iterator[float]]


@dataclass(frozen=True)
class TaylorCoefficients:
    """Expansion of ``f`` around one point.

    ``stream(w)`` yields ``w**n f^(n)(x)/n!`` (divided by ``scale``) for
    ``n = 1, 2, ...``, evaluated incrementally so large ``w`` cannot
    overflow a raw derivative.  ``variable`` is the natural expansion
    variable (deviation or precision); the result is ``scale`` times the
    expansion of ``value + sum t(n) x~^n``.
    """

    value: float
    variable: float
    stream: TermStream
    max_order: int | None = None
    scale: float = 1.0

    def coeff(self, n: int) -> float:
        """Folded coefficient ``t(n)`` at the native expansion variable."""
        if n < 1:
            raise ValueError("coefficients start at order 1")
        if self.max_order is not None and n > self.max_order:
            return 0.0
        for i, t in enumerate(self.stream(self.variable), start=1):
            if i == n:
                return t * self.scale
        return 0.0


def _rejected(status: Status, order: int) -> ExpansionOutcome:
    return ExpansionOutcome(status, None, None, order)


def _strictly_decreasing(values: np.ndarray) -> bool:
    mags = np.abs(values)
    return bool(np.all(mags[1:] < mags[:-1]))


def _window_ok(terms: np.ndarray, total: float) -> bool:
    """Monotonic rule on the terms at the highest orders.

    A window whose terms no longer move the sum has converged; otherwise
    the magnitudes must strictly decrease.
    """
    window = terms[-MONOTONIC_WINDOW:]
    if np.all(np.abs(window) <= abs(total) * _SIGNIFICANT):
        return True
    return _strictly_decreasing(window)


def expand_1d(
    coeffs: TaylorCoefficients,
    table: MomentTable | None = None,
    *,
    epsilon: float = STABLE_EPSILON,
) -> ExpansionOutcome:
    """Accumulate mean and variance order by order and apply the validity rules.

    Infinite streams are always summed out to the last usable moment so
    that a divergent tail cannot hide behind small early terms.
    """
    if table is None:
        table = gaussian_table(settings().kappa)
    scale = coeffs.scale
    if coeffs.variable == 0:
        return ExpansionOutcome(Status.ACCEPTED, coeffs.value * scale, 0.0, 0)

    kappa = table.kappa
    top = table.max_usable_order
    finite_stream = coeffs.max_order is not None and 2 * coeffs.max_order <= top
    last = 2 * coeffs.max_order if finite_stream else top
    n_terms = min(last, coeffs.max_order) if coeffs.max_order is not None else last

    # zeta(n)/kappa^n at every order, odd entries zero
    z = np.zeros(last + 1)
    z[0::2] = table.scaled[: last // 2 + 1]

    tau = np.zeros(last + 1)
    for n, t in enumerate(coeffs.stream(coeffs.variable * kappa), start=1):
        if not math.isfinite(t):
            return _rejected(Status.NOT_FINITE, n)
        tau[n] = t
        if n >= n_terms:
            break

    with np.errstate(over="ignore", invalid="ignore"):
        tz = tau * z
        v_all = z * np.convolve(tau, tau)[: last + 1] - np.convolve(tz, tz)[: last + 1]
    orders = np.arange(2, last + 1, 2)
    m_terms = tz[orders]
    v_terms = v_all[orders]
    with np.errstate(over="ignore", invalid="ignore"):
        means = coeffs.value + np.cumsum(m_terms)
        variances = np.cumsum(v_terms)

    bad = ~(np.isfinite(means) & np.isfinite(variances))
    if bad.any():
        return _rejected(Status.NOT_FINITE, int(orders[np.argmax(bad)]))
    neg = variances < 0
    if neg.any():
        return _rejected(Status.NOT_POSITIVE, int(orders[np.argmax(neg)]))
    # rounding uncertainty of the running variance: one LSV per accumulated term
    # scaled by the largest magnitude so the squares cannot overflow
    big = max(float(np.max(np.abs(variances))), float(np.max(np.abs(v_terms))), 1e-300)
    sv, st = np.spacing(variances) / big, np.spacing(v_terms) / big
    round_unc = big * np.sqrt(np.cumsum((sv * sv + st * st) / 3.0))
    unreliable = (variances > 0) & (round_unc >= variances / kappa)
    if unreliable.any():
        return _rejected(Status.NOT_RELIABLE, int(orders[np.argmax(unreliable)]))

    mean = float(means[-1])
    var = float(variances[-1])
    used = _orders_used(m_terms, v_terms, mean, var, orders)
    if finite_stream:
        return _accept(mean, var, scale, used)
    if not (_window_ok(v_terms, var) and _window_ok(m_terms, mean)):
        return _rejected(Status.NOT_MONOTONIC, last)
    unc = math.sqrt(var)
    v_last, m_last = abs(float(v_terms[-1])), abs(float(m_terms[-1]))
    if not (v_last <= epsilon * var and m_last <= epsilon * unc and m_last <= epsilon * abs(mean)):
        return _rejected(Status.NOT_STABLE, last)
    return _accept(mean, var, scale, used)


_SIGNIFICANT = 2.0**-53


def _orders_used(m_terms, v_terms, mean, var, orders) -> int:
    """Highest order whose term still changes the mean or the variance."""
    keep = (np.abs(v_terms) > abs(var) * _SIGNIFICANT) | (np.abs(m_terms) > abs(mean) * _SIGNIFICANT)
    idx = np.nonzero(keep)[0]
    return int(orders[idx[-1]]) if len(idx) else 0


def _accept(mean: float, var: float, scale: float, order: int) -> ExpansionOutcome:
    mean *= scale
    var *= scale * scale
    if not (math.isfinite(mean) and math.isfinite(var)):
        return _rejected(Status.NOT_FINITE, order)
    return ExpansionOutcome(Status.ACCEPTED, mean, var, order)


# ---------------------------------------------------------------------------
# coefficient streams


def _exp_stream(w: float) -> Iterator[float]:
    t = 1.0
    n = 0
    while True:
        n += 1
        t *= w / n
        yield t


def _log_stream(w: float) -> Iterator[float]:
    p = 1.0
    n = 0
    while True:
        n += 1
        p *= w
        yield p / n if n % 2 else -p / n


def _sin_stream(x: float) -> TermStream:
    cycle = (math.sin(x), math.cos(x), -math.sin(x), -math.cos(x))

    def stream(w: float) -> Iterator[float]:
        m = 1.0
        n = 0
        while True:
            n += 1
            m *= w / n
            yield cycle[n % 4] * m

    return stream


def _binomial_stream(c: float) -> TermStream:
    def stream(w: float) -> Iterator[float]:
        t = 1.0
        n = 0
        while True:
            n += 1
            t *= (c - n + 1) / n * w
            yield t

    return stream


def _natural_power_stream(x: float, c: int) -> TermStream:
    def stream(w: float) -> Iterator[float]:
        for n in range(1, c + 1):
            yield math.comb(c, n) * x ** (c - n) * w**n

    return stream


def _polynomial_stream(c: Sequence[float], x: float) -> TermStream:
    deg = len(c) - 1

    def stream(w: float) -> Iterator[float]:
        for n in range(1, deg + 1):
            inner = 0.0
            for k in range(deg - n, -1, -1):
                inner = inner * x + c[n + k] * math.comb(n + k, n)
            yield inner * w**n

    return stream


def _horner(c: Sequence[float], x: float) -> float:
    acc = 0.0
    for coef in reversed(c):
        acc = acc * x + coef
    return acc


# ---------------------------------------------------------------------------
# library functions


def exp_u(x: UncertainValue, table: MomentTable | None = None) -> ExpansionOutcome:
    """``e**(x ± δx)``: expansion in the deviation, scaled by ``e**x``."""
    try:
        scale = math.exp(x.value)
    except OverflowError:
        return _rejected(Status.NOT_FINITE, 0)
    return expand_1d(TaylorCoefficients(1.0, x.deviation, _exp_stream, scale=scale), table)


def log_u(x: UncertainValue, table: MomentTable | None = None) -> ExpansionOutcome:
    """``log(x ± δx)``: expansion in the precision ``δx/x``."""
    if not x.value > 0:
        raise NonPositiveValue(f"log needs a positive value, got {x.value!r}")
    return expand_1d(TaylorCoefficients(math.log(x.value), x.precision, _log_stream), table)


def sin_u(x: UncertainValue, table: MomentTable | None = None) -> ExpansionOutcome:
    return expand_1d(TaylorCoefficients(math.sin(x.value), x.deviation, _sin_stream(x.value)), table)


def cos_u(x: UncertainValue, table: MomentTable | None = None) -> ExpansionOutcome:
    """``cos(x)`` as ``sin(x + π/2)`` with a precise phase shift."""
    return sin_u(UncertainValue(x.value + math.pi / 2, x.variance), table)


def _is_natural(c: float) -> bool:
    return float(c).is_integer() and c >= 0


def pow_u(x: UncertainValue, c: float, table: MomentTable | None = None) -> ExpansionOutcome:
    """``(x ± δx)**c`` by the generalized binomial series in the precision.

    A natural-number exponent gives a finite stream, so no upper bound on
    the input precision applies.
    """
    if _is_natural(c):
        ci = int(c)
        return expand_1d(
            TaylorCoefficients(x.value**ci, x.deviation, _natural_power_stream(x.value, ci), max_order=ci),
            table,
        )
    if x.value == 0:
        raise ZeroBaseNonNatural(f"0 ** {c!r} needs a natural-number exponent")
    if x.value < 0 and not float(c).is_integer():
        raise NegativeBaseNonInteger(f"({x.value!r}) ** {c!r} is not real")
    scale = math.pow(x.value, c)
    return expand_1d(TaylorCoefficients(1.0, x.precision, _binomial_stream(float(c)), scale=scale), table)


def polynomial_u(
    coefficients: Sequence[float], x: UncertainValue, table: MomentTable | None = None
) -> ExpansionOutcome:
    """``sum_j c_j (x ± δx)**j`` re-expanded around ``x`` with precise coefficients."""
    c = [float(v) for v in coefficients]
    if not c:
        raise ValueError("empty polynomial")
    if table is None:
        table = gaussian_table(settings().kappa)
    deg = len(c) - 1
    if 2 * deg > table.max_usable_order:
        raise DegreeExceeded(f"degree {deg} needs moments past order {table.max_usable_order}")
    value = _horner(c, x.value)
    return expand_1d(
        TaylorCoefficients(value, x.deviation, _polynomial_stream(c, x.value), max_order=deg), table
    )
