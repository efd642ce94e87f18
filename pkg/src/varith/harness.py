"""Monte Carlo oracles and normalized-error statistics.

Every check reduces to the same question: do value errors, divided by the
uncertainty the arithmetic reports, look like draws of unit deviation?
``error_stats`` answers it and classifies the coverage.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erfcinv, ndtr

from .core import UncertainValue, from_float
from .moments import DEFAULT_KAPPA, DistributionKind, gaussian_table
from .noise import NoiseSpec, rng_streams
from .spectral import LengthMismatch
from .taylor import ExpansionOutcome, Status, exp_u, log_u, polynomial_u, pow_u, sin_u

__all__ = [
    "NoiseSpec",
    "Coverage",
    "StatSummary",
    "EngineRejected",
    "error_stats",
    "function_coverage",
    "coverage_grid",
    "measure_bounding",
    "acceptance_boundary",
    "SpecialDeterminantResult",
    "special_determinant_moments",
    "special_determinant_check",
    "RecursionLevel",
    "sincos_levels",
    "sincos_recursion",
    "GeometricResidual",
    "geometric_series_residual",
    "function_identity_checks",
    "rounded",
    "rows_to_csv",
    "IDEAL_RANGE",
    "PROPER_RANGE",
    "DELTA_FRACTION",
]

IDEAL_RANGE = (0.9, 1.1)
PROPER_RANGE = (0.1, 10.0)
# share of normalized errors inside (-0.25, 0.25) above which the shape is a spike
DELTA_FRACTION = 0.9
HIST_LIMIT = 8.0
HIST_WIDTH = 0.25
_EDGES = np.linspace(-HIST_LIMIT, HIST_LIMIT, int(2 * HIST_LIMIT / HIST_WIDTH) + 1)


class Coverage(enum.Enum):
    IDEAL = "ideal"
    PROPER = "proper"
    NONE = "none"


class EngineRejected(ArithmeticError):
    def __init__(self, status: Status):
        super().__init__(f"expansion rejected: {status.value}")
        self.status = status


@dataclass(frozen=True)
class StatSummary:
    """Normalized-error statistics.

    ``error_deviation`` is the root mean square of the normalized errors,
    so a constant ratio of 10 reports 10.  ``histogram`` holds an underflow
    count, the in-range bins, then an overflow count.
    """

    error_deviation: float
    error_mean: float
    uncertainty_mean: float
    uncertainty_deviation: float
    value_deviation: float
    histogram: tuple[int, ...] = field(repr=False)
    sample_count: int
    zero_uncertainty_count: int
    zero_uncertainty_mismatches: int
    delta_like: bool
    coverage: Coverage


def classify(error_deviation: float, delta_like: bool) -> Coverage:
    lo, hi = IDEAL_RANGE
    if lo <= error_deviation <= hi and not delta_like:
        return Coverage.IDEAL
    lo, hi = PROPER_RANGE
    if lo <= error_deviation <= hi:
        return Coverage.PROPER
    return Coverage.NONE


def error_stats(value_errors: Sequence[float], uncertainties: Sequence[float]) -> StatSummary:
    err = np.asarray(value_errors, dtype=float)
    unc = np.asarray(uncertainties, dtype=float)
    if err.shape != unc.shape:
        raise LengthMismatch(f"{err.shape} errors vs {unc.shape} uncertainties")
    if np.any(unc < 0):
        raise ValueError("uncertainties must be non-negative")
    live = unc > 0
    zero_count = int((~live).sum())
    zero_bad = int(np.count_nonzero(err[~live]))
    e, u = err[live], unc[live]
    z = e / u
    inner, _ = np.histogram(z, _EDGES)
    hist = (int((z < -HIST_LIMIT).sum()), *map(int, inner), int((z >= HIST_LIMIT).sum()))
    # np.histogram closes the last bin on the right; move an exact +limit to overflow
    if len(z):
        top = int((z == HIST_LIMIT).sum())
        hist = hist[:-2] + (hist[-2] - top, hist[-1])
    n = len(z)
    dev = math.sqrt(float(np.mean(z * z))) if n else 0.0
    delta = bool(n) and float(np.mean(np.abs(z) < HIST_WIDTH)) >= DELTA_FRACTION
    return StatSummary(
        error_deviation=dev,
        error_mean=float(np.mean(z)) if n else 0.0,
        uncertainty_mean=float(np.mean(u)) if n else 0.0,
        uncertainty_deviation=float(np.std(u)) if n else 0.0,
        value_deviation=math.sqrt(float(np.mean(err * err))) if len(err) else 0.0,
        histogram=hist,
        sample_count=n,
        zero_uncertainty_count=zero_count,
        zero_uncertainty_mismatches=zero_bad,
        delta_like=delta,
        coverage=classify(dev, delta) if n else Coverage.NONE,
    )


# ---------------------------------------------------------------------------
# library functions under input noise

_FUNCTIONS: dict[str, tuple[Callable, Callable]] = {
    "exp": (np.exp, exp_u),
    "log": (np.log, log_u),
    "sin": (np.sin, sin_u),
}


def _engine(fn: str, x: float, delta: float, c: float | None) -> tuple[Callable, ExpansionOutcome]:
    xu = UncertainValue(x, delta * delta)
    if fn == "pow":
        if c is None:
            raise ValueError("pow needs an exponent")
        return (lambda v: np.power(v, c)), pow_u(xu, c)
    try:
        f, g = _FUNCTIONS[fn]
    except KeyError:
        raise ValueError(f"unknown function {fn!r}") from None
    return f, g(xu)


def function_coverage(
    fn: str,
    x: float,
    delta: float,
    noise: NoiseSpec | None = None,
    samples: int = 10_000,
    c: float | None = None,
    kappa: float = DEFAULT_KAPPA,
    rng: np.random.Generator | None = None,
) -> StatSummary:
    """Sample ``f(x + noise) - f(x)`` and normalize by the expansion deviation.

    ``noise`` defaults to truncated Gaussian noise of deviation ``delta``;
    pass a different deviation to model misdeclared input noise.
    """
    f, out = _engine(fn, x, delta, c)
    if not out.accepted:
        raise EngineRejected(out.status)
    noise = noise or NoiseSpec(DistributionKind.GAUSSIAN, delta)
    xs = x + noise.sample(samples, rng, kappa)
    with np.errstate(invalid="ignore", divide="ignore"):
        err = f(xs) - f(np.float64(x))
    return error_stats(err, np.full(samples, out.deviation))


def coverage_grid(fn: str) -> list[tuple[float, float, float | None]]:
    """Default ``(x, delta, c)`` grid per function, matching the documented ranges."""
    pts: list[tuple[float, float, float | None]] = []
    if fn == "exp":
        for d in (1e-6, 1e-3, 1e-1):
            pts += [(float(x), d, None) for x in range(-10, 11)]
    elif fn == "log":
        for x in (0.5, 1.0, 4.0):
            for p in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.15):
                pts.append((x, p * x, None))
    elif fn == "pow":
        for c in np.round(np.arange(-3.0, 3.01, 0.25), 2):
            if c != 0:
                pts.append((1.0, 0.1, float(c)))
    elif fn == "sin":
        for k in range(-16, 17):
            x = k * math.pi / 16
            if abs(abs(x) - math.pi / 2) <= 0.1:
                continue
            for d in (1e-6, 1e-4, 1e-2, 1e-1):
                pts.append((x, d, None))
    else:
        raise ValueError(f"unknown function {fn!r}")
    return pts


def acceptance_boundary(
    expand: Callable[[float], ExpansionOutcome], lo: float, hi: float, iterations: int = 40
) -> tuple[float, Status]:
    """Largest accepted input deviation between ``lo`` (accepted) and ``hi``.

    Returns ``(hi, ACCEPTED)`` when ``hi`` itself is accepted; otherwise the
    bisected boundary and the status just past it.
    """
    if not expand(lo).accepted:
        raise ValueError("lower end of the bracket is already rejected")
    top = expand(hi)
    if top.accepted:
        return hi, Status.ACCEPTED
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        out = expand(mid)
        if out.accepted:
            lo = mid
        else:
            hi, top = mid, out
    return lo, top.status


# ---------------------------------------------------------------------------
# bounding range measurement


def measure_bounding(
    n: int,
    kappa_s: float,
    kind: DistributionKind,
    trials: int,
    seed: int = 0,
    chunk: int = 200,
) -> tuple[float, float]:
    """Average leakage of the true distribution outside ``mean ± kappa_s * dev`` of ``n`` samples.

    The sample deviation is the population (1/n) form.  The measured range
    inverts the Gaussian leakage for Gaussian data and is ``sqrt(3) (1 - eps)``
    for uniform data.
    """
    if n < 2:
        raise ValueError("need at least two samples per trial")
    s3 = math.sqrt(3.0)
    rngs = rng_streams(seed, (trials + chunk - 1) // chunk)
    total = 0.0
    done = 0
    for rng in rngs:
        m = min(chunk, trials - done)
        if kind is DistributionKind.UNIFORM:
            x = rng.uniform(-s3, s3, (m, n))
        else:
            x = rng.standard_normal((m, n))
        mean, dev = x.mean(axis=1), x.std(axis=1)
        lo, hi = mean - kappa_s * dev, mean + kappa_s * dev
        if kind is DistributionKind.UNIFORM:
            inside = np.clip(np.minimum(hi, s3) - np.maximum(lo, -s3), 0.0, None)
            leak = 1.0 - inside / (2 * s3)
        else:
            leak = ndtr(lo) + ndtr(-hi)
        total += math.fsum(leak)
        done += m
    eps = total / trials
    if kind is DistributionKind.UNIFORM:
        return s3 * (1.0 - eps), eps
    return math.sqrt(2.0) * float(erfcinv(eps)), eps


# ---------------------------------------------------------------------------
# 3x3 circulant determinant with shared variables


@dataclass(frozen=True)
class SpecialDeterminantResult:
    bias: float
    variance: float
    mc_bias: float
    mc_variance: float
    summary: StatSummary


def _special_det(x, y, z):
    return 3 * x * y * z - x**3 - y**3 - z**3


def special_determinant_moments(
    x: float, y: float, z: float, dx: float, dy: float, dz: float, kappa: float = DEFAULT_KAPPA
) -> tuple[float, float]:
    """Exact bias and variance of ``3xyz - x^3 - y^3 - z^3`` under independent bounded noise.

    Uses the 2nd, 4th and 6th moments of each input's noise.
    """
    t = gaussian_table(kappa)
    z2, z4, z6 = t.zeta(2), t.zeta(4), t.zeta(6)
    a2, a4, a6 = z2 * dx**2, z4 * dx**4, z6 * dx**6
    b2, b4, b6 = z2 * dy**2, z4 * dy**4, z6 * dy**6
    c2, c4, c6 = z2 * dz**2, z4 * dz**4, z6 * dz**6
    bias = -3.0 * (a2 * x + b2 * y + c2 * z)

    def own(v, m2, m4, m6, p, q):
        # terms in one variable's noise alone; p, q are the other two inputs
        return (
            m2 * 9 * (v * v - p * q) ** 2
            - 9 * m2 * m2 * v * v
            + m4 * (15 * v * v - 6 * p * q)
            + m6
        )

    var = (
        own(x, a2, a4, a6, y, z)
        + own(y, b2, b4, b6, x, z)
        + own(z, c2, c4, c6, x, y)
        + 9 * (a2 * b2 * (c2 + z * z) + a2 * c2 * y * y + b2 * c2 * x * x)
    )
    return bias, var


def special_determinant_check(
    x: float,
    y: float,
    z: float,
    dx: float,
    dy: float,
    dz: float,
    samples: int = 1_000_000,
    seed: int = 0,
    kappa: float = DEFAULT_KAPPA,
) -> SpecialDeterminantResult:
    bias, var = special_determinant_moments(x, y, z, dx, dy, dz, kappa)
    rx, ry, rz = rng_streams(seed, 3)
    g = DistributionKind.GAUSSIAN
    xs = x + NoiseSpec(g, dx).sample(samples, rx, kappa)
    ys = y + NoiseSpec(g, dy).sample(samples, ry, kappa)
    zs = z + NoiseSpec(g, dz).sample(samples, rz, kappa)
    d = _special_det(xs, ys, zs) - _special_det(x, y, z)
    summary = error_stats(d - bias, np.full(samples, math.sqrt(var)))
    return SpecialDeterminantResult(bias, var, float(np.mean(d)), float(np.var(d)), summary)


# ---------------------------------------------------------------------------
# sin/cos by repeated half-angle steps


def rounded(u: UncertainValue) -> UncertainValue:
    """Add the representation error of the stored result to its variance."""
    return UncertainValue(u.value, u.variance + from_float(u.value).variance)


def _sqrt(u: UncertainValue) -> UncertainValue:
    if u.value == 0 and u.variance == 0:
        return u
    return rounded(pow_u(u, 0.5).unwrap())


@dataclass(frozen=True)
class RecursionLevel:
    order: int
    angles: np.ndarray = field(repr=False)
    sines: tuple[UncertainValue, ...] = field(repr=False)
    cosines: tuple[UncertainValue, ...] = field(repr=False)
    summary: StatSummary
    library_value_deviation: float


def _level_summary(order: int, s: list, c: list) -> RecursionLevel:
    angles = np.arange(len(s)) * (math.pi / 2) / (len(s) - 1)
    errs, uncs = [], []
    for a, b in zip(s, c):
        r = pow_u(a, 2).unwrap() + pow_u(b, 2).unwrap() - 1.0
        errs.append(a.value * a.value + b.value * b.value - 1.0)
        uncs.append(r.deviation)
    lib = [math.sin(t) ** 2 + math.cos(t) ** 2 - 1.0 for t in angles]
    return RecursionLevel(
        order,
        angles,
        tuple(s),
        tuple(c),
        error_stats(errs, uncs),
        math.sqrt(math.fsum(v * v for v in lib) / len(lib)),
    )


def sincos_levels(max_order: int) -> Iterable[RecursionLevel]:
    """Yield each order in turn; order ``n`` holds ``2**n + 1`` points on ``[0, pi/2]``."""
    if not 1 <= max_order <= 18:
        raise ValueError("order must be in [1, 18]")
    one = UncertainValue(1.0)
    s = [UncertainValue(0.0), one]
    c = [one, UncertainValue(0.0)]
    for order in range(1, max_order + 1):
        ns, nc = [], []
        for j in range(len(s) - 1):
            cc = c[j] * c[j + 1]
            ss = s[j] * s[j + 1]
            ns += [s[j], _sqrt((one - cc + ss) / 2.0)]
            nc += [c[j], _sqrt((one + cc - ss) / 2.0)]
        s, c = ns + [s[-1]], nc + [c[-1]]
        yield _level_summary(order, s, c)


def sincos_recursion(order: int) -> RecursionLevel:
    level = None
    for level in sincos_levels(order):
        pass
    return level


# ---------------------------------------------------------------------------
# truncated geometric series against the reciprocal


@dataclass(frozen=True)
class GeometricResidual:
    residual: UncertainValue
    terms_needed: int
    series: UncertainValue
    reciprocal: UncertainValue


def geometric_series_residual(x: float, max_degree: int = 224) -> GeometricResidual:
    """``sum_0^N x^j - 1/(1-x)`` with both sides stored as floats.

    ``terms_needed`` is the degree past which the truncated tail
    ``|x|^(N+1) / (1-x)`` drops below one LSV of ``1/(1-x)``.
    """
    if not abs(x) < 1:
        raise ValueError("|x| must be below 1")
    xu = from_float(x)
    series = polynomial_u([1.0] * (max_degree + 1), xu)
    recip = pow_u(UncertainValue(1.0) - xu, -1)
    for out in (series, recip):
        if not out.accepted:
            raise EngineRejected(out.status)
    s, r = rounded(series.unwrap()), rounded(recip.unwrap())
    return GeometricResidual(s - r, _tail_degree(x), s, r)


def _tail_degree(x: float) -> int:
    if x == 0:
        return 0
    target = math.ulp(1.0 / (1.0 - x)) * (1.0 - x)
    return max(0, math.ceil(math.log(target) / math.log(abs(x))) - 1)


# ---------------------------------------------------------------------------
# library identities


def _identity_summary(pairs: Iterable[tuple[float, UncertainValue]]) -> StatSummary:
    errs, uncs = [], []
    for x, w in pairs:
        errs.append(w.value - x)
        uncs.append(w.deviation)
    return error_stats(errs, uncs)


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


def _power_pairs():
    for x in _grid(0.1, 10.0, 0.1):
        for p in _grid(-3.0, 3.0, 0.1):
            if p == 0:
                continue
            y = rounded(pow_u(from_float(x), p).unwrap())
            yield x, rounded(pow_u(y, 1.0 / p).unwrap())


def _exp_log_pairs():
    for x in _grid(-1.0, 1.0, 0.01):
        y = rounded(exp_u(from_float(x)).unwrap())
        yield x, rounded(log_u(y).unwrap())


def _log_exp_pairs():
    for x in _grid(0.1, 10.0, 0.05):
        y = rounded(log_u(from_float(x)).unwrap())
        yield x, rounded(exp_u(y).unwrap())


def function_identity_checks() -> dict[str, StatSummary]:
    """Round-trip identities; each intermediate carries its own representation error."""
    return {
        "log_exp": _identity_summary(_exp_log_pairs()),
        "exp_log": _identity_summary(_log_exp_pairs()),
        "power": _identity_summary(_power_pairs()),
    }


# ---------------------------------------------------------------------------
# CSV


def summary_fields(s: StatSummary) -> dict:
    d = asdict(s)
    d.pop("histogram")
    d["coverage"] = s.coverage.value
    return d


def rows_to_csv(rows: Sequence[dict]) -> str:
    """Header from the first row; floats as shortest round-trip text."""
    out = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(out, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r[k] for k in keys)])
    return out.getvalue()
