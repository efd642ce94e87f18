"""Named batch experiments: each returns CSV tables and graded checks."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import harness as H
from .core import UncertainValue, variance_settings
from .matrix import (
    UncertainMatrix,
    adjugate,
    determinant,
    determinant_first_order,
    forward_residual,
)
from .moments import DistributionKind, bounding_leakage, build_moment_table
from .noise import NoiseSpec, rng_streams
from .regression import moving_fit, naive_progressive_fit, write_fits_csv
from .spectral import (
    Direction,
    SignalKind,
    bin_uncertainty,
    build_indexed_sine,
    fft,
    linear_spectrum_oracle,
    make_signal,
    spectrum_csv,
)
from .taylor import exp_u, log_u, pow_u, sin_u

__all__ = ["ExperimentConfig", "Check", "ExperimentResult", "EXPERIMENTS", "run_experiment"]

GAUSS = DistributionKind.GAUSSIAN


@dataclass(frozen=True)
class ExperimentConfig:
    kappa: float = 5.0
    seed: int = 20240101
    samples: int = 10_000
    fft_orders: tuple[int, ...] = tuple(range(4, 13))
    fft_freq: int = 3
    fft_noise: float = 1e-3
    matrix_sizes: tuple[int, ...] = (4, 5, 6)
    matrix_trials: int = 40
    regression_half_width: int = 4
    regression_length: int = 2000
    recursion_orders: tuple[int, int] = (4, 14)
    bounding_trials: int = 1000


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    measured: float
    bound: str
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] criterion {self.criterion}: {self.name}: measured {self.measured!r}, bound {self.bound}"


@dataclass
class ExperimentResult:
    files: dict[str, str] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    def check(self, criterion: int, name: str, measured: float, bound: str, passed: bool) -> None:
        self.checks.append(Check(criterion, name, float(measured), bound, bool(passed)))


def _within(v: float, lo: float, hi: float) -> bool:
    return lo <= v <= hi


# ---------------------------------------------------------------------------


def run_moments(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    t0 = time.perf_counter()
    table = build_moment_table(GAUSS, cfg.kappa)
    elapsed = time.perf_counter() - t0
    rows = [
        {"order": 2 * n, "zeta": table.even_moments[n], "zeta_over_kappa_power": float(table.scaled[n])}
        for n in range(len(table.even_moments))
    ]
    res.files["moments.csv"] = H.rows_to_csv(rows)
    res.files["leakage.csv"] = H.rows_to_csv(
        [{"kappa": float(k), "leakage": bounding_leakage(float(k))} for k in np.arange(1.0, 7.01, 0.5)]
    )
    worst = max(abs(table.zeta(2 * n) / math.prod(range(1, 2 * n, 2)) - 1) for n in range(1, 5))
    res.check(1, "zeta(2n) vs (2n-1)!! for n<5, relative", worst, "<= 1e-3", worst <= 1e-3)
    z2 = table.zeta(2)
    res.check(1, "zeta(2, 5)", z2, "1 - 1.64e-4 +- 1e-6", abs(z2 - (1 - 1.64e-4)) <= 1e-6)
    eps = bounding_leakage(cfg.kappa)
    res.check(1, "leakage(5)", eps, "5.73e-7 +- 1%", abs(eps / 5.73e-7 - 1) <= 0.01)
    res.check(1, "table build seconds", elapsed, "< 1", elapsed < 1.0)
    return res


def run_functions(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    with variance_settings(kappa=cfg.kappa):
        for fn in ("exp", "log", "pow", "sin"):
            pts = H.coverage_grid(fn)
            rngs = rng_streams(cfg.seed, len(pts))
            rows, devs = [], []
            for (x, d, c), rng in zip(pts, rngs):
                s = H.function_coverage(fn, x, d, samples=cfg.samples, c=c, kappa=cfg.kappa, rng=rng)
                devs.append(s.error_deviation)
                rows.append({"x": x, "delta": d, "c": "" if c is None else c, **H.summary_fields(s)})
            res.files[f"coverage_{fn}.csv"] = H.rows_to_csv(rows)
            lo, hi = min(devs), max(devs)
            res.check(2, f"{fn} error deviation range", lo if 1 - lo > hi - 1 else hi, "[0.9, 1.1]", lo >= 0.9 and hi <= 1.1)
        _boundaries(res)
    return res


def _boundaries(res: ExperimentResult) -> None:
    b, _ = H.acceptance_boundary(lambda p: log_u(UncertainValue(1.0, p * p)), 0.01, 0.5)
    res.check(3, "log precision boundary", b, "[0.195, 0.205]", _within(b, 0.195, 0.205))
    b, _ = H.acceptance_boundary(lambda s: exp_u(UncertainValue(0.0, s * s)), 1.0, 60.0)
    res.check(3, "exp deviation boundary", b, "[19.5, 20.2]", _within(b, 19.5, 20.2))
    b, _ = H.acceptance_boundary(lambda p: pow_u(UncertainValue(1.0, p * p), -1), 0.01, 0.5)
    res.check(3, "1/(1+-d) boundary", b, "[0.195, 0.205]", _within(b, 0.195, 0.205))
    rows, bounds = [], []
    for k in range(0, 41):
        x = k * math.pi / 40
        bs, st = H.acceptance_boundary(lambda s: sin_u(UncertainValue(x, s * s)), 0.5, 4.0, 30)
        bounds.append(bs / math.pi)
        rows.append({"x_over_pi": k / 40, "boundary_over_pi": bs / math.pi, "status": st.value})
    res.files["sin_boundary.csv"] = H.rows_to_csv(rows)
    lo, hi = min(bounds), max(bounds)
    res.check(3, "sin boundary min / pi", lo, ">= 0.30", lo >= 0.30)
    res.check(3, "sin boundary max / pi", hi, "<= 0.43", hi <= 0.43)


def run_identities(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    with variance_settings(kappa=cfg.kappa):
        out = H.function_identity_checks()
    res.files["identities.csv"] = H.rows_to_csv([{"identity": k, **H.summary_fields(v)} for k, v in out.items()])
    d = out["power"].error_deviation
    res.check(9, "(x^p)^(1/p) - x error deviation", d, "[0.2, 2]", _within(d, 0.2, 2.0))
    return res


def run_geometric(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    rows = []
    ok_lsv = ok_unc = True
    worst_lsv = worst_unc = 0.0
    with variance_settings(kappa=cfg.kappa):
        for k in range(-73, 76):
            x = k / 100
            g = H.geometric_series_residual(x)
            v = abs(g.residual.value)
            lsv = math.ulp(1.0 / (1.0 - x))
            r_lsv = v / lsv
            r_unc = v / g.residual.deviation if g.residual.deviation else (0.0 if v == 0 else math.inf)
            worst_lsv, worst_unc = max(worst_lsv, r_lsv), max(worst_unc, r_unc)
            ok_lsv &= r_lsv <= 4
            ok_unc &= r_unc <= 5
            rows.append({"x": x, "residual": g.residual.value, "uncertainty": g.residual.deviation, "terms_needed": g.terms_needed})
        far = H.geometric_series_residual(0.98)
    rows.append({"x": 0.98, "residual": far.residual.value, "uncertainty": far.residual.deviation, "terms_needed": far.terms_needed})
    res.files["geometric.csv"] = H.rows_to_csv(rows)
    res.check(4, "max |residual| / LSV on [-0.73, 0.75]", worst_lsv, "<= 4", ok_lsv)
    res.check(4, "max |residual| / uncertainty on [-0.73, 0.75]", worst_unc, "<= 5", ok_unc)
    m = abs(far.residual.value)
    res.check(4, "|residual| at x = 0.98", m, "[10, 100]", _within(m, 10, 100))
    return res


def run_matrix(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    rows = []
    all_devs = []
    precisions = [10.0**-e for e in range(12, 2, -1)]
    with variance_settings(kappa=cfg.kappa):
        streams = iter(rng_streams(cfg.seed, len(cfg.matrix_sizes) * len(precisions)))
        for n in cfg.matrix_sizes:
            for p in precisions:
                rng = next(streams)
                dev = p * 256 / math.sqrt(3.0)
                errs, uncs = [], []
                for _ in range(cfg.matrix_trials):
                    a = rng.integers(-256, 257, (n, n)).astype(float)
                    exact = adjugate(UncertainMatrix.precise(a)).values
                    noisy = a + NoiseSpec(GAUSS, dev).sample(n * n, rng, cfg.kappa).reshape(n, n)
                    adj = adjugate(UncertainMatrix(noisy, np.full((n, n), dev * dev)))
                    errs += list((adj.values - exact).ravel())
                    uncs += list(adj.deviations.ravel())
                s = H.error_stats(errs, uncs)
                all_devs.append(s.error_deviation)
                rows.append({"size": n, "precision": p, **H.summary_fields(s)})
        lo, hi = min(all_devs), max(all_devs)
        res.check(5, "adjugate error deviation range", lo if 1 - lo > hi - 1 else hi, "[0.8, 1.2]", lo >= 0.8 and hi <= 1.2)
        rng = rng_streams(cfg.seed + 1, 1)[0]
        worst = 0.0
        for n in (4, 5, 6, 7, 8):
            a = rng.integers(-256, 257, (n, n)).astype(float)
            worst = max(worst, float(np.abs(forward_residual(UncertainMatrix.precise(a)).values).max()))
        res.check(5, "max |M adj(M) - det I| for precise integer M", worst, "== 0", worst == 0)
        worst = 0.0
        for n in cfg.matrix_sizes:
            a = rng.integers(-256, 257, (n, n)).astype(float)
            m = UncertainMatrix(a, np.full((n, n), (1e-4 * 256 / math.sqrt(3)) ** 2))
            worst = max(worst, abs(determinant_first_order(m).variance / determinant(m).variance - 1))
        res.check(5, "first-order vs exact determinant variance at precision 1e-4", worst, "<= 1e-3", worst <= 1e-3)
    res.files["adjugate.csv"] = H.rows_to_csv(rows)
    return res


def run_regression(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    h = cfg.regression_half_width
    dy = 0.2
    const = [UncertainValue(1.0, dy * dy)] * (4 * h + 200)
    fits = moving_fit(const, h)
    ea = max(abs(f.alpha.deviation - dy / math.sqrt(2 * h + 1)) for f in fits)
    eb = max(abs(f.beta.deviation - dy * math.sqrt(3 / (h * (h + 1) * (2 * h + 1)))) for f in fits)
    res.check(6, "max |dalpha - dY/sqrt(2H+1)|", ea, "<= 1e-12", ea <= 1e-12)
    res.check(6, "max |dbeta - closed form|", eb, "<= 1e-12", eb <= 1e-12)
    naive = naive_progressive_fit(const, h)
    ratio = min(naive[100].alpha.variance / fits[100].alpha.variance, naive[100].beta.variance / fits[100].beta.variance)
    res.check(6, "naive / adjusted variance after 100 steps", ratio, "> 10", ratio > 10)

    n = cfg.regression_length
    rng = rng_streams(cfg.seed, 1)[0]
    k = np.arange(n, dtype=float)
    truth = 3.0 + 0.05 * k
    scale = np.ones(n)
    seg = slice(n // 2, n // 2 + n // 5)
    scale[seg] = 10.0
    noisy = truth + NoiseSpec(GAUSS, dy).sample(n, rng, cfg.kappa) * scale
    fits = moving_fit([UncertainValue(float(v), dy * dy) for v in noisy], h)
    res.files["regression.csv"] = write_fits_csv(fits)
    normal, loud = [], []
    for f in fits:
        lo, hi = f.index - h, f.index + h
        za = (f.alpha.value - truth[f.index]) / f.alpha.deviation
        zb = (f.beta.value - 0.05) / f.beta.deviation
        if hi < seg.start or lo >= seg.stop:
            normal += [za, zb]
        elif lo >= seg.start and hi < seg.stop:
            loud += [za, zb]
    d1 = math.sqrt(float(np.mean(np.square(normal))))
    d10 = math.sqrt(float(np.mean(np.square(loud))))
    res.check(6, "error deviation, matched noise", d1, "1 +- 0.15", abs(d1 - 1) <= 0.15)
    res.check(6, "error deviation, 10x noise segment", d10, "10 +- 3", abs(d10 - 10) <= 3)
    return res


def _component_errors(out, ref) -> tuple[list[float], list[float]]:
    errs, uncs = [], []
    for z, r in zip(out, ref):
        errs += [z.re.value - r.re.value, z.im.value - r.im.value]
        uncs += [z.re.deviation, z.im.deviation]
    return errs, uncs


def run_fft(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    rows = []
    worst = {"forward": 0.0, "reverse": 0.0, "roundtrip": 0.0}
    dev_lo, dev_hi = math.inf, 0.0
    streams = iter(rng_streams(cfg.seed, len(cfg.fft_orders)))
    for order in cfg.fft_orders:
        n = 1 << order
        t = build_indexed_sine(order)
        clean = make_signal(SignalKind.SIN, order, cfg.fft_freq, t)
        noisy = make_signal(SignalKind.SIN, order, cfg.fft_freq, t, NoiseSpec(GAUSS, cfg.fft_noise), next(streams))
        with variance_settings(ideal_variance=True):
            fwd = fft(noisy, Direction.FORWARD, t)
            rev = fft(noisy, Direction.REVERSE, t)
            rt = fft(fwd, Direction.REVERSE, t)
        ratios = {
            "forward": float(np.mean(bin_uncertainty(fwd))) / (cfg.fft_noise * math.sqrt(n)),
            "reverse": float(np.mean(bin_uncertainty(rev))) * math.sqrt(n) / cfg.fft_noise,
            "roundtrip": float(np.mean(bin_uncertainty(rt))) / cfg.fft_noise,
        }
        for k, v in ratios.items():
            worst[k] = max(worst[k], abs(v - 1))
        with variance_settings(kappa=cfg.kappa):
            fwd5 = fft(noisy, Direction.FORWARD, t)
            rev5 = fft(noisy, Direction.REVERSE, t)
            stats = {}
            for name, out, ref in (
                ("forward", fwd5, fft(clean, Direction.FORWARD, t)),
                ("reverse", rev5, fft(clean, Direction.REVERSE, t)),
            ):
                s = H.error_stats(*_component_errors(out, ref))
                stats[name] = s.error_deviation
                dev_lo, dev_hi = min(dev_lo, s.error_deviation), max(dev_hi, s.error_deviation)
        rows.append(
            {
                "order": order,
                "forward_ratio": ratios["forward"],
                "reverse_ratio": ratios["reverse"],
                "roundtrip_ratio": ratios["roundtrip"],
                "forward_ratio_kappa": float(np.mean(bin_uncertainty(fwd5))) / (cfg.fft_noise * math.sqrt(n)),
                "forward_error_deviation": stats["forward"],
                "reverse_error_deviation": stats["reverse"],
            }
        )
        if order == 6:
            res.files["fft_forward_L6.csv"] = spectrum_csv(fwd5)
            res.files["fft_reverse_L6.csv"] = spectrum_csv(rev5)
            res.files["fft_roundtrip_L6.csv"] = spectrum_csv(rt)
    res.files["fft_scaling.csv"] = H.rows_to_csv(rows)
    for k, v in worst.items():
        res.check(7, f"{k} uncertainty ratio, max relative deviation", v, "<= 1e-6", v <= 1e-6)
    res.check(7, "forward/reverse error deviation (min)", dev_lo, ">= 0.9", dev_lo >= 0.9)
    res.check(7, "forward/reverse error deviation (max)", dev_hi, "<= 1.1", dev_hi <= 1.1)
    lin = []
    with variance_settings(kappa=cfg.kappa):
        for order in cfg.fft_orders:
            t = build_indexed_sine(order)
            out = fft(make_signal(SignalKind.LINEAR, order, 0, t), Direction.FORWARD, t)
            ora = linear_spectrum_oracle(order)
            errs, uncs = [], []
            for z, o in zip(out, ora):
                errs += [z.re.value - o.real, z.im.value - o.imag]
                uncs += [z.re.deviation, z.im.deviation]
            lin.append(H.error_stats(errs, uncs).error_deviation)
    lo, hi = min(lin), max(lin)
    res.check(7, "linear signal vs closed-form spectrum error deviation", lo if lo < 0.2 else hi, "[0.2, 5]", lo >= 0.2 and hi <= 5)
    return res


def run_recursion(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    lo_o, hi_o = cfg.recursion_orders
    rows, devs = [], []
    with variance_settings(kappa=cfg.kappa):
        for level in H.sincos_levels(hi_o):
            if level.order == 1:
                sym = level.sines[1].value == level.cosines[1].value
                res.check(8, "sin(pi/4) == cos(pi/4)", float(sym), "== 1", sym)
            if level.order < lo_o:
                continue
            devs.append(level.summary.error_deviation)
            rows.append(
                {
                    "order": level.order,
                    "library_value_deviation": level.library_value_deviation,
                    **H.summary_fields(level.summary),
                }
            )
    res.files["recursion.csv"] = H.rows_to_csv(rows)
    lo, hi = min(devs), max(devs)
    res.check(8, "sin^2 + cos^2 - 1 error deviation range", lo if lo < 0.2 else hi, "[0.2, 5]", lo >= 0.2 and hi <= 5)
    return res


def run_bounding(cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult()
    rows = []
    gauss = []
    for n in (10, 100, 1000, 10_000):
        k, e = H.measure_bounding(n, 5.0, GAUSS, cfg.bounding_trials, cfg.seed)
        gauss.append(e)
        rows.append({"distribution": "gaussian", "n": n, "kappa_s": 5.0, "measured_kappa": k, "leakage": e})
    uni = []
    for n in (10, 30, 100, 300, 1000):
        k, e = H.measure_bounding(n, math.sqrt(3.0), DistributionKind.UNIFORM, cfg.bounding_trials, cfg.seed)
        uni.append(e)
        rows.append({"distribution": "uniform", "n": n, "kappa_s": math.sqrt(3.0), "measured_kappa": k, "leakage": e})
    res.files["bounding.csv"] = H.rows_to_csv(rows)
    dec = all(a > b for a, b in zip(gauss, gauss[1:]))
    res.check(10, "gaussian leakage strictly decreasing in N", float(dec), "== 1", dec)
    res.check(10, "gaussian leakage at N = 1e4", gauss[-1], "> 5.73e-7", gauss[-1] > 5.73e-7)
    e100 = uni[2]
    res.check(10, "uniform leakage at N = 100", e100, "[2e-2, 5e-2]", _within(e100, 2e-2, 5e-2))
    return res


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "moments": run_moments,
    "functions": run_functions,
    "identities": run_identities,
    "matrix": run_matrix,
    "regression": run_regression,
    "fft": run_fft,
    "bounding": run_bounding,
    "recursion": run_recursion,
    "geometric": run_geometric,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentResult:
    return EXPERIMENTS[name](cfg)
