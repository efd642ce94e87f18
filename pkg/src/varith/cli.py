"""``varexp``: run one named experiment, write its CSV tables and an acceptance summary.

Exit status is 0 when every graded check passes, 1 when any fails and 2
for an unknown experiment or invalid configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Sequence

from .experiments import EXPERIMENTS, ExperimentConfig, ExperimentResult, run_experiment

__all__ = ["main", "load_config", "UnknownExperiment", "ConfigInvalid"]


class UnknownExperiment(ValueError):
    pass


class ConfigInvalid(ValueError):
    pass


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(key: str, text: str):
    default = getattr(ExperimentConfig(), key)
    try:
        if isinstance(default, tuple):
            return tuple(int(v) for v in text.split(",") if v.strip())
        if isinstance(default, int):
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigInvalid(f"bad value for {key}: {text!r}") from None


def _read_file(path: Path) -> dict[str, str]:
    out = {}
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise ConfigInvalid(f"cannot read config file: {e}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{no}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def load_config(file_values: dict[str, str], overrides: dict[str, object]) -> ExperimentConfig:
    """File entries first, then command-line overrides; every value is range checked."""
    values: dict[str, object] = {}
    for k, v in file_values.items():
        if k not in _FIELDS:
            raise ConfigInvalid(f"unknown config key {k!r}")
        values[k] = _convert(k, v)
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    problems = []
    if not cfg.kappa > 0:
        problems.append("kappa must be positive")
    if cfg.samples < 2:
        problems.append("samples must be at least 2")
    if not cfg.fft_orders or not all(1 <= L <= 24 for L in cfg.fft_orders):
        problems.append("fft_orders must lie in [1, 24]")
    if not all(L >= 3 and 1 <= cfg.fft_freq <= (1 << L) // 2 - 1 for L in cfg.fft_orders):
        problems.append("fft_freq must lie in [1, N/2 - 1] for every order")
    if not cfg.fft_noise > 0:
        problems.append("fft_noise must be positive")
    if not cfg.matrix_sizes or not all(1 <= n <= 8 for n in cfg.matrix_sizes):
        problems.append("matrix_sizes must lie in [1, 8]")
    if cfg.matrix_trials < 1 or cfg.bounding_trials < 1:
        problems.append("trial counts must be positive")
    if cfg.regression_half_width < 1 or cfg.regression_length < 10 * (2 * cfg.regression_half_width + 1):
        problems.append("regression needs H >= 1 and a series of at least 10 windows")
    lo, hi = cfg.recursion_orders if len(cfg.recursion_orders) == 2 else (0, 0)
    if not 1 <= lo <= hi <= 18:
        problems.append("recursion_orders must be two orders within [1, 18]")
    if problems:
        raise ConfigInvalid("; ".join(problems))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="varexp", description=__doc__.splitlines()[0])
    p.add_argument("experiment", help=f"one of: {', '.join([*EXPERIMENTS, 'all'])}")
    p.add_argument("--kappa", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--out", type=Path, default=Path("varexp-out"))
    p.add_argument("--config", type=Path)
    return p


def write_outputs(out: Path, results: Sequence[tuple[str, ExperimentResult]]) -> bool:
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    ok = True
    for name, res in results:
        for fname, text in res.files.items():
            (out / fname).write_text(text, newline="\n")
        for c in res.checks:
            lines.append(f"{name}: {c.line()}")
            ok &= c.passed
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    (out / "acceptance.txt").write_text("\n".join(lines) + "\n", newline="\n")
    return ok


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        names = list(EXPERIMENTS) if args.experiment == "all" else [args.experiment]
        if any(n not in EXPERIMENTS for n in names):
            raise UnknownExperiment(f"unknown experiment {args.experiment!r}")
        file_values = _read_file(args.config) if args.config else {}
        cfg = load_config(file_values, {"kappa": args.kappa, "seed": args.seed, "samples": args.samples})
    except (UnknownExperiment, ConfigInvalid) as e:
        print(f"varexp: {e}", file=sys.stderr)
        return 2
    results = [(n, run_experiment(n, cfg)) for n in names]
    ok = write_outputs(args.out, results)
    for n, res in results:
        for c in res.checks:
            print(f"{n}: {c.line()}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
