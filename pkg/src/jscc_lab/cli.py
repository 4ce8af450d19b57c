"""Command-line sweep runner.

    jscc-lab sweep --config run.json [--snr-db 30 40 50] [--n 2] [--samples N]
                   [--seed S] [--workers W] [--schedule adaptive|fixed:<beta>|fixed-eps:<eps>]
                   [--format csv|json] [--out PATH]

The config file is a flat JSON object whose keys are the fields of
:class:`RunConfig`; command-line flags override it. Output is one record per
SNR point (CSV with a trailing ``# summary {...}`` line, or a JSON array whose
last element is ``{"summary": {...}}``). Floats are written in Python's
shortest round-trip form so re-parsing reproduces them bit for bit.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import analysis
from .model import BetaSchedule, SchemeParams, SweepGrid, ValidationError
from .montecarlo import SweepResult, sweep

__all__ = ["ConfigError", "RunConfig", "parse_config", "run_sweep_command", "record_columns", "main"]

log = logging.getLogger("jscc_lab")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    sigma_s2: float = 1.0
    sigma_z2: float = 1.0
    delta: Optional[float] = None
    schedule: BetaSchedule = BetaSchedule.adaptive()
    snr_db: Tuple[float, ...] = (30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0)
    samples: int = 1_000_000
    pilot_samples: int = 1_000_000
    seed: int = 0
    workers: int = 1
    output_format: str = "csv"
    output_path: Optional[str] = None

    def base_params(self):
        return SchemeParams(n=self.n, sigma_s2=self.sigma_s2, sigma_z2=self.sigma_z2, delta=self.delta)

    def grid(self):
        return SweepGrid(self.snr_db, self.samples, self.seed, self.workers)


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_INT_KEYS = ("n", "samples", "pilot_samples", "seed", "workers")


def _coerce(key, value):
    if value is None and key in ("delta", "output_path"):
        return None
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if key in ("sigma_s2", "sigma_z2", "delta"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if key == "snr_db":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(f"snr_db: expected a list of numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if key == "schedule":
        if isinstance(value, BetaSchedule):
            return value
        if not isinstance(value, str):
            raise ConfigError(f"schedule: expected a string, got {value!r}")
        try:
            return BetaSchedule.parse(value)
        except ValidationError as exc:
            raise ConfigError(f"schedule: {exc}") from None
    if key == "output_format":
        if value not in ("csv", "json"):
            raise ConfigError(f"output_format: expected 'csv' or 'json', got {value!r}")
        return value
    if key == "output_path":
        if not isinstance(value, str):
            raise ConfigError(f"output_path: expected a string, got {value!r}")
        return value
    raise ConfigError(f"unknown key {key!r}")


def parse_config(text, overrides=None):
    """Parse a flat JSON config document into a validated :class:`RunConfig`.

    ``overrides`` (a mapping, typically from command-line flags) takes
    precedence over the document. Unknown keys are rejected.
    """
    if text is None or not text.strip():
        doc = {}
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(doc) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(map(repr, unknown))}")
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in doc.items()})
    try:
        cfg.base_params()
        cfg.grid()
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.pilot_samples < 10_000:
        raise ConfigError("pilot_samples must be ≥ 10^4")
    if cfg.samples < 1000:
        raise ConfigError("samples must be ≥ 10^3")
    return cfg


def record_columns(n):
    return (
        ["snr_db", "snr", "beta", "epsilon", "sigma_e2", "sdr_empirical", "sdr_ci_low", "sdr_ci_high"]
        + ["mse_empirical", "err_e_empirical"]
        + [f"err_q_{i}" for i in range(1, n)]
        + [f"ser_{i}" for i in range(1, n)]
        + ["mse_bound", "sdr_opta", "sdr_baseline_rep", "samples"]
    )


def _records(result: SweepResult, n):
    out = []
    for pt in result.points:
        bd, bound = pt.breakdown, pt.bound
        lo, hi = bd.sdr_ci
        values = [pt.snr_db, bound.snr, pt.params.beta, pt.epsilon, pt.params.residual_var, bd.sdr, lo, hi]
        values += [bd.mse, bd.err_e, *bd.err_q, *bd.symbol_error_rates]
        values += [bound.total_mse_bound, bound.opta_sdr, analysis.baseline_uncoded_repetition(bound.snr, n), bd.samples]
        out.append(dict(zip(record_columns(n), values)))
    return out


def _summary(result, cfg, schedule):
    summary = {"n": cfg.n, "schedule": str(schedule), "seed": cfg.seed, "fit_points": len(result.points)}
    pts = [(p.bound.snr, p.breakdown.sdr) for p in result.points if math.isfinite(p.breakdown.sdr)]
    if len(pts) >= 3:
        fit = analysis.fit_scaling_exponent(pts)
        summary.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared,
                       snr_range_db=list(fit.snr_range_db))
    else:
        summary.update(slope=None, intercept=None, r_squared=None, snr_range_db=None)
    summary["failures"] = [{"snr_db": db, "error": msg} for db, msg in result.failures]
    return summary


def _fmt(v):
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def format_csv(records, summary, n):
    buf = io.StringIO()
    cols = record_columns(n)
    buf.write(",".join(cols) + "\n")
    for rec in records:
        buf.write(",".join(_fmt(rec[c]) for c in cols) + "\n")
    buf.write("# summary " + json.dumps(summary, allow_nan=False, default=str) + "\n")
    return buf.getvalue()


def format_json(records, summary):
    items = [{k: _jsonable(v) for k, v in rec.items()} for rec in records]
    items.append({"summary": summary})
    return json.dumps(items, indent=1, allow_nan=False) + "\n"


def run_sweep_command(config: RunConfig) -> int:
    """Run the sweep described by ``config`` and write its records.

    Returns 0 when every grid point completed and 1 otherwise; completed
    points are written either way.
    """
    t0 = time.perf_counter()
    base = config.base_params()
    schedule = config.schedule
    if config.n == 1:
        # no quantization stages, so beta has no effect
        schedule = BetaSchedule.fixed(1.0)
    result = sweep(config.grid(), base, schedule, pilot_samples=config.pilot_samples)
    records = _records(result, config.n)
    summary = _summary(result, config, schedule)
    summary["wall_clock_seconds"] = time.perf_counter() - t0
    if config.output_format == "json":
        text = format_json(records, summary)
    else:
        text = format_csv(records, summary, config.n)
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if result.ok else 1


def _build_parser():
    parser = argparse.ArgumentParser(prog="jscc-lab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep", help="simulate an SNR grid and write CSV/JSON records")
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--snr-db", type=float, nargs="+", dest="snr_db")
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--pilot-samples", type=int, dest="pilot_samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--sigma-s2", type=float, dest="sigma_s2")
    p.add_argument("--delta", type=float)
    p.add_argument("--schedule", help="adaptive | fixed:<beta> | fixed-eps:<eps>")
    p.add_argument("--format", choices=("csv", "json"), dest="output_format")
    p.add_argument("--out", dest="output_path")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress per-point log lines")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    overrides = {k: v for k, v in vars(args).items() if k in _FIELDS}
    text = None
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"jscc-lab: cannot read config: {exc}", file=sys.stderr)
            return 2
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"jscc-lab: {exc}", file=sys.stderr)
        return 2
    try:
        return run_sweep_command(cfg)
    except OSError as exc:
        print(f"jscc-lab: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
