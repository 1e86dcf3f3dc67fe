"""Command-line front end.

Subcommands ``simulate``, ``analytic``, ``asymptotic`` and ``compare`` write
one CSV row per (SNR, coalition size); ``game`` prints a coalition-game
report.  Settings come from an optional ``key = value`` file (``#`` starts a
comment) and are overridden by flags.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from importlib import metadata, resources
from pathlib import Path

from .analytic_outage import AnalyticContext, ApproximationWarning, outage_asymptotic, outage_theorem1
from .channel_model import NetworkConfig
from .coalition_game import MAX_PLAYERS, optimal_partition
from .simulator import Partition, simulate, sweep

CSV_HEADER = (
    "snr_db",
    "coalition_size",
    "outage_sim",
    "outage_sim_stderr",
    "outage_thm1",
    "outage_asym",
    "validity_flag",
)
MODES = ("simulate", "analytic", "asymptotic", "compare", "game")
OUTAGE_MODELS = ("thm1", "asym", "sim")
MIN_SIM_TRIALS = 1000


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class ExperimentSpec:
    mode: str = "compare"
    disc_radius: float = 1.0
    alpha: float = 2.0
    rate: float = 0.5
    efficiency: float = 1.0
    frame_duration: float = 1.0
    num_pairs: int = 4
    snr_db: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0)
    sizes: tuple[int, ...] = (1, 2, 3, 4)
    trials: int = 1_000_000
    seed: int = 42
    outage_model: str = "thm1"
    output: str | None = None
    manifest: bool = False

    def network(self, snr_db: float, num_pairs: int) -> NetworkConfig:
        return NetworkConfig.from_snr_db(
            snr_db,
            num_pairs=num_pairs,
            disc_radius=self.disc_radius,
            path_loss_alpha=self.alpha,
            target_rate=self.rate,
            harvest_efficiency=self.efficiency,
            frame_duration=self.frame_duration,
        )


_ALIASES = {"d": "disc_radius", "radius": "disc_radius", "r": "rate", "eta": "efficiency", "n": "num_pairs"}


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {lineno} is not key = value: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        values[_ALIASES.get(key, key)] = value
    return values


def _parse_float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {text!r}")
    return value


def _parse_int(key, text):
    text = str(text).strip().replace("_", "")
    try:
        return int(text)
    except ValueError:
        pass
    # allow 1e6 style counts as long as they are integral
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if not (math.isfinite(value) and value == int(value)):
        raise ConfigError(key, f"not an integer: {text!r}")
    return int(value)


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("snr_db", "range form is start:stop:step")
        start, stop, step = (_parse_float("snr_db", p) for p in parts)
        if step <= 0:
            raise ConfigError("snr_db", "range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = tuple(round(start + i * step, 12) for i in range(max(count, 0)))
    else:
        grid = tuple(_parse_float("snr_db", p) for p in text.split(",") if p.strip())
    if not grid:
        raise ConfigError("snr_db", "empty SNR grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("snr_db", f"grid must be strictly increasing, got {text!r}")
    return grid


def _parse_sizes(text: str) -> tuple[int, ...]:
    sizes = tuple(_parse_int("sizes", p) for p in str(text).split(",") if p.strip())
    if not sizes:
        raise ConfigError("sizes", "no coalition sizes given")
    if any(s < 1 for s in sizes):
        raise ConfigError("sizes", "coalition sizes must be >= 1")
    if len(set(sizes)) != len(sizes):
        raise ConfigError("sizes", "duplicate coalition size")
    return tuple(sorted(sizes))


_PARSERS = {
    "disc_radius": _parse_float,
    "alpha": _parse_float,
    "rate": _parse_float,
    "efficiency": _parse_float,
    "frame_duration": _parse_float,
    "num_pairs": _parse_int,
    "trials": _parse_int,
    "seed": _parse_int,
    "snr_db": lambda key, text: _parse_snr_grid(text),
    "sizes": lambda key, text: _parse_sizes(text),
    "outage_model": lambda key, text: text.strip().lower(),
    "output": lambda key, text: text.strip() or None,
}


def parse_config(mode: str, file_values: dict[str, str] | None = None, overrides: dict | None = None) -> ExperimentSpec:
    """Merge defaults, file values and flag overrides, then validate."""
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}")
    merged: dict[str, str] = dict(file_values or {})
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    known = {f.name for f in fields(ExperimentSpec)} - {"mode", "manifest"}
    kwargs = {}
    for key, text in merged.items():
        if key == "manifest":
            kwargs["manifest"] = str(text).lower() in ("1", "true", "yes", "on")
            continue
        if key not in known:
            raise ConfigError(key, "unknown key")
        kwargs[key] = _PARSERS[key](key, str(text))
    spec = ExperimentSpec(mode=mode, **kwargs)
    _validate(spec)
    return spec


def _validate(spec: ExperimentSpec) -> None:
    if not spec.disc_radius > 0:
        raise ConfigError("disc_radius", "must be positive")
    if not spec.alpha >= 2:
        raise ConfigError("alpha", "path-loss exponent must be >= 2")
    if not spec.rate > 0:
        raise ConfigError("rate", "must be positive")
    if not 0 < spec.efficiency <= 1:
        raise ConfigError("efficiency", "must lie in (0, 1]")
    if not spec.frame_duration > 0:
        raise ConfigError("frame_duration", "must be positive")
    if spec.seed < 0:
        raise ConfigError("seed", "must be non-negative")
    if spec.trials < 1:
        raise ConfigError("trials", "must be positive")
    if spec.outage_model not in OUTAGE_MODELS:
        raise ConfigError("outage_model", f"must be one of {', '.join(OUTAGE_MODELS)}")

    uses_sim = spec.mode in ("simulate", "compare") or (spec.mode == "game" and spec.outage_model == "sim")
    uses_closed = spec.mode in ("analytic", "asymptotic", "compare") or (
        spec.mode == "game" and spec.outage_model != "sim"
    )
    if uses_sim and spec.trials < MIN_SIM_TRIALS:
        raise ConfigError("trials", f"simulation needs at least {MIN_SIM_TRIALS} trials")
    if uses_closed and spec.alpha != 2:
        raise ConfigError("alpha", "closed-form outage expressions require alpha = 2")
    if spec.mode == "game" and not 1 <= spec.num_pairs <= MAX_PLAYERS:
        raise ConfigError("num_pairs", f"game mode needs 1 <= num_pairs <= {MAX_PLAYERS}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.10g}"


def _write_csv(rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                _fmt(row.snr_db),
                row.coalition_size,
                _fmt(row.outage_sim),
                _fmt(row.outage_sim_stderr),
                _fmt(row.outage_thm1),
                _fmt(row.outage_asym),
                row.validity_flag,
            ]
        )


def _table(spec: ExperimentSpec, out) -> None:
    mode = spec.mode
    grid = [(spec.network(snr, m), Partition.grand(m)) for snr in spec.snr_db for m in spec.sizes]
    rows = sweep(
        grid,
        spec.trials,
        spec.seed,
        simulate_outage=mode in ("simulate", "compare"),
        analytic=mode in ("analytic", "compare"),
        asymptotic=mode in ("asymptotic", "compare"),
    )
    for row, (snr, _) in zip(rows, ((s, m) for s in spec.snr_db for m in spec.sizes)):
        row.snr_db = snr
    _write_csv(rows, out)


def _outage_fn(spec: ExperimentSpec, snr_db: float):
    if spec.outage_model == "sim":

        def fn(m):
            (res,) = simulate(spec.network(snr_db, m), [Partition.grand(m)], spec.trials, spec.seed)
            return res.pooled().outage_probability

        return fn
    base = AnalyticContext.from_config(spec.network(snr_db, 1))
    if spec.outage_model == "asym":
        return lambda m: outage_asymptotic(base.with_size(m))
    return lambda m: outage_theorem1(base.with_size(m))


def _violations(items) -> str:
    return ";".join(f"({p},{q})" for p, q, _, _ in items)


def _game(spec: ExperimentSpec, out) -> None:
    for i, snr in enumerate(spec.snr_db):
        if i:
            out.write("\n")
        report = optimal_partition(spec.num_pairs, _outage_fn(spec, snr), spec.rate, keep_values=True)
        sa, core = report.superadditivity, report.core
        lines = [
            ("snr_db", _fmt(snr)),
            ("num_players", report.num_players),
            ("outage_model", spec.outage_model),
            ("rate", _fmt(spec.rate)),
            ("best_partition", report.best_partition),
            ("best_value", _fmt(report.best_value)),
            ("grand_coalition_optimal", str(report.grand_coalition_optimal).lower()),
            ("superadditive_multi", str(sa.holds_multi).lower()),
            ("superadditive_all", str(sa.holds).lower()),
            ("superadditivity_violations_multi", _violations(sa.violations_multi)),
            ("superadditivity_violations_singleton", _violations(sa.violations_singleton)),
            ("core_equal_split", str(core.in_core).lower()),
            ("core_violating_sizes", ",".join(map(str, core.violating_sizes))),
            ("payoff_per_player", _fmt(core.payoff)),
        ]
        lines += [(f"core_margin_{s}", _fmt(m)) for s, m in core.margins.items()]
        lines += [("valid", str(report.valid).lower()), ("partitions", len(report.partition_values))]
        for key, value in lines:
            out.write(f"{key}={value}\n")
        out.write("partition,value\n")
        for partition, value in report.partition_values:
            out.write(f"{partition},{_fmt(value)}\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _manifest(spec: ExperimentSpec) -> str:
    record = {"tool": "ehrelay", "version": _version(), "seed": spec.seed, "spec": asdict(spec)}
    return json.dumps(record, sort_keys=True)


def run(spec: ExperimentSpec, out=None) -> None:
    """Execute ``spec``; writes to ``spec.output`` or ``out`` (default stdout)."""
    buf = io.StringIO()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationWarning)
        if spec.mode == "game":
            _game(spec, buf)
        else:
            _table(spec, buf)

    if spec.output:
        Path(spec.output).write_text(buf.getvalue())
        if spec.manifest:
            Path(spec.output + ".manifest.json").write_text(_manifest(spec) + "\n")
    else:
        (out or sys.stdout).write(buf.getvalue())
        if spec.manifest:
            sys.stderr.write(_manifest(spec) + "\n")


def bessel_selftest(out=None, tolerance: float = 1e-9) -> bool:
    from .special_functions import bessel_k

    out = out or sys.stdout
    data = json.loads(resources.files("ehrelay").joinpath("data/bessel_fixtures.json").read_text())
    worst = 0.0
    out.write(f"{'n':>3} {'x':>14} {'reference':>24} {'computed':>24} {'rel_err':>10}\n")
    for rec in data["points"]:
        ref = float(rec["value"])
        got = bessel_k(rec["n"], rec["x"])
        err = abs(got / ref - 1.0)
        worst = max(worst, err)
        out.write(f"{rec['n']:>3} {rec['x']:>14.6g} {ref:>24.16e} {got:>24.16e} {err:>10.2e}\n")
    ok = worst <= tolerance
    out.write(f"points={len(data['points'])} max_rel_err={worst:.3e} tolerance={tolerance:g} {'PASS' if ok else 'FAIL'}\n")
    return ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ehrelay", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="mode", required=True, metavar="{" + ",".join(MODES) + "}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--disc-radius", "-D", dest="disc_radius")
    common.add_argument("--alpha")
    common.add_argument("--rate", "-R", dest="rate", help="target rate in bits per channel use")
    common.add_argument("--efficiency", "--eta", dest="efficiency")
    common.add_argument("--frame-duration", dest="frame_duration")
    common.add_argument("--num-pairs", "-N", dest="num_pairs", help="players in game mode")
    common.add_argument("--snr-db", dest="snr_db", help="comma list or start:stop:step")
    common.add_argument("--sizes", help="comma-separated coalition sizes")
    common.add_argument("--trials")
    common.add_argument("--seed")
    common.add_argument("--outage-model", dest="outage_model", help="game mode: thm1, asym or sim")
    common.add_argument("--output", "-o")
    common.add_argument("--manifest", action="store_const", const="true", default=None)
    for mode in MODES:
        sub.add_parser(mode, parents=[common])
    sub.add_parser("bessel-selftest")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mode == "bessel-selftest":
        return 0 if bessel_selftest() else 1

    overrides = {k: v for k, v in vars(args).items() if k not in ("mode", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        spec = parse_config(args.mode, file_values, overrides)
    except ConfigError as exc:
        print(f"ehrelay: config error: {exc}", file=sys.stderr)
        return 2
    try:
        run(spec)
    except (ArithmeticError, ValueError) as exc:
        print(f"ehrelay: numerical error in {spec.mode}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
