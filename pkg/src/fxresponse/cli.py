"""Command line entry point: ``fxresponse {response,spread-groups,synth,validate}``.

Settings are resolved in this order, later wins: built-in defaults, the
``--config`` file (``key = value`` lines), the ``FXRESPONSE_INPUT_DIR``
environment variable, command line flags.

Exit codes: 0 success, 1 at least one pair-year failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import shlex
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, timedelta, timezone, tzinfo
from pathlib import Path
from typing import Sequence
from zoneinfo import ZoneInfo

import numpy as np

from . import __version__
from .ingest import EST, IngestStats, MarketWeek, iter_weeks
from .pairmeta import MAJORS, PairMeta, PairRegistry, UnknownPair, UnknownYear, load_registry
from .pipeline import PairYearResult, analyze_files
from .response import PHYSICAL, TRADE, group_average
from .synth import FlowModel, generate, write_ascii

logger = logging.getLogger("fxresponse")

ENV_INPUT_DIR = "FXRESPONSE_INPUT_DIR"
INPUT_SUFFIXES = (".csv", ".txt", ".gz", ".zip")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    pairs: list[str] = field(default_factory=lambda: list(MAJORS))
    years: list[int] = field(default_factory=lambda: [2019])
    scale: str = "both"
    tau_max: int = 1000
    zero_handling: str = "exclude"
    input_dir: Path = Path(".")
    output_dir: Path = Path("out")
    format: str = "csv"
    workers: int = 1
    pattern: str = "*{pair}*{year}*"
    pair_table: Path | None = None
    thresholds: Path | None = None
    stamp_tz: str = "EST"
    log_returns: bool = False
    pooling: str = "pooled"
    fetch_hook: str | None = None

    def validate(self, registry: PairRegistry, need_thresholds: bool = False) -> None:
        if self.tau_max < 1:
            raise UsageError("tau_max must be >= 1")
        for name, allowed in (("scale", ("trade", "physical", "both")),
                              ("zero_handling", ("exclude", "include")),
                              ("format", ("csv", "json")),
                              ("pooling", ("pooled", "weekly"))):
            if getattr(self, name) not in allowed:
                raise UsageError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if not self.pairs or not self.years:
            raise UsageError("at least one pair and one year are required")
        if need_thresholds:
            missing = [y for y in self.years if y not in registry.years]
            if missing:
                raise UsageError(f"no spread-group thresholds registered for {missing}")
        try:
            stamp_zone(self.stamp_tz)
        except Exception as exc:
            raise UsageError(f"bad stamp_tz {self.stamp_tz!r}: {exc}") from None

    @property
    def scales(self) -> tuple[str, ...]:
        return (TRADE, PHYSICAL) if self.scale == "both" else (self.scale,)

    def registry(self) -> PairRegistry:
        return load_registry(self.pair_table, self.thresholds)


def stamp_zone(name: str) -> tzinfo:
    """``EST`` (fixed UTC-5), ``UTC+h``/``UTC-h`` offsets, or an IANA zone."""
    if name.upper() == "EST":
        return EST
    if name.upper().startswith("UTC") and len(name) > 3:
        return timezone(timedelta(hours=float(name[3:])))
    return ZoneInfo(name)


_LIST_FIELDS = {"pairs": str, "years": int}


def _coerce(name: str, raw):
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    if name in _LIST_FIELDS:
        if isinstance(raw, str):
            raw = [x for x in raw.replace(" ", ",").split(",") if x]
        return [_LIST_FIELDS[name](x) for x in raw]
    if not isinstance(raw, str):
        return raw
    if ftype == "int":
        return int(raw)
    if ftype == "bool":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if "Path" in ftype:
        return Path(raw) if raw else None
    return raw


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in known:
            raise UsageError(f"{path}:{lineno}: unknown or malformed setting {raw!r}")
        out[key] = _coerce(key, value.strip())
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(read_config_file(args.config))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    if os.environ.get(ENV_INPUT_DIR):
        values["input_dir"] = Path(os.environ[ENV_INPUT_DIR])
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _coerce(f.name, v)
    return RunConfig(**values)


def discover_inputs(config: RunConfig, meta: PairMeta, year: int) -> list[Path]:
    pattern = config.pattern.format(pair=meta.compact, year=year)
    found = [p for p in Path(config.input_dir).rglob(pattern)
             if p.is_file() and p.suffix.lower() in INPUT_SUFFIXES]
    return sorted(found, key=lambda p: (p.name, str(p)))


def _run_fetch_hook(config: RunConfig, meta: PairMeta, year: int) -> None:
    cmd = config.fetch_hook.format(pair=meta.compact, symbol=meta.symbol, year=year,
                                   input_dir=shlex.quote(str(config.input_dir)))
    logger.info("fetch hook: %s", cmd)
    subprocess.run(cmd, shell=True, check=False)


def run_pair_year(config: RunConfig, symbol: str, year: int) -> PairYearResult:
    """Analyze one pair-year; failures are reported inside the result."""
    try:
        meta = config.registry().lookup(symbol)
    except UnknownPair:
        return PairYearResult(symbol, year, errors=[f"unknown pair {symbol!r}"])
    paths = discover_inputs(config, meta, year)
    if not paths and config.fetch_hook:
        _run_fetch_hook(config, meta, year)
        paths = discover_inputs(config, meta, year)
    if not paths:
        return PairYearResult(meta.symbol, year, errors=[f"no input files under {config.input_dir}"])
    try:
        result = analyze_files(
            paths, meta, year,
            stamp_tz=stamp_zone(config.stamp_tz),
            scales=config.scales,
            tau_max=config.tau_max,
            include_zeros=config.zero_handling == "include",
            log_returns=config.log_returns,
            pooling=config.pooling,
        )
    except OSError as exc:
        return PairYearResult(meta.symbol, year, errors=[f"read error: {exc}"])
    base = Path(config.input_dir)
    result.ingest.files = [_relative(p, base) for p in result.ingest.files]
    result.ingest.empty_files = [_relative(p, base) for p in result.ingest.empty_files]
    return result


def _relative(path: str, base: Path) -> str:
    try:
        return str(Path(path).relative_to(base))
    except ValueError:
        return str(path)


def run_tasks(config: RunConfig, tasks: Sequence[tuple[str, int]]) -> list[PairYearResult]:
    if config.workers == 1 or len(tasks) < 2:
        return [run_pair_year(config, s, y) for s, y in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(run_pair_year, [config] * len(tasks), *zip(*tasks)))


def _tasks(config: RunConfig) -> list[tuple[str, int]]:
    return [(s, y) for y in sorted(config.years) for s in config.pairs]


def _write_curve(curve, path: Path, fmt: str) -> None:
    if fmt == "json":
        curve.to_json(path)
    else:
        curve.to_csv(path)


def _zero_tag(config: RunConfig, scale: str) -> str:
    return config.zero_handling if scale == PHYSICAL else "exclude"


def _entry(result: PairYearResult) -> dict:
    return {
        "pair": result.symbol,
        "year": result.year,
        "ingest": dataclasses.asdict(result.ingest),
        "signs": dataclasses.asdict(result.signs),
        "errors": list(result.errors),
        "files": [],
    }


def _write_manifest(config: RunConfig, command: str, entries: list[dict], extra: dict | None = None) -> Path:
    outputs = sorted(f for e in entries for f in e["files"])
    manifest = {
        "command": command,
        "version": __version__,
        "config": {k: (str(v) if isinstance(v, Path) else v)
                   for k, v in dataclasses.asdict(config).items()
                   if k not in ("input_dir", "output_dir")},
        "outputs": outputs,
        "results": entries,
        "exclusions": [{"pair": e["pair"], "year": e["year"], "errors": e["errors"]}
                       for e in entries if e["status"] == "excluded"],
        **(extra or {}),
    }
    path = Path(config.output_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def cmd_response(config: RunConfig) -> int:
    """Write one curve file per (pair, year, scale) plus a manifest."""
    config.validate(config.registry())
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    failed = False
    for result in run_tasks(config, _tasks(config)):
        entry = _entry(result)
        tag = result.symbol.replace("/", "")
        for scale, curve in result.curves.items():
            curve.meta["pair"] = result.symbol
            name = f"response_{tag}_{result.year}_{scale}_{_zero_tag(config, scale)}.{config.format}"
            _write_curve(curve, out / name, config.format)
            entry["files"].append(name)
        entry["status"] = "ok" if entry["files"] else "excluded"
        failed |= bool(result.errors)
        for err in result.errors:
            logger.error("%s %s: %s", result.symbol, result.year, err)
        entries.append(entry)
    _write_manifest(config, "response", entries)
    return 1 if failed else 0


def cmd_spread_groups(config: RunConfig) -> int:
    """Spread table, group assignment and group-averaged curves per year."""
    registry = config.registry()
    config.validate(registry, need_thresholds=True)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_tasks(config, _tasks(config))
    entries = []
    groups_summary = {}
    failed = False
    for year in sorted(config.years):
        thresholds = registry.thresholds(year)
        year_results = sorted((r for r in results if r.year == year), key=lambda r: r.symbol)
        assignment = {}
        rows = []
        for r in year_results:
            entry = _entry(r)
            failed |= bool(r.errors)
            if r.spread is not None and r.curves:
                g = thresholds.group_of(r.spread.avg_pip_spread)
                assignment[r.symbol] = g
                meta = registry.lookup(r.symbol)
                rows.append([r.symbol, meta.category.value, repr(r.spread.avg_pip_spread),
                             r.spread.n_obs, g, meta.groups.get(year, "")])
                entry["status"] = "ok"
            else:
                entry["status"] = "excluded"
            entries.append(entry)

        table = out / f"spread_{year}.csv"
        with open(table, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["symbol", "category", "avg_pip_spread", "n_obs", "group", "table_group"])
            w.writerows(rows)
        files = [table.name]

        emitted = {}
        for scale in config.scales:
            curves = {r.symbol: r.curves[scale] for r in year_results
                      if r.symbol in assignment and scale in r.curves}
            for g, curve in group_average(curves, assignment, thresholds.n_groups).items():
                curve.meta.update(year=year, thresholds=list(thresholds.boundaries))
                name = f"group_{year}_{scale}_{_zero_tag(config, scale)}_G{g}.{config.format}"
                _write_curve(curve, out / name, config.format)
                files.append(name)
                emitted.setdefault(scale, []).append(g)
        summary = {
            "year": year,
            "thresholds": list(thresholds.boundaries),
            "groups": {str(g): sorted(s for s, gg in assignment.items() if gg == g)
                       for g in range(1, thresholds.n_groups + 1)},
            "emitted": emitted,
            "excluded": [r.symbol for r in year_results if r.symbol not in assignment],
        }
        groups_file = out / f"groups_{year}.json"
        groups_file.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        files.append(groups_file.name)
        groups_summary[str(year)] = {"files": files, **summary}
    _write_manifest(config, "spread-groups", entries, {"years": groups_summary})
    for e in entries:
        for err in e["errors"]:
            logger.error("%s %s: %s", e["pair"], e["year"], err)
    return 1 if failed else 0


def cmd_validate(config: RunConfig) -> int:
    """Parse-only pass; prints ingest statistics as JSON."""
    registry = config.registry()
    config.validate(registry)
    report = {}
    failed = False
    for symbol, year in _tasks(config):
        key = f"{symbol} {year}"
        try:
            meta = registry.lookup(symbol)
        except UnknownPair:
            report[key] = {"error": "unknown pair"}
            failed = True
            continue
        paths = discover_inputs(config, meta, year)
        if not paths:
            report[key] = {"error": "no input files"}
            failed = True
            continue
        stats = IngestStats()
        for _ in iter_weeks(paths, stats, stamp_zone(config.stamp_tz)):
            pass
        stats.files = [_relative(p, Path(config.input_dir)) for p in stats.files]
        stats.empty_files = [_relative(p, Path(config.input_dir)) for p in stats.empty_files]
        report[key] = dataclasses.asdict(stats)
    text = json.dumps(report, indent=1, sort_keys=True)
    print(text)
    if config.output_dir and Path(config.output_dir).is_dir():
        (Path(config.output_dir) / "validate.json").write_text(text + "\n")
    return 1 if failed else 0


def first_sunday(day: date) -> date:
    return day + timedelta(days=(6 - day.weekday()) % 7)


def cmd_synth(args: argparse.Namespace) -> int:
    """Write synthetic weeks in the provider text format, one file per week."""
    registry = load_registry(args.pair_table)
    out = Path(args.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    spreads = [float(x) for x in str(args.spread_pips).split(",")]
    pairs = [p for p in str(args.pairs).replace(" ", ",").split(",") if p]
    if len(spreads) not in (1, len(pairs)):
        raise UsageError("give one spread for all pairs or one per pair")
    sunday = first_sunday(date.fromisoformat(args.start))
    if args.n_events == 0:
        logger.warning("n_events=0: writing empty files")
    written = []
    for i, symbol in enumerate(pairs):
        try:
            meta = registry.lookup(symbol)
        except UnknownPair:
            raise UsageError(f"unknown pair {symbol!r}") from None
        base = args.base_price or (110.0 if meta.scaling_factor == 100 else 1.1)
        for k in range(args.weeks):
            week = MarketWeek.for_sunday(sunday + timedelta(days=7 * k))
            model = FlowModel(
                seed=args.seed + 1000 * i + k,
                n_events=args.n_events,
                sign_autocorr=args.rho,
                impact_g=args.impact,
                noise_pips=args.noise,
                base_price=base,
                spread_pips=spreads[i if len(spreads) > 1 else 0],
                scaling_factor=meta.scaling_factor,
                permanent_fraction=args.permanent_fraction,
                impact_decay=args.impact_decay,
            )
            day = sunday + timedelta(days=7 * k)
            path = out / f"DAT_ASCII_{meta.compact}_T_{day:%Y%m%d}.csv"
            sw = generate(model, week)
            write_ascii([sw], path)
            written.append(path.name)
            if args.save_signs:
                np.save(out / f"truth_{meta.compact}_{day:%Y%m%d}.npy", sw.true_signs)
    for name in written:
        print(name)
    return 0


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run configuration")
    g.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")
    g.add_argument("--pairs", help="comma separated pair symbols (default: the seven majors)")
    g.add_argument("--years", help="comma separated years (default: 2019)")
    g.add_argument("--scale", choices=["trade", "physical", "both"])
    g.add_argument("--tau-max", type=int)
    g.add_argument("--zero-handling", choices=["exclude", "include"])
    g.add_argument("--input-dir", type=Path)
    g.add_argument("--output-dir", type=Path)
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--workers", type=int)
    g.add_argument("--pattern", help="input glob; {pair} and {year} are substituted")
    g.add_argument("--pair-table", type=Path)
    g.add_argument("--thresholds", type=Path, help="file of 'year = b1, b2' lines")
    g.add_argument("--stamp-tz", help="zone of file stamps: EST (default), UTC-5, or an IANA name")
    g.add_argument("--log-returns", action="store_const", const=True)
    g.add_argument("--pooling", choices=["pooled", "weekly"])
    g.add_argument("--fetch-hook", help="shell command run when a pair-year has no input files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fxresponse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("response", "price response curves per pair, year and scale"),
                        ("spread-groups", "pip-spread groups and group-averaged curves"),
                        ("validate", "parse-only pass reporting ingest statistics")):
        _common(sub.add_parser(name, help=help_))

    s = sub.add_parser("synth", help="write a synthetic tick dataset")
    s.add_argument("--pairs", default="EUR/USD")
    s.add_argument("--output-dir", type=Path, default=Path("."))
    s.add_argument("--pair-table", type=Path)
    s.add_argument("--start", default="2019-01-06", help="first Sunday on or after this date")
    s.add_argument("--weeks", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-events", type=int, default=10_000)
    s.add_argument("--rho", type=float, default=0.8, help="probability the next sign repeats")
    s.add_argument("--impact", type=float, default=1.0, help="impact per trade in pips")
    s.add_argument("--noise", type=float, default=0.0, help="midpoint noise amplitude in pips")
    s.add_argument("--spread-pips", default="1.0", help="one value, or one per pair")
    s.add_argument("--base-price", type=float, default=None)
    s.add_argument("--permanent-fraction", type=float, default=FlowModel.permanent_fraction)
    s.add_argument("--impact-decay", type=float, default=FlowModel.impact_decay)
    s.add_argument("--save-signs", action="store_true", help="also save true signs as .npy")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            return cmd_synth(args)
        config = build_config(args)
        return {
            "response": cmd_response,
            "spread-groups": cmd_spread_groups,
            "validate": cmd_validate,
        }[args.command](config)
    except (UsageError, UnknownYear, ValueError) as exc:
        print(f"fxresponse: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
