"""Batch command-line pipeline: simulate, fit, validate, analyze, whatif, serve.

Every file-producing command also writes a run manifest next to its primary
output (override with --manifest): command, inputs, outputs with content
checksums, a digest of the effective configuration, tool version and wall
clock.  Outputs are deterministic given inputs and seeds; only the manifest
carries timestamps.

Exit codes: 0 success, 1 partial per-level failures (listed in the
manifest), 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analytics import analytics_summary, classify_cluster
from .errors import LevelfitError, UnusableFitError
from .fitting import (
    FitResult,
    FitterConfig,
    fit_to_json_dict,
    fit_untruncated,
    fits_from_json,
    initial_guess_search,
)
from .ingestion import (
    EmpiricalLevelData,
    IngestionConfig,
    build_level_data,
    filter_attempts,
    group_by_level,
    infer_move_limit,
    load_histogram_json,
    parse_attempts,
)
from .synthgen import generate_corpus, load_corpus_spec
from .validation import validation_report
from .whatif import sensitivity_grid, whatif_response

logger = logging.getLogger("levelfit")


class UsageError(Exception):
    """Configuration or input problem; maps to exit code 2."""


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _require_file(path: str, flag: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file: {p}")
    return p


def _parse_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text.strip(), flags=re.IGNORECASE)
    if not m:
        raise UsageError(f"--grid expects NxM (e.g. 16x16), got {text!r}")
    return int(m.group(1)), int(m.group(2))


def _parse_correction(text: str | None) -> tuple[float, float] | None:
    if text is None:
        return None
    try:
        alpha, beta = (float(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"--correction expects 'alpha,beta', got {text!r}")
    return alpha, beta


def _parse_deltas(text: str) -> list[int]:
    m = re.fullmatch(r"(-?\d+):(-?\d+)", text.strip())
    if not m:
        raise UsageError(f"--deltas expects LO:HI (e.g. -5:5), got {text!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if lo > hi:
        raise UsageError(f"--deltas range is empty: {text!r}")
    return list(range(lo, hi + 1))


def _detect_format(path: Path, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "json" if path.suffix.lower() == ".json" else "csv"


def _load_levels(path: Path, fmt: str) -> dict[str, EmpiricalLevelData]:
    """Level data from telemetry CSV (cleaned here) or aggregated JSON."""
    if fmt == "json":
        return {lv.level_id: lv for lv in load_histogram_json(path)}
    config = IngestionConfig()
    groups = group_by_level(parse_attempts(path, format="csv"))
    levels: dict[str, EmpiricalLevelData] = {}
    for level_id, records in groups.items():
        move_limit = infer_move_limit(records)
        kept = filter_attempts(records, config, move_limit)
        levels[level_id] = build_level_data(kept, move_limit, level_id=level_id)
    return levels


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _safe_name(level_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", level_id)


class ManifestWriter:
    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.started = time.time()
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.failures: list[dict] = []
        config = {
            k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")
        }
        self.config = {k: str(v) for k, v in config.items()}

    def write(self, path: Path) -> None:
        payload = {
            "command": self.command,
            "tool_version": __version__,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.outputs],
            "config": self.config,
            "config_digest": hashlib.sha256(
                json.dumps(self.config, sort_keys=True).encode()
            ).hexdigest(),
            "failures": self.failures,
            "started_at": self.started,
            "duration_seconds": time.time() - self.started,
        }
        _write_json(path, payload)


def _manifest_path(args: argparse.Namespace, default_anchor: Path | None) -> Path | None:
    if getattr(args, "manifest", None):
        return Path(args.manifest)
    if default_anchor is not None:
        return default_anchor.with_name(default_anchor.name + ".manifest.json")
    return None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    manifest = ManifestWriter("simulate", args)
    spec_path = _require_file(args.spec, "--spec")
    manifest.inputs.append(spec_path)
    spec = load_corpus_spec(spec_path, base_seed=args.seed)
    out = Path(args.out)
    fmt = _detect_format(out, args.format)
    truth_path = Path(args.manifest_out) if args.manifest_out else None
    generate_corpus(spec, out, truth_path, format=fmt)
    manifest.outputs.append(out)
    if truth_path:
        manifest.outputs.append(truth_path)
    logger.info("simulated %d levels -> %s", len(spec.levels), out)
    mpath = _manifest_path(args, out)
    if mpath:
        manifest.write(mpath)
    return 0


def _fit_one(payload: tuple[EmpiricalLevelData, tuple[int, int]]) -> FitResult:
    level, grid = payload
    config = FitterConfig.for_move_limit(
        level.move_limit, grid_n_points=grid[0], grid_p_points=grid[1]
    )
    return initial_guess_search(level, config)


def _cmd_fit(args: argparse.Namespace) -> int:
    manifest = ManifestWriter("fit", args)
    in_path = _require_file(args.input, "--input")
    manifest.inputs.append(in_path)
    fmt = _detect_format(in_path, args.format)
    grid = _parse_grid(args.grid)
    out = Path(args.out)

    fits: list[FitResult] = []
    if args.untruncated:
        if fmt != "json":
            raise UsageError("--untruncated requires aggregated histogram JSON input")
        with open(in_path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if isinstance(payload, dict):
            payload = payload.get("levels", [payload])
        for entry in payload:
            counts = {int(m): int(c) for m, c in entry["counts"].items()}
            nominal = int(entry["move_limit"])
            config = FitterConfig.for_move_limit(
                nominal, grid_n_points=grid[0], grid_p_points=grid[1]
            )
            try:
                fits.append(
                    fit_untruncated(
                        counts, nominal, config, level_id=str(entry["level_id"])
                    )
                )
            except LevelfitError as exc:
                manifest.failures.append(
                    {"level_id": str(entry["level_id"]), "error": str(exc)}
                )
        levels = {}
    else:
        levels = _load_levels(in_path, fmt)
        items = sorted(levels.items())
        jobs = args.jobs or os.cpu_count() or 1
        if jobs > 1 and len(items) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [
                    (level_id, pool.submit(_fit_one, (lv, grid))) for level_id, lv in items
                ]
                for level_id, future in futures:
                    try:
                        fits.append(future.result())
                    except LevelfitError as exc:
                        manifest.failures.append({"level_id": level_id, "error": str(exc)})
        else:
            for level_id, lv in items:
                try:
                    fits.append(_fit_one((lv, grid)))
                except LevelfitError as exc:
                    manifest.failures.append({"level_id": level_id, "error": str(exc)})

    fits.sort(key=lambda f: f.level_id)
    _write_json(out, [fit_to_json_dict(f) for f in fits])
    manifest.outputs.append(out)

    if args.plot_dir:
        plot_dir = Path(args.plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        from .distributions import nb_pmf  # local import keeps startup light

        import numpy as np

        for fit in fits:
            level = levels.get(fit.level_id)
            if level is None:
                continue
            ms = np.arange(1, fit.move_limit + 1)
            fitted = nb_pmf(fit.params, ms)
            empirical = level.frequencies()
            rows = [
                [int(m), float(emp), float(mod)]
                for m, emp, mod in zip(ms, empirical, fitted)
            ]
            p = plot_dir / f"curve_{_safe_name(fit.level_id)}.csv"
            _write_csv(p, ["m", "empirical", "fitted"], rows)
            manifest.outputs.append(p)

    logger.info("fitted %d levels (%d failures) -> %s", len(fits), len(manifest.failures), out)
    mpath = _manifest_path(args, out)
    if mpath:
        manifest.write(mpath)
    return 1 if manifest.failures else 0


def _cmd_validate(args: argparse.Namespace) -> int:
    manifest = ManifestWriter("validate", args)
    fits_path = _require_file(args.fits, "--fits")
    in_path = _require_file(args.input, "--input")
    manifest.inputs.extend([fits_path, in_path])
    fits = fits_from_json(fits_path)
    levels = _load_levels(in_path, _detect_format(in_path, args.format))
    correction = _parse_correction(args.correction)

    reports = []
    for fit in sorted(fits, key=lambda f: f.level_id):
        level = levels.get(fit.level_id)
        if level is None:
            manifest.failures.append(
                {"level_id": fit.level_id, "error": "no level data for this fit"}
            )
            continue
        try:
            rep = validation_report(
                level, fit.params, delta=args.delta_threshold, correction=correction
            )
        except LevelfitError as exc:
            manifest.failures.append({"level_id": fit.level_id, "error": str(exc)})
            continue
        reports.append(rep.to_json_dict())

    out = Path(args.out)
    _write_json(out, reports)
    manifest.outputs.append(out)
    passed = sum(1 for r in reports if r["condition1_pass"])
    logger.info("validated %d levels, %d pass condition 1 -> %s", len(reports), passed, out)
    mpath = _manifest_path(args, out)
    if mpath:
        manifest.write(mpath)
    return 1 if manifest.failures else 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    manifest = ManifestWriter("analyze", args)
    fits_path = _require_file(args.fits, "--fits")
    in_path = _require_file(args.input, "--input")
    manifest.inputs.extend([fits_path, in_path])
    fits = sorted(fits_from_json(fits_path), key=lambda f: f.level_id)
    levels = _load_levels(in_path, _detect_format(in_path, args.format))

    summary = analytics_summary(list(levels.values()), fits)
    out = Path(args.out)
    _write_json(out, summary)
    manifest.outputs.append(out)

    if args.plot_dir:
        plot_dir = Path(args.plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        d_rows, np_rows = [], []
        for fit in fits:
            level = levels.get(fit.level_id)
            rel = ""
            if level is not None and level.completion_rate > 0:
                rel = (fit.fitted_completion - level.completion_rate) / level.completion_rate
            d_rows.append([fit.level_id, fit.moments.mean, fit.ks_distance, rel])
            np_rows.append(
                [fit.level_id, fit.params.p, fit.params.n, classify_cluster(fit).value]
            )
        p1 = plot_dir / "d_vs_mean.csv"
        _write_csv(p1, ["level_id", "mean", "D", "relative_difference"], d_rows)
        p2 = plot_dir / "n_vs_p.csv"
        _write_csv(p2, ["level_id", "p", "n", "cluster"], np_rows)
        manifest.outputs.extend([p1, p2])

    mpath = _manifest_path(args, out)
    if mpath:
        manifest.write(mpath)
    return 0


def _cmd_whatif(args: argparse.Namespace) -> int:
    manifest = ManifestWriter("whatif", args)
    fits_path = _require_file(args.fits, "--fits")
    manifest.inputs.append(fits_path)
    fits = fits_from_json(fits_path)
    correction = _parse_correction(args.correction)

    if args.sensitivity:
        if not args.out:
            raise UsageError("--sensitivity requires --out for the grid table")
        deltas = _parse_deltas(args.deltas)
        grid = sensitivity_grid(fits, deltas, correction=correction)
        rows = [
            [r["bin_low"], r["bin_high"], r["delta"], r["mean_change"], r["levels"]]
            for r in grid.to_rows()
        ]
        out = Path(args.out)
        _write_csv(out, ["bin_low", "bin_high", "delta", "mean_change", "levels"], rows)
        manifest.outputs.append(out)
        mpath = _manifest_path(args, out)
        if mpath:
            manifest.write(mpath)
        return 0

    if not args.level:
        raise UsageError("--level is required unless --sensitivity is given")
    if args.delta is None:
        raise UsageError("--delta is required unless --sensitivity is given")
    by_id = {f.level_id: f for f in fits}
    fit = by_id.get(args.level)
    if fit is None:
        raise UsageError(f"--level: no fit for level {args.level!r} in {fits_path}")
    try:
        payload = whatif_response(fit, args.delta, correction=correction)
    except UnusableFitError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    text = json.dumps(payload, indent=2)
    if args.out:
        out = Path(args.out)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        manifest.outputs.append(out)
        mpath = _manifest_path(args, out)
        if mpath:
            manifest.write(mpath)
    else:
        print(text)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import build_state, create_app

    fits_path = _require_file(args.fits, "--fits")
    in_path = _require_file(args.input, "--input")
    fits = fits_from_json(fits_path)
    levels = _load_levels(in_path, _detect_format(in_path, args.format))
    state = build_state(
        levels=list(levels.values()),
        fits=fits,
        correction=_parse_correction(args.correction),
        grid=_parse_grid(args.grid),
    )
    app = create_app(state, permissive_cors=args.cors)
    logger.info("serving %d levels on port %d", len(fits), args.port)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--grid", default="16x16", help="initial-guess grid, NxM")
    parser.add_argument(
        "--delta-threshold",
        type=float,
        default=0.05,
        help="condition-1 threshold on the KS distance",
    )
    parser.add_argument("--seed", type=int, default=None, help="base seed")
    parser.add_argument("--jobs", type=int, default=None, help="parallel workers")
    parser.add_argument(
        "--format", choices=("csv", "json"), default=None, help="telemetry format"
    )
    parser.add_argument("--manifest", default=None, help="run-manifest path override")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levelfit",
        description="Negative-binomial difficulty modelling for move-limited levels",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic telemetry from a corpus spec")
    p.add_argument("--spec", required=True, help="corpus spec JSON")
    p.add_argument("--out", required=True, help="attempts CSV or histogram JSON")
    p.add_argument("--manifest-out", default=None, help="truth manifest JSON")
    _add_shared(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="calibrate negative binomial fits per level")
    p.add_argument("--input", required=True, help="attempts CSV or histogram JSON")
    p.add_argument("--out", required=True, help="fit results JSON")
    p.add_argument("--plot-dir", default=None, help="emit per-level curve tables here")
    p.add_argument(
        "--untruncated",
        action="store_true",
        help="fit over (0, 10M] for uncensored histograms",
    )
    _add_shared(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("validate", help="KS distance and completion-rate checks")
    p.add_argument("--fits", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="validation report JSON")
    p.add_argument("--correction", default=None, help="alpha,beta for corrected column")
    _add_shared(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("analyze", help="cross-level regressions and clusters")
    p.add_argument("--fits", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="analytics JSON")
    p.add_argument("--plot-dir", default=None, help="emit scatter tables here")
    _add_shared(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("whatif", help="predict completion under a move-limit edit")
    p.add_argument("--fits", required=True)
    p.add_argument("--level", default=None)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--correction", default=None, help="alpha,beta mapping to observed scale")
    p.add_argument("--sensitivity", action="store_true", help="emit the full grid instead")
    p.add_argument(
        "--deltas", default="-5:5", help="delta range for --sensitivity, e.g. --deltas=-5:5"
    )
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    _add_shared(p)
    p.set_defaults(func=_cmd_whatif)

    p = sub.add_parser("serve", help="HTTP/JSON API over fits and level data")
    p.add_argument("--fits", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--correction", default=None)
    p.add_argument(
        "--cors",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="permissive cross-origin headers for local console development",
    )
    _add_shared(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevelfitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
