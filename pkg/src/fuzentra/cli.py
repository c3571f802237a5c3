"""Command-line interface.

Exit codes: 0 on success, 1 for data errors (bad or missing input files,
degenerate signals), 2 for configuration and usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cca import cca_solve, denoise, make_template
from .classify import ModelKind, cross_validate
from .config import PipelineConfig, load_config, stage_seed
from .csvio import parse_float, read_rows, read_signal_csv, write_rows, write_signal_csv
from .emd import SiftConfig, decompose
from .entropy import EntropyParams, Method, multiscale_profile
from .errors import ConfigError, DataError
from .pipeline import compare_tables, read_features, run_pipeline, write_cv_outputs, STATS_HEADER
from .synth import gen_cohort, load_spec, CohortSpec

logger = logging.getLogger("fuzentra")


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=default, help="top-level random seed")
    parser.add_argument("--workers", type=int, default=default, help="worker processes for the pipeline")
    parser.add_argument("--config", default=default, help="key = value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fuzentra", description="Multiscale fuzzy entropy analysis of EEG epochs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)

    p = sub.add_parser("decompose", parents=[common], help="empirical mode decomposition of one channel")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--channel", help="channel to decompose (default: first)")

    p = sub.add_parser("entropy", parents=[common], help="multiscale entropy profile")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--method", choices=[m.value for m in Method])
    p.add_argument("--scales", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--channel", help="restrict to one channel")

    p = sub.add_parser("denoise", parents=[common], help="CCA denoising against SSVEP templates")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output signal CSV")
    p.add_argument("--f1", type=float)
    p.add_argument("--keep", type=int)

    p = sub.add_parser("stats", parents=[common], help="per-scale t-tests with FDR control")
    p.add_argument("--a", required=True, help="table subject_id,s1..sT")
    p.add_argument("--b", required=True, help="table subject_id,s1..sT")
    p.add_argument("--kind", choices=("paired", "independent"), default="independent")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--alpha", type=float)
    p.add_argument("--fdr", choices=("bh", "by"))
    p.add_argument("--pooled", action="store_true", help="pooled-variance instead of Welch")

    p = sub.add_parser("classify", parents=[common], help="cross-validated classification of features.csv")
    p.add_argument("features")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model", choices=[m.value for m in ModelKind])
    p.add_argument("--folds", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--no-tune", action="store_true", help="skip inner hyper-parameter search")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    p.add_argument("--spec", help="cohort spec file (key = value)")
    p.add_argument("--out", required=True, help="output data directory")
    p.add_argument("--null", action="store_true", help="zero all planted trends")

    p = sub.add_parser("pipeline", parents=[common], help="full run from raw epochs")
    p.add_argument("data_dir")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    return replace(cfg, **overrides).validate()


def _pick(value, fallback):
    return fallback if value is None else value


def cmd_decompose(args, cfg):
    epoch = read_signal_csv(args.input)
    name = args.channel or epoch.channel_names[0]
    series = epoch.channel(name)
    d = decompose(series, SiftConfig(cfg.sd_threshold, cfg.max_sift_iterations, cfg.max_imfs))
    out = Path(args.out)
    manifest = []
    for k, imf in enumerate(d.imfs, 1):
        write_signal_csv(out / f"imf_{k}.csv", {name: imf})
        manifest.append((f"imf_{k}", d.mean_frequencies()[k - 1]))
    write_signal_csv(out / "residue.csv", {name: d.residue})
    manifest.append(("residue", None))
    write_rows(out / "manifest.csv", ("component", "mean_frequency_hz"), manifest)


def cmd_entropy(args, cfg):
    epoch = read_signal_csv(args.input)
    names = (args.channel,) if args.channel else epoch.channel_names
    params = EntropyParams(_pick(args.m, cfg.m), _pick(args.n, cfg.n), _pick(args.r, cfg.r))
    method = _pick(args.method, cfg.method)
    scales = _pick(args.scales, cfg.scales)
    sift = SiftConfig(cfg.sd_threshold, cfg.max_sift_iterations, cfg.max_imfs)
    profiles = [multiscale_profile(epoch.channel(ch), method, params, scales, cfg.trend_cutoff_hz, sift) for ch in names]
    header = ("scale", "value") if args.channel else ("scale",) + tuple(names)
    rows = [(s, *[p.values[s - 1] for p in profiles]) for s in range(1, scales + 1)]
    write_rows(args.out, header, rows)


def cmd_denoise(args, cfg):
    epoch = read_signal_csv(args.input)
    tmpl = make_template(_pick(args.f1, cfg.f1), epoch.n_samples, epoch.sample_rate)
    sol = cca_solve(epoch, tmpl)
    write_signal_csv(args.out, denoise(epoch, sol, _pick(args.keep, cfg.keep)))
    out = Path(args.out)
    write_rows(
        out.with_name(out.stem + "_correlations.csv"),
        ("component", "correlation"),
        [(i + 1, c) for i, c in enumerate(sol.correlations.tolist())],
    )


def read_table(path) -> dict:
    header, rows = read_rows(path)
    if not header or header[0] != "subject_id" or len(header) < 2:
        raise DataError(f"{path}: header must be subject_id,s1..sT")
    table = {}
    for row in rows:
        if len(row) != len(header):
            raise DataError(f"{path}: row for {row[0]} has {len(row)} columns, expected {len(header)}")
        try:
            vals = [parse_float(v) for v in row[1:]]
        except ValueError:
            raise DataError(f"{path}: non-numeric value in row {row[0]}") from None
        table[row[0]] = np.array([np.nan if v is None else v for v in vals])
    return table


def cmd_stats(args, cfg):
    a, b = read_table(args.a), read_table(args.b)
    widths = {v.size for v in (*a.values(), *b.values())}
    if len(widths) != 1:
        raise DataError("tables must have the same number of scales")
    if args.kind == "paired":
        common = set(a) & set(b)
        if len(common) < 2:
            raise DataError("paired test needs at least two subjects present in both tables")
        if len(common) < max(len(a), len(b)):
            logger.info("paired test: %d subjects without a partner dropped", len(a) + len(b) - 2 * len(common))
    alpha = _pick(args.alpha, cfg.alpha)
    rows = compare_tables(a, b, args.kind, widths.pop(), alpha, _pick(args.fdr, cfg.fdr_method), welch=not args.pooled and cfg.welch)
    write_rows(args.out, STATS_HEADER, rows)


def cmd_classify(args, cfg):
    data = read_features(args.features)
    summary = cross_validate(
        _pick(args.model, cfg.model),
        data,
        _pick(args.folds, cfg.folds),
        _pick(args.repeats, cfg.repeats),
        stage_seed(cfg.seed, "classify"),
        cfg.tune and not args.no_tune,
    )
    write_cv_outputs(args.out, summary)


def cmd_synth(args, cfg):
    spec = load_spec(args.spec) if args.spec else CohortSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.null:
        spec = spec.null()
    gen_cohort(spec, args.out)


def cmd_pipeline(args, cfg):
    report = run_pipeline(cfg, args.data_dir, args.out)
    for region, panels in report.significant().items():
        for panel, scales in panels.items():
            logger.info("%s %s: significant scales %s", region, panel, scales or "none")


COMMANDS = {
    "decompose": cmd_decompose,
    "entropy": cmd_entropy,
    "denoise": cmd_denoise,
    "stats": cmd_stats,
    "classify": cmd_classify,
    "synth": cmd_synth,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"fuzentra: configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"fuzentra: invalid argument: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"fuzentra: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
