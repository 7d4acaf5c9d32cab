"""Command-line surface: ingest JSONL query logs and drive the
analyze/synth/train/predict/advise/evaluate workflows.

Exit codes: 0 ok, 2 advisory threshold exceeded, 64 usage error,
65 bundle version mismatch, 74 file error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import evaluator, predictor, synth
from .errors import BundleVersionMismatch, CorruptBundle, SlotcastError
from .records import QueryRecord
from .sql_analyzer import (
    DEFAULT_WEIGHTS,
    DISPLAY_NAMES,
    OPERATOR_KINDS,
    analyze_sql,
    clean_query,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_WARN = 2
EXIT_USAGE = 64
EXIT_VERSION = 65
EXIT_IO = 74

_DDL_KEYWORDS = {"CREATE", "ALTER", "DROP"}


@dataclass
class IngestStats:
    read: int = 0
    kept: int = 0
    dropped: Dict[str, int] = field(default_factory=lambda: {
        "ddl": 0, "timeout": 0, "anomalous": 0, "empty": 0, "malformed": 0})

    def balanced(self) -> bool:
        return self.read == self.kept + sum(self.dropped.values())


def _is_trivial_ddl(query_text: str) -> bool:
    """DDL-only statements: first keyword in CREATE/ALTER/DROP and no
    embedded SELECT (CTAS-style statements are kept)."""
    values = clean_query(query_text).values
    if not values or values[0] not in _DDL_KEYWORDS:
        return False
    return "SELECT" not in values


def ingest(path, training: bool = True) -> Tuple[List[QueryRecord], IngestStats]:
    """Parse a JSONL export and apply the pre-training filters."""
    stats = IngestStats()
    records: List[QueryRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            stats.read += 1
            try:
                rec = QueryRecord.from_json_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                logger.warning("line %d: malformed record (%s)", lineno, exc)
                stats.dropped["malformed"] += 1
                continue
            if not rec.query_text or not rec.query_text.strip():
                stats.dropped["empty"] += 1
                continue
            if rec.timed_out:
                stats.dropped["timeout"] += 1
                continue
            if _is_trivial_ddl(rec.query_text):
                stats.dropped["ddl"] += 1
                continue
            if training:
                slot = rec.total_slot_ms
                anomalous = (slot is None or slot < 0
                             or (rec.elapsed_ms == 0 and slot > 0))
                if anomalous:
                    stats.dropped["anomalous"] += 1
                    continue
            records.append(rec)
            stats.kept += 1
    return records, stats


# ---------------------------------------------------------------------------
# Config files (flat key=value)
# ---------------------------------------------------------------------------

def load_config_file(path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {line!r}")
            values[key.strip()] = value.strip()
    return values


def _apply_overrides(obj, values: Dict[str, str], prefix: str):
    for f in dataclasses.fields(obj):
        key = f"{prefix}{f.name}"
        if key in values:
            raw = values[key]
            current = getattr(obj, f.name)
            if isinstance(current, bool):
                setattr(obj, f.name, raw.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(obj, f.name, int(raw))
            elif isinstance(current, float):
                setattr(obj, f.name, float(raw))


def train_config_from_values(values: Dict[str, str]) -> predictor.TrainConfig:
    cfg = predictor.TrainConfig()
    _apply_overrides(cfg.featurizer, values, "featurizer.")
    _apply_overrides(cfg.gbrt, values, "gbrt.")
    threshold = int(values.get("router.threshold", cfg.router.threshold))
    min_subset = int(values.get("router.min_subset", cfg.router.min_subset))
    cfg.router = predictor.Router(threshold=threshold, min_subset=min_subset)
    return cfg


def workload_config_from_values(values: Dict[str, str]) -> synth.WorkloadConfig:
    cfg = synth.WorkloadConfig()
    _apply_overrides(cfg, values, "synth.")
    oracle_kwargs = {}
    for f in dataclasses.fields(synth.OracleCostModel):
        key = f"oracle.{f.name}"
        if key in values:
            oracle_kwargs[f.name] = float(values[key])
    if oracle_kwargs:
        base = dataclasses.asdict(cfg.oracle)
        base.update(oracle_kwargs)
        cfg.oracle = synth.OracleCostModel(**base)
    return cfg


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_analyze(args) -> int:
    sql = Path(args.query_file).read_text(encoding="utf-8")
    report = analyze_sql(sql)
    for kind in OPERATOR_KINDS:
        count = report.counts[kind]
        weight = DEFAULT_WEIGHTS[kind]
        print(f"{DISPLAY_NAMES[kind]:<18} count={count:<4} weight={weight:<3} "
              f"contribution={count * weight}")
    print(f"total complexity score: {report.score}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    values = load_config_file(args.config) if args.config else {}
    cfg = workload_config_from_values(values)
    if args.n_queries is not None:
        cfg.n_queries = args.n_queries
    if args.seed is not None:
        cfg.seed = args.seed
    records = synth.generate(cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
    print(f"wrote {len(records)} records to {args.output}")
    return EXIT_OK


def _cmd_train(args) -> int:
    values = load_config_file(args.config) if args.config else {}
    cfg = train_config_from_values(values)
    records, stats = ingest(args.input, training=True)
    bundle = predictor.train(records, cfg)
    predictor.save_bundle(bundle, args.output_bundle)
    summary = [
        f"records read: {stats.read}",
        f"records kept: {stats.kept}",
        f"dropped: {stats.dropped}",
        f"route counts: {bundle.metadata['route_counts']}",
        f"fallback routes: {bundle.metadata['fallback_routes']}",
        f"bundle: {args.output_bundle}",
    ]
    text = "\n".join(summary)
    print(text)
    Path(str(args.output_bundle) + ".summary.txt").write_text(
        text + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_predict(args) -> int:
    bundle = predictor.load_bundle(args.bundle)
    records, _ = ingest(args.input, training=False)
    results = predictor.predict_many(bundle, records)
    with open(args.output, "w", encoding="utf-8") as fh:
        for i, res in enumerate(results):
            fh.write(f"{i}\t{res.slot_min:.6f}\t{res.route}\t"
                     f"{res.complexity_score}\n")
    print(f"wrote {len(results)} predictions to {args.output}")
    return EXIT_OK


def _cmd_advise(args) -> int:
    bundle = predictor.load_bundle(args.bundle)
    sql = Path(args.query_file).read_text(encoding="utf-8")
    record = QueryRecord(query_text=sql)
    res = predictor.predict(bundle, record)
    print(f"predicted slot-minutes: {res.slot_min:.6f} "
          f"(route={res.route}, complexity={res.complexity_score})")
    if res.slot_min >= args.warn_threshold:
        print(f"WARNING: predicted cost {res.slot_min:.6f} slot-min is at or "
              f"above threshold {args.warn_threshold}")
        return EXIT_WARN
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    bundle = predictor.load_bundle(args.bundle)
    records, _ = ingest(args.input, training=True)
    actual = np.array([r.slot_min for r in records])
    results = predictor.predict_many(bundle, records)
    predicted = np.array([r.slot_min for r in results])
    if args.baseline_mode == evaluator.BASELINE_TRAIN:
        # constants recorded at train time travel inside the bundle
        base = evaluator.Baselines(
            mean_value=bundle.metadata["train_target_mean"],
            median_value=bundle.metadata["train_target_median"],
            source=evaluator.BASELINE_TRAIN)
    else:
        base = evaluator.baselines([], actual, mode=evaluator.BASELINE_TEST)
    report = evaluator.tiered_eval(actual, predicted, base=base)
    outdir = Path(args.report_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    for fmt, name in (("text", "report.txt"), ("structured", "report.json"),
                      ("plotdata", "plotdata.csv")):
        (outdir / name).write_bytes(evaluator.emit_report(report, fmt))
    sys.stdout.write(evaluator.emit_report(report, "text").decode("utf-8"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing / dispatch
# ---------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slotcast",
                     description="Pre-execution query slot-time prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="score a query's SQL complexity")
    p.add_argument("--query-file", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic workload")
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--n-queries", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model bundle")
    p.add_argument("--input", required=True)
    p.add_argument("--output-bundle", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict slot-time for a JSONL file")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("advise", help="pre-submission cost advisory")
    p.add_argument("--bundle", required=True)
    p.add_argument("--query-file", required=True)
    p.add_argument("--warn-threshold", type=float, required=True)
    p.set_defaults(func=_cmd_advise)

    p = sub.add_parser("evaluate", help="tiered evaluation against baselines")
    p.add_argument("--bundle", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--report-dir", required=True)
    p.add_argument("--baseline-mode", default=evaluator.BASELINE_TRAIN,
                   choices=[evaluator.BASELINE_TRAIN, evaluator.BASELINE_TEST])
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except BundleVersionMismatch as exc:
        print(f"bundle version error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except (OSError, CorruptBundle) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SlotcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
