"""Command-line pipeline: ingest, classify, graph, metrics, regress, report, synth, run."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import classify as cls
from . import corpus as cp
from .config import ConfigError, RunConfig
from .design import (
    DEPENDENT_VARIABLES,
    DESCRIPTIVE_HEADER,
    MODEL_KINDS,
    ModelSpec,
    build_design_matrix,
    descriptive_stats,
    effect_percent,
    slug,
    vif,
)
from .influence import (
    METRICS_HEADER,
    compute_metrics,
    fmt_decimal,
    record_from_row,
    record_to_row,
    summarize_groups,
)
from .netgraph import DEGREES_HEADER, CommNetwork, Degree, build_network, export_network
from .report import summary_svg
from .synth import config_from_mapping, generate_corpus, write_synth
from .tables import read_csv, write_table
from .tweedie import WALD_HEADER, TweedieSpec, fit_tweedie_glm, wald_table

log = logging.getLogger("appealscope")

EXIT_CODES = {"ingest": 10, "classify": 11, "graph": 12, "metrics": 13, "regress": 14, "report": 15}
VIF_THRESHOLD = 5.0


class StageError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.exit_code = EXIT_CODES.get(stage, 1)


class Workspace:
    """Locations of every stage's outputs under the output directory."""

    def __init__(self, out: Path, fmt: str = "csv", threads: int | None = None):
        self.out = Path(out)
        self.fmt = fmt
        self.threads = threads or os.cpu_count() or 1

    corpus_dir = property(lambda self: self.out / "corpus")
    labels_dir = property(lambda self: self.out / "labels")
    network_dir = property(lambda self: self.out / "networks")
    regress_dir = property(lambda self: self.out / "regression")
    report_dir = property(lambda self: self.out / "report")
    metrics_path = property(lambda self: self.out / "metrics.csv")


def _require(stage: str, *paths: Path):
    for p in paths:
        if not p or not Path(p).exists():
            raise StageError(stage, f"required input not found: {p}")


def _load_corpus(stage: str, cfg: RunConfig, ws: Workspace) -> cp.Corpus:
    tweets_path = ws.corpus_dir / "tweets.jsonl"
    users_path = ws.corpus_dir / "users.csv"
    _require(stage, tweets_path, users_path)
    with open(tweets_path, encoding="utf-8") as fh:
        tweets, errors = cp.parse_tweets(fh)
    with open(users_path, encoding="utf-8", newline="") as fh:
        users, uerrors = cp.parse_users(fh)
    if errors or uerrors:
        raise StageError(stage, f"canonical corpus is corrupt: {(errors + uerrors)[0]}")
    return cp.Corpus(tweets, users, cfg.periods)


def _load_labels(stage: str, ws: Workspace) -> cls.Labels:
    tl, ul = ws.labels_dir / "tweet_labels.csv", ws.labels_dir / "user_labels.csv"
    _require(stage, tl, ul)
    with open(tl, encoding="utf-8", newline="") as t, open(ul, encoding="utf-8", newline="") as u:
        return cls.read_labels(t, u)


# --------------------------------------------------------------------------
# stages


def stage_ingest(cfg: RunConfig, ws: Workspace) -> list[Path]:
    stage = "ingest"
    _require(stage, cfg.tweets, cfg.users)
    try:
        with open(cfg.tweets, "rb") as fh:
            tweets, terrors = cp.parse_tweets(fh)
        with open(cfg.users, "rb") as fh:
            users, uerrors = cp.parse_users(fh)
    except (OSError, cp.CorpusError, UnicodeDecodeError) as exc:
        raise StageError(stage, str(exc)) from exc
    corpus = cp.Corpus(tweets, users, cfg.periods)
    report = cp.validate_corpus(corpus)
    for d in terrors:
        report.findings.append(cp.Finding(cp.WARNING, "malformed-tweet", f"line {d.line}", d.message))
    for d in uerrors:
        report.findings.append(cp.Finding(cp.WARNING, "malformed-user", f"line {d.line}", d.message))
    ws.out.mkdir(parents=True, exist_ok=True)
    report_path = ws.out / "validation.json"
    report_path.write_text(report.to_json(), encoding="utf-8")
    if not report.accepted:
        raise StageError(stage, f"{len(report.fatal)} fatal validation findings, first: {report.fatal[0].message}")
    ws.corpus_dir.mkdir(parents=True, exist_ok=True)
    with open(ws.corpus_dir / "tweets.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        cp.dump_tweets(tweets, fh)
    with open(ws.corpus_dir / "users.csv", "w", encoding="utf-8", newline="") as fh:
        cp.dump_users(users, fh)
    log.info("ingest: %d tweets, %d users, %d findings", len(tweets), len(users), len(report.findings))
    return [report_path, ws.corpus_dir / "tweets.jsonl", ws.corpus_dir / "users.csv"]


def stage_classify(cfg: RunConfig, ws: Workspace) -> list[Path]:
    stage = "classify"
    corpus = _load_corpus(stage, cfg, ws)
    refs = []
    if cfg.references is not None:
        _require(stage, cfg.references)
        try:
            with open(cfg.references, encoding="utf-8") as fh:
                refs = cls.parse_references(fh)
        except (OSError, cls.ClassifyError) as exc:
            raise StageError(stage, str(exc)) from exc
    try:
        labels = cls.classify_corpus(corpus, refs, cfg.misinfo_threshold, cfg.bot_threshold)
    except (cls.ClassifyError, ValueError) as exc:
        raise StageError(stage, str(exc)) from exc
    ws.labels_dir.mkdir(parents=True, exist_ok=True)
    tl, ul = ws.labels_dir / "tweet_labels.csv", ws.labels_dir / "user_labels.csv"
    with open(tl, "w", encoding="utf-8", newline="") as t, open(ul, "w", encoding="utf-8", newline="") as u:
        cls.write_labels(labels, corpus.users, t, u)
    n_mis = sum(lab.is_misinfo for lab in labels.misinfo.values())
    log.info("classify: %d misinformation tweets, %d bots", n_mis, sum(labels.bots.values()))
    return [tl, ul]


def stage_graph(cfg: RunConfig, ws: Workspace) -> list[Path]:
    stage = "graph"
    corpus = _load_corpus(stage, cfg, ws)
    labels = _load_labels(stage, ws)
    by_period = cp.windowed(corpus)
    with ThreadPoolExecutor(max_workers=ws.threads) as pool:
        nets = list(pool.map(lambda item: build_network(item[1], item[0]), by_period.items()))
    ws.network_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    deg_rows, stat_rows = [], []
    for net in nets:
        path = ws.network_dir / f"{slug(net.period)}.{cfg.graph_format}"
        path.write_bytes(export_network(net, cfg.graph_format, labels.bots))
        outputs.append(path)
        for u in net.nodes:
            d = net.degrees[u]
            deg_rows.append([net.period, u, d.in_count, d.out_count, d.total])
        stat_rows.append([net.period, len(net.nodes), len(net.edges), net.dropped_nonauthor, net.dropped_self])
    outputs.append(write_table(ws.network_dir / "degrees", DEGREES_HEADER, deg_rows, "csv"))
    outputs.append(
        write_table(
            ws.network_dir / "graph_stats",
            ["period", "nodes", "edges", "dropped_nonauthor", "dropped_self"],
            stat_rows,
            ws.fmt,
        )
    )
    log.info("graph: %s", ", ".join(f"{n.period}={len(n.nodes)}n/{len(n.edges)}e" for n in nets))
    return outputs


def _networks_from_degrees(path: Path) -> dict[str, CommNetwork]:
    degrees: dict[str, dict[str, Degree]] = {}
    for row in read_csv(path):
        degrees.setdefault(row["period"], {})[row["user_id"]] = Degree(
            int(row["in_count"]), int(row["out_count"]), int(row["total_degree"])
        )
    return {p: CommNetwork(p, tuple(sorted(d)), (), d) for p, d in degrees.items()}


def stage_metrics(cfg: RunConfig, ws: Workspace) -> list[Path]:
    stage = "metrics"
    corpus = _load_corpus(stage, cfg, ws)
    labels = _load_labels(stage, ws)
    deg_path = ws.network_dir / "degrees.csv"
    _require(stage, deg_path)
    try:
        records = compute_metrics(corpus, _networks_from_degrees(deg_path), labels)
    except (ValueError, KeyError) as exc:
        raise StageError(stage, str(exc)) from exc
    path = write_table(ws.metrics_path.with_suffix(""), METRICS_HEADER, [record_to_row(r) for r in records], "csv")
    log.info("metrics: %d records", len(records))
    return [path]


def _load_records(stage: str, ws: Workspace):
    _require(stage, ws.metrics_path)
    return [record_from_row(r) for r in read_csv(ws.metrics_path)]


def stage_regress(cfg: RunConfig, ws: Workspace, dvs=DEPENDENT_VARIABLES, models=MODEL_KINDS) -> list[Path]:
    stage = "regress"
    records = [r for r in _load_records(stage, ws) if r.is_misinfo]
    if not records:
        raise StageError(stage, "no misinformation tweets to regress on")
    periods = tuple(cfg.periods.labels)
    jobs = [(dv, m) for dv in dvs for m in models]
    designs = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            for dv, m in jobs:
                designs[dv, m] = build_design_matrix(
                    records, ModelSpec(kind=m, dependent=dv, periods=periods, standardize_age=cfg.standardize_age)
                )
        except ValueError as exc:
            raise StageError(stage, str(exc)) from exc
    for w in caught:
        log.warning("regress: %s", w.message)

    def fit(job):
        d = designs[job]
        return fit_tweedie_glm(d.values, d.response, TweedieSpec(power=1.5), d.column_names)

    try:
        with ThreadPoolExecutor(max_workers=ws.threads) as pool:
            fits = dict(zip(jobs, pool.map(fit, jobs)))
    except ValueError as exc:
        raise StageError(stage, str(exc)) from exc

    outputs = []
    effect_rows, vif_rows = [], []
    for dv, m in jobs:
        f = fits[dv, m]
        if not f.converged:
            raise StageError(stage, f"{dv}/{m} fit did not converge in {f.iterations_used} iterations")
        rows = wald_table(f)
        outputs.append(write_table(ws.regress_dir / f"fit_{dv}_{m}", WALD_HEADER, rows, ws.fmt))
        for name, b in zip(f.column_names, f.coefficients):
            effect_rows.append([dv, m, name, fmt_decimal(float(b)), fmt_decimal(effect_percent(float(b)))])
        log.info("regress: %s/%s converged in %d iterations, phi=%.4g", dv, m, f.iterations_used, f.dispersion)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in models:
            d = designs[dvs[0], m]
            for name, v in vif(d).items():
                vif_rows.append([m, name, fmt_decimal(v), int(v < VIF_THRESHOLD)])
    outputs.append(write_table(ws.regress_dir / "vif", ["model", "term", "vif", "below_5"], vif_rows, ws.fmt))
    outputs.append(
        write_table(
            ws.regress_dir / "effects", ["dv", "model", "term", "estimate", "effect_percent"], effect_rows, ws.fmt
        )
    )
    return outputs


def stage_report(cfg: RunConfig, ws: Workspace) -> list[Path]:
    stage = "report"
    corpus = _load_corpus(stage, cfg, ws)
    labels = _load_labels(stage, ws)
    records = _load_records(stage, ws)
    if not records:
        raise StageError(stage, "no metric records to summarise")
    summary = summarize_groups(records, cfg.periods.labels)
    rows = [
        [
            r.scope,
            r.group,
            r.count,
            fmt_decimal(r.mean_appeal),
            fmt_decimal(r.mean_scope),
            fmt_decimal(r.log_mean_appeal),
            fmt_decimal(r.log_mean_scope),
        ]
        for r in summary.rows
    ]
    ratio_rows = [
        [
            r.scope,
            r.numerator,
            r.denominator,
            fmt_decimal(r.appeal_ratio),
            fmt_decimal(r.scope_ratio),
            fmt_decimal(r.log_appeal_ratio),
            fmt_decimal(r.log_scope_ratio),
        ]
        for r in summary.ratios
    ]
    outputs = [
        write_table(
            ws.report_dir / "summary",
            ["scope", "group", "count", "mean_appeal", "mean_scope", "ln1p_mean_appeal", "ln1p_mean_scope"],
            rows,
            ws.fmt,
        ),
        write_table(
            ws.report_dir / "summary_ratios",
            ["scope", "numerator", "denominator", "appeal_ratio", "scope_ratio", "log_appeal_ratio", "log_scope_ratio"],
            ratio_rows,
            ws.fmt,
        ),
    ]
    svg = ws.report_dir / "summary.svg"
    svg.write_text(summary_svg(summary), encoding="utf-8")
    outputs.append(svg)
    desc = descriptive_stats(corpus, labels)
    outputs.append(
        write_table(
            ws.report_dir / "descriptives",
            DESCRIPTIVE_HEADER,
            [[fmt_decimal(row[h]) if isinstance(row[h], float) else row[h] for h in DESCRIPTIVE_HEADER] for row in desc],
            ws.fmt,
        )
    )
    return outputs


STAGES = [
    ("ingest", stage_ingest),
    ("classify", stage_classify),
    ("graph", stage_graph),
    ("metrics", stage_metrics),
    ("regress", stage_regress),
    ("report", stage_report),
]


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(cfg: RunConfig, ws: Workspace) -> tuple[int, Path]:
    """Run every stage in order and write ``manifest.json``; returns (exit code, manifest path)."""
    ws.out.mkdir(parents=True, exist_ok=True)
    entries = []
    status, failed, code, message = "OK", None, 0, None
    for name, fn in STAGES:
        try:
            produced = fn(cfg, ws)
        except StageError as exc:
            status, failed, code, message = "FAILED", name, exc.exit_code, str(exc)
            log.error("%s", exc)
            break
        for p in produced:
            entries.append({"stage": name, "path": Path(p).relative_to(ws.out).as_posix(), "sha256": sha256(p)})
    manifest = {"status": status, "artifacts": sorted(entries, key=lambda e: e["path"])}
    if failed:
        manifest["failed_stage"] = failed
        manifest["error"] = message
    path = ws.out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return code, path


# --------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="flat key = value run config")
    common.add_argument("--out", help="output directory (overrides 'out' in the config)")
    common.add_argument("--threads", type=int, default=None, help="parallelism cap (default: all cores)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="format for report tables")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="appealscope", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "ingest", "classify", "graph", "metrics", "report", "synth"):
        sub.add_parser(name, parents=[common])
    reg = sub.add_parser("regress", parents=[common])
    reg.add_argument("--dv", choices=DEPENDENT_VARIABLES, action="append")
    reg.add_argument("--model", choices=MODEL_KINDS, action="append")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"appealscope: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else cfg.out
    if out is None:
        print("appealscope: no output directory (use --out or 'out' in the config)", file=sys.stderr)
        return 2
    if args.threads is not None and args.threads < 1:
        print("appealscope: --threads must be at least 1", file=sys.stderr)
        return 2
    ws = Workspace(out, args.format, args.threads)

    if args.command == "synth":
        try:
            result = generate_corpus(config_from_mapping(cfg.raw, cfg.periods))
        except ValueError as exc:
            print(f"appealscope: {exc}", file=sys.stderr)
            return 2
        for path in write_synth(result, out).values():
            print(path)
        return 0
    if args.command == "run":
        code, manifest = run_pipeline(cfg, ws)
        print(manifest)
        return code
    fn = dict(STAGES)[args.command]
    try:
        if args.command == "regress":
            produced = fn(
                cfg, ws, tuple(args.dv or DEPENDENT_VARIABLES), tuple(args.model or MODEL_KINDS)
            )
        else:
            produced = fn(cfg, ws)
    except StageError as exc:
        print(f"appealscope: {exc}", file=sys.stderr)
        return exc.exit_code
    for p in produced:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
