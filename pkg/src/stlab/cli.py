"""Command line entry point: ``stlab run`` and ``stlab list``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, config_hash, load_configs
from .errors import ConfigParseError, ExperimentFailure
from .verify import ExperimentReport, list_experiments, run_experiment

SUMMARY_COLUMNS = ["id", "kind", "measured", "target", "rel_err", "pass", "runtime_s"]
CODE_VERSION = f"stlab-{__version__}"


@dataclass(frozen=True)
class RunManifest:
    configs: list
    out: Path
    threads: int
    cache: bool
    figures: bool = True


def resolve_threads(requested: int | None) -> int:
    if requested is None:
        requested = int(os.environ.get("STLAB_THREADS", "0") or 0)
    if requested <= 0:
        requested = os.cpu_count() or 1
    return requested


def report_json(report: ExperimentReport, cfg: ExperimentConfig) -> str:
    doc = report.to_dict()
    doc["config"] = cfg.canonical()
    doc["code_version"] = CODE_VERSION
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "label", "params", "measured", "target", "target_source", "pass"])
    for r in doc["rows"]:
        params = ";".join(f"{k}={v}" for k, v in r["params"].items())
        w.writerow([doc["id"], r["label"], params, repr(r["measured"]), repr(r["target"]),
                    r["target_source"], r["pass"]])
    return buf.getvalue()


def _execute(cfg: ExperimentConfig, manifest: RunManifest) -> tuple[str, str]:
    """JSON and CSV text of one experiment, served from the cache when possible."""
    cache_dir = manifest.out / ".cache"
    key = config_hash(cfg, CODE_VERSION)
    cached = cache_dir / f"{key}.json"
    if manifest.cache and cached.exists():
        text = cached.read_text()
    else:
        text = report_json(run_experiment(cfg), cfg)
        if manifest.cache:
            cache_dir.mkdir(parents=True, exist_ok=True)
            tmp = cached.with_suffix(".tmp")
            tmp.write_text(text)
            tmp.replace(cached)
    return text, report_csv(json.loads(text))


def run(manifest: RunManifest) -> int:
    out = manifest.out
    out.mkdir(parents=True, exist_ok=True)
    configs = sorted(manifest.configs, key=lambda c: c.id)
    with ThreadPoolExecutor(max_workers=manifest.threads) as pool:
        results = list(pool.map(lambda c: _execute(c, manifest), configs))
    summary = io.StringIO()
    w = csv.writer(summary, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    failing = []
    for cfg, (js, cs) in zip(configs, results):
        (out / f"{cfg.id}.report.json").write_text(js)
        (out / f"{cfg.id}.csv").write_text(cs)
        doc = json.loads(js)
        if manifest.figures:
            from .plotting import render_report

            render_report(doc, out / f"{cfg.id}.png")
        if not doc["pass"]:
            failing.append(cfg.id)
        rows = doc["rows"] or [{"measured": "nan", "target": "nan", "rel_err": "nan", "pass": False}]
        for r in rows:
            w.writerow([cfg.id, cfg.kind, repr(r["measured"]), repr(r["target"]),
                        repr(r["rel_err"]), r["pass"], doc["runtime_s"]])
        status = "PASS" if doc["pass"] else "FAIL"
        note = f" ({doc['error']})" if doc.get("error") else ""
        print(f"{status} {cfg.id} [{cfg.kind}] {doc['runtime_s']:.2f}s{note}")
    (out / "summary.csv").write_text(summary.getvalue())
    if failing:
        raise ExperimentFailure("failing experiments: " + ", ".join(failing))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stlab", description="Spectral-triple numerical laboratory")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run experiments from TOML configurations")
    r.add_argument("--config", action="append", default=[], metavar="PATH",
                   help="config file or directory of *.toml (repeatable)")
    r.add_argument("--out", default="out", help="output directory")
    r.add_argument("--threads", type=int, default=None, help="worker threads (0 = auto)")
    r.add_argument("--no-cache", action="store_true", help="ignore and do not write the cache")
    r.add_argument("--seed", type=int, default=None, help="override every experiment seed")
    r.add_argument("--filter", default=None, metavar="GLOB", help="only run ids matching GLOB")
    r.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    sub.add_parser("list", help="list experiment kinds")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, required, anchor in list_experiments():
            print(f"{name:28s} requires: {', '.join(required) or '-':40s} {anchor}")
        return 0
    try:
        configs = load_configs(args.config, args.filter)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        configs = [c.with_seed(args.seed) for c in configs]
    manifest = RunManifest(configs, Path(args.out), resolve_threads(args.threads),
                           not args.no_cache, not args.no_figures)
    try:
        return run(manifest)
    except ExperimentFailure as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
