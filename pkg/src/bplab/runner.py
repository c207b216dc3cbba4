"""Run configured suites, write reports, replay records."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

from .checks import Verdict
from .records import ReplayMismatch, WitnessMissing, replay_quantities
from .suites import SUITES, Context, evaluate_instance

_WORKER = {}


def _context(config, index):
    key = (id(config), index)
    if key not in _WORKER:
        _WORKER[key] = Context(config, index)
    return _WORKER[key]


def _init_worker(config):
    _WORKER.clear()
    _WORKER["config"] = config


def _run_task(task):
    name, index, inst = task
    config = _WORKER["config"]
    ctx = _context(config, index)
    t = time.perf_counter()
    rec = evaluate_instance(SUITES[name], ctx, config.suites[name], inst)
    return rec, time.perf_counter() - t


def plan(config):
    """All (suite, setting index, instance) tasks of a config, in config order."""
    tasks = []
    for name, params in config.suites.items():
        suite = SUITES[name]
        indices = [0] if suite.global_ else range(len(config.settings()))
        for i in indices:
            ctx = _context(config, i)
            for inst in suite.instances(ctx, params):
                tasks.append((name, i, inst))
    return tasks


def run(config, *, threads: int = 1, progress=None):
    """Evaluate every instance; returns (report, timings).

    Records are sorted by instance hash, so the report depends only on the
    config and seed, not on the number of workers.
    """
    _WORKER["config"] = config
    tasks = plan(config)
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker, initargs=(config,)) as ex:
            results = list(ex.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = []
        for k, task in enumerate(tasks):
            results.append(_run_task(task))
            if progress:
                progress(k + 1, len(tasks), results[-1][0])
    records = sorted((r for r, _ in results), key=lambda r: r["instance"])
    timings = {r["check"]: round(t, 6) for r, t in results}
    report = {"format": 1, "config": config.to_dict(), "summary": summarize(records), "records": records}
    return report, timings


def summarize(records):
    out = {}
    for r in records:
        s = out.setdefault(r["suite"], {v.value: 0 for v in Verdict})
        s[r["verdict"]] += 1
    return {k: out[k] for k in sorted(out)}


def exit_status(report) -> int:
    return 1 if any(s["FAIL"] for s in report["summary"].values()) else 0


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def table(report) -> str:
    lines = [f"{'suite':<20} {'PASS':>6} {'FAIL':>6} {'INCONCLUSIVE':>13}"]
    for name, s in report["summary"].items():
        lines.append(f"{name:<20} {s['PASS']:>6} {s['FAIL']:>6} {s['INCONCLUSIVE']:>13}")
    bad = [r for r in sorted(report["records"], key=lambda r: r["check"]) if r["verdict"] != "PASS"]
    if bad:
        lines.append("")
        lines.append(f"{'check':<40} {'verdict':<13} {'lhs':>14} {'rhs':>14}")
        for r in bad:
            lines.append(f"{r['check']:<40} {r['verdict']:<13} {_fmt(r['lhs']):>14} {_fmt(r['rhs']):>14}")
    return "\n".join(lines) + "\n"


def _fmt(x):
    return "inf" if x is None else f"{x:.8g}"


def write_report(report, timings, out_dir, name="report"):
    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, f"{name}{ext}") for k, ext in
             (("json", ".json"), ("table", ".txt"), ("timings", ".timings.json"))}
    with open(paths["json"], "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
    with open(paths["table"], "w", encoding="utf-8") as fh:
        fh.write(table(report))
    with open(paths["timings"], "w", encoding="utf-8") as fh:
        fh.write(dumps(timings))
    return paths


def replay_record(record: dict) -> Verdict:
    """Recompute one record from its witnesses and re-judge it.

    Raises ReplayMismatch when a value or the verdict drifts and
    WitnessMissing when the record cannot be recomputed.
    """
    for key in ("suite", "verdict", "estimates", "setting"):
        if key not in record:
            raise WitnessMissing(f"record lacks {key!r}")
    suite = SUITES.get(record["suite"])
    if suite is None:
        raise WitnessMissing(f"unknown suite {record['suite']!r}")
    ests = replay_quantities(record)
    verdict = suite.verdict(ests, record)
    if verdict.value != record["verdict"]:
        raise ReplayMismatch(f"{record.get('check', '?')}: stored {record['verdict']}, replayed {verdict.value}")
    return verdict


def load_records(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "records" in data:
        return data["records"]
    if isinstance(data, list):
        return data
    return [data]
