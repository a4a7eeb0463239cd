"""Command-line campaigns.

::

    waveguide-lab <command> --config <path> --seed <u64> --out <dir> [--workers <n>]

Each run writes ``<command>.csv`` (first column is the schema tag),
``<command>.jsonl`` with the same rows, ``<command>.manifest.json`` and
``<command>.summary.txt`` into the output directory. Exit status is 0 when
all configured assertions hold, 1 when one fails, 2 on a configuration
error and 130 when interrupted (rows written so far are kept).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import sweeps as sw
from .config import COMMANDS, SCHEMA, ConfigError, parse_config
from .extremizers import ExtremizerSpec
from .fourier import WaveguideGeometry
from .imethod import QUARTIC_NORM
from .measure import drift_ok
from .projectors import PHASE

ENV_OUT = "WAVEGUIDE_LAB_OUT"
ENV_WORKERS = "WAVEGUIDE_LAB_WORKERS"

SCHEMA_VERSION = 1

COLUMNS = {
    "selftest": ["check", "case", "value", "tol", "passed"],
    "bilinear-sweep/angular": [
        "point", "draw", "estimate_id", "lam", "N1", "N2", "M", "theta", "lhs", "rhs", "ratio", "degenerate",
    ],
    "bilinear-sweep/global": [
        "point", "draw", "estimate_id", "lam", "N1", "N2", "eps", "slabs", "lhs", "rhs", "ratio", "degenerate",
    ],
    "measure-sweep": [
        "point", "variant", "lam", "N1", "N2", "M", "theta", "queries", "tau", "mu", "eta", "measure", "bound", "ratio",
    ],
    "extremizer-check": [
        "point", "estimate_id", "lam", "N1", "N2", "M", "theta", "regime", "L", "norm1", "norm2",
        "lhs", "rhs", "ratio", "upper_ratio", "normalized",
    ],
    "nls-run": [
        "N", "lam", "c", "E_Iu0", "E0_0", "E_Iu1", "E0_1", "gap0", "gap1", "increment",
        "mass0", "mass1", "xsb", "steps", "grid_max_xi", "high_modes",
    ],
    "nls-run/ledger": ["N", "t", "mass", "E_Iu", "E0", "gap"],
    "report": ["source", "command", "status", "rows", "sha256_ok", "max_ratio"],
}


class Appender:
    """Single writer for a CSV/JSONL pair; every row is flushed as written."""

    def __init__(self, out: Path, stem: str, tag: str, columns):
        self.tag = tag
        self.columns = list(columns)
        self.csv_path = out / f"{stem}.csv"
        self.jsonl_path = out / f"{stem}.jsonl"
        self._c = open(self.csv_path, "w", newline="")
        self._j = open(self.jsonl_path, "w")
        self._w = csv.writer(self._c, lineterminator="\n")
        self._w.writerow(["schema"] + self.columns)
        self._c.flush()
        self.count = 0

    def write(self, row: dict):
        vals = [row.get(k, "") for k in self.columns]
        self._w.writerow([self.tag] + [_fmt(v) for v in vals])
        self._j.write(json.dumps({"schema": self.tag, **{k: _jsonable(v) for k, v in zip(self.columns, vals)}}) + "\n")
        self._c.flush()
        self._j.flush()
        self.count += 1

    def close(self):
        self._c.close()
        self._j.close()

    @property
    def paths(self):
        return [self.csv_path, self.jsonl_path]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def source_hash() -> str:
    """Digest of the package sources, so a manifest pins the exact code."""
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


# -- assertions -----------------------------------------------------------------

class Checks:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.items = []

    def add(self, name, ok, **info):
        self.items.append(dict(name=name, ok=bool(ok), **{k: _jsonable(v) for k, v in info.items()}))

    @property
    def failed(self):
        return self.enabled and any(not c["ok"] for c in self.items)


# -- commands -----------------------------------------------------------------

def cmd_selftest(sec, seed, workers, out, checks):
    from .selftest import run_selftest

    ap = Appender(out, "selftest", "selftest/1", COLUMNS["selftest"])
    rng = sw.point_rng(seed, 0)
    worst = {}
    try:
        for r in run_selftest(sec["cases"], sec["nx"], sec["ny"], sec["lam"], rng, sec["tol"], sec["unitary_tol"]):
            ap.write(r)
            w = worst.setdefault(r["check"], [0.0, r["tol"], True])
            w[0] = max(w[0], r["value"])
            w[2] = w[2] and bool(r["passed"])
    finally:
        ap.close()
    for name, (v, tol, ok) in worst.items():
        checks.add(name, ok, max_value=v, tol=tol)
    return [ap], {"worst": {k: v[0] for k, v in worst.items()}}


def _ratio_checks(rows, sec, checks, keys=("lam", "N1")):
    live = [r for r in rows if not r.get("degenerate", 0)]
    top = max((r["ratio"] for r in live), default=0.0)
    if sec.get("max_ratio") is not None:
        checks.add("max_ratio", top <= sec["max_ratio"], observed=top, limit=sec["max_ratio"])
    if sec.get("drift_factor") is not None and live:
        ok, t, ref = sw.quarter_check(live, keys, "ratio", sec["drift_factor"])
        checks.add("quarter", ok, overall=t, reference=ref, factor=sec["drift_factor"])
        for k in keys:
            ok, lo, hi = drift_ok(live, k, "ratio", sec["drift_factor"])
            checks.add(f"drift_{k}", ok, lower=lo, upper=hi, factor=sec["drift_factor"])
    return top


def cmd_bilinear(sec, seed, workers, out, checks):
    est = sec["estimate"]
    if est == "angular":
        pts = sw.angular_points(sec["lam"], sec["N1"], sec["N2"], sec["M"], sec["theta"])
        fn, key = sw.angular_task, "bilinear-sweep/angular"
    else:
        Ns = sec["N1"]
        pts = sw.global_points(sec["lam"], Ns, sec["eps"], sec["slabs"])
        fn, key = sw.global_task, "bilinear-sweep/global"
    tasks = [(i, p, seed, sec["draws"], sec["half_j"], sec["half_k"]) for i, p in enumerate(pts)]
    ap = Appender(out, "bilinear-sweep", f"{key}/{SCHEMA_VERSION}", COLUMNS[key])
    rows = []
    try:
        for res in sw.run_tasks(fn, tasks, workers):
            for r in res:
                ap.write(r)
                rows.append(r)
    finally:
        ap.close()
    top = _ratio_checks(rows, sec, checks)
    return [ap], {"points": len(pts), "rows": len(rows), "max_ratio": top}


def cmd_measure(sec, seed, workers, out, checks):
    pts = sw.measure_points(sec["variants"], sec["lam"], sec["N1"], sec["N2"], sec["M"], sec["theta"])
    tasks = [(i, p, seed, sec["n_random"], sec["grazing"]) for i, p in enumerate(pts)]
    ap = Appender(out, "measure-sweep", f"measure-sweep/{SCHEMA_VERSION}", COLUMNS["measure-sweep"])
    rows = []
    try:
        for res in sw.run_tasks(sw.measure_task, tasks, workers):
            for r in res:
                ap.write(r)
                rows.append(r)
    finally:
        ap.close()
    per = {}
    for v in sec["variants"]:
        sub = [r for r in rows if r["variant"] == v]
        per[v] = max((r["ratio"] for r in sub), default=0.0)
        if sec.get("max_ratio") is not None:
            checks.add(f"max_ratio_{v}", per[v] <= sec["max_ratio"], observed=per[v], limit=sec["max_ratio"])
        if sec.get("drift_factor") is not None and sub:
            for k in ("lam", "N1"):
                ok, lo, hi = drift_ok(sub, k, "ratio", sec["drift_factor"])
                checks.add(f"drift_{v}_{k}", ok, lower=lo, upper=hi)
    return [ap], {"points": len(pts), "max_ratio": per}


def cmd_extremizer(sec, seed, workers, out, checks):
    pts, skipped = [], 0
    for lam, N1, N2, th in itertools.product(sec["lam"], sec["N1"], sec["N2"], sec["theta"]):
        try:
            ExtremizerSpec(N1, N2, th, lam)
        except ValueError:
            skipped += 1
            continue
        pts.append(dict(lam=float(lam), N1=float(N1), N2=float(N2), theta=float(th)))
    tasks = [(i, p) for i, p in enumerate(pts)]
    ap = Appender(out, "extremizer-check", f"extremizer-check/{SCHEMA_VERSION}", COLUMNS["extremizer-check"])
    rows = []
    try:
        for res in sw.run_tasks(sw.extremizer_task, tasks, workers):
            for r in res:
                ap.write(r)
                rows.append(r)
    finally:
        ap.close()
    ratios = [r["ratio"] for r in rows]
    lo, hi = (min(ratios), max(ratios)) if ratios else (0.0, 0.0)
    if sec.get("c_low") is not None and ratios:
        checks.add("c_low", lo >= sec["c_low"], observed=lo, limit=sec["c_low"])
    if sec.get("c_high") is not None and ratios:
        checks.add("c_high", hi <= sec["c_high"], observed=hi, limit=sec["c_high"])
    return [ap], {"points": len(pts), "skipped_invalid": skipped, "ratio_min": lo, "ratio_max": hi}


def cmd_nls(sec, seed, workers, out, checks):
    from .nls import increment_experiment, seeded_data

    g = WaveguideGeometry(1.0, sec["L"], sec["nx"], sec["ny"])
    u0 = seeded_data(g, sw.point_rng(seed, 0), sec["decay"], sec["amplitude"])
    ap = Appender(out, "nls-run", f"nls-run/{SCHEMA_VERSION}", COLUMNS["nls-run"])
    lg = Appender(out, "nls-run_ledger", f"nls-run/ledger/{SCHEMA_VERSION}", COLUMNS["nls-run/ledger"])
    try:
        rows, summ = increment_experiment(
            u0, sec["s"], sec["N"], sec["delta"], sec["c"], sec["dt_fraction"], sec["snapshots"], sec["b"],
            checkpoints=sec["checkpoints"],
        )
        for r in rows:
            ap.write(r)
        for r in summ["ledger"]:
            lg.write(r)
    finally:
        ap.close()
        lg.close()
    if sec.get("max_gap_slope") is not None:
        v = summ["gap_slope"]
        checks.add("gap_slope", v <= sec["max_gap_slope"], observed=v, limit=sec["max_gap_slope"])
    if sec.get("max_increment_slope") is not None:
        v = summ["increment_slope"]
        checks.add("increment_slope", v <= sec["max_increment_slope"], observed=v, limit=sec["max_increment_slope"])
    return [ap, lg], {"gap_slope": summ["gap_slope"], "increment_slope": summ["increment_slope"]}


def cmd_report(sec, seed, workers, out, checks):
    src = Path(sec["input"]) if sec.get("input") else out
    ap = Appender(out, "report", f"report/{SCHEMA_VERSION}", COLUMNS["report"])
    n = 0
    try:
        for mf in sorted(src.glob("*.manifest.json")):
            if mf.name == "report.manifest.json":
                continue
            man = json.loads(mf.read_text())
            ok = all(
                (src / name).exists() and sha256_file(src / name) == digest
                for name, digest in man.get("files", {}).items()
            )
            rows, top = 0, ""
            main = src / f"{man['command']}.csv"
            if main.exists():
                with open(main, newline="") as fh:
                    rd = list(csv.DictReader(fh))
                rows = len(rd)
                rs = [float(r["ratio"]) for r in rd if r.get("ratio") not in (None, "")]
                top = max(rs) if rs else ""
            ap.write(dict(source=mf.name, command=man["command"], status=man["status"], rows=rows,
                          sha256_ok=int(ok), max_ratio=top))
            checks.add(f"{man['command']}_intact", ok)
            checks.add(f"{man['command']}_status", man["status"] == "ok", status=man["status"])
            n += 1
    finally:
        ap.close()
    return [ap], {"manifests": n, "input": str(src)}


HANDLERS = {
    "selftest": cmd_selftest,
    "bilinear-sweep": cmd_bilinear,
    "measure-sweep": cmd_measure,
    "extremizer-check": cmd_extremizer,
    "nls-run": cmd_nls,
    "report": cmd_report,
}


# -- entry point -----------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="waveguide-lab", description="Reproducible waveguide sweep campaigns.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="campaign config file (flat key = value, one section per command)")
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./out)")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${ENV_WORKERS} or cpu count)")
    return p


def resolve_out(flag):
    return Path(flag or os.environ.get(ENV_OUT) or "out")


def resolve_workers(flag):
    if flag is not None:
        return flag
    env = os.environ.get(ENV_WORKERS)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _summary_text(command, status, checks, extra, files, wall):
    buf = io.StringIO()
    buf.write(f"waveguide-lab {command}: {status}\n")
    for k, v in extra.items():
        buf.write(f"  {k}: {v}\n")
    if checks.items:
        buf.write("assertions" + ("" if checks.enabled else " (not enforced)") + ":\n")
        for c in checks.items:
            rest = ", ".join(f"{k}={v}" for k, v in c.items() if k not in ("name", "ok"))
            buf.write(f"  [{'PASS' if c['ok'] else 'FAIL'}] {c['name']}" + (f" ({rest})" if rest else "") + "\n")
    buf.write("files:\n")
    for f in files:
        buf.write(f"  {f}\n")
    buf.write(f"wall time: {wall:.2f} s\n")
    return buf.getvalue()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if not (0 <= args.seed < 2**64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            print(f"error: cannot read config: {e}", file=sys.stderr)
            return 2
    try:
        cfg = parse_config(text, args.command)
        workers = resolve_workers(args.workers)
        if workers < 1:
            raise ConfigError(["workers must be at least 1"])
        sec = cfg.section(args.command)
        if args.command == "bilinear-sweep" and sec["estimate"] not in ("angular", "global"):
            raise ConfigError([f"[bilinear-sweep] estimate must be 'angular' or 'global', got {sec['estimate']!r}"])
        if args.command == "measure-sweep":
            from .measure import VARIANTS

            bad = [v for v in sec["variants"] if v not in VARIANTS]
            if bad:
                raise ConfigError([f"[measure-sweep] unknown variants {bad}"])
    except (ConfigError, ValueError) as e:
        probs = e.problems if isinstance(e, ConfigError) else [str(e)]
        for p in probs:
            print(f"config error: {p}", file=sys.stderr)
        return 2
    camp = cfg.section("campaign")
    out = resolve_out(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"error: output directory not writable: {e}", file=sys.stderr)
        return 2

    checks = Checks(bool(camp["assert"]))
    t0 = time.perf_counter()
    status, extra, appenders = "ok", {}, []
    code = 0
    try:
        appenders, extra = HANDLERS[args.command](sec, args.seed, workers, out, checks)
        if checks.failed:
            status, code = "assertion_failed", 1
    except KeyboardInterrupt:
        status, code = "interrupted", 130
    wall = time.perf_counter() - t0

    stem = args.command
    produced = sorted(p for p in out.glob(f"{stem}*.csv")) + sorted(out.glob(f"{stem}*.jsonl"))
    produced = [p for p in produced if p.stem in (stem, f"{stem}_ledger")]
    files = {p.name: sha256_file(p) for p in produced}
    manifest = dict(
        tool="waveguide-lab", version=__version__, source_sha256=source_hash(),
        command=args.command, campaign=camp["id"], seed=args.seed, workers=workers,
        config={args.command: sec, "campaign": camp}, config_text=cfg.text,
        constants=dict(PHASE=PHASE, QUARTIC_NORM=QUARTIC_NORM),
        status=status, assertions_enforced=checks.enabled, assertions=checks.items,
        results={k: _jsonable(v) if not isinstance(v, dict) else {a: _jsonable(b) for a, b in v.items()}
                 for k, v in extra.items()},
        files=files, wall_time_s=wall,
    )
    (out / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    summ = _summary_text(args.command, status, checks, extra, list(files), wall)
    (out / f"{stem}.summary.txt").write_text(summ)
    print(summ, end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
