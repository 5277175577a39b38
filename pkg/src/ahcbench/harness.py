"""Command-line harness: stats, pretrain, run, grid, report, evaluate.

Exit codes: 0 success, 2 validation error, 1 runtime failure.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np

from .chem import parse_smiles
from .chem.smiles import read_smiles_lines
from .descriptors import crippen_logp, mol_weight
from .exceptions import AhcBenchError, ConfigError, IoFailure, SmilesError
from .metrics import METRICS, MetricReport, compute_all
from .oracle import OracleRecord, read_log, resolve_objective
from .optimize import RunConfig, run_optimization
from .policy import PROFILES, TRAINING, GruLM, Vocabulary, pretrain
from .refstats import DEFAULT_UNIVERSE_WIDTH, ReferenceStats, build_stats, file_digest, molecule_denovo_fraction, property_filter

logger = logging.getLogger("ahcbench")

SUMMARY_FIELDS = ["task", "optimizer", "replicate", "seed", "auc_plain", "auc_filtered",
                  "auc_diverse", "auc_combined", "stop_reason", "calls_used", "error"]
DEFAULT_SIGMAS = (60.0, 120.0, 240.0, 500.0)
DEFAULT_KS = (0.25, 0.5, 1.0)
MANIFEST_KEYS = {"corpus", "corpus_digest", "stats", "prior", "tasks", "optimizers",
                 "replicates", "master_seed", "defaults"}


def replicate_seed(master_seed, k):
    """Seed for replicate ``k``: first 4 bytes (little-endian) of sha256("master:k")."""
    digest = hashlib.sha256(f"{master_seed}:{k}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _slug(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_") or "task"


@dataclass
class Manifest:
    corpus: str
    stats: str
    prior: str
    tasks: List[str]
    optimizers: List[dict]
    replicates: int = 5
    master_seed: int = 0
    corpus_digest: str = None
    defaults: dict = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, os.path.dirname(os.path.abspath(path)))

    @classmethod
    def from_dict(cls, d, base_dir="."):
        unknown = set(d) - MANIFEST_KEYS
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
        for key in ("corpus", "stats", "prior", "tasks", "optimizers"):
            if key not in d:
                raise ConfigError(f"manifest missing {key!r}")
        if not d["tasks"] or not d["optimizers"]:
            raise ConfigError("manifest needs at least one task and one optimizer")
        reps = d.get("replicates", 5)
        if not isinstance(reps, int) or reps < 1:
            raise ConfigError(f"replicates must be a positive integer, got {reps!r}")

        def resolve(p):
            return p if os.path.isabs(p) else os.path.normpath(os.path.join(base_dir, p))

        tasks = [resolve(t) if t.endswith(".json") else t for t in d["tasks"]]
        m = cls(resolve(d["corpus"]), resolve(d["stats"]), resolve(d["prior"]), tasks,
                list(d["optimizers"]), reps, int(d.get("master_seed", 0)),
                d.get("corpus_digest"), dict(d.get("defaults", {})), base_dir)
        for opt in m.optimizers:
            m.config_for(opt, m.tasks[0], 0)  # fail early on bad configs
        return m

    def config_for(self, opt, task, seed, **overrides):
        merged = {**self.defaults, **opt, "objective": task, "seed": seed, **overrides}
        return RunConfig.from_dict(merged)

    def verify_digests(self):
        """Corpus, stats and optional pinned digest must agree."""
        digest = file_digest(self.corpus)
        if self.corpus_digest and self.corpus_digest != digest:
            raise ConfigError(f"corpus digest {digest[:12]} does not match manifest {self.corpus_digest[:12]}")
        stats = ReferenceStats.load(self.stats)
        if stats.source_digest != digest:
            raise ConfigError(
                f"stats {self.stats} were built from a different corpus "
                f"({stats.source_digest[:12]} != {digest[:12]})")
        return stats


def task_name(task):
    return _slug(resolve_objective(task).name)


def _run_unit(args):
    # One (task, optimizer, replicate) cell; writes only its own files.
    cfg_dict, prior_path, stats_path, out_dir, task_dir, label, rep = args
    cfg = RunConfig.from_dict(cfg_dict)
    row = {"task": task_dir, "optimizer": label, "replicate": rep, "seed": cfg.seed}
    try:
        stats = ReferenceStats.load(stats_path)
        result = run_optimization(cfg, prior_path)
        unit = Path(out_dir) / task_dir / _slug(label)
        unit.mkdir(parents=True, exist_ok=True)
        with open(unit / f"rep{rep}.jsonl", "w") as fh:
            for rec in result.log:
                fh.write(json.dumps(rec.to_dict(), separators=(",", ":")) + "\n")
        report = compute_all(result.log, stats, cfg.budget, cfg.record_interval)
        report.save(unit / f"rep{rep}.report.json")
        row.update({f"auc_{m}": repr(getattr(report, f"auc_{m}")) for m in METRICS})
        row.update(stop_reason=result.stop_reason, calls_used=result.calls_used, error="")
    except Exception as exc:  # recorded per row; other units continue
        logger.error("run %s/%s/rep%d failed: %s", task_dir, label, rep, exc)
        row.update({f"auc_{m}": "" for m in METRICS})
        row.update(stop_reason="error", calls_used="", error=f"{type(exc).__name__}: {exc}")
    return row


def _execute(units, jobs):
    if jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_run_unit, units))
    return [_run_unit(u) for u in units]


def write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fields})


def cmd_stats(args):
    stats = build_stats(args.corpus, radius=args.fp_radius, width=args.fp_width)
    stats.save(args.output)
    print(f"n_molecules={stats.n_molecules} skipped={stats.skipped} "
          f"mw={stats.mw_mean:.3f}+/-{stats.mw_std:.3f} logp={stats.logp_mean:.3f}+/-{stats.logp_std:.3f} "
          f"universe={len(stats.bit_universe)} digest={stats.source_digest}")
    return 0


def cmd_pretrain(args):
    smiles = list(read_smiles_lines(args.corpus))
    recipe = TRAINING[args.profile]
    epochs = recipe["epochs"] if args.epochs is None else args.epochs
    lr = recipe["lr"] if args.lr is None else args.lr
    batch = recipe["batch_size"] if args.batch_size is None else args.batch_size
    vocab = Vocabulary.build(smiles)
    model = GruLM.from_profile(vocab, args.profile, seed=args.seed)
    _, history = pretrain(model, smiles, epochs=epochs, batch_size=batch, lr=lr,
                          seed=args.seed, max_len=args.max_len)
    model.save(args.output)
    write_csv(f"{args.output}.nll.csv", ["epoch", "mean_nll"],
              [{"epoch": i + 1, "mean_nll": repr(v)} for i, v in enumerate(history)])
    print(f"profile={args.profile} vocab={len(vocab)} epochs={epochs} "
          f"final_nll={history[-1] if history else float('nan'):.4f} -> {args.output}")
    return 0


def _prepare(args):
    manifest = Manifest.load(args.manifest)
    manifest.verify_digests()
    GruLM.load(manifest.prior)  # checkpoint must load before any budget is spent
    return manifest


def _write_run_manifest(out, manifest):
    info = {"corpus": manifest.corpus, "stats": manifest.stats, "prior": manifest.prior,
            "tasks": manifest.tasks, "master_seed": manifest.master_seed,
            "replicates": manifest.replicates}
    with open(out / "run_manifest.json", "w") as fh:
        json.dump(info, fh, indent=1)
        fh.write("\n")


def cmd_run(args):
    manifest = _prepare(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    units = []
    for task in manifest.tasks:
        tdir = task_name(task)
        for opt in manifest.optimizers:
            for rep in range(manifest.replicates):
                seed = replicate_seed(manifest.master_seed, rep)
                cfg = manifest.config_for(opt, task, seed, threads=args.threads,
                                          charge_invalid=args.charge_invalid)
                units.append((cfg.to_dict(), manifest.prior, manifest.stats, str(out), tdir, cfg.label, rep))
    rows = _execute(units, args.jobs)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    _write_run_manifest(out, manifest)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows) - failed}/{len(rows)} runs succeeded -> {out / 'summary.csv'}")
    return 1 if failed else 0


def _format_value(v):
    return f"{v:g}"


def cmd_grid(args):
    manifest = _prepare(args)
    sigmas = args.sigma if args.sigma is not None else list(DEFAULT_SIGMAS)
    ks = args.k if args.k is not None else list(DEFAULT_KS)
    if not sigmas or not ks:
        raise ConfigError("sigma and k grids must be nonempty")
    base = next((o for o in manifest.optimizers if o.get("optimizer", "AHC") == "AHC"), {"optimizer": "AHC"})
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    reps = args.replicates or manifest.replicates
    units, cells = [], []
    for task in manifest.tasks:
        tdir = task_name(task)
        for sigma in sigmas:
            for k in ks:
                label = f"AHC_s{_format_value(sigma)}_k{_format_value(k)}"
                cells.append((tdir, sigma, k, label))
                for rep in range(reps):
                    cfg = manifest.config_for({**base, "name": label}, task, replicate_seed(manifest.master_seed, rep),
                                              sigma=float(sigma), k_fraction=float(k), threads=args.threads,
                                              charge_invalid=args.charge_invalid)
                    units.append((cfg.to_dict(), manifest.prior, manifest.stats, str(out / "runs"), tdir, label, rep))
    rows = _execute(units, args.jobs)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    grid_rows = []
    for tdir, sigma, k, label in cells:
        mine = [r for r in rows if r["task"] == tdir and r["optimizer"] == label and not r["error"]]
        row = {"task": tdir, "sigma": sigma, "k_fraction": k, "n_replicates": len(mine)}
        for m in METRICS:
            vals = [float(r[f"auc_{m}"]) for r in mine]
            row[f"mean_auc_{m}"] = repr(math.fsum(vals) / len(vals)) if vals else ""
        grid_rows.append(row)
    write_csv(out / "grid.csv", ["task", "sigma", "k_fraction", "n_replicates"] +
              [f"mean_auc_{m}" for m in METRICS], grid_rows)
    _write_run_manifest(out, manifest)
    print(f"{len(grid_rows)} grid cells -> {out / 'grid.csv'}")
    return 1 if any(r["error"] for r in rows) else 0


def read_summary(path):
    """Valid summary rows; malformed rows are skipped with a warning."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                if row.get("error"):
                    raise ValueError(row["error"])
                parsed = dict(row)
                for m in METRICS:
                    parsed[f"auc_{m}"] = float(row[f"auc_{m}"])
                parsed["replicate"] = int(row["replicate"])
                rows.append(parsed)
            except (KeyError, TypeError, ValueError) as exc:
                logger.warning("%s:%d skipped: %s", path, lineno, exc)
    return rows


def rank_table(rows):
    """Mean AUC per optimizer across tasks and replicates, ranked per metric.

    Rank 1 is the highest mean; ties share the smaller rank.
    """
    by_opt = {}
    for r in rows:
        by_opt.setdefault(r["optimizer"], []).append(r)
    table = []
    for opt in sorted(by_opt):
        entry = {"optimizer": opt, "n_runs": len(by_opt[opt])}
        for m in METRICS:
            vals = [r[f"auc_{m}"] for r in by_opt[opt]]
            entry[f"mean_auc_{m}"] = math.fsum(vals) / len(vals)
        table.append(entry)
    for m in METRICS:
        key = f"mean_auc_{m}"
        for e in table:
            e[f"rank_{m}"] = 1 + sum(1 for o in table if o[key] > e[key])
    return table


def _find_summaries(paths):
    found = []
    for p in paths:
        p = Path(p)
        if p.is_file():
            found.append(p)
        elif p.is_dir():
            found.extend(sorted(p.glob("**/summary.csv")))
        else:
            raise IoFailure(f"no such file or directory: {p}")
    return found


def _stats_for(summary_path, explicit):
    if explicit:
        return ReferenceStats.load(explicit)
    info = summary_path.parent / "run_manifest.json"
    if info.is_file():
        with open(info) as fh:
            return ReferenceStats.load(json.load(fh)["stats"])
    return None


def diagnostics(summary_path, row, stats):
    """Property drift of the final top-10 for one run."""
    unit = summary_path.parent / row["task"] / _slug(row["optimizer"])
    if not (unit / f"rep{row['replicate']}.jsonl").is_file():
        unit = summary_path.parent / "runs" / row["task"] / _slug(row["optimizer"])
    log_path = unit / f"rep{row['replicate']}.jsonl"
    records = [r for r in read_log(log_path) if r.valid]
    best = sorted(records, key=lambda r: (-r.score, r.call_index))[:10]
    out = []
    for pos, rec in enumerate(best, start=1):
        mol = parse_smiles(rec.smiles)
        mw, lp = mol_weight(mol), crippen_logp(mol)
        out.append({
            "task": row["task"], "optimizer": row["optimizer"], "replicate": row["replicate"],
            "position": pos, "smiles": rec.smiles, "score": repr(rec.score),
            "mw": f"{mw:.4f}", "logp": f"{lp:.4f}",
            "mw_z": f"{(mw - stats.mw_mean) / stats.mw_std:.4f}",
            "logp_z": f"{(lp - stats.logp_mean) / stats.logp_std:.4f}",
            "denovo_fraction": f"{molecule_denovo_fraction(mol, stats):.4f}",
            "passes_filter": int(property_filter(mol, stats).passed),
        })
    return out


def series_rows(summary_path, row):
    unit = summary_path.parent / row["task"] / _slug(row["optimizer"])
    path = unit / f"rep{row['replicate']}.report.json"
    if not path.is_file():
        path = summary_path.parent / "runs" / row["task"] / _slug(row["optimizer"]) / f"rep{row['replicate']}.report.json"
    report = MetricReport.load(path)
    out = []
    for m in METRICS:
        for point, value in zip(report.points, report.series.get(m, [])):
            out.append({"task": row["task"], "optimizer": row["optimizer"], "replicate": row["replicate"],
                        "metric": m, "call_index": point, "value": repr(value)})
    return out


def cmd_report(args):
    summaries = _find_summaries(args.inputs)
    if not summaries:
        raise ConfigError("no summary.csv found in the given inputs")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    all_rows, diag, long_rows = [], [], []
    for path in summaries:
        rows = read_summary(path)
        all_rows.extend(rows)
        stats = _stats_for(path, args.stats)
        for row in rows:
            try:
                long_rows.extend(series_rows(path, row))
                if stats is not None:
                    diag.extend(diagnostics(path, row, stats))
            except (OSError, ValueError, KeyError, AhcBenchError) as exc:
                logger.warning("%s: run %s/%s/rep%s: %s", path, row["task"], row["optimizer"], row["replicate"], exc)
    table = rank_table(all_rows)
    fields = ["optimizer", "n_runs"] + [f"mean_auc_{m}" for m in METRICS] + [f"rank_{m}" for m in METRICS]
    write_csv(out / "rank_table.csv", fields,
              [{k: (repr(v) if isinstance(v, float) else v) for k, v in e.items()} for e in table])
    write_csv(out / "diagnostics.csv", ["task", "optimizer", "replicate", "position", "smiles", "score", "mw",
                                        "logp", "mw_z", "logp_z", "denovo_fraction", "passes_filter"], diag)
    write_csv(out / "series_long.csv", ["task", "optimizer", "replicate", "metric", "call_index", "value"], long_rows)
    for e in table:
        ranks = " ".join(f"{m}={e[f'rank_{m}']}" for m in METRICS)
        print(f"{e['optimizer']}: {ranks}")
    return 0


def cmd_evaluate(args):
    """Score an external JSONL log ({call_index, smiles, score}) with the metric engine."""
    stats = ReferenceStats.load(args.stats) if args.stats else None
    records = []
    for rec in read_log(args.log):
        try:
            key = parse_smiles(rec.smiles).canonical_key if rec.valid else rec.smiles
            records.append(OracleRecord(rec.call_index, key, rec.score, rec.valid))
        except SmilesError:
            records.append(OracleRecord(rec.call_index, rec.smiles, rec.score, False))
    budget = args.budget or max((r.call_index for r in records), default=0)
    report = compute_all(records, stats, budget, args.record_interval)
    report.save(args.output)
    print(" ".join(f"auc_{m}={getattr(report, f'auc_{m}'):.4f}" for m in METRICS))
    return 0


def _positive_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="ahcbench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="reference statistics for a corpus")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--fp-radius", type=int, default=2)
    p.add_argument("--fp-width", type=int, default=DEFAULT_UNIVERSE_WIDTH)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("pretrain", help="train a prior on a corpus")
    p.add_argument("corpus")
    p.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=100)
    p.set_defaults(func=cmd_pretrain)

    for name, func, text in (("run", cmd_run, "benchmark runs from a manifest"),
                             ("grid", cmd_grid, "sigma x K grid of AHC runs")):
        p = sub.add_parser(name, help=text)
        p.add_argument("manifest")
        p.add_argument("-o", "--output", required=True)
        p.add_argument("--threads", type=int, default=1, help="oracle threads per run")
        p.add_argument("--jobs", type=int, default=1, help="runs executed in parallel processes")
        p.add_argument("--charge-invalid", action="store_true", help="charge budget for unparseable samples")
        p.set_defaults(func=func)
        if name == "grid":
            p.add_argument("--sigma", type=_positive_float, nargs="+")
            p.add_argument("--k", type=_positive_float, nargs="+")
            p.add_argument("--replicates", type=int)

    p = sub.add_parser("report", help="rank table, diagnostics and plot data")
    p.add_argument("inputs", nargs="+", help="run directories or summary.csv files")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats", help="stats file for diagnostics (default: from run_manifest.json)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("evaluate", help="metrics for an external JSONL log")
    p.add_argument("log")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--stats")
    p.add_argument("--budget", type=int)
    p.add_argument("--record-interval", type=int, default=100)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SmilesError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return 2
    except (IoFailure, AhcBenchError, OSError, RuntimeError, ValueError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
