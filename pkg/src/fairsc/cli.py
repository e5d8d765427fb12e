"""Benchmark harness: dataset generation, solver runs, alpha sweeps and runtime grids.

Subcommands
-----------
generate      write a synthetic dataset to disk
cluster       run the selected solvers for several repetitions
sweep-alpha   run the ADMM solver over a list of initial penalties
scaling       time the solvers over a grid of sizes and cluster counts

Settings come from defaults, then an optional YAML file (``--config``),
then ``--set key.path=value`` overrides, then explicit flags. Every CSV
starts with a ``# config: {...}`` line holding the resolved settings.
Repetition ``r`` uses seed ``seed + r`` for data, solver and k-means.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .affinity import DEFAULT_DENSE_THRESHOLD, DEFAULT_OMEGA, affinity_for
from .clustering import KmeansConfig, kmeans
from .datasets import (
    gen_elliptical,
    gen_msbm,
    gen_randlaplace,
    load_edge_list,
    load_feature_csv,
    write_edge_list,
    write_feature_csv,
    write_groups,
    write_metadata,
)
from .errors import FairSCError, ValidationError
from .fairness import build_constraint, fairness_residual
from .metrics import compute_metrics, orthogonality_residual
from .numerics import LbfgsConfig
from .solvers import SOLVERS, SolverConfig

log = logging.getLogger("fairsc")

GENERATORS = ("msbm", "randlaplace", "elliptical")
LOADERS = ("edgelist", "csv")
DEFAULT_ALPHAS = [0.005, 0.01, 0.05, 0.1]

# columns that depend on the machine, left out of metrics.csv
TIMING_COLUMNS = ("wall_time_s", "kmeans_time_s")


@dataclass
class DatasetSpec:
    generator: str = "msbm"
    n: int = 1000
    k: int | None = None  # m-SBM cluster count, defaults to the run's k
    h: int = 2
    p_within: float | None = None
    p_between: float | None = None
    group_prob: float = 0.3
    path: str | None = None
    group_path: str | None = None
    group_column: str = "group"


@dataclass
class AffinitySpec:
    gamma: float | None = None
    omega: float = DEFAULT_OMEGA
    dense_threshold: int = DEFAULT_DENSE_THRESHOLD


@dataclass
class RunConfig:
    k: int = 10
    seed: int = 0
    repetitions: int = 5
    solvers: list = field(default_factory=lambda: list(SOLVERS))
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    affinity: AffinitySpec = field(default_factory=AffinitySpec)
    solver: dict = field(default_factory=dict)
    kmeans: dict = field(default_factory=dict)
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    n_list: list = field(default_factory=lambda: [500, 1000])
    k_list: list = field(default_factory=lambda: [5, 10])
    output: str = "results"

    def validate(self):
        if not self.solvers:
            raise ValidationError("select at least one solver")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise ValidationError(f"unknown solvers {unknown}; choose from {sorted(SOLVERS)}")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be at least 1")
        if self.dataset.generator not in GENERATORS + LOADERS:
            raise ValidationError(f"unknown dataset generator {self.dataset.generator!r}")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValidationError("every alpha must lie in (0, 1)")
        self.solver_config(self.seed)
        self.kmeans_config(self.seed)
        return self

    def solver_config(self, seed, k=None, **overrides):
        opts = dict(self.solver)
        opts.update(overrides)
        lb = opts.pop("lbfgs", None)
        if lb is not None:
            opts["lbfgs"] = LbfgsConfig(**lb)
        try:
            return SolverConfig(k=self.k if k is None else k, seed=seed, **opts)
        except TypeError as exc:
            raise ValidationError(f"bad solver settings: {exc}") from None

    def kmeans_config(self, seed, k=None):
        try:
            return KmeansConfig(k=self.k if k is None else k, seed=seed, **self.kmeans)
        except TypeError as exc:
            raise ValidationError(f"bad kmeans settings: {exc}") from None

    def resolved(self):
        """Plain dict of every setting with solver and k-means defaults filled in.

        The output directory is left out so identical experiments written to
        different places produce identical files.
        """
        out = dataclasses.asdict(self)
        del out["output"]
        scfg = dataclasses.asdict(self.solver_config(self.seed))
        for key in ("k", "seed"):
            scfg.pop(key)
        out["solver"] = scfg
        kcfg = dataclasses.asdict(self.kmeans_config(self.seed))
        for key in ("k", "seed"):
            kcfg.pop(key)
        out["kmeans"] = kcfg
        return out


def _merge(dst, src, where="config"):
    """Recursively merge a mapping into a dataclass (or dict) in place."""
    for key, value in src.items():
        if dataclasses.is_dataclass(dst):
            names = {f.name for f in dataclasses.fields(dst)}
            if key not in names:
                raise ValidationError(f"unknown {where} key {key!r}")
            current = getattr(dst, key)
            if dataclasses.is_dataclass(current):
                if not isinstance(value, dict):
                    raise ValidationError(f"{where}.{key} must be a mapping")
                _merge(current, value, f"{where}.{key}")
            elif isinstance(current, dict) and isinstance(value, dict):
                _merge(current, value, f"{where}.{key}")
            else:
                setattr(dst, key, value)
        else:
            if isinstance(value, dict) and isinstance(dst.get(key), dict):
                _merge(dst[key], value, f"{where}.{key}")
            else:
                dst[key] = value


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, such as ``1e-4``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _scalar(raw):
    return yaml.load(raw, Loader=_Loader)


def _dotted(key, value):
    node = value
    for part in reversed(key.split(".")):
        node = {part: node}
    return node


def load_config(path=None, sets=(), overrides=None):
    """Build a :class:`RunConfig` from defaults, a YAML file, ``key=value`` pairs and flags."""
    cfg = RunConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = yaml.load(fh, Loader=_Loader) or {}
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: top level must be a mapping")
        _merge(cfg, data)
    for item in sets:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        _merge(cfg, _dotted(key.strip(), _scalar(raw)))
    for key, value in (overrides or {}).items():
        if value is not None:
            _merge(cfg, _dotted(key, value))
    return cfg.validate()


# --------------------------------------------------------------------------
# running


def make_dataset(spec, seed, k):
    g = spec.generator
    if g == "msbm":
        return gen_msbm(seed, spec.n, spec.k or k, spec.h, spec.p_within, spec.p_between)
    if g == "randlaplace":
        return gen_randlaplace(seed, spec.n, spec.h, spec.group_prob)
    if g == "elliptical":
        return gen_elliptical(seed, spec.n)
    if spec.path is None:
        raise ValidationError(f"dataset.path is required for {g!r}")
    if g == "edgelist":
        if spec.group_path is None:
            raise ValidationError("dataset.group_path is required for edge lists")
        return load_edge_list(spec.path, spec.group_path)
    return load_feature_csv(spec.path, spec.group_column)


class _Datasets:
    """Per-repetition datasets; files are loaded once, generators reseeded each time."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._fixed = None

    def get(self, seed, n=None, k=None):
        spec = self.cfg.dataset
        if spec.generator in LOADERS:
            if self._fixed is None:
                self._fixed = make_dataset(spec, seed, self.cfg.k)
            return self._fixed
        if n is not None:
            spec = dataclasses.replace(spec, n=n)
        if k is not None and spec.generator == "msbm":
            spec = dataclasses.replace(spec, k=k)
        return make_dataset(spec, seed, k or self.cfg.k)


def run_one(cfg, bundle, model, solver, seed, k=None, discretize=True, **solver_overrides):
    """One solver call plus k-means and metrics. Failures become a row with status ``error``."""
    k = cfg.k if k is None else k
    row = {"solver": solver, "seed": seed, "k": k, "n": model.n, "status": "ok",
           "flags": "", "error": ""}
    trace = []
    try:
        scfg = cfg.solver_config(seed, k, **solver_overrides)
        fc = build_constraint(bundle.group_labels, model.degree)
        res = SOLVERS[solver](model, fc, scfg)
        row["status"] = res.status
        row["flags"] = ";".join(res.flags)
        row["wall_time_s"] = res.wall_time
        row["admm_iterations"] = res.iterations if solver == "admm" else ""
        trace = res.trace
        if discretize:
            t0 = time.perf_counter()
            labels = kmeans(res.rows_for_kmeans, cfg.kmeans_config(seed, k)).labels
            row["kmeans_time_s"] = time.perf_counter() - t0
            m = compute_metrics(labels, res.H, model, fc, k, res.wall_time)
            row.update(average_balance=m.average_balance, min_balance=m.min_balance,
                       clustering_cost=m.clustering_cost, embedding_cost=m.embedding_cost,
                       fairness_residual=m.fairness_residual,
                       orthogonality_residual=m.orthogonality_residual)
        else:
            row.update(fairness_residual=fairness_residual(fc.F, res.H),
                       orthogonality_residual=orthogonality_residual(res.H))
    except (FairSCError, np.linalg.LinAlgError, MemoryError) as exc:
        row["status"] = "error"
        row["error"] = f"{type(exc).__name__}: {exc}"
        log.error("%s seed=%d failed: %s", solver, seed, row["error"])
    return row, trace


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_table(path, rows, columns, config):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row.get(c, "")) for c in columns})


def read_table(path):
    """Read a CSV written by this module; returns ``(config, rows)``."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        config = json.loads(first.split(":", 1)[1]) if first.startswith("# config:") else None
        if config is None:
            fh.seek(0)
        return config, list(csv.DictReader(fh))


def summarize(rows, keys, metrics):
    """Mean and standard deviation of ``metrics`` over rows grouped by ``keys``."""
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, members in groups.items():
        ok = [r for r in members if r["status"] != "error"]
        rec = dict(zip(keys, key))
        rec["runs"] = len(members)
        rec["failed"] = len(members) - len(ok)
        for m in metrics:
            vals = [float(r[m]) for r in ok if r.get(m, "") != ""]
            rec[f"{m}_mean"] = float(np.mean(vals)) if vals else ""
            rec[f"{m}_std"] = float(np.std(vals)) if vals else ""
        out.append(rec)
    return out


RUN_COLUMNS = ["solver", "rep", "seed", "n", "k", "status", "flags", "wall_time_s",
               "kmeans_time_s", "admm_iterations", "average_balance", "min_balance",
               "clustering_cost", "embedding_cost", "fairness_residual",
               "orthogonality_residual", "error"]
SUMMARY_METRICS = ["wall_time_s", "admm_iterations", "average_balance", "min_balance",
                   "clustering_cost", "embedding_cost", "fairness_residual",
                   "orthogonality_residual"]


def _write_outputs(out, cfg, rows, columns, summary_keys, traces):
    out.mkdir(parents=True, exist_ok=True)
    conf = cfg.resolved()
    (out / "config.json").write_text(json.dumps(conf, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    write_table(out / "runs.csv", rows, columns, conf)
    write_table(out / "metrics.csv", rows, [c for c in columns if c not in TIMING_COLUMNS], conf)
    summary = summarize(rows, summary_keys, SUMMARY_METRICS)
    scols = list(summary_keys) + ["runs", "failed"]
    scols += [f"{m}_{s}" for m in SUMMARY_METRICS for s in ("mean", "std")]
    write_table(out / "summary.csv", summary, scols, conf)
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
        for rec in traces:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return summary


def _trace_records(trace, **tags):
    return [dict(tags, **t) for t in trace]


def cmd_cluster(cfg):
    data = _Datasets(cfg)
    rows, traces = [], []
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        bundle = data.get(seed)
        model = affinity_for(bundle, cfg.affinity.gamma, cfg.affinity.omega,
                             cfg.affinity.dense_threshold)
        for solver in cfg.solvers:
            row, trace = run_one(cfg, bundle, model, solver, seed)
            row["rep"] = rep
            rows.append(row)
            traces += _trace_records(trace, solver=solver, rep=rep, seed=seed)
            log.info("rep %d %s: %s", rep, solver, row["status"])
    summary = _write_outputs(Path(cfg.output), cfg, rows, RUN_COLUMNS, ["solver"], traces)
    return rows, summary


def cmd_sweep_alpha(cfg):
    data = _Datasets(cfg)
    rows, traces = [], []
    for rep in range(cfg.repetitions):
        seed = cfg.seed + rep
        bundle = data.get(seed)
        model = affinity_for(bundle, cfg.affinity.gamma, cfg.affinity.omega,
                             cfg.affinity.dense_threshold)
        for alpha in cfg.alphas:
            row, trace = run_one(cfg, bundle, model, "admm", seed, alpha0=float(alpha))
            row.update(rep=rep, alpha0=float(alpha))
            rows.append(row)
            traces += _trace_records(trace, alpha0=float(alpha), rep=rep, seed=seed)
            log.info("rep %d alpha %g: %s", rep, alpha, row["status"])
    summary = _write_outputs(Path(cfg.output), cfg, rows, ["alpha0"] + RUN_COLUMNS,
                             ["alpha0"], traces)
    return rows, summary


def cmd_scaling(cfg):
    data = _Datasets(cfg)
    rows = []
    for n in cfg.n_list:
        for k in cfg.k_list:
            for rep in range(cfg.repetitions):
                seed = cfg.seed + rep
                bundle = data.get(seed, n=int(n), k=int(k))
                model = affinity_for(bundle, cfg.affinity.gamma, cfg.affinity.omega,
                                     cfg.affinity.dense_threshold)
                for solver in cfg.solvers:
                    row, _ = run_one(cfg, bundle, model, solver, seed, k=int(k), discretize=False)
                    row.update(rep=rep, n=model.n)
                    rows.append(row)
                    log.info("n=%d k=%d rep %d %s: %s", n, k, rep, solver, row["status"])
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    conf = cfg.resolved()
    (out / "config.json").write_text(json.dumps(conf, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    cols = ["solver", "n", "k", "rep", "seed", "status", "flags", "wall_time_s",
            "admm_iterations", "fairness_residual", "orthogonality_residual", "error"]
    write_table(out / "scaling_runs.csv", rows, cols, conf)
    cells = []
    groups = {}
    for r in rows:
        groups.setdefault((r["solver"], r["n"], r["k"]), []).append(r)
    for (solver, n, k), members in groups.items():
        times = [r["wall_time_s"] for r in members if r["status"] != "error"]
        cells.append({
            "solver": solver, "n": n, "k": k, "runs": len(members),
            "failed": len(members) - len(times),
            "wall_time_median": float(np.median(times)) if times else "",
            "wall_time_mean": float(np.mean(times)) if times else "",
            "wall_time_std": float(np.std(times)) if times else "",
        })
    write_table(out / "scaling.csv", cells,
                ["solver", "n", "k", "runs", "failed", "wall_time_median",
                 "wall_time_mean", "wall_time_std"], conf)
    return rows, cells


def cmd_generate(cfg):
    """Write the configured synthetic dataset (seed ``cfg.seed``) to ``cfg.output``."""
    spec = cfg.dataset
    if spec.generator not in GENERATORS:
        raise ValidationError(f"generate needs a synthetic generator, got {spec.generator!r}")
    bundle = make_dataset(spec, cfg.seed, cfg.k)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / bundle.name
    written = []
    if bundle.kind == "graph":
        write_edge_list(bundle, f"{stem}.edges")
        write_groups(bundle, f"{stem}.groups")
        written += [f"{stem}.edges", f"{stem}.groups"]
    else:
        write_feature_csv(bundle, f"{stem}.csv", spec.group_column)
        written.append(f"{stem}.csv")
    write_metadata(bundle, f"{stem}.json", seed=cfg.seed)
    written.append(f"{stem}.json")
    return written


# --------------------------------------------------------------------------
# argument parsing


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _names(text):
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with run settings")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override any setting, e.g. solver.lbfgs.gtol=1e-4")
    common.add_argument("-o", "--output", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--k", type=int, help="number of clusters")
    common.add_argument("--dataset", dest="generator",
                        choices=GENERATORS + LOADERS, help="generator or file format")
    common.add_argument("--n", type=int)
    common.add_argument("--h", type=int, help="number of groups")
    common.add_argument("--p-within", type=float)
    common.add_argument("--p-between", type=float)
    common.add_argument("--group-prob", type=float)
    common.add_argument("--path", help="edge list or feature CSV")
    common.add_argument("--group-path", help="group file for edge lists")
    common.add_argument("--group-column")
    common.add_argument("--gamma", type=float)
    common.add_argument("--omega", type=float)
    common.add_argument("--repetitions", type=int)
    common.add_argument("--solvers", type=_names, help="comma separated subset of ofsc,sfsc,admm")
    common.add_argument("--alpha0", type=float)
    common.add_argument("--T", type=int, dest="T", help="maximum ADMM iterations")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fairsc", description="Fair spectral clustering benchmarks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    sub.add_parser("cluster", parents=[common], help="run solvers and report metrics")
    sw = sub.add_parser("sweep-alpha", parents=[common], help="ADMM penalty sensitivity")
    sw.add_argument("--alphas", type=_floats, help="comma separated initial penalties")
    sc = sub.add_parser("scaling", parents=[common], help="runtime grid over n and k")
    sc.add_argument("--n-list", type=_ints)
    sc.add_argument("--k-list", type=_ints)
    return parser


def _overrides(args):
    flat = {
        "output": args.output, "seed": args.seed, "k": args.k,
        "repetitions": args.repetitions, "solvers": args.solvers,
        "dataset.generator": args.generator, "dataset.n": args.n, "dataset.h": args.h,
        "dataset.p_within": args.p_within, "dataset.p_between": args.p_between,
        "dataset.group_prob": args.group_prob, "dataset.path": args.path,
        "dataset.group_path": args.group_path, "dataset.group_column": args.group_column,
        "affinity.gamma": args.gamma, "affinity.omega": args.omega,
        "solver.alpha0": args.alpha0, "solver.T": args.T,
        "alphas": getattr(args, "alphas", None),
        "n_list": getattr(args, "n_list", None), "k_list": getattr(args, "k_list", None),
    }
    return flat


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.sets, _overrides(args))
        if args.command == "generate":
            for path in cmd_generate(cfg):
                print(path)
            return 0
        runner = {"cluster": cmd_cluster, "sweep-alpha": cmd_sweep_alpha,
                  "scaling": cmd_scaling}[args.command]
        rows, summary = runner(cfg)
    except (FairSCError, OSError, yaml.YAMLError) as exc:
        print(f"fairsc: error: {exc}", file=sys.stderr)
        return 2
    for rec in summary:
        print(json.dumps(rec))
    failed = sum(r["status"] == "error" for r in rows)
    if failed:
        print(f"fairsc: {failed} of {len(rows)} runs failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
