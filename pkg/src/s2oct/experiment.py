"""Experiment pipeline: ingest, scale, sample, build, solve, evaluate, record."""
from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Dataset, Label, TreeParams, build_topology, predict
from .evaluation import METRIC_NAMES, Metrics, diff_metrics
from .model import ModelParams, SolveStatus, build_labeled_only, build_s2oct, default_depth
from .preprocess import SampleDesign, SampleKind, draw_sample, load_table, make_rng
from .solve import Emphasis, SolverConfig, solve

log = logging.getLogger(__name__)

METHODS = ("s2oct", "labeled_only")
SLICES = ("full", "unlabeled")
RESULT_COLUMNS = [
    "instance", "design", "replicate", "seed", "method",
    "n", "m", "p", "D", "s", "C", "lambda", "M", "eta",
    "status", "runtime_s", "objective", "best_bound", "xi", "delta_sum", "routed_a",
] + [f"{k}_{sl}" for sl in SLICES for k in METRIC_NAMES] + ["error"]
DIFF_COLUMNS = ["instance", "design", "replicate", "seed", "both_terminated"] + [
    f"d{k}_{sl}" for sl in SLICES for k in METRIC_NAMES
]
TOL = 1e-6


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DesignSpec:
    name: str
    kind: SampleKind = SampleKind.BIASED
    fraction: float = 0.10
    bias: float = 0.85


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[Path, ...]
    designs: tuple[DesignSpec, ...] = (DesignSpec("biased"),)
    header: bool = False
    scaling: str = "midpoint"
    replicates: int = 5
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    workers: int = 1
    C: float = 1.0
    s: Optional[float] = None
    depth: Optional[int] = None
    clamp_gamma: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
        return cls.from_parser(cp, base=path.parent)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser, base: Path = Path(".")) -> "ExperimentConfig":
        ex = cp["experiment"] if cp.has_section("experiment") else {}
        md = cp["model"] if cp.has_section("model") else {}
        sv = cp["solver"] if cp.has_section("solver") else {}

        def opt(sec, key, conv, default):
            raw = sec.get(key, "") if sec else ""
            raw = raw.strip() if isinstance(raw, str) else raw
            return default if raw in ("", "auto", None) else conv(raw)

        def as_bool(v):
            return str(v).lower() in ("1", "true", "yes", "on")

        datasets = tuple(
            (base / d.strip()).resolve() for d in ex.get("datasets", "").split(",") if d.strip()
        )
        designs = []
        for sec in cp.sections():
            if sec.startswith("design"):
                name = sec.split(":", 1)[1].strip() if ":" in sec else cp[sec].get("kind", "biased")
                d = cp[sec]
                designs.append(
                    DesignSpec(
                        name=name,
                        kind=SampleKind(d.get("kind", "biased").strip()),
                        fraction=float(d.get("fraction", "0.10")),
                        bias=float(d.get("bias", "0.85")),
                    )
                )
        solver = SolverConfig(
            time_limit_seconds=opt(sv, "time_limit", float, 7200.0),
            emphasis=Emphasis(opt(sv, "emphasis", str, "feasibility")),
            threads=opt(sv, "threads", int, 1),
            mip_gap=opt(sv, "mip_gap", float, None),
            solver_id=opt(sv, "backend", str, "highs"),
            command=opt(sv, "command", str, None),
            seed=opt(sv, "seed", int, 0),
        )
        return cls(
            datasets=datasets,
            designs=tuple(designs) or (DesignSpec("biased"),),
            header=opt(ex, "header", as_bool, False),
            scaling=opt(ex, "scaling", str, "midpoint"),
            replicates=opt(ex, "replicates", int, 5),
            seed=opt(ex, "seed", int, 0),
            methods=tuple(m.strip() for m in ex.get("methods", ",".join(METHODS)).split(",") if m.strip()),
            workers=opt(ex, "workers", int, 1),
            C=opt(md, "C", float, 1.0),
            s=opt(md, "s", float, None),
            depth=opt(md, "depth", int, None),
            clamp_gamma=opt(md, "clamp_gamma", as_bool, False),
            solver=solver,
        )


def derive_seed(base: int, instance: str, replicate: int) -> int:
    """Independent 64-bit seed per (instance, replicate)."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, zlib.crc32(instance.encode()), int(replicate)])
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# synthetic data


def two_gaussians(N: int, p: int = 2, seed: int = 0, separation: float = 2.0, share_a: float = 0.5):
    """Two isotropic unit-variance Gaussian clouds whose means differ by ``separation``."""
    rng = make_rng(seed)
    n_a = int(round(share_a * N))
    mu = np.zeros(p)
    mu[0] = separation / 2.0
    X = np.vstack([rng.normal(-mu, 1.0, (n_a, p)), rng.normal(mu, 1.0, (N - n_a, p))])
    labels = (Label.A,) * n_a + (Label.B,) * (N - n_a)
    return X, labels


def random_tiny_instance(rng: np.random.Generator, max_n: int = 4, max_m: int = 4, p: int = 2):
    """Random dataset with ``n <= max_n`` labeled and ``m <= max_m`` unlabeled points and a random lambda."""
    while True:
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(0, max_m + 1))
        if n + m >= 2:
            break
    labels = [Label.A if v else Label.B for v in rng.integers(0, 2, n)]
    ds = Dataset(rng.random((n, p)), labels, rng.random((m, p)))
    lam = int(rng.integers(0, m + 1))
    return ds, lam


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class Job:
    instance: str
    path: Path
    design: DesignSpec
    replicate: int
    seed: int


def jobs_for(config: ExperimentConfig) -> list[Job]:
    out = []
    for path in config.datasets:
        name = path.stem
        for design in config.designs:
            for r in range(config.replicates):
                out.append(Job(name, path, design, r, derive_seed(config.seed, name, r)))
    return out


def sample_for(job: Job, config: ExperimentConfig):
    table, _ = load_table(job.path, header=config.header, scaling=config.scaling)
    design = SampleDesign(job.design.kind, job.design.fraction, job.design.bias, job.seed)
    return draw_sample(table, design)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.floating,)):
        return _fmt(float(v))
    return str(v)


def _metrics_fields(tree: TreeParams, topology, sample) -> dict:
    preds = predict(topology, tree, sample.dataset.points)
    out = {}
    full = Metrics.of(preds, sample.truth)
    unl = Metrics.of(preds[sample.dataset.n :], sample.unlabeled_truth)
    for sl, met in (("full", full), ("unlabeled", unl)):
        for k in METRIC_NAMES:
            out[f"{k}_{sl}"] = getattr(met, k)
    out["routed_a"] = sum(c is Label.A for c in preds[sample.dataset.n :])
    return out


def run_job(job: Job, config: ExperimentConfig, out_dir: Path) -> list[dict]:
    """Solve every configured method on one sample; one result dict per method."""
    base = dict(instance=job.instance, design=job.design.name, replicate=job.replicate, seed=job.seed)
    try:
        sample = sample_for(job, config)
        ds = sample.dataset
        topology = build_topology(config.depth or default_depth(ds.N))
        params = ModelParams.for_dataset(
            ds, depth=topology.depth, s=config.s, C=config.C, lam=sample.lam, clamp_gamma=config.clamp_gamma
        )
    except Exception as exc:
        log.exception("job %s failed before solving", job)
        return [dict(base, method=mth, status=SolveStatus.ERROR.value, error=f"{type(exc).__name__}: {exc}") for mth in config.methods]

    rows = []
    for method in config.methods:
        row = dict(
            base, method=method, n=ds.n, m=ds.m, p=ds.p, D=topology.depth, s=params.s, C=params.C,
            M=params.big_m, eta=params.eta,
        )
        row["lambda"] = params.lam if method == "s2oct" else ""
        run_dir = out_dir / "runs" / job.instance / job.design.name / f"r{job.replicate}" / method
        try:
            if method not in METHODS:
                raise ValueError(f"unknown method {method!r}")
            builder = build_s2oct if method == "s2oct" else build_labeled_only
            model = builder(ds, topology, params)
            report = solve(model, config.solver, run_dir=run_dir)
            row.update(
                status=report.status.value,
                runtime_s=report.runtime_seconds,
                objective=report.objective,
                best_bound=report.best_bound,
                error=report.diagnostics if report.status is SolveStatus.ERROR else "",
            )
            if report.tree is not None and report.status.has_solution:
                row["xi"] = report.xi if method == "s2oct" else ""
                row["delta_sum"] = report.binaries.get("delta_ones", "") if method == "s2oct" else ""
                row.update(_metrics_fields(report.tree, topology, sample))
                tree_doc = dict(
                    omega=report.tree.omega.tolist(),
                    gamma=report.tree.gamma.tolist(),
                    depth=topology.depth,
                    delta_sum=row["delta_sum"],
                    xi=report.xi,
                    labeled_index=sample.labeled_index.tolist(),
                    unlabeled_index=sample.unlabeled_index.tolist(),
                )
                (run_dir / "tree.json").write_text(json.dumps(tree_doc, indent=1))
        except Exception as exc:
            log.exception("job %s method %s failed", job, method)
            row.update(status=SolveStatus.ERROR.value, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def diff_row(rows: list[dict], limit: float) -> dict:
    by = {r["method"]: r for r in rows}
    a, b = by.get("s2oct"), by.get("labeled_only")
    first = rows[0]
    out = {k: first[k] for k in ("instance", "design", "replicate", "seed")}
    both = bool(
        a and b
        and a.get("status") == SolveStatus.OPTIMAL.value
        and b.get("status") == SolveStatus.OPTIMAL.value
        and float(a.get("runtime_s", math.inf)) <= limit
        and float(b.get("runtime_s", math.inf)) <= limit
    )
    out["both_terminated"] = int(both)
    have = a and b and all(f"AC_{sl}" in r and r[f"AC_{sl}"] != "" for r in (a, b) for sl in SLICES)
    for sl in SLICES:
        if have:
            ma = Metrics(*(float(a[f"{k}_{sl}"]) for k in METRIC_NAMES))
            mb = Metrics(*(float(b[f"{k}_{sl}"]) for k in METRIC_NAMES))
            for k, v in diff_metrics(ma, mb).items():
                out[f"d{k}_{sl}"] = v
        else:
            for k in METRIC_NAMES:
                out[f"d{k}_{sl}"] = ""
    return out


def _write_csv(path: Path, columns: list[str], rows: list[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _job_entry(args):
    job, config, out_dir = args
    return run_job(job, config, out_dir)


def run_experiment(config: ExperimentConfig, out_dir) -> tuple[list[dict], list[dict]]:
    """Run every job, write ``results.csv`` and ``diffs.csv``, and return both row lists."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = jobs_for(config)
    args = [(j, config, out_dir) for j in jobs]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_job = list(pool.map(_job_entry, args))
    else:
        per_job = [_job_entry(a) for a in args]
    results = [r for rows in per_job for r in rows]
    diffs = [diff_row(rows, config.solver.time_limit_seconds) for rows in per_job if len(rows) > 1]
    _write_csv(out_dir / "results.csv", RESULT_COLUMNS, results)
    _write_csv(out_dir / "diffs.csv", DIFF_COLUMNS, diffs)
    return results, diffs


# ---------------------------------------------------------------------------
# validation


def validate_solution(row: dict, tree: TreeParams, sample) -> dict:
    """Re-route every point through ``tree`` and compare with the recorded row."""
    topology = build_topology(tree.depth)
    recomputed = _metrics_fields(tree, topology, sample)
    mismatches = []
    for key, val in recomputed.items():
        recorded = row.get(key, "")
        if recorded == "" or recorded is None:
            continue
        if abs(float(recorded) - float(val)) > TOL:
            mismatches.append(f"{key}: recorded {recorded}, recomputed {val}")
    delta_sum = row.get("delta_sum", "")
    if delta_sum not in ("", None) and abs(float(delta_sum) - recomputed["routed_a"]) > TOL:
        mismatches.append(f"delta_sum {delta_sum} != routed class-A count {recomputed['routed_a']}")
    return dict(ok=not mismatches, mismatches=mismatches, recomputed=recomputed)


def validate_run(config: ExperimentConfig, out_dir) -> list[dict]:
    out_dir = Path(out_dir)
    jobs = {(j.instance, j.design.name, j.replicate): j for j in jobs_for(config)}
    reports = []
    for row in read_csv_rows(out_dir / "results.csv"):
        if row["status"] not in (SolveStatus.OPTIMAL.value, SolveStatus.FEASIBLE.value):
            continue
        job = jobs[(row["instance"], row["design"], int(row["replicate"]))]
        tree_path = out_dir / "runs" / job.instance / job.design.name / f"r{job.replicate}" / row["method"] / "tree.json"
        doc = json.loads(tree_path.read_text())
        sample = sample_for(job, config)
        rep = validate_solution(row, TreeParams(doc["omega"], doc["gamma"]), sample)
        if doc["labeled_index"] != sample.labeled_index.tolist():
            rep["ok"] = False
            rep["mismatches"].append("regenerated sample differs from the recorded one")
        rep.update(instance=job.instance, design=job.design.name, replicate=job.replicate, method=row["method"])
        reports.append(rep)
    return reports
