"""Command line interface: ``c3l --input data.csv --hyperplane "1,0;0" --out results/``.

For every leakage level a result document (JSON lines) is written, plus a
``summary.csv`` table with one row per (alpha, method).
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import empirical_leakage, evaluate
from .exceptions import C3LError, InputError, OptimizationError
from .geometry import Hyperplane, embed_discriminant
from .model import ClusterStats, cluster_cost
from .optimizer import ClusteringResult, OptimizerConfig, run, run_cec, run_cec_h

logger = logging.getLogger("c3l")

SCHEMA = "c3l.result/1"
DEFAULT_ALPHAS = (0.01, 0.05, 0.15, 0.25, 0.35, 0.5)
BASELINES = ("cec", "cec_h")
SUMMARY_FIELDS = ("method", "alpha", "max_leakage", "final_k", "cost", "bic", "nmi")


@dataclass
class RunSpec:
    input: Path
    out: Path
    features: list | None = None
    hyperplane: tuple | None = None
    discriminant_col: str | None = None
    threshold: float | None = None
    alphas: tuple = DEFAULT_ALPHAS
    k: int = 10
    restarts: int = 10
    seed: int = 0
    baselines: list = field(default_factory=list)
    labels: str | None = None
    max_sweeps: int = 200
    n_jobs: int | None = None

    def __post_init__(self):
        if (self.hyperplane is None) == (self.discriminant_col is None):
            raise InputError("give exactly one of --hyperplane or --discriminant-col")
        if self.discriminant_col is not None and self.threshold is None:
            raise InputError("--discriminant-col requires --threshold")
        if not self.alphas:
            raise InputError("the alpha list is empty")
        for a in self.alphas:
            if not 0.0 < a <= 0.5:
                raise InputError(f"alpha values must lie in (0, 0.5], got {a}")
        for b in self.baselines:
            if b not in BASELINES:
                raise InputError(f"unknown baseline {b!r}")


@dataclass
class Dataset:
    X: np.ndarray
    hyperplane: Hyperplane
    feature_names: list
    labels: np.ndarray | None = None


def parse_hyperplane(text):
    """``"h1,...,hN;a"`` -> ``(normal, offset)``."""
    try:
        coef, offset = text.split(";")
        return [float(v) for v in coef.split(",")], float(offset)
    except ValueError as exc:
        raise InputError(f"cannot parse hyperplane {text!r}; expected 'h1,...,hN;a'") from exc


def parse_alphas(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse alpha list {text!r}") from exc


def _select_features(header, features, reserved):
    if not features:
        return [h for h in header if h not in reserved]
    chosen = []
    for item in features:
        if ":" in item:
            lo, hi = item.split(":", 1)
            if lo not in header or hi not in header:
                raise InputError(f"unknown column in range {item!r}")
            i, j = header.index(lo), header.index(hi)
            if i > j:
                raise InputError(f"empty column range {item!r}")
            chosen.extend(header[i:j + 1])
        elif item in header:
            chosen.append(item)
        else:
            raise InputError(f"unknown feature column {item!r}")
    return chosen


def ingest(path, spec):
    """Read the CSV named by ``path`` into a :class:`Dataset`."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise InputError(f"{path}: missing header row")
        header = [h.strip() for h in header]
        reserved = {c for c in (spec.labels, spec.discriminant_col) if c}
        for col in reserved:
            if col not in header:
                raise InputError(f"{path}: no column named {col!r}")
        names = _select_features(header, spec.features, reserved)
        if not names:
            raise InputError(f"{path}: no feature columns selected")
        numeric = names + ([spec.discriminant_col] if spec.discriminant_col else [])
        idx = [header.index(c) for c in numeric]
        label_idx = header.index(spec.labels) if spec.labels else None
        rows, labels, errors = [], [], []
        for record in reader:
            if not record or all(not c.strip() for c in record):
                continue
            line = reader.line_num
            if len(record) != len(header):
                errors.append(f"line {line}: expected {len(header)} fields, got {len(record)}")
                continue
            values = []
            for name, j in zip(numeric, idx):
                cell = record[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    errors.append(f"line {line}, column {name!r}: not a number: {cell!r}")
                    continue
                if not math.isfinite(v):
                    errors.append(f"line {line}, column {name!r}: non-finite value {cell!r}")
                values.append(v)
            rows.append(values)
            if label_idx is not None:
                labels.append(record[label_idx].strip())
    if errors:
        shown = "\n  ".join(errors[:20])
        more = f"\n  ... and {len(errors) - 20} more" if len(errors) > 20 else ""
        raise InputError(f"{path}: rejected rows\n  {shown}{more}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=np.float64)
    y = np.unique(np.array(labels), return_inverse=True)[1] if label_idx is not None else None
    if spec.discriminant_col:
        X, hp = embed_discriminant(data[:, -1], spec.threshold, data[:, :-1])
        return Dataset(X, hp, [spec.discriminant_col] + names, y)
    normal, offset = spec.hyperplane
    if len(normal) != len(names):
        raise InputError(f"hyperplane has {len(normal)} coefficients but {len(names)} "
                         "feature columns are selected")
    return Dataset(data, Hyperplane(normal, offset), names, y)


def result_records(result, X, labels=None):
    """JSON-ready records of one result document."""
    report = evaluate(result, X, labels)
    sizes = np.bincount(result.labels, minlength=result.n_clusters)
    head = {
        "schema": SCHEMA, "record": "run", "method": result.method, "alpha": result.alpha,
        "cost": result.cost, "bic": report.bic, "log_likelihood": report.log_likelihood,
        "free_params": report.free_params, "nmi": report.nmi,
        "max_leakage": report.max_leakage, "final_k": report.final_k,
        "n_rows": int(X.shape[0]), "n_features": int(X.shape[1]),
        "seed": result.seed, "restart": result.restart,
        "hyperplane": result.hyperplane.to_dict(), "transform": result.transform.to_dict(),
        "covariance_ridge": "1e-9 * trace / dim added to every boundary-parallel covariance",
        "details": result.details,
    }
    out = [head]
    for i, (m, leak) in enumerate(zip(result.models, report.per_cluster_leakage)):
        out.append({"record": "cluster", "index": i, "size": int(sizes[i]),
                    "leakage": leak, **m.to_dict()})
    out.append({"record": "trace", **(result.trace.to_dict() if result.trace else {})})
    out.append({"record": "assignments", "labels": result.labels.tolist()})
    return out, report


def write_records(path, records):
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, allow_nan=False) + "\n")


def read_result(path):
    """Parse a result document back into a :class:`ClusteringResult` and its run record."""
    records = [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()]
    head = records[0]
    if head.get("schema") != SCHEMA:
        raise InputError(f"{path}: unsupported schema {head.get('schema')!r}")
    clusters = [r for r in records if r["record"] == "cluster"]
    trace = next(r for r in records if r["record"] == "trace")
    labels = next(r for r in records if r["record"] == "assignments")["labels"]
    doc = {
        "method": head["method"], "alpha": head["alpha"], "cost": head["cost"],
        "restart": head["restart"], "seed": head["seed"], "hyperplane": head["hyperplane"],
        "transform": head["transform"], "labels": labels, "details": head["details"],
        "models": [{k: c[k] for k in ("g1", "rest_mean", "rest_cov", "prior", "ridge")}
                   for c in clusters],
        "trace": {k: v for k, v in trace.items() if k != "record"} or None,
    }
    return ClusteringResult.from_dict(doc), head


def recompute_cost(result, X):
    """Clustering cost of the stored assignments under the stored models."""
    Xc = result.canonical(X)
    n = Xc.shape[0]
    total = 0.0
    for c, m in enumerate(result.models):
        rows = Xc[result.labels == c]
        if rows.shape[0]:
            p = rows.shape[0] / n
            total += p * (-math.log(p) + cluster_cost(ClusterStats.from_rows(rows), m))
    return total


def _fmt_alpha(a):
    return f"{a:g}"


def execute(spec):
    """Run every requested configuration and write the result files; returns an exit code."""
    data = ingest(spec.input, spec)
    spec.out.mkdir(parents=True, exist_ok=True)
    cfg = OptimizerConfig(k_init=spec.k, alpha=0.5, restarts=spec.restarts, seed=spec.seed,
                          max_sweeps=spec.max_sweeps, n_jobs=spec.n_jobs)
    jobs = [(f"c3l_alpha{_fmt_alpha(a)}", lambda a=a: run(data.X, data.hyperplane,
                                                          cfg.replace(alpha=a)))
            for a in sorted(spec.alphas)]
    if "cec" in spec.baselines:
        jobs.append(("cec", lambda: run_cec(data.X, data.hyperplane, cfg)))
    if "cec_h" in spec.baselines:
        jobs.append(("cec_h", lambda: run_cec_h(data.X, data.hyperplane, cfg)))
    summary = []
    for name, job in jobs:
        logger.info("running %s", name)
        result = job()
        records, report = result_records(result, data.X, data.labels)
        write_records(spec.out / f"result_{name}.jsonl", records)
        alpha = result.alpha if result.alpha is not None else empirical_leakage(result)[1]
        summary.append({"method": result.method, "alpha": alpha,
                        "max_leakage": report.max_leakage, "final_k": report.final_k,
                        "cost": result.cost, "bic": report.bic,
                        "nmi": "" if report.nmi is None else report.nmi})
    summary.sort(key=lambda r: (r["alpha"], r["method"]))
    with (spec.out / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in summary:
            writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="c3l", description="Gaussian clustering with controlled leakage across a boundary.")
    p.add_argument("--input", required=True, type=Path, help="CSV file with a header row")
    p.add_argument("--features", help="comma-separated column names or NAME:NAME ranges")
    p.add_argument("--hyperplane", help="boundary as 'h1,...,hN;a' (h.x = a)")
    p.add_argument("--discriminant-col", help="column holding a discriminant f(x)")
    p.add_argument("--threshold", type=float, help="boundary f(x) = threshold")
    p.add_argument("--alpha", default=",".join(map(str, DEFAULT_ALPHAS)),
                   help="comma-separated leakage levels (default: %(default)s)")
    p.add_argument("--k", type=int, default=10, help="initial number of clusters")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline", action="append", choices=BASELINES, default=[],
                   help="also run a baseline (repeatable)")
    p.add_argument("--labels", help="column with reference labels for NMI")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--max-sweeps", type=int, default=200)
    p.add_argument("--n-jobs", type=int, default=None, help="parallel restarts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def spec_from_args(args):
    features = [f.strip() for f in args.features.split(",")] if args.features else None
    return RunSpec(
        input=args.input, out=args.out, features=features,
        hyperplane=parse_hyperplane(args.hyperplane) if args.hyperplane else None,
        discriminant_col=args.discriminant_col, threshold=args.threshold,
        alphas=parse_alphas(args.alpha), k=args.k, restarts=args.restarts, seed=args.seed,
        baselines=list(dict.fromkeys(args.baseline)), labels=args.labels,
        max_sweeps=args.max_sweeps, n_jobs=args.n_jobs)


def _fail(code, exc):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return execute(spec_from_args(args))
    except OptimizationError as exc:
        return _fail(2, exc)
    except (InputError, C3LError) as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
