"""Run configuration, dataset ingestion, splits, evaluation metrics, and the
benchmark orchestrator behind the CLI."""

from dataclasses import dataclass, field

import csv
import json
import math
import os
import time

import numpy as np

from .errors import ConfigError, DataError
from .filtration import FILTRATION_KINDS, decile_boundaries
from .molgraph import SPLIT_TAGS, DatasetRecord, parse_smiles, load_graph_json
from .sglb import (
    TASK_CLASSIFICATION,
    TASK_REGRESSION,
    SglbConfig,
    decompose,
    ensemble_to_dict,
    fit_ensemble,
)
from .vectorize import (
    KIND_ABBREV,
    fingerprint_dataset,
    graph_from_record,
    slice_table,
    write_fingerprints_csv,
)
from .homology import geodesic_distances

_TASK_ALIASES = {
    "regression": TASK_REGRESSION,
    TASK_REGRESSION: TASK_REGRESSION,
    "classification": TASK_CLASSIFICATION,
    TASK_CLASSIFICATION: TASK_CLASSIFICATION,
}

K_GRID_CAP = 20


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    task: str
    dataset_format: str | None = None      # csv | jsonl; inferred when None
    kinds: tuple[str, ...] = FILTRATION_KINDS
    k_grid: int | None = None              # None: pre-scan max diameter, capped
    decile_mode: str = "per_molecule"      # or "global"
    distance_mode: str = "full_graph"      # or "induced_subgraph"
    split_mode: str = "random"             # or "file"
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_path: str | None = None
    sglb: SglbConfig = field(default_factory=SglbConfig)
    threads: int = 1
    seed: int = 0
    repeats: int = 3
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return {
            "dataset": {"path": self.dataset_path, "format": self.dataset_format},
            "task": self.task,
            "kinds": list(self.kinds),
            "k_grid": self.k_grid,
            "decile_mode": self.decile_mode,
            "distance_mode": self.distance_mode,
            "split": ({"mode": "file", "path": self.split_path}
                      if self.split_mode == "file"
                      else {"mode": "random", "ratios": list(self.split_ratios)}),
            "sglb": self.sglb.to_dict(),
            "threads": self.threads,
            "seed": self.seed,
            "repeats": self.repeats,
            "out_dir": self.out_dir,
        }


_CONFIG_KEYS = {"dataset", "task", "kinds", "k_grid", "decile_mode",
                "distance_mode", "split", "sglb", "threads", "seed",
                "repeats", "out_dir"}


def run_config_from_dict(doc: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")

    dataset = doc.get("dataset")
    if isinstance(dataset, str):
        dataset = {"path": dataset}
    if not isinstance(dataset, dict) or "path" not in dataset:
        raise ConfigError("config needs dataset.path")
    dataset_path = os.path.join(base_dir, dataset["path"])
    if not os.path.exists(dataset_path):
        raise ConfigError(f"dataset file not found: {dataset_path}")

    task = _TASK_ALIASES.get(doc.get("task"))
    if task is None:
        raise ConfigError(f"task must be regression or classification, got {doc.get('task')!r}")

    kinds = doc.get("kinds")
    if kinds is None:
        kinds = list(FILTRATION_KINDS)
    bad = [k for k in kinds if k not in FILTRATION_KINDS]
    if bad:
        raise ConfigError(f"unknown filtration kinds {bad}")
    kinds = tuple(k for k in FILTRATION_KINDS if k in set(kinds))
    if not kinds:
        raise ConfigError("at least one filtration kind is required")

    k_grid = doc.get("k_grid")
    if k_grid is not None and (not isinstance(k_grid, int) or k_grid < 1):
        raise ConfigError("k_grid must be a positive integer or null")

    decile_mode = doc.get("decile_mode", "per_molecule")
    if decile_mode not in ("per_molecule", "global"):
        raise ConfigError(f"invalid decile_mode {decile_mode!r}")
    distance_mode = doc.get("distance_mode", "full_graph")
    if distance_mode not in ("full_graph", "induced_subgraph"):
        raise ConfigError(f"invalid distance_mode {distance_mode!r}")

    split = doc.get("split", {"mode": "random"})
    split_mode = split.get("mode", "random")
    split_path = None
    ratios = (0.8, 0.1, 0.1)
    if split_mode == "file":
        split_path = split.get("path")
        if split_path is None:
            raise ConfigError("file split needs split.path")
        split_path = os.path.join(base_dir, split_path)
        if not os.path.exists(split_path):
            raise ConfigError(f"split file not found: {split_path}")
    elif split_mode == "random":
        ratios = tuple(split.get("ratios", (0.8, 0.1, 0.1)))
        if len(ratios) != 3 or any(r < 0 for r in ratios):
            raise ConfigError("split.ratios must be three non-negative numbers")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError("split.ratios must sum to 1")
    else:
        raise ConfigError(f"invalid split mode {split_mode!r}")

    seed = int(doc.get("seed", 0))
    sglb_doc = dict(doc.get("sglb", {}))
    sglb_doc.setdefault("task", task)
    sglb_doc.setdefault("seed", seed)
    if sglb_doc.get("beta") == "inf":
        sglb_doc["beta"] = math.inf
    try:
        sglb = SglbConfig(**sglb_doc)
    except TypeError as exc:
        raise ConfigError(f"invalid sglb config: {exc}") from None
    if sglb.task != task:
        raise ConfigError("sglb.task must match the run task")

    threads = int(doc.get("threads", 1))
    repeats = int(doc.get("repeats", 3))
    if threads < 1 or repeats < 1:
        raise ConfigError("threads and repeats must be >= 1")

    return RunConfig(dataset_path=dataset_path, task=task,
                     dataset_format=dataset.get("format"), kinds=kinds,
                     k_grid=k_grid, decile_mode=decile_mode,
                     distance_mode=distance_mode, split_mode=split_mode,
                     split_ratios=ratios, split_path=split_path, sglb=sglb,
                     threads=threads, seed=seed, repeats=repeats,
                     out_dir=os.path.join(base_dir, doc.get("out_dir", "out")))


def load_run_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return run_config_from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# Dataset ingestion

def load_dataset(path, dataset_format: str | None = None):
    """Records plus an error report of malformed rows (logged, skipped)."""
    if dataset_format is None:
        ext = os.path.splitext(str(path))[1].lower()
        dataset_format = {".csv": "csv", ".jsonl": "jsonl", ".ndjson": "jsonl"}.get(ext)
        if dataset_format is None:
            raise ConfigError(f"cannot infer dataset format from {path!r}")
    if dataset_format == "csv":
        records, errors = _load_csv(path)
    elif dataset_format == "jsonl":
        records, errors = _load_jsonl(path)
    else:
        raise ConfigError(f"unknown dataset format {dataset_format!r}")
    if not records:
        raise DataError(f"{path}: no usable records"
                        + (f" ({len(errors)} rows failed)" if errors else ""))
    ids = [r.record_id for r in records]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate record ids")
    return records, errors


def _load_csv(path):
    records, errors = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: missing CSV header")
        fields = {name.strip().lower(): name for name in reader.fieldnames}
        smiles_col = fields.get("smiles")
        target_col = fields.get("target")
        id_col = fields.get("id") or fields.get("record_id")
        if smiles_col is None or target_col is None:
            raise DataError(f"{path}: CSV needs smiles and target columns")
        for i, row in enumerate(reader):
            record_id = (row.get(id_col) or f"row{i}") if id_col else f"row{i}"
            try:
                smiles = (row.get(smiles_col) or "").strip()
                target = float(row[target_col])
                parse_smiles(smiles)  # reject unparsable rows up front
                records.append(DatasetRecord(record_id, target, smiles=smiles))
            except Exception as exc:
                errors.append({"record_id": record_id, "error": str(exc)})
    return records, errors


def _load_jsonl(path):
    records, errors = [], []
    base_dir = os.path.dirname(os.path.abspath(str(path)))
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if not line.strip():
                continue
            record_id = f"row{i}"
            try:
                doc = json.loads(line)
                record_id = str(doc.get("record_id", record_id))
                target = doc.get("target")
                if target is None:
                    raise DataError("missing target")
                target = float(target)
                split = doc.get("split")
                kwargs = {}
                if "graph" in doc:
                    load_graph_json(doc["graph"])  # validate up front
                    kwargs["graph"] = doc["graph"]
                elif "graph_path" in doc:
                    graph_path = os.path.join(base_dir, doc["graph_path"])
                    load_graph_json(graph_path)
                    kwargs["graph_path"] = graph_path
                elif "smiles" in doc:
                    parse_smiles(doc["smiles"])
                    kwargs["smiles"] = doc["smiles"]
                else:
                    raise DataError("record needs graph, graph_path, or smiles")
                records.append(DatasetRecord(record_id, target, split=split, **kwargs))
            except Exception as exc:
                errors.append({"record_id": record_id, "error": str(exc)})
    return records, errors


def apply_split(records, split_mode: str = "random", split_path=None,
                ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Tag every record with exactly one of TRAIN/VALID/TEST."""
    records = list(records)
    if split_mode == "file":
        assignment = {}
        with open(split_path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            fields = {name.strip().lower(): name for name in (reader.fieldnames or [])}
            id_col, split_col = fields.get("record_id"), fields.get("split")
            if id_col is None or split_col is None:
                raise DataError(f"{split_path}: split CSV needs record_id and split columns")
            for row in reader:
                tag = row[split_col].strip().upper()
                if tag not in SPLIT_TAGS:
                    raise DataError(f"{split_path}: invalid split tag {tag!r}")
                assignment[row[id_col]] = tag
        missing = [r.record_id for r in records if r.record_id not in assignment]
        if missing:
            shown = ", ".join(missing[:20])
            more = "" if len(missing) <= 20 else f" (+{len(missing) - 20} more)"
            raise DataError(f"split file does not cover record ids: {shown}{more}")
        return [DatasetRecord(r.record_id, r.target, r.smiles, r.graph,
                              r.graph_path, assignment[r.record_id])
                for r in records]

    if split_mode != "random":
        raise ConfigError(f"invalid split mode {split_mode!r}")
    n = len(records)
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(n * ratios[0])
    n_valid = int(n * ratios[1])
    tags = [""] * n
    for pos, rec_idx in enumerate(order):
        if pos < n_train:
            tags[rec_idx] = "TRAIN"
        elif pos < n_train + n_valid:
            tags[rec_idx] = "VALID"
        else:
            tags[rec_idx] = "TEST"
    return [DatasetRecord(r.record_id, r.target, r.smiles, r.graph,
                          r.graph_path, tags[i])
            for i, r in enumerate(records)]


# ---------------------------------------------------------------------------
# Evaluation metrics

def rmse(predictions, labels) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    return float(np.sqrt(np.mean((predictions - labels) ** 2)))


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    if not np.isin(np.unique(labels), (0.0, 1.0)).all():
        raise DataError("classification labels must be 0/1")
    if np.unique(labels).size < 2:
        raise DataError("AUC is undefined for a single-class label vector")
    return labels


def roc_auc(scores, labels) -> float:
    """Trapezoidal area under TPR vs FPR over all distinct score thresholds."""
    labels = _check_binary(labels)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    # indices closing each distinct-score group
    boundary = np.nonzero(np.diff(s))[0]
    ends = np.concatenate([boundary, [len(s) - 1]])
    cum_tp = np.cumsum(l)[ends]
    cum_fp = np.cumsum(1.0 - l)[ends]
    tpr = np.concatenate([[0.0], cum_tp / cum_tp[-1]])
    fpr = np.concatenate([[0.0], cum_fp / cum_fp[-1]])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def _pr_points(scores, labels):
    """(recall, precision) for q over the distinct scores and q = 0.

    Counts use the strict rule: a sample is called positive at q when its
    score exceeds q.  Undefined-precision points (no positives called) are
    skipped.  Computed from cumulative counts over the descending score
    order; the test oracle recounts every threshold naively.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    total_pos = labels.sum()
    order = np.argsort(-scores, kind="stable")
    s, l = scores[order], labels[order]
    ends = np.concatenate([np.nonzero(np.diff(s))[0], [len(s) - 1]])
    values = s[ends]  # distinct scores, descending
    cum_tp = np.cumsum(l)[ends]
    cum_called = (ends + 1).astype(np.float64)

    # at q = values[k] the strictly-greater samples are groups 0..k-1
    tp_gt = np.concatenate([[0.0], cum_tp[:-1]])
    called_gt = np.concatenate([[0.0], cum_called[:-1]])
    qs = values
    if not (values == 0.0).any():
        above_zero = values > 0.0
        qs = np.concatenate([values, [0.0]])
        tp_gt = np.concatenate([tp_gt, [cum_tp[above_zero][-1] if above_zero.any() else 0.0]])
        called_gt = np.concatenate(
            [called_gt, [cum_called[above_zero][-1] if above_zero.any() else 0.0]])

    keep = called_gt > 0
    recalls = tp_gt[keep] / total_pos
    precisions = tp_gt[keep] / called_gt[keep]
    return list(zip(recalls.tolist(), precisions.tolist()))


def prc_auc(scores, labels) -> float:
    """Step-rule area under precision vs recall from the threshold sweep."""
    labels = _check_binary(labels)
    area = 0.0
    prev_recall = 0.0
    for recall, precision in _pr_points(scores, labels):
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def f1_score(scores, labels, threshold: float = 0.5) -> float:
    labels = np.asarray(labels, dtype=np.float64)
    called = np.asarray(scores, dtype=np.float64) > threshold
    tp = float(labels[called].sum())
    fp = float(called.sum() - tp)
    fn = float(labels.sum() - tp)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(predictions, labels, task: str) -> dict:
    """Metric dict for aligned prediction/label vectors."""
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise DataError("predictions and labels must align")
    task = _TASK_ALIASES.get(task, task)
    if task == TASK_REGRESSION:
        return {"rmse": rmse(predictions, labels)}
    if task == TASK_CLASSIFICATION:
        return {"roc_auc": roc_auc(predictions, labels),
                "prc_auc": prc_auc(predictions, labels),
                "f1": f1_score(predictions, labels)}
    raise ConfigError(f"unknown task {task!r}")


@dataclass(frozen=True)
class EvaluationReport:
    task: str
    metrics: dict          # split -> metric -> {"mean", "std", "values"}
    predictions: list      # per-sample rows (repeat 0)
    timing: dict           # stage -> seconds (not part of report.json determinism)


# ---------------------------------------------------------------------------
# Benchmark orchestration

def _prescan(records):
    """Graph diameters and the pooled charge multiset (failures deferred)."""
    diameters = []
    charges = []
    for record in records:
        try:
            graph = graph_from_record(record)
        except Exception:
            continue  # the fingerprint stage reports per-record failures
        diameters.append(geodesic_distances(graph).diameter)
        charges.extend(a.partial_charge for a in graph.atoms
                       if a.partial_charge is not None)
    return diameters, charges


def _metric_summary(values_by_metric):
    out = {}
    for metric, values in values_by_metric.items():
        arr = np.asarray(values, dtype=np.float64)
        out[metric] = {"mean": float(arr.mean()),
                       "std": float(arr.std()),
                       "values": [float(v) for v in values]}
    return out


def _ensemble_label(kinds, full_kinds) -> str:
    if tuple(kinds) == tuple(full_kinds):
        return "ALL"
    return "+".join(KIND_ABBREV[k] for k in kinds)


def run_benchmark(cfg: RunConfig, ablation: bool = False, plots: bool = False) -> EvaluationReport:
    """Fingerprint, train, evaluate; write all artifacts under cfg.out_dir."""
    timing = {}
    t_start = time.perf_counter()

    records, load_errors = load_dataset(cfg.dataset_path, cfg.dataset_format)
    if cfg.split_mode == "file" or not all(r.split for r in records):
        records = apply_split(records, cfg.split_mode, cfg.split_path,
                              cfg.split_ratios, cfg.seed)

    k_grid = cfg.k_grid
    charge_thresholds = None
    if k_grid is None or cfg.decile_mode == "global":
        diameters, charges = _prescan(records)
        if k_grid is None:
            if not diameters:
                raise DataError("no graphs available to choose k_grid from")
            k_grid = min(K_GRID_CAP, max(max(diameters), 1))
        if cfg.decile_mode == "global":
            if not charges:
                raise DataError("global decile mode needs partial charges")
            charge_thresholds = decile_boundaries(charges)

    t0 = time.perf_counter()
    table = fingerprint_dataset(records, cfg.kinds, k_grid, threads=cfg.threads,
                                distance_mode=cfg.distance_mode,
                                charge_thresholds=charge_thresholds)
    timing["fingerprint_seconds"] = time.perf_counter() - t0

    by_id = {r.record_id: r for r in records}
    split_rows: dict[str, list[int]] = {tag: [] for tag in SPLIT_TAGS}
    for row, fp in enumerate(table.fingerprints):
        split_rows[by_id[fp.record_id].split].append(row)
    if not split_rows["TRAIN"] or not split_rows["TEST"]:
        raise DataError("TRAIN and TEST splits must both be non-empty after "
                        "fingerprinting")

    matrix = table.matrix().astype(np.float64)
    targets = np.array([by_id[fp.record_id].target for fp in table.fingerprints],
                       dtype=np.float64)

    if ablation:
        subsets = [(k,) for k in cfg.kinds]
        if len(cfg.kinds) > 1:
            subsets.append(tuple(cfg.kinds))
    else:
        subsets = [tuple(cfg.kinds)]

    os.makedirs(cfg.out_dir, exist_ok=True)
    runs = {}
    first_predictions = []
    timing["train_seconds"] = {}
    timing["predict_seconds"] = {}
    main_label = _ensemble_label(cfg.kinds, cfg.kinds)

    for kinds in subsets:
        label = _ensemble_label(kinds, cfg.kinds)
        sub = slice_table(table, kinds)
        sub_matrix = (matrix if kinds == tuple(cfg.kinds)
                      else sub.matrix().astype(np.float64))
        train_rows = split_rows["TRAIN"]
        X_train = sub_matrix[train_rows]
        y_train = targets[train_rows]
        per_split_values: dict[str, dict[str, list[float]]] = {}
        train_times, predict_times = [], []

        for repeat in range(cfg.repeats):
            seed_r = cfg.seed + 7919 * repeat
            config_r = SglbConfig(**{**cfg.sglb.to_dict(), "seed": seed_r,
                                     "beta": cfg.sglb.beta})
            t0 = time.perf_counter()
            ensemble = fit_ensemble(X_train, y_train, config_r,
                                    layout=sub.layout, threads=cfg.threads)
            train_times.append(time.perf_counter() - t0)

            t0 = time.perf_counter()
            for tag in SPLIT_TAGS:
                rows = split_rows[tag]
                if not rows:
                    continue
                report = decompose(ensemble, sub_matrix[rows])
                metrics = evaluate(report.prediction, targets[rows], cfg.task)
                if cfg.task == TASK_REGRESSION:
                    const = float(np.mean(y_train))
                    metrics["constant_mean_rmse"] = rmse(
                        np.full(len(rows), const), targets[rows])
                bucket = per_split_values.setdefault(tag, {})
                for name, value in metrics.items():
                    bucket.setdefault(name, []).append(value)
                if repeat == 0 and label == main_label:
                    for j, row in enumerate(rows):
                        fp = table.fingerprints[row]
                        first_predictions.append({
                            "record_id": fp.record_id, "split": tag,
                            "target": float(targets[row]),
                            "prediction": float(report.prediction[j]),
                            "total_uncertainty": float(report.total[j]),
                            "knowledge_uncertainty": float(report.knowledge[j]),
                            "data_uncertainty": float(report.data[j]),
                        })
            predict_times.append(time.perf_counter() - t0)

            if repeat == 0 and label == main_label:
                with open(os.path.join(cfg.out_dir, "model.json"), "w",
                          encoding="utf-8") as fh:
                    json.dump(ensemble_to_dict(ensemble), fh, sort_keys=True)
                    fh.write("\n")

        runs[label] = {"kinds": list(kinds),
                       "metrics": {tag: _metric_summary(vals)
                                   for tag, vals in sorted(per_split_values.items())}}
        timing["train_seconds"][label] = train_times
        timing["predict_seconds"][label] = predict_times

    write_fingerprints_csv(table, os.path.join(cfg.out_dir, "fingerprints.csv"))
    _write_json(os.path.join(cfg.out_dir, "errors.json"),
                {"load_errors": list(load_errors), "fingerprint_errors": list(table.errors)})

    first_predictions.sort(key=lambda row: row["record_id"])
    _write_predictions_csv(os.path.join(cfg.out_dir, "predictions.csv"),
                           first_predictions)

    report = {
        "format_version": "1",
        "config": cfg.to_dict(),
        "k_grid": k_grid,
        "dataset": {
            "records": len(records),
            "fingerprinted": len(table.fingerprints),
            "load_errors": len(load_errors),
            "fingerprint_errors": len(table.errors),
            "split_sizes": {tag: len(rows) for tag, rows in split_rows.items()},
        },
        "ablation": ablation,
        "runs": runs,
    }
    _write_json(os.path.join(cfg.out_dir, "report.json"), report)

    timing["total_seconds"] = time.perf_counter() - t_start
    _write_json(os.path.join(cfg.out_dir, "timing.json"), timing)

    if plots:
        _write_plots(cfg, first_predictions)

    return EvaluationReport(cfg.task, runs, first_predictions, timing)


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_predictions_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "split", "target", "prediction",
                         "total_uncertainty", "knowledge_uncertainty",
                         "data_uncertainty"])
        for row in rows:
            writer.writerow([row["record_id"], row["split"],
                             f"{row['target']:.10g}", f"{row['prediction']:.10g}",
                             f"{row['total_uncertainty']:.10g}",
                             f"{row['knowledge_uncertainty']:.10g}",
                             f"{row['data_uncertainty']:.10g}"])


# ---------------------------------------------------------------------------
# Static SVG plots (prediction vs uncertainty bands)

def _write_plots(cfg: RunConfig, predictions):
    rows = [r for r in predictions if r["split"] == "TEST"]
    if not rows:
        return
    rows = sorted(rows, key=lambda r: (r["prediction"], r["record_id"]))
    xs = list(range(len(rows)))
    mean = [r["prediction"] for r in rows]
    if cfg.task == TASK_REGRESSION:
        half = [math.sqrt(max(r["total_uncertainty"], 0.0)) for r in rows]
    else:
        half = [r["total_uncertainty"] for r in rows]
    lo = [m - h for m, h in zip(mean, half)]
    hi = [m + h for m, h in zip(mean, half)]
    targets = [r["target"] for r in rows]
    path = os.path.join(cfg.out_dir, "uncertainty_band.svg")
    _svg_band(path, xs, mean, lo, hi, targets,
              title=f"{cfg.task}: prediction with total-uncertainty band")


def _svg_band(path, xs, mean, lo, hi, targets, title, width=720, height=420):
    pad = 48
    x_min, x_max = min(xs), max(xs)
    y_min = min(min(lo), min(targets))
    y_max = max(max(hi), max(targets))
    if y_max == y_min:
        y_max = y_min + 1.0
    if x_max == x_min:
        x_max = x_min + 1

    def sx(x):
        return pad + (x - x_min) / (x_max - x_min) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_min) / (y_max - y_min) * (height - 2 * pad)

    band = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, hi))
    band += " " + " ".join(f"{sx(x):.2f},{sy(y):.2f}"
                           for x, y in zip(reversed(xs), reversed(lo)))
    line = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, mean))
    dots = "".join(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.6" '
                   f'fill="#444455" fill-opacity="0.55"/>'
                   for x, y in zip(xs, targets))
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'<polygon points="{band}" fill="#7aa6d8" fill-opacity="0.35"/>'
        f'<polyline points="{line}" fill="none" stroke="#c03a3a" stroke-width="1.6"/>'
        f"{dots}"
        f'<text x="{pad}" y="24" font-family="monospace" font-size="13">{title}</text>'
        f"</svg>\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
