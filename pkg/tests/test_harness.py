import csv
import json
import os

import numpy as np
import pytest

from moltop.errors import ConfigError, DataError
from moltop.harness import (
    apply_split,
    evaluate,
    f1_score,
    load_dataset,
    load_run_config,
    prc_auc,
    rmse,
    roc_auc,
    run_benchmark,
    run_config_from_dict,
)
from moltop.molgraph import DatasetRecord

from oracles import naive_f1, naive_prc_auc, naive_roc_auc


def write_csv_dataset(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "smiles", "target"])
        writer.writerows(rows)


class TestLoadDataset:
    def test_csv_counts_and_errors(self, tmp_path):
        path = tmp_path / "data.csv"
        write_csv_dataset(path, [
            ["a", "CCO", "1.5"],
            ["b", "C1CC1", "-0.25"],
            ["c", "C1CC", "0.0"],        # unmatched ring closure
            ["d", "CCN", "not-a-number"],
            ["e", "c1ccccc1", "2.0"],
        ])
        records, errors = load_dataset(path)
        assert [r.record_id for r in records] == ["a", "b", "e"]
        assert {e["record_id"] for e in errors} == {"c", "d"}

    def test_jsonl_with_inline_graphs(self, small_dataset_path, small_records):
        records, errors = load_dataset(small_dataset_path)
        assert len(records) == len(small_records)
        assert errors == []
        assert records[0].graph is not None

    def test_jsonl_graph_path_reference(self, tmp_path):
        mol = {"name": "h2", "atoms": [{"element": "H"}, {"element": "H"}],
               "bonds": [{"a": 0, "b": 1, "order": "SINGLE"}]}
        (tmp_path / "h2.json").write_text(json.dumps(mol))
        data = tmp_path / "d.jsonl"
        data.write_text(json.dumps({"record_id": "x", "target": 1.0,
                                    "graph_path": "h2.json"}) + "\n")
        records, errors = load_dataset(data)
        assert errors == []
        assert records[0].graph_path.endswith("h2.json")

    def test_empty_after_skips_raises(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_csv_dataset(path, [["a", "C1CC", "1.0"]])
        with pytest.raises(DataError):
            load_dataset(path)

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "data.parquet"
        path.write_text("")
        with pytest.raises(ConfigError):
            load_dataset(path)


class TestApplySplit:
    def make_records(self, n):
        return [DatasetRecord(f"r{i}", float(i), smiles="C") for i in range(n)]

    def test_split_file_exact(self, tmp_path):
        records = self.make_records(4)
        split = tmp_path / "split.csv"
        split.write_text("record_id,split\nr0,TRAIN\nr1,TRAIN\nr2,VALID\nr3,TEST\n")
        tagged = apply_split(records, "file", split)
        assert [r.split for r in tagged] == ["TRAIN", "TRAIN", "VALID", "TEST"]

    def test_uncovered_ids_listed(self, tmp_path):
        records = self.make_records(3)
        split = tmp_path / "split.csv"
        split.write_text("record_id,split\nr0,TRAIN\n")
        with pytest.raises(DataError) as err:
            apply_split(records, "file", split)
        assert "r1" in str(err.value) and "r2" in str(err.value)

    def test_random_sizes_80_10_10(self):
        tagged = apply_split(self.make_records(100), "random", seed=0)
        counts = {tag: sum(1 for r in tagged if r.split == tag)
                  for tag in ("TRAIN", "VALID", "TEST")}
        assert counts == {"TRAIN": 80, "VALID": 10, "TEST": 10}

    def test_random_deterministic(self):
        records = self.make_records(57)
        a = apply_split(records, "random", seed=11)
        b = apply_split(records, "random", seed=11)
        assert [r.split for r in a] == [r.split for r in b]
        c = apply_split(records, "random", seed=12)
        assert [r.split for r in a] != [r.split for r in c]


class TestMetrics:
    def test_perfect_ranking_roc(self):
        assert roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_f1_harmonic_mean(self):
        # precision 0.5, recall 1.0 -> F1 = 2/3
        scores = [0.9, 0.9, 0.9, 0.9]
        labels = [1, 1, 0, 0]
        assert f1_score(scores, labels) == pytest.approx(2.0 / 3.0)

    def test_prc_toy_matches_naive_sweep(self):
        scores = [0.9, 0.7, 0.7, 0.4, 0.2, 0.1]
        labels = [1, 0, 1, 1, 0, 0]
        assert prc_auc(scores, labels) == pytest.approx(
            naive_prc_auc(scores, labels), abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            roc_auc([0.5, 0.6], [1, 1])
        with pytest.raises(DataError):
            evaluate([0.5, 0.6], [0, 0], "classification")

    def test_rmse(self):
        assert rmse([1.0, 2.0], [1.0, 4.0]) == pytest.approx(np.sqrt(2.0))

    def test_metric_oracle_equivalence_random_sets(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            n = int(rng.integers(3, 13))
            labels = rng.integers(0, 2, n).astype(float)
            if labels.min() == labels.max():
                labels[0] = 1.0 - labels[0]
            scores = rng.choice([0.1, 0.25, 0.5, 0.5, 0.8, 0.9], n)
            assert roc_auc(scores, labels) == pytest.approx(
                naive_roc_auc(scores, labels), abs=1e-12)
            assert prc_auc(scores, labels) == pytest.approx(
                naive_prc_auc(scores, labels), abs=1e-12)
            assert f1_score(scores, labels) == pytest.approx(
                naive_f1(scores, labels), abs=1e-12)

    def test_evaluate_dispatch(self):
        out = evaluate([1.0, 2.0], [1.5, 2.5], "regression")
        assert set(out) == {"rmse"}
        out = evaluate([0.9, 0.1], [1, 0], "classification")
        assert set(out) == {"roc_auc", "prc_auc", "f1"}


class TestRunConfig:
    def base_doc(self, dataset):
        return {"dataset": {"path": str(dataset)}, "task": "regression"}

    def test_minimal_config(self, small_dataset_path):
        cfg = run_config_from_dict(self.base_doc(small_dataset_path))
        assert cfg.task == "REGRESSION_WITH_UNCERTAINTY"
        assert cfg.kinds == ("ATOMIC_MASS", "PARTIAL_CHARGE", "BOND_TYPE", "CHIRALITY")
        assert cfg.repeats == 3

    def test_unknown_keys_rejected(self, small_dataset_path):
        doc = self.base_doc(small_dataset_path)
        doc["dataste"] = "typo"
        with pytest.raises(ConfigError):
            run_config_from_dict(doc)

    def test_ratio_validation(self, small_dataset_path):
        doc = self.base_doc(small_dataset_path)
        doc["split"] = {"mode": "random", "ratios": [0.8, 0.1, 0.2]}
        with pytest.raises(ConfigError):
            run_config_from_dict(doc)

    def test_missing_dataset_file(self):
        with pytest.raises(ConfigError):
            run_config_from_dict({"dataset": {"path": "nope.jsonl"},
                                  "task": "regression"})

    def test_load_from_file_resolves_paths(self, tmp_path, small_dataset_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "dataset": {"path": str(small_dataset_path)},
            "task": "regression", "seed": 3}))
        cfg = load_run_config(cfg_path)
        assert cfg.seed == 3
        assert cfg.sglb.seed == 3


def bench_config(dataset_path, out_dir, **overrides):
    doc = {
        "dataset": {"path": str(dataset_path)},
        "task": "regression",
        "k_grid": 10,
        "threads": 1,
        "seed": 0,
        "repeats": 1,
        "out_dir": str(out_dir),
        "sglb": {"iterations": 30, "max_depth": 3, "ensemble_size": 2},
    }
    doc.update(overrides)
    return run_config_from_dict(doc)


class TestRunBenchmark:
    def test_artifacts_and_metrics(self, tiny_dataset_path, tmp_path):
        cfg = bench_config(tiny_dataset_path, tmp_path / "out")
        report = run_benchmark(cfg)
        for name in ("fingerprints.csv", "errors.json", "model.json",
                     "predictions.csv", "report.json", "timing.json"):
            assert os.path.exists(os.path.join(cfg.out_dir, name)), name
        assert "ALL" in report.metrics
        test_metrics = report.metrics["ALL"]["metrics"]["TEST"]
        assert "rmse" in test_metrics
        assert test_metrics["rmse"]["mean"] > 0

    def test_rerun_reproduces_report_byte_identically(self, tiny_dataset_path,
                                                      tmp_path):
        cfg_a = bench_config(tiny_dataset_path, tmp_path / "a")
        cfg_b = bench_config(tiny_dataset_path, tmp_path / "b")
        run_benchmark(cfg_a)
        run_benchmark(cfg_b)
        report_a = open(os.path.join(cfg_a.out_dir, "report.json"), "rb").read()
        report_b = open(os.path.join(cfg_b.out_dir, "report.json"), "rb").read()
        # out_dir is part of the config echo; normalize it before comparing
        report_a = report_a.replace(str(cfg_a.out_dir).encode(), b"OUT")
        report_b = report_b.replace(str(cfg_b.out_dir).encode(), b"OUT")
        assert report_a == report_b

    def test_ablation_produces_five_runs(self, tiny_dataset_path, tmp_path):
        cfg = bench_config(tiny_dataset_path, tmp_path / "out")
        report = run_benchmark(cfg, ablation=True)
        assert set(report.metrics) == {"AM", "PC", "BT", "CH", "ALL"}

    def test_crash_isolation(self, tiny_dataset_path, tmp_path):
        # append a record whose graph cannot be fingerprinted with charges
        data = tmp_path / "with_bad.jsonl"
        lines = open(tiny_dataset_path).read().splitlines()
        lines.append(json.dumps({"record_id": "nocharges", "target": 0.0,
                                 "smiles": "CCO"}))
        data.write_text("\n".join(lines) + "\n")
        cfg = bench_config(data, tmp_path / "out")
        run_benchmark(cfg)
        errors = json.load(open(os.path.join(cfg.out_dir, "errors.json")))
        assert [e["record_id"] for e in errors["fingerprint_errors"]] == ["nocharges"]

    def test_plots_emitted(self, tiny_dataset_path, tmp_path):
        cfg = bench_config(tiny_dataset_path, tmp_path / "out")
        run_benchmark(cfg, plots=True)
        svg = open(os.path.join(cfg.out_dir, "uncertainty_band.svg")).read()
        assert svg.startswith("<svg")

    def test_global_decile_mode_runs(self, tiny_dataset_path, tmp_path):
        cfg = bench_config(tiny_dataset_path, tmp_path / "out",
                           decile_mode="global")
        report = run_benchmark(cfg)
        assert report.metrics["ALL"]["metrics"]["TEST"]["rmse"]["mean"] > 0

    def test_induced_distance_mode_changes_fingerprints(self, tiny_dataset_path,
                                                        tmp_path):
        cfg_full = bench_config(tiny_dataset_path, tmp_path / "full")
        cfg_ind = bench_config(tiny_dataset_path, tmp_path / "ind",
                               distance_mode="induced_subgraph")
        run_benchmark(cfg_full)
        run_benchmark(cfg_ind)
        full = open(os.path.join(cfg_full.out_dir, "fingerprints.csv")).readlines()
        ind = open(os.path.join(cfg_ind.out_dir, "fingerprints.csv")).readlines()
        assert full[1] == ind[1]      # same layout header
        assert full[2:] != ind[2:]    # re-walked distances change some rows

    def test_bench_with_split_file(self, tiny_dataset_path, tmp_path):
        records, _ = load_dataset(tiny_dataset_path)
        split = tmp_path / "split.csv"
        with open(split, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["record_id", "split"])
            for i, r in enumerate(records):
                tag = "TRAIN" if i % 5 else ("TEST" if i % 10 else "VALID")
                writer.writerow([r.record_id, tag])
        cfg = bench_config(tiny_dataset_path, tmp_path / "out",
                           split={"mode": "file", "path": str(split)})
        report = run_benchmark(cfg)
        sizes = json.load(open(os.path.join(cfg.out_dir, "report.json")))
        assert sizes["dataset"]["split_sizes"]["TRAIN"] == 32
        assert "TEST" in report.metrics["ALL"]["metrics"]

    def test_classification_bench(self, small_records, tmp_path):
        targets = np.array([r["target"] for r in small_records])
        median = float(np.median(targets))
        data = tmp_path / "cls.jsonl"
        with open(data, "w", encoding="utf-8") as fh:
            for r in small_records:
                fh.write(json.dumps({"record_id": r["record_id"],
                                     "target": int(r["target"] > median),
                                     "graph": r["graph"]}) + "\n")
        cfg = bench_config(data, tmp_path / "out", task="classification",
                           sglb={"iterations": 40, "max_depth": 3,
                                 "ensemble_size": 3})
        report = run_benchmark(cfg)
        test_metrics = report.metrics["ALL"]["metrics"]["TEST"]
        assert set(test_metrics) == {"roc_auc", "prc_auc", "f1"}
        assert test_metrics["roc_auc"]["mean"] > 0.7
