import json

import numpy as np
import pytest

from moltop.datagen import generate_dataset, random_molecule


@pytest.fixture(scope="session")
def bench_records():
    """The full 1128-record benchmark dataset (generated once per session)."""
    return generate_dataset(1128, seed=7)


@pytest.fixture(scope="session")
def bench_dataset_path(tmp_path_factory, bench_records):
    path = tmp_path_factory.mktemp("bench") / "bench.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for record in bench_records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


@pytest.fixture(scope="session")
def small_records():
    return generate_dataset(140, seed=11)


@pytest.fixture(scope="session")
def tiny_dataset_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny") / "tiny.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for record in generate_dataset(40, seed=13):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


@pytest.fixture(scope="session")
def small_dataset_path(tmp_path_factory, small_records):
    path = tmp_path_factory.mktemp("small") / "small.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for record in small_records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return path


@pytest.fixture(scope="session")
def random_graphs():
    """Structurally diverse prepared molecules for property checks."""
    rng = np.random.default_rng(31)
    return [random_molecule(rng, f"rg{i}") for i in range(40)]
