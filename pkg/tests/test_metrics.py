import math

import numpy as np
import pytest

from moltop.datagen import assign_reference_charges
from moltop.errors import DataError, LayoutMismatchError
from moltop.filtration import FILTRATION_KINDS, make_spec
from moltop.homology import PersistenceDiagram
from moltop.metrics import (
    fingerprint_distance,
    induced_distance,
    matching_report,
    stability_probe,
    wasserstein,
)
from moltop.molgraph import mirror, parse_smiles
from moltop.vectorize import Fingerprint, FingerprintLayout, assemble, prepare_graph

from oracles import exhaustive_wasserstein

ALL_SPECS = [make_spec(k) for k in FILTRATION_KINDS]


def pd_of(pairs, essentials=(), dim=0, eps_max=10):
    return PersistenceDiagram(dim, tuple(sorted(pairs)), tuple(sorted(essentials)),
                              eps_max)


def random_diagram(rng, max_points=4, eps_max=10):
    points = []
    for _ in range(rng.integers(0, max_points + 1)):
        b = int(rng.integers(0, eps_max - 1))
        d = int(rng.integers(b + 1, eps_max + 1))
        points.append((b, d))
    return pd_of(points, eps_max=eps_max)


class TestWasserstein:
    def test_identical_diagrams_zero(self):
        pd = pd_of([(0, 2), (1, 3)])
        assert wasserstein(pd, pd, 1.0) == 0.0

    def test_single_point_to_diagonal(self):
        assert wasserstein(pd_of([(0, 2)]), pd_of([]), 1.0) == pytest.approx(1.0)

    def test_direct_match_beats_diagonal(self):
        assert wasserstein(pd_of([(0, 1)]), pd_of([(0, 2)]), 1.0) == pytest.approx(1.0)

    def test_against_exhaustive_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(120):
            a, b = random_diagram(rng), random_diagram(rng)
            p = float(rng.choice([1.0, 2.0]))
            expected = exhaustive_wasserstein(a.pairs, b.pairs, p)
            assert wasserstein(a, b, p) == pytest.approx(expected, abs=1e-12)

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(11)
        for _ in range(120):
            a, b, c = (random_diagram(rng) for _ in range(3))
            dab = wasserstein(a, b, 1.0)
            dba = wasserstein(b, a, 1.0)
            assert dab == dba
            assert dab <= wasserstein(a, c, 1.0) + wasserstein(c, b, 1.0) + 1e-9

    def test_essential_counts_must_match(self):
        a = pd_of([], essentials=[0, 0])
        b = pd_of([], essentials=[0])
        assert math.isinf(wasserstein(a, b, 1.0))

    def test_essentials_compared_by_birth(self):
        a = pd_of([], essentials=[0, 2], dim=1)
        b = pd_of([], essentials=[1, 5], dim=1)
        assert wasserstein(a, b, 1.0) == pytest.approx(4.0)  # |0-1| + |2-5|

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            wasserstein(pd_of([]), pd_of([]), 0.5)


class TestInducedDistance:
    def test_identical_rows_zero(self):
        rows = [pd_of([(0, 2)]), pd_of([(1, 4)])]
        assert induced_distance(rows, rows, 1.0) == 0.0

    def test_single_differing_row(self):
        rows_a = [pd_of([(0, 2)]), pd_of([])]
        rows_b = [pd_of([(0, 2)]), pd_of([(0, 2)])]
        w = wasserstein(pd_of([]), pd_of([(0, 2)]), 1.0)
        assert induced_distance(rows_a, rows_b, 1.0) == pytest.approx(w)

    def test_three_row_toy_matches_per_row_oracle(self):
        rng = np.random.default_rng(3)
        rows_a = [random_diagram(rng) for _ in range(3)]
        rows_b = [random_diagram(rng) for _ in range(3)]
        expected = sum(exhaustive_wasserstein(a.pairs, b.pairs, 1.0)
                       for a, b in zip(rows_a, rows_b))
        assert induced_distance(rows_a, rows_b, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_row_count_mismatch(self):
        with pytest.raises(DataError):
            induced_distance([pd_of([])], [pd_of([]), pd_of([])], 1.0)

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            rows_a = [random_diagram(rng) for _ in range(3)]
            rows_b = [random_diagram(rng) for _ in range(3)]
            d = induced_distance(rows_a, rows_b, 1.0)
            assert d >= 0
            assert d == induced_distance(rows_b, rows_a, 1.0)


class TestFingerprintDistance:
    def test_self_distance_zero(self):
        g = assign_reference_charges(prepare_graph(parse_smiles("CCO")))
        fp = assemble(g, ALL_SPECS, 8)
        assert fingerprint_distance(fp, fp) == 0.0

    def test_l1_arithmetic(self):
        layout = FingerprintLayout("1", ("CHIRALITY",), 3)
        vec_a = np.zeros(layout.length, dtype=np.int64)
        vec_a[4:8] = [0, 1, 1, 0]
        vec_b = np.zeros(layout.length, dtype=np.int64)
        a = Fingerprint("a", layout, vec_a)
        b = Fingerprint("b", layout, vec_b)
        assert fingerprint_distance(a, b) == 2.0

    def test_mirror_distance_in_chirality_rows(self):
        g = assign_reference_charges(prepare_graph(parse_smiles("N[C@@H](C)C(=O)O")))
        fp = assemble(g, ALL_SPECS, 10)
        fp_m = assemble(mirror(g), ALL_SPECS, 10)
        d = fingerprint_distance(fp, fp_m)
        assert d > 0
        blocks = fp.layout.block_slices()
        ch = sum(float(np.abs(fp.vector[blocks[("CHIRALITY", dim)]]
                              - fp_m.vector[blocks[("CHIRALITY", dim)]]).sum())
                 for dim in (0, 1))
        assert d == pytest.approx(ch)  # everything outside CH cancels

    def test_layout_mismatch(self):
        la = FingerprintLayout("1", ("CHIRALITY",), 3)
        lb = FingerprintLayout("1", ("CHIRALITY",), 4)
        a = Fingerprint("a", la, np.zeros(la.length, dtype=np.int64))
        b = Fingerprint("b", lb, np.zeros(lb.length, dtype=np.int64))
        with pytest.raises(LayoutMismatchError):
            fingerprint_distance(a, b)


class TestStabilityProbe:
    def test_identical_pair_skipped_ratio(self):
        g = assign_reference_charges(prepare_graph(parse_smiles("CCO")))
        reports, max_ratio = stability_probe([(g, g)], ALL_SPECS, 8)
        assert reports[0].induced == 0.0
        assert reports[0].vector_distance == 0.0
        assert reports[0].ratio is None
        assert max_ratio is None

    def test_single_perturbation_finite_ratio(self):
        g = assign_reference_charges(prepare_graph(parse_smiles("N[C@@H](C)C(=O)O")))
        report = matching_report(g, mirror(g), ALL_SPECS, 10)
        assert report.induced > 0
        assert report.vector_distance > 0
        assert report.ratio == pytest.approx(report.vector_distance / report.induced)
        assert len(report.per_row) == sum(s.levels for s in ALL_SPECS)

    def test_probe_reports_max_ratio(self, random_graphs):
        pairs = [(g, mirror(g)) for g in random_graphs[:6]]
        reports, max_ratio = stability_probe(pairs, ALL_SPECS, 10)
        ratios = [r.ratio for r in reports if r.ratio is not None]
        if ratios:
            assert max_ratio == max(ratios)
        else:
            assert max_ratio is None
