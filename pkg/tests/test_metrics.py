import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from miscclust.metrics import evaluate_views, f1_pairs, nmi
import oracles

labelings = st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.lists(st.integers(0, 3), min_size=n, max_size=n),
                        st.lists(st.integers(0, 3), min_size=n, max_size=n))
)


class TestNmi:
    def test_identity(self):
        assert nmi([0, 1, 1, 2], [0, 1, 1, 2]) == 1.0

    def test_relabelled(self):
        assert nmi([0, 0, 1, 2], [2, 2, 0, 1]) == pytest.approx(1.0)

    def test_uniform_contingency(self):
        assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_single_cluster_conventions(self):
        assert nmi([0, 0, 0], [1, 1, 1]) == 1.0
        assert nmi([0, 0, 0], [0, 1, 0]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nmi([0, 1], [0, 1, 1])


class TestF1:
    def test_identity(self):
        assert f1_pairs([0, 0, 1, 2, 2], [0, 0, 1, 2, 2]) == 1.0

    def test_all_singletons(self):
        assert f1_pairs([0, 1, 2, 3], [0, 0, 1, 1]) == 0.0

    def test_hand_example(self):
        assert f1_pairs([0, 0, 1, 1], [0, 0, 0, 0]) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(labelings)
def test_metrics_match_oracles(pair):
    a, b = pair
    assert nmi(a, b) == pytest.approx(oracles.nmi(a, b), abs=1e-12)
    assert f1_pairs(a, b) == pytest.approx(oracles.f1_pairs(a, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(labelings, st.permutations(range(4)))
def test_symmetry_and_relabelling(pair, perm):
    a, b = pair
    assert nmi(a, b) == pytest.approx(nmi(b, a), abs=1e-12)
    assert f1_pairs(a, b) == pytest.approx(f1_pairs(b, a), abs=1e-12)
    relabelled = [perm[x] for x in a]
    assert nmi(relabelled, b) == pytest.approx(nmi(a, b), abs=1e-12)
    assert f1_pairs(relabelled, b) == pytest.approx(f1_pairs(a, b), abs=1e-12)


class TestViewReport:
    def test_identity_diagonal(self):
        v1, v2 = np.array([0, 0, 1, 1, 2, 2]), np.array([0, 1, 0, 1, 0, 1])
        report = evaluate_views([v1, v2], [("shape", v1), ("color", v2)])
        np.testing.assert_array_equal(report.diagonal_nmi(), [1.0, 1.0])
        np.testing.assert_array_equal(np.diag(report.f1), [1.0, 1.0])

    def test_matched_diagonal_reorders(self):
        v1, v2 = np.array([0, 0, 1, 1, 2, 2]), np.array([0, 1, 0, 1, 0, 1])
        report = evaluate_views([v2, v1], [("shape", v1), ("color", v2)])
        np.testing.assert_array_equal(report.matched_diagonal_nmi(), [1.0, 1.0])
        assert report.diagonal_nmi().max() < 0.5

    def test_single_cell(self):
        report = evaluate_views([np.array([0, 1, 1])], [np.array([0, 1, 1])])
        assert report.nmi.shape == (1, 1) and report.f1.shape == (1, 1)

    def test_json_and_text(self):
        report = evaluate_views([np.array([0, 1, 1, 0])], [("v", np.array([0, 1, 1, 1]))], ("c",))
        data = json.loads(report.to_json())
        assert data["clusterings"] == ["c"] and data["views"] == ["v"]
        assert "NMI" in report.to_text()
