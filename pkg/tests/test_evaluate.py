"""Similarity metrics, edge extraction, and ROC summaries."""

import numpy as np
import pytest

from invglasso.errors import DomainError
from invglasso.evaluate import (
    EdgeSet,
    adjacency_matrix,
    aggregate_records,
    auc_trapezoid,
    average_roc,
    edges_from_precision,
    hamming,
    jaccard,
    nms,
    roc_point,
    roc_points,
    similarity_records,
)
from invglasso.glasso import PrecisionEstimate, RegularizationPath


def _edges(n, *pairs):
    return EdgeSet(node_count=n, edges=frozenset(pairs))


class TestEdgeSet:
    def test_normalizes_pair_order(self):
        es = _edges(4, (3, 1), (0, 2))
        assert es.edges == frozenset({(1, 3), (0, 2)})
        assert len(es) == 2
        assert es.possible_pairs == 6

    def test_rejects_bad_pairs(self):
        with pytest.raises(DomainError, match="self loop"):
            _edges(3, (1, 1))
        with pytest.raises(DomainError, match="out of range"):
            _edges(3, (0, 3))

    def test_adjacency_round_trip(self):
        es = _edges(4, (0, 1), (2, 3))
        a = adjacency_matrix(es)
        np.testing.assert_array_equal(a, a.T)
        assert edges_from_precision(a).edges == es.edges


class TestEdgesFromPrecision:
    def test_chain_support(self):
        omega = np.array([[1.5, 0.5, 0.0], [0.5, 1.5, 0.5], [0.0, 0.5, 1.5]])
        assert edges_from_precision(omega).edges == {(0, 1), (1, 2)}

    def test_block_restriction_relabels(self):
        omega = np.zeros((4, 4))
        omega[2, 3] = omega[3, 2] = 0.7
        np.fill_diagonal(omega, 1.0)
        es = edges_from_precision(omega, block=(2, 3))
        assert es.node_count == 2
        assert es.edges == {(0, 1)}

    def test_tiny_magnitudes_are_not_edges(self):
        omega = np.eye(3)
        omega[0, 1] = omega[1, 0] = 1e-13
        assert len(edges_from_precision(omega)) == 0
        omega[0, 1] = omega[1, 0] = 1e-11
        assert edges_from_precision(omega).edges == {(0, 1)}

    def test_rejects_nonsquare(self):
        with pytest.raises(DomainError, match="square"):
            edges_from_precision(np.zeros((2, 3)))


class TestNms:
    def test_identity_and_negation(self):
        a = np.array([[1.0, 0.3], [0.3, 2.0]])
        assert nms(a, a) == 1.0
        assert nms(a, -a) == 0.0

    def test_hand_worked_value(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.array([[1.0, 1.0], [1.0, 1.0]])
        assert nms(a, b) == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_both_zero_is_undefined(self):
        assert nms(np.zeros((2, 2)), np.zeros((2, 2))) is None

    def test_range_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.normal(size=(4, 4))
            b = rng.normal(size=(4, 4))
            v = nms(a, b)
            assert 0.0 <= v <= 1.0
            assert v == pytest.approx(nms(b, a), rel=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError, match="shape"):
            nms(np.zeros((2, 2)), np.zeros((3, 3)))


class TestJaccard:
    def test_basic_values(self):
        a = _edges(4, (0, 1))
        b = _edges(4, (0, 1), (1, 2))
        assert jaccard(a, a) == 1.0
        assert jaccard(a, b) == 0.5
        assert jaccard(a, _edges(4, (2, 3))) == 0.0

    def test_both_empty_is_undefined(self):
        assert jaccard(_edges(3), _edges(3)) is None

    def test_node_count_must_match(self):
        with pytest.raises(DomainError, match="restrict both"):
            jaccard(_edges(3), _edges(4))


class TestHamming:
    def test_identical_and_complementary(self):
        a = _edges(4, (0, 1), (2, 3))
        assert hamming(a, a) == 1.0
        full = _edges(3, (0, 1), (0, 2), (1, 2))
        assert hamming(full, _edges(3)) == 0.0

    def test_single_differing_edge(self):
        # one disagreeing pair on 5 nodes: 18 of 20 ordered pairs agree
        assert hamming(_edges(5, (0, 1)), _edges(5)) == 0.9

    def test_disjoint_sparse_sets_score_high_while_jaccard_zero(self):
        # 25 nodes, three edges each, none shared: 588/600 ordered
        # pairs agree, so the scores separate sharply
        a = _edges(25, (0, 1), (2, 3), (4, 5))
        b = _edges(25, (6, 7), (8, 9), (10, 11))
        assert jaccard(a, b) == 0.0
        assert hamming(a, b) == 0.98

    def test_needs_two_nodes(self):
        with pytest.raises(DomainError, match="two nodes"):
            hamming(EdgeSet(1), EdgeSet(1))


class TestRoc:
    def test_point_values(self):
        truth = _edges(5, (0, 1), (1, 2))
        est = _edges(5, (0, 1), (3, 4))
        fpr, tpr = roc_point(est, truth)
        assert tpr == 0.5
        assert fpr == pytest.approx(1.0 / 8.0)

    def test_perfect_and_empty_estimates(self):
        truth = _edges(4, (0, 1))
        assert roc_point(truth, truth) == (0.0, 1.0)
        assert roc_point(_edges(4), truth) == (0.0, 0.0)

    def test_complete_truth_has_no_negatives(self):
        truth = _edges(3, (0, 1), (0, 2), (1, 2))
        fpr, tpr = roc_point(truth, truth)
        assert fpr == 0.0 and tpr == 1.0

    def test_empty_truth_rejected(self):
        with pytest.raises(DomainError, match="no edges"):
            roc_point(_edges(3), _edges(3))

    def test_path_sweep(self):
        # two-lambda path over a 3-coordinate block: dense then empty
        dense = np.eye(3)
        dense[0, 1] = dense[1, 0] = 0.4
        dense[1, 2] = dense[2, 1] = 0.4
        sparse = np.eye(3)
        path = RegularizationPath(
            lambdas=np.array([1.0, 0.1]),
            estimates=[
                PrecisionEstimate(omega=sparse, lam=1.0),
                PrecisionEstimate(omega=dense, lam=0.1),
            ],
            block=(0, 1, 2),
        )
        truth = _edges(3, (0, 1))
        pts = roc_points(path, truth)
        assert pts[0] == (0.0, 0.0)
        assert pts[1] == (0.5, 1.0)

    def test_average_roc_pointwise(self):
        curves = [[(0.0, 0.0), (0.2, 0.6)], [(0.0, 0.2), (0.4, 1.0)]]
        avg = average_roc(curves)
        assert avg == [(0.0, 0.1), (0.30000000000000004, 0.8)]
        with pytest.raises(DomainError, match="equal length"):
            average_roc([[(0.0, 0.0)], [(0.0, 0.0), (1.0, 1.0)]])

    def test_auc_of_diagonal_and_perfect(self):
        assert auc_trapezoid([(0.5, 0.5)]) == pytest.approx(0.5)
        assert auc_trapezoid([(0.0, 1.0)]) == pytest.approx(1.0)
        # anchors alone: a single interior point shapes the curve
        assert auc_trapezoid([]) == pytest.approx(0.5)
        assert auc_trapezoid([(0.25, 0.75)]) == pytest.approx(0.625 + 0.125)


class TestRecords:
    def _path(self, omegas, lambdas, block):
        return RegularizationPath(
            lambdas=np.asarray(lambdas),
            estimates=[
                PrecisionEstimate(omega=o, lam=l) for o, l in zip(omegas, lambdas)
            ],
            block=block,
        )

    def test_similarity_records_identical_paths(self):
        omega = np.eye(3)
        omega[0, 1] = omega[1, 0] = 0.3
        path = self._path([omega, np.eye(3)], [0.5, 0.1], (0, 1))
        recs = similarity_records(path, path)
        assert [r["lambda"] for r in recs] == [0.5, 0.1]
        assert recs[0]["nms"] == 1.0
        assert recs[0]["jaccard"] == 1.0
        assert recs[0]["hamming"] == 1.0
        # both blocks empty at the second point: jaccard undefined
        assert recs[1]["jaccard"] is None
        assert recs[1]["hamming"] == 1.0

    def test_similarity_records_demand_matching_grids(self):
        path_a = self._path([np.eye(2)], [0.5], (0, 1))
        path_b = self._path([np.eye(2)], [0.4], (0, 1))
        with pytest.raises(DomainError, match="grids"):
            similarity_records(path_a, path_b)

    def test_aggregate_means_and_errors(self):
        records = [
            {"lambda": 0.5, "nms": 0.8, "jaccard": None, "hamming": 1.0},
            {"lambda": 0.5, "nms": 0.6, "jaccard": 0.5, "hamming": 1.0},
            {"lambda": 0.1, "nms": 1.0, "jaccard": 1.0, "hamming": 1.0},
        ]
        out = aggregate_records(records)
        assert [r["lambda"] for r in out] == [0.5, 0.1]
        first = out[0]
        assert first["n"] == 2
        assert first["nms_mean"] == pytest.approx(0.7)
        assert first["nms_se"] == pytest.approx(np.std([0.8, 0.6], ddof=1) / np.sqrt(2))
        # only one defined jaccard: mean over it, no spread
        assert first["jaccard_mean"] == 0.5
        assert first["jaccard_se"] is None
        assert out[1]["nms_se"] is None
