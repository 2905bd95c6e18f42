"""Network comparison metrics and ROC utilities.

Edge sets live on a fixed node count with edges as unordered pairs of
local indices. When a metric compares estimates produced under
different references, callers should extract edges over the shared
penalized block so the node labelling agrees.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "EdgeSet",
    "edges_from_precision",
    "adjacency_matrix",
    "nms",
    "jaccard",
    "hamming",
    "roc_point",
    "roc_points",
    "average_roc",
    "auc_trapezoid",
    "similarity_records",
    "aggregate_records",
]

# entries this small in magnitude are treated as absent edges; the
# solver writes exact zeros, so this only guards against drift from
# serialization round trips
EDGE_ATOL = 1e-12


@dataclass(frozen=True)
class EdgeSet:
    """Undirected graph on nodes 0..node_count-1."""

    node_count: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.node_count < 1:
            raise DomainError("node_count must be positive")
        norm = set()
        for pair in self.edges:
            k, l = int(pair[0]), int(pair[1])
            if k == l:
                raise DomainError(f"self loop ({k}, {l}) is not a valid edge")
            if not (0 <= k < self.node_count and 0 <= l < self.node_count):
                raise DomainError(f"edge ({k}, {l}) out of range for {self.node_count} nodes")
            norm.add((min(k, l), max(k, l)))
        object.__setattr__(self, "edges", frozenset(norm))

    def __len__(self):
        return len(self.edges)

    @property
    def possible_pairs(self):
        return self.node_count * (self.node_count - 1) // 2


def edges_from_precision(omega, block=None, atol=EDGE_ATOL):
    """Support of the (sub)matrix as an EdgeSet over local indices.

    Parameters
    ----------
    omega : ndarray
        Symmetric matrix.
    block : sequence of int, optional
        Coordinates to restrict to; edges are relabelled 0..len(block)-1
        in the given order. Default is all coordinates.
    atol : float
        Magnitudes at or below this count as zero.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise DomainError("omega must be a square matrix")
    if block is None:
        block = range(omega.shape[0])
    idx = np.asarray(list(block), dtype=np.intp)
    if idx.size < 1:
        raise DomainError("block must contain at least one coordinate")
    sub = omega[np.ix_(idx, idx)]
    m = idx.size
    rows, cols = np.nonzero(np.abs(sub) > atol)
    edges = {(int(k), int(l)) for k, l in zip(rows, cols) if k < l}
    return EdgeSet(node_count=m, edges=frozenset(edges))


def adjacency_matrix(edge_set):
    """Dense symmetric 0/1 adjacency for an EdgeSet."""
    a = np.zeros((edge_set.node_count, edge_set.node_count))
    for k, l in edge_set.edges:
        a[k, l] = 1.0
        a[l, k] = 1.0
    return a


def _check_same_nodes(a, b):
    if a.node_count != b.node_count:
        raise DomainError(
            f"edge sets live on {a.node_count} and {b.node_count} nodes; "
            "restrict both to the same block first"
        )


def nms(a, b):
    """Matrix similarity 1 - |A - B|_1 / (|A|_1 + |B|_1), entrywise sums.

    Returns None when both matrices are identically zero (the ratio is
    0/0). Symmetric in its arguments and equals 1 only for A == B.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    denom = np.abs(a).sum() + np.abs(b).sum()
    if denom == 0.0:
        return None
    return float(1.0 - np.abs(a - b).sum() / denom)


def jaccard(a, b):
    """Edge-set Jaccard index |A & B| / |A | B|; None when both are empty."""
    _check_same_nodes(a, b)
    union = a.edges | b.edges
    if not union:
        return None
    return len(a.edges & b.edges) / len(union)


def hamming(a, b):
    """Normalized Hamming similarity over ordered node pairs.

    Each unordered disagreeing pair counts twice (once per adjacency
    entry), so the score is 1 - 2 |A ^ B| / (N (N - 1)). Computed as a
    single integer ratio so exact decimal results stay exact. Equals 1
    iff the edge sets agree.
    """
    _check_same_nodes(a, b)
    n = a.node_count
    if n < 2:
        raise DomainError("need at least two nodes")
    ordered = n * (n - 1)
    return (ordered - 2 * len(a.edges ^ b.edges)) / ordered


def roc_point(estimate, truth):
    """(fpr, tpr) of an estimated edge set against the truth.

    The false positive rate is over non-edges of the truth; when the
    truth is complete there are no negatives and the fpr is 0 by
    convention (no false positive is possible).
    """
    _check_same_nodes(estimate, truth)
    if not truth.edges:
        raise DomainError("truth has no edges; tpr is undefined")
    tp = len(estimate.edges & truth.edges)
    fp = len(estimate.edges - truth.edges)
    negatives = truth.possible_pairs - len(truth.edges)
    fpr = fp / negatives if negatives else 0.0
    return (fpr, tp / len(truth.edges))


def roc_points(path, truth, block=None):
    """One (fpr, tpr) per path estimate, in the path's lambda order.

    Parameters
    ----------
    path : RegularizationPath
    truth : EdgeSet
        Ground-truth edges over the compared coordinates (after block
        restriction and relabelling).
    block : sequence of int, optional
        Defaults to the path's own penalized block when it has one.
    """
    if block is None:
        block = path.block
    return [
        roc_point(edges_from_precision(est.omega, block=block), truth)
        for est in path.estimates
    ]


def average_roc(curves):
    """Pointwise mean of equally long ROC curves (matched grid indices)."""
    if not curves:
        raise DomainError("need at least one curve")
    length = len(curves[0])
    for c in curves:
        if len(c) != length:
            raise DomainError("curves must have equal length to average pointwise")
    arr = np.asarray(curves, dtype=np.float64)
    mean = arr.mean(axis=0)
    return [(float(f), float(t)) for f, t in mean]


def auc_trapezoid(points):
    """Trapezoidal area under an ROC curve.

    The endpoints (0, 0) and (1, 1) are appended before sorting by
    (fpr, tpr); they are conventional anchors, not observed operating
    points.
    """
    pts = [(float(p[0]), float(p[1])) for p in points]
    pts.extend([(0.0, 0.0), (1.0, 1.0)])
    pts.sort()
    fpr = np.array([p[0] for p in pts])
    tpr = np.array([p[1] for p in pts])
    return float(np.trapezoid(tpr, fpr))


def similarity_records(path_a, path_b, block_a=None, block_b=None):
    """Per-lambda nms/jaccard/hamming between two aligned paths.

    The paths must share their lambda grid. Omegas are compared over
    each path's penalized block (or the given blocks), which relabels
    both to common local coordinates.
    """
    if len(path_a.lambdas) != len(path_b.lambdas):
        raise DomainError("paths have different lengths")
    if not np.allclose(path_a.lambdas, path_b.lambdas, rtol=1e-12, atol=0.0):
        raise DomainError("paths were fit on different lambda grids")
    block_a = path_a.block if block_a is None else list(block_a)
    block_b = path_b.block if block_b is None else list(block_b)
    if block_a is None or block_b is None:
        raise DomainError("both paths need a penalized block to compare over")
    ia = np.asarray(list(block_a), dtype=np.intp)
    ib = np.asarray(list(block_b), dtype=np.intp)
    if ia.size != ib.size:
        raise DomainError("blocks have different sizes")
    records = []
    for lam, ea, eb in zip(path_a.lambdas, path_a.estimates, path_b.estimates):
        sub_a = ea.omega[np.ix_(ia, ia)]
        sub_b = eb.omega[np.ix_(ib, ib)]
        records.append(
            {
                "lambda": float(lam),
                "nms": nms(sub_a, sub_b),
                "jaccard": jaccard(
                    edges_from_precision(sub_a), edges_from_precision(sub_b)
                ),
                "hamming": hamming(
                    edges_from_precision(sub_a), edges_from_precision(sub_b)
                ),
            }
        )
    return records


def aggregate_records(records, fields=("nms", "jaccard", "hamming")):
    """Mean and standard error per lambda across replicates.

    Records missing a field value (None) are skipped for that field.
    The standard error uses ddof=1 and is None for fewer than two
    contributing records.
    """
    by_lambda = {}
    order = []
    for rec in records:
        lam = float(rec["lambda"])
        if lam not in by_lambda:
            by_lambda[lam] = []
            order.append(lam)
        by_lambda[lam].append(rec)
    out = []
    for lam in order:
        group = by_lambda[lam]
        row = {"lambda": lam, "n": len(group)}
        for name in fields:
            values = [r[name] for r in group if r.get(name) is not None]
            if not values:
                row[f"{name}_mean"] = None
                row[f"{name}_se"] = None
                continue
            row[f"{name}_mean"] = float(np.mean(values))
            if len(values) >= 2:
                row[f"{name}_se"] = float(np.std(values, ddof=1) / math.sqrt(len(values)))
            else:
                row[f"{name}_se"] = None
        out.append(row)
    return out
