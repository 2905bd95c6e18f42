"""Stability-based tuning parameter selection over a regularization path.

Subsamples of the data are refit along the whole path; the selected
penalty is the smallest one reachable from the sparse end before the
across-subsample edge instability exceeds the threshold. Instability of
one edge is 2 theta (1 - theta) with theta the fraction of subsamples
showing that edge, averaged over the evaluated block's node pairs.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .compglasso import CountMatrix
from .errors import DomainError
from .evaluate import edges_from_precision

__all__ = [
    "StarsConfig",
    "StarsResult",
    "default_subsample_size",
    "subsample_indices",
    "stars_select",
]


@dataclass(frozen=True)
class StarsConfig:
    """Subsampling plan and stability threshold.

    Attributes
    ----------
    subsample_count : int
        Number of subsamples (without replacement), at least 2.
    subsample_size : int, optional
        Rows per subsample; defaults to floor(10 sqrt(n)) capped at
        n - 1 at selection time.
    instability_threshold : float
        Largest tolerated average instability, in (0, 0.5).
    seed : int
        Drives the subsample draw; equal seeds share subsamples.
    """

    subsample_count: int = 20
    subsample_size: int = None
    instability_threshold: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.subsample_count < 2:
            raise DomainError("subsample_count must be at least 2")
        if self.subsample_size is not None and self.subsample_size < 1:
            raise DomainError("subsample_size must be positive")
        if not 0.0 < self.instability_threshold < 0.5:
            raise DomainError("instability_threshold must lie in (0, 0.5)")


@dataclass
class StarsResult:
    """Selected penalty plus the evidence behind it.

    `all_above_threshold` marks the fallback case where even the
    sparsest fit was unstable and the smallest penalty was returned.
    """

    lambda_star: float
    lambda_index: int
    lambdas: np.ndarray
    instability: np.ndarray
    monotonized: np.ndarray
    all_above_threshold: bool
    subsamples: tuple


def default_subsample_size(n):
    """floor(10 sqrt(n)), capped at n - 1."""
    if n < 2:
        raise DomainError("need at least two samples to subsample")
    return min(int(math.floor(10.0 * math.sqrt(n))), n - 1)


def subsample_indices(n, config):
    """Deterministic without-replacement row draws, sorted within each.

    Exposed so several methods or references can be selected on the
    same subsamples: pass the result to each `stars_select` call.
    """
    size = config.subsample_size
    if size is None:
        size = default_subsample_size(n)
    if size >= n:
        raise DomainError(f"subsample_size {size} must be below n = {n}")
    rng = np.random.default_rng(config.seed)
    draws = []
    for _ in range(config.subsample_count):
        rows = np.sort(rng.choice(n, size=size, replace=False))
        draws.append(tuple(int(r) for r in rows))
    return tuple(draws)


def _subset(x, rows):
    return CountMatrix(counts=x.counts[list(rows)], taxon_ids=x.taxon_ids)


def stars_select(fitter, x, lambdas, config=None, indices=None, workers=1):
    """Pick the penalty by stability across subsample refits.

    Parameters
    ----------
    fitter : callable
        `fitter(x_subset, lambdas) -> RegularizationPath`; must be
        deterministic in its inputs. The path's `block` decides which
        node pairs are scored.
    x : CountMatrix
    lambdas : array_like
        Strictly decreasing penalty grid.
    config : StarsConfig, optional
    indices : tuple of tuples, optional
        Precomputed subsample rows (see `subsample_indices`); overrides
        the config's seed-driven draw.
    workers : int
        Concurrent subsample fits; results do not depend on it.

    Returns
    -------
    StarsResult

    Notes
    -----
    Walking from the largest penalty, the running maximum of the
    average instability is compared to the threshold: selection stops
    just before the first exceedance. When there is no exceedance the
    largest penalty wins (every fit was equally stable); when even the
    first point exceeds, the smallest penalty is returned and flagged.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim != 1 or lambdas.size < 1:
        raise DomainError("lambdas must be a nonempty 1-D grid")
    if lambdas.size > 1 and not np.all(np.diff(lambdas) < 0):
        raise DomainError("lambdas must be strictly decreasing")
    config = config or StarsConfig()
    if indices is None:
        indices = subsample_indices(x.n_samples, config)

    def one(rows):
        return fitter(_subset(x, rows), lambdas)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(one, indices))
    else:
        paths = [one(rows) for rows in indices]

    block = paths[0].block
    if block is None:
        raise DomainError("fitter must return paths with a penalized block")
    m = len(block)
    if m < 2:
        raise DomainError("need at least two block coordinates to score edges")
    n_pairs = m * (m - 1) // 2
    counts = np.zeros((lambdas.size, n_pairs))
    pair_index = {}
    for k in range(m):
        for l in range(k + 1, m):
            pair_index[(k, l)] = len(pair_index)
    for path in paths:
        if len(path.estimates) != lambdas.size:
            raise DomainError("fitter returned a path of unexpected length")
        for i, est in enumerate(path.estimates):
            for edge in edges_from_precision(est.omega, block=block).edges:
                counts[i, pair_index[edge]] += 1.0

    theta = counts / len(indices)
    instability = (2.0 * theta * (1.0 - theta)).mean(axis=1)
    monotonized = np.maximum.accumulate(instability)
    beta = config.instability_threshold

    above = monotonized > beta
    if not above.any():
        index = 0
        flagged = False
    elif above[0]:
        index = lambdas.size - 1
        flagged = True
    else:
        index = int(np.argmax(above)) - 1
        flagged = False

    return StarsResult(
        lambda_star=float(lambdas[index]),
        lambda_index=index,
        lambdas=lambdas,
        instability=instability,
        monotonized=monotonized,
        all_above_threshold=flagged,
        subsamples=tuple(indices),
    )
