"""Ground-truth networks and synthetic compositional count datasets.

Three precision-matrix topologies (chain, random, hub) are crossed with
two sequencing-depth regimes and two compositional-variation regimes.
Datasets follow the generative model: latent Gaussian log-ratios,
softmax back to compositions with the last taxon as the true reference,
multinomial counts at the drawn depth.
"""

import math
from dataclasses import dataclass

import numpy as np

from .compglasso import CountMatrix
from .errors import DomainError
from .evaluate import EdgeSet, edges_from_precision
from .transforms import softmax_inverse

__all__ = [
    "NetworkSpec",
    "ScenarioSpec",
    "GroundTruth",
    "DEPTH_RANGES",
    "VARIATION_DIVISORS",
    "NETWORK_KINDS",
    "gen_chain",
    "gen_random",
    "gen_hub",
    "network_precision",
    "simulate_dataset",
]

NETWORK_KINDS = ("chain", "random", "hub")
DEPTH_RANGES = {"low": (20_000.0, 40_000.0), "high": (100_000.0, 200_000.0)}
# high compositional variation inflates the covariance by dividing the
# precision matrix by 5
VARIATION_DIVISORS = {"low": 1.0, "high": 5.0}


@dataclass(frozen=True)
class NetworkSpec:
    """Which ground-truth precision matrix to build."""

    kind: str
    dimension: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NETWORK_KINDS:
            raise DomainError(f"kind must be one of {NETWORK_KINDS}, got {self.kind!r}")
        if self.dimension < 2:
            raise DomainError("dimension must be at least 2")


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulation cell: network x depth x variation x sample size."""

    network: NetworkSpec
    depth: str
    variation: str
    n: int
    seed: int = 0
    mu: tuple = None

    def __post_init__(self):
        if self.depth not in DEPTH_RANGES:
            raise DomainError(f"depth must be one of {sorted(DEPTH_RANGES)}")
        if self.variation not in VARIATION_DIVISORS:
            raise DomainError(f"variation must be one of {sorted(VARIATION_DIVISORS)}")
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if self.mu is not None:
            mu = tuple(float(v) for v in self.mu)
            if len(mu) != self.network.dimension:
                raise DomainError("mu length must equal the network dimension")
            object.__setattr__(self, "mu", mu)


@dataclass
class GroundTruth:
    """Everything the generator knew, kept for later evaluation."""

    omega: np.ndarray
    edges: EdgeSet
    z: np.ndarray
    p: np.ndarray
    meta: dict


def gen_chain(dim):
    """Tridiagonal precision: 1.5 on the diagonal, 0.5 on the first band."""
    if dim < 2:
        raise DomainError("dimension must be at least 2")
    omega = 1.5 * np.eye(dim)
    band = np.arange(dim - 1)
    omega[band, band + 1] = 0.5
    omega[band + 1, band] = 0.5
    return omega


def _pd_adjust(adjacency):
    """Turn a 0/1 adjacency into a PD precision of comparable scale.

    The diagonal is set to |smallest eigenvalue| + 0.2 (making the
    matrix PD with margin 0.2), then everything is rescaled so the
    average diagonal matches the chain generator's 1.5.
    """
    eigmin = float(np.linalg.eigvalsh(adjacency)[0])
    diagonal = abs(eigmin) + 0.2
    scale = 1.5 / diagonal
    omega = scale * (adjacency + diagonal * np.eye(adjacency.shape[0]))
    return omega, {
        "pd_diagonal": diagonal,
        "pd_scale": scale,
        "edge_weight": scale,
    }


def gen_random(dim, seed):
    """Independent edges with probability 3/dim (clamped to 1 for dim <= 3)."""
    omega, _ = _gen_random_meta(dim, seed)
    return omega


def _gen_random_meta(dim, seed):
    if dim < 2:
        raise DomainError("dimension must be at least 2")
    rng = np.random.default_rng(seed)
    prob = min(3.0 / dim, 1.0)
    upper = np.triu(rng.random((dim, dim)) < prob, k=1)
    adjacency = (upper | upper.T).astype(np.float64)
    omega, meta = _pd_adjust(adjacency)
    meta["edge_probability"] = prob
    return omega, meta


def gen_hub(dim, seed):
    """Random partition into ceil(dim/20) groups, one hub wired to each member."""
    omega, _ = _gen_hub_meta(dim, seed)
    return omega


def _gen_hub_meta(dim, seed):
    if dim < 2:
        raise DomainError("dimension must be at least 2")
    rng = np.random.default_rng(seed)
    n_groups = math.ceil(dim / 20)
    nodes = rng.permutation(dim)
    adjacency = np.zeros((dim, dim))
    for group in np.array_split(nodes, n_groups):
        hub = group[0]
        for member in group[1:]:
            adjacency[hub, member] = 1.0
            adjacency[member, hub] = 1.0
    omega, meta = _pd_adjust(adjacency)
    meta["groups"] = n_groups
    return omega, meta


def network_precision(spec):
    """Build the precision matrix for a NetworkSpec, with PD metadata."""
    if spec.kind == "chain":
        return gen_chain(spec.dimension), {"kind": "chain"}
    if spec.kind == "random":
        omega, meta = _gen_random_meta(spec.dimension, spec.seed)
    else:
        omega, meta = _gen_hub_meta(spec.dimension, spec.seed)
    meta["kind"] = spec.kind
    return omega, meta


def simulate_dataset(scenario):
    """Draw one dataset from the generative model.

    The latent rows are N(mu, Omega^-1) with Omega scaled by the
    variation regime; compositions take the last taxon (index dim, the
    added reference) as denominator; depths are uniform integers from
    the depth regime; counts are one multinomial draw per sample.

    Returns
    -------
    (CountMatrix, GroundTruth)
        Counts over dim + 1 taxa, plus the scaled precision, its edge
        set, and the latent draws.
    """
    omega, meta = network_precision(scenario.network)
    omega = omega / VARIATION_DIVISORS[scenario.variation]
    dim = scenario.network.dimension
    sigma = np.linalg.inv(omega)
    sigma = 0.5 * (sigma + sigma.T)
    mu = np.zeros(dim) if scenario.mu is None else np.asarray(scenario.mu)

    rng = np.random.default_rng(scenario.seed)
    z = rng.multivariate_normal(mu, sigma, size=scenario.n, method="cholesky")
    p = softmax_inverse(z, reference=dim, layout=tuple(range(dim)))
    low, high = DEPTH_RANGES[scenario.depth]
    depths = np.rint(rng.uniform(low, high, size=scenario.n)).astype(np.int64)
    counts = rng.multinomial(depths, p)

    truth = GroundTruth(
        omega=omega,
        edges=edges_from_precision(omega),
        z=z,
        p=p,
        meta={
            **meta,
            "depth": scenario.depth,
            "variation": scenario.variation,
            "seed": scenario.seed,
            "network_seed": scenario.network.seed,
        },
    )
    return CountMatrix(counts=counts), truth
