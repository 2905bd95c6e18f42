"""Log-ratio coordinates for compositions and reference-change algebra.

A composition over T taxa lives on the simplex.  Fixing a reference
taxon and an ordering (a "layout") of the remaining T - 1 taxa maps the
simplex to Euclidean space through the additive log-ratio transform.
Different reference choices give different coordinate systems connected
by exact linear maps; this module builds those maps and the transforms
themselves, and provides a numeric check that the precision submatrix
over non-candidate taxa does not depend on the reference choice.

Conventions
-----------
* Taxa are indexed 0 .. T-1.
* A layout is a tuple of the T - 1 non-reference taxon indices; entry j
  names the taxon carried by log-ratio coordinate j.
* The canonical layout lists non-candidate taxa in ascending order and
  then the remaining candidate taxa in ascending order, so the
  penalized block occupies the leading coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LayoutError

__all__ = [
    "GaussianParams",
    "AlrDataset",
    "ReferenceChangeOperator",
    "validate_composition",
    "canonical_layout",
    "alr",
    "softmax_inverse",
    "reference_change_operator",
    "transform_gaussian",
    "reference_swap_discrepancy",
]


def validate_composition(p, atol=1e-8, allow_zero=False):
    """Validate one composition (1-D) or a row-stack of compositions (2-D).

    Parameters
    ----------
    p : array_like
        Nonnegative entries; each vector must sum to one within `atol`.
    atol : float
        Absolute tolerance on the sum constraint.
    allow_zero : bool
        Permit exactly-zero entries.  Zero entries are incompatible with
        log-ratio transforms and are rejected by default.

    Returns
    -------
    numpy.ndarray
        The validated array as float64.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim not in (1, 2):
        raise DomainError(f"composition must be 1-D or 2-D, got ndim={p.ndim}")
    if p.shape[-1] < 2:
        raise DomainError("composition needs at least two components")
    if not np.all(np.isfinite(p)):
        raise DomainError("composition contains non-finite entries")
    if np.any(p < 0):
        raise DomainError("composition contains negative entries")
    if not allow_zero and np.any(p == 0):
        raise DomainError(
            "composition contains zero entries; log-ratio transforms need "
            "strictly positive parts.  Apply a pseudocount first (counts are "
            "handled by compglasso.alr_estimate)."
        )
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > atol):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise DomainError(
            f"composition entries must sum to one (max deviation {worst:.3e}, "
            f"tolerance {atol:.1e})"
        )
    return p


def _check_taxa(n_taxa, reference, candidates):
    if not 0 <= reference < n_taxa:
        raise LayoutError(f"reference {reference} outside 0..{n_taxa - 1}")
    candidates = frozenset(int(c) for c in candidates)
    if not all(0 <= c < n_taxa for c in candidates):
        raise LayoutError(f"candidate set {sorted(candidates)} outside 0..{n_taxa - 1}")
    if reference not in candidates:
        raise LayoutError(
            f"reference {reference} must belong to the candidate set "
            f"{sorted(candidates)}"
        )
    return candidates


def canonical_layout(n_taxa, reference, candidates=None):
    """Canonical coordinate layout for a given reference.

    Non-candidate taxa come first in ascending order, then the remaining
    candidates in ascending order.  With `candidates=None` the candidate
    set is just the reference itself, so the layout is every other taxon
    in ascending order.

    Returns
    -------
    tuple of int
        Taxon index carried by each of the n_taxa - 1 coordinates.
    """
    if candidates is None:
        candidates = {reference}
    candidates = _check_taxa(n_taxa, reference, candidates)
    head = [t for t in range(n_taxa) if t not in candidates]
    tail = [t for t in sorted(candidates) if t != reference]
    return tuple(head + tail)


def _validate_layout(layout, reference, n_taxa):
    layout = tuple(int(t) for t in layout)
    if len(layout) != n_taxa - 1:
        raise LayoutError(
            f"layout length {len(layout)} does not match {n_taxa - 1} coordinates"
        )
    if reference in layout:
        raise LayoutError(f"layout must not contain the reference {reference}")
    if sorted(layout + (reference,)) != list(range(n_taxa)):
        raise LayoutError("layout must cover every non-reference taxon exactly once")
    return layout


def alr(p, reference, layout=None):
    """Additive log-ratio transform against a chosen reference taxon.

    Parameters
    ----------
    p : array_like
        Composition (1-D, length T) or row-stack of compositions (2-D).
    reference : int
        Taxon used as the denominator.
    layout : sequence of int, optional
        Coordinate order; defaults to all non-reference taxa ascending.

    Returns
    -------
    numpy.ndarray
        Log-ratio coordinates, shape (..., T - 1).
    """
    p = validate_composition(p)
    n_taxa = p.shape[-1]
    if layout is None:
        layout = canonical_layout(n_taxa, reference)
    layout = _validate_layout(layout, reference, n_taxa)
    logp = np.log(p)
    return logp[..., list(layout)] - logp[..., [reference]]


def softmax_inverse(z, reference, layout=None):
    """Map log-ratio coordinates back to a composition.

    Stable for coordinate magnitudes up to the exp overflow limit: the
    largest of (z, 0) is subtracted before exponentiation, so entries
    around +-700 still invert without overflow.

    Parameters
    ----------
    z : array_like
        Coordinates (1-D, length T - 1) or a row-stack (2-D).
    reference : int
        Taxon the coordinates are relative to.
    layout : sequence of int, optional
        Taxon carried by each coordinate; defaults to ascending.

    Returns
    -------
    numpy.ndarray
        Composition(s) over taxa 0 .. T-1, rows summing to one.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim not in (1, 2):
        raise DomainError(f"coordinates must be 1-D or 2-D, got ndim={z.ndim}")
    if not np.all(np.isfinite(z)):
        raise DomainError("coordinates contain non-finite entries")
    n_taxa = z.shape[-1] + 1
    if layout is None:
        layout = canonical_layout(n_taxa, reference)
    layout = _validate_layout(layout, reference, n_taxa)

    # Work with all T log-abundances relative to the reference (whose own
    # entry is 0), shifted by the rowwise max so exp never overflows.
    full = np.zeros(z.shape[:-1] + (n_taxa,), dtype=np.float64)
    full[..., list(layout)] = z
    shift = full.max(axis=-1, keepdims=True)
    expd = np.exp(full - shift)
    return expd / expd.sum(axis=-1, keepdims=True)


@dataclass
class ReferenceChangeOperator:
    """Linear map between log-ratio coordinate systems.

    Applying `matrix` to coordinates relative to `from_reference` (laid
    out as `layout_in`) yields coordinates relative to `to_reference`
    (laid out as `layout_out`).  Operators built by
    `reference_change_operator` are involutory: applying the same matrix
    twice returns the original coordinates.
    """

    matrix: np.ndarray
    from_reference: int
    to_reference: int
    layout_in: tuple
    layout_out: tuple

    def apply(self, z):
        """Transform coordinate vectors (last axis)."""
        z = np.asarray(z, dtype=np.float64)
        return z @ self.matrix.T


def reference_change_operator(from_reference, to_reference, layout_in, layout_out=None):
    """Build the linear operator that switches the reference taxon.

    The outgoing layout is derived from `layout_in` by one substitution:
    the coordinate that carried `to_reference` now carries
    `from_reference`.  This rule makes every operator its own inverse.
    Passing an explicit `layout_out` that differs from the derived one
    raises `LayoutError` rather than silently permuting coordinates.

    Parameters
    ----------
    from_reference, to_reference : int
        Current and desired reference taxa; `to_reference` must appear
        in `layout_in`.
    layout_in : sequence of int
        Layout of the incoming coordinates.
    layout_out : sequence of int, optional
        Expected outgoing layout, checked against the derived one.

    Returns
    -------
    ReferenceChangeOperator
    """
    layout_in = tuple(int(t) for t in layout_in)
    n_taxa = len(layout_in) + 1
    layout_in = _validate_layout(layout_in, from_reference, n_taxa)
    if to_reference == from_reference:
        raise LayoutError("from_reference and to_reference must differ")
    if to_reference not in layout_in:
        raise LayoutError(
            f"to_reference {to_reference} does not appear in the incoming layout"
        )

    slot = layout_in.index(to_reference)
    derived = list(layout_in)
    derived[slot] = from_reference
    derived = tuple(derived)
    if layout_out is not None:
        layout_out = tuple(int(t) for t in layout_out)
        if layout_out != derived:
            raise LayoutError(
                f"requested layout_out {layout_out} differs from the derived "
                f"layout {derived}; only the reference-swap substitution is "
                "supported"
            )
    layout_out = derived

    # Row i expresses log(p[layout_out[i]] / p[to_reference]) in the incoming
    # coordinates; the outgoing reference contributes -z[slot] everywhere and
    # the old reference has no incoming coordinate of its own.
    d = n_taxa - 1
    q = np.zeros((d, d), dtype=np.float64)
    for i, taxon in enumerate(layout_out):
        if taxon != from_reference:
            q[i, layout_in.index(taxon)] = 1.0
        q[i, slot] -= 1.0

    return ReferenceChangeOperator(
        matrix=q,
        from_reference=from_reference,
        to_reference=to_reference,
        layout_in=layout_in,
        layout_out=layout_out,
    )


def _validated_spd(m, name):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"{name} must be a square matrix")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(m).max())):
        raise DomainError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise DomainError(f"{name} must be positive definite") from None
    return 0.5 * (m + m.T)


@dataclass
class GaussianParams:
    """Mean and covariance of log-ratio coordinates, optional precision."""

    mu: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray = None

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = _validated_spd(self.sigma, "sigma")
        if self.mu.shape != (self.sigma.shape[0],):
            raise DomainError(
                f"mu has shape {self.mu.shape}, expected ({self.sigma.shape[0]},)"
            )
        if self.omega is not None:
            self.omega = _validated_spd(self.omega, "omega")
            if self.omega.shape != self.sigma.shape:
                raise DomainError("omega and sigma shapes differ")

    def precision(self):
        """Precision matrix, inverting sigma if it was not supplied."""
        if self.omega is None:
            self.omega = np.linalg.inv(self.sigma)
            self.omega = 0.5 * (self.omega + self.omega.T)
        return self.omega


def transform_gaussian(params, op):
    """Push Gaussian parameters through a reference change.

    The mean maps as Q mu, the covariance as Q sigma Q', and the
    precision (when present) as Q' omega Q, which is exact because the
    operators here are involutory.

    Parameters
    ----------
    params : GaussianParams
    op : ReferenceChangeOperator

    Returns
    -------
    GaussianParams
    """
    q = op.matrix
    d = params.sigma.shape[0]
    if q.shape != (d, d):
        raise DomainError(
            f"operator dimension {q.shape[0]} does not match parameters ({d})"
        )
    mu_out = q @ params.mu
    sigma_out = q @ params.sigma @ q.T
    omega_out = None
    if params.omega is not None:
        omega_out = q.T @ params.omega @ q
        omega_out = 0.5 * (omega_out + omega_out.T)
    return GaussianParams(mu=mu_out, sigma=0.5 * (sigma_out + sigma_out.T), omega=omega_out)


def reference_swap_discrepancy(sigma, block_size=None):
    """Measure how far a reference swap moves the leading precision block.

    Computes the precision matrix two ways: direct inversion of `sigma`,
    and inversion after swapping the reference with the taxon on the
    last coordinate.  For the leading `block_size` coordinates the two
    results agree in exact arithmetic; the report quantifies the
    floating-point discrepancy actually observed.

    Parameters
    ----------
    sigma : array_like
        Covariance of coordinates under the current reference, with the
        swap partner sitting on the last coordinate.
    block_size : int, optional
        Size of the leading invariant block; defaults to d - 1.

    Returns
    -------
    dict
        Keys `max_abs`, `max_rel`, `block_size`.  `max_rel` is the
        maximum entrywise difference relative to the largest block
        magnitude.
    """
    sigma = _validated_spd(sigma, "sigma")
    d = sigma.shape[0]
    if block_size is None:
        block_size = d - 1
    if not 0 < block_size < d:
        raise DomainError(f"block_size must lie in 1..{d - 1}")

    q = np.zeros((d, d), dtype=np.float64)
    q[: d - 1, : d - 1] = np.eye(d - 1)
    q[:, d - 1] = -1.0

    omega_direct = np.linalg.inv(sigma)
    sigma_swapped = q @ sigma @ q.T
    omega_swapped_back = q.T @ np.linalg.inv(sigma_swapped) @ q

    b = block_size
    diff = np.abs(omega_direct[:b, :b] - omega_swapped_back[:b, :b])
    scale = np.abs(omega_direct[:b, :b]).max()
    max_abs = float(diff.max())
    return {
        "max_abs": max_abs,
        "max_rel": max_abs / scale if scale > 0 else max_abs,
        "block_size": b,
    }


@dataclass
class AlrDataset:
    """Log-ratio data matrix plus the bookkeeping that gives it meaning.

    Attributes
    ----------
    z : numpy.ndarray
        (n_samples, T - 1) coordinates.
    reference : int
        Reference taxon the coordinates are relative to.
    layout : tuple of int
        Taxon carried by each coordinate.
    candidates : frozenset of int
        Taxa eligible to serve as the reference (includes `reference`).
        Structure over the remaining taxa is the estimation target.
    """

    z: np.ndarray
    reference: int
    layout: tuple
    candidates: frozenset = field(default=None)

    def __post_init__(self):
        # contiguous layout so downstream matmuls take one BLAS path
        # regardless of how the coordinates were assembled
        self.z = np.ascontiguousarray(self.z, dtype=np.float64)
        if self.z.ndim != 2:
            raise DomainError("z must be a 2-D (samples x coordinates) array")
        n_taxa = self.z.shape[1] + 1
        self.layout = _validate_layout(self.layout, self.reference, n_taxa)
        if self.candidates is None:
            self.candidates = frozenset({self.reference})
        self.candidates = _check_taxa(n_taxa, self.reference, self.candidates)

    @property
    def n_samples(self):
        return self.z.shape[0]

    @property
    def n_taxa(self):
        return self.z.shape[1] + 1

    @property
    def penalized_block(self):
        """Coordinates carrying non-candidate taxa, as a tuple of ints."""
        return tuple(
            j for j, taxon in enumerate(self.layout) if taxon not in self.candidates
        )

    def switch_reference(self, to_reference):
        """Return the same data expressed against another candidate taxon."""
        if to_reference not in self.candidates:
            raise LayoutError(
                f"taxon {to_reference} is not in the candidate set "
                f"{sorted(self.candidates)}"
            )
        op = reference_change_operator(self.reference, to_reference, self.layout)
        return AlrDataset(
            z=op.apply(self.z),
            reference=to_reference,
            layout=op.layout_out,
            candidates=self.candidates,
        )
