"""Latent-variable compositional graphical lasso with a masked penalty.

Counts are modeled as multinomial draws whose log-ratio parameters are
latent Gaussian vectors; the penalized negative log-likelihood

    f(z, mu, Omega) = -(1/n) sum_i [x_i' z_i - M_i log(1'exp(z_i) + 1)]
                      - 1/2 log det(Omega)
                      + (1/2n) sum_i (z_i - mu)' Omega (z_i - mu)
                      + lam * ||Omega_B||_1

is minimized by block coordinate descent: per-sample Newton updates of
the latent z rows, the closed-form mean update, and the masked
graphical lasso for Omega.  Each accepted step can only lower f (the z
step accepts per-sample improvements only, the mean update is exact,
and the Omega update is kept only if it scores no worse), so the
objective trace is nonincreasing by construction.

The multinomial coefficient log(M_i! / prod_k x_ik!) is constant in all
parameters and omitted, so objective values are comparable only within
this package.  x_i' z_i pairs the counts of the non-reference taxa,
taken in layout order, with the coordinates.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .glasso import (
    PenaltySpec,
    PrecisionEstimate,
    RegularizationPath,
    SolverConfig,
    empirical_cov,
    glasso_masked,
    penalized_nll,
)
from .transforms import AlrDataset, canonical_layout

__all__ = [
    "CountMatrix",
    "LatentState",
    "NewtonConfig",
    "FitConfig",
    "FitDiagnostics",
    "alr_estimate",
    "objective",
    "sample_objective",
    "sample_gradient",
    "sample_hessian",
    "update_z",
    "update_mu",
    "update_omega",
    "fit",
    "fit_path",
]


@dataclass
class CountMatrix:
    """Sample-by-taxon count table for model fitting.

    Attributes
    ----------
    counts : numpy.ndarray
        (n_samples, n_taxa) nonnegative integers; every row must have a
        positive total (the multinomial size).
    taxon_ids : tuple of str, optional
        Column labels, carried through for reporting.
    """

    counts: np.ndarray
    taxon_ids: tuple = None

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[1] < 2:
            raise DomainError("counts must be 2-D with at least two taxa")
        if not np.all(np.isfinite(counts)):
            raise DomainError("counts contain non-finite entries")
        if np.any(counts < 0):
            raise DomainError("counts contain negative entries")
        as_int = counts.astype(np.int64)
        if np.any(as_int != counts):
            raise DomainError("counts must be integers")
        self.counts = as_int
        if np.any(self.depths == 0):
            raise DomainError("every sample needs a positive total count")
        if self.taxon_ids is not None:
            self.taxon_ids = tuple(str(t) for t in self.taxon_ids)
            if len(self.taxon_ids) != self.counts.shape[1]:
                raise DomainError("taxon_ids length must match the column count")
            if len(set(self.taxon_ids)) != len(self.taxon_ids):
                raise DomainError("taxon_ids must be unique")

    @property
    def depths(self):
        return self.counts.sum(axis=1)

    @property
    def n_samples(self):
        return self.counts.shape[0]

    @property
    def n_taxa(self):
        return self.counts.shape[1]


@dataclass(frozen=True)
class NewtonConfig:
    """Per-sample Newton solve settings for the latent update."""

    grad_tol: float = 1e-8
    max_iters: int = 50
    max_backtracks: int = 30

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise DomainError("grad_tol must be positive")
        if self.max_iters < 1 or self.max_backtracks < 0:
            raise DomainError("invalid Newton iteration limits")


@dataclass(frozen=True)
class FitConfig:
    """Outer-loop settings for the block coordinate descent."""

    max_outer_iters: int = 100
    objective_rel_tol: float = 1e-6
    omega_rel_tol: float = 1e-4
    pseudocount: float = 0.5
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise DomainError("max_outer_iters must be at least 1")
        if self.objective_rel_tol <= 0 or self.omega_rel_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.pseudocount <= 0:
            raise DomainError("pseudocount must be positive")


@dataclass
class LatentState:
    """Current latent coordinates and Gaussian parameters of a fit."""

    z: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    reference: int
    layout: tuple
    candidates: frozenset

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.omega = np.asarray(self.omega, dtype=np.float64)
        d = self.z.shape[1] if self.z.ndim == 2 else -1
        if self.z.ndim != 2 or self.mu.shape != (d,) or self.omega.shape != (d, d):
            raise DomainError("inconsistent latent state dimensions")
        if not np.all(np.isfinite(self.z)):
            raise DomainError("latent z contains non-finite entries")
        self.layout = tuple(int(t) for t in self.layout)
        self.candidates = frozenset(int(c) for c in self.candidates)

    @property
    def penalized_block(self):
        return tuple(
            j for j, taxon in enumerate(self.layout) if taxon not in self.candidates
        )

    def as_dataset(self):
        return AlrDataset(
            z=self.z,
            reference=self.reference,
            layout=self.layout,
            candidates=self.candidates,
        )


@dataclass
class FitDiagnostics:
    """Optimization evidence for one block-coordinate-descent fit."""

    outer_iterations: int = 0
    objective_trace: list = field(default_factory=list)
    newton_iterations: dict = field(default_factory=dict)
    converged: bool = False
    omega_rejections: int = 0
    newton_fallbacks: int = 0


def alr_estimate(x, reference, candidates=None, pseudocount=0.5):
    """Plug-in log-ratio estimates from counts.

    Zero counts are replaced by `pseudocount` before normalizing each
    row to proportions; the log-ratios of those proportions are the
    direct estimates used by the observed-z method and as the latent
    initialization.

    Returns
    -------
    AlrDataset
    """
    if pseudocount <= 0:
        raise DomainError("pseudocount must be positive")
    if candidates is None:
        candidates = {reference}
    n_taxa = x.n_taxa
    layout = canonical_layout(n_taxa, reference, candidates)
    p_hat = x.counts.astype(np.float64)
    p_hat[p_hat == 0.0] = pseudocount
    p_hat /= p_hat.sum(axis=1, keepdims=True)
    logp = np.log(p_hat)
    z = logp[:, list(layout)] - logp[:, [reference]]
    return AlrDataset(
        z=z, reference=reference, layout=layout, candidates=frozenset(candidates)
    )


def _layout_counts(x, layout):
    return x.counts[:, list(layout)].astype(np.float64)


def _lse_and_softmax(z):
    """Rowwise log(1 + sum exp(z)) and the non-reference proportions."""
    m = np.maximum(z.max(axis=-1), 0.0)
    e = np.exp(z - m[..., np.newaxis])
    denom = np.exp(-m) + e.sum(axis=-1)
    return m + np.log(denom), e / denom[..., np.newaxis]


def _h_values(xl, depths, z, mu, omega):
    """Per-sample latent objective h_i (to be maximized)."""
    lse, _ = _lse_and_softmax(z)
    d = z - mu
    quad = np.einsum("ij,jk,ik->i", d, omega, d)
    return (xl * z).sum(axis=1) - depths * lse - 0.5 * quad


def sample_objective(x_row, depth, z, mu, omega):
    """h(z) = x'z - M log(1'exp(z)+1) - (z-mu)'Omega(z-mu)/2 for one sample.

    `x_row` holds the non-reference counts in layout order; `depth` is
    the full sample total including the reference taxon.
    """
    xl = np.asarray(x_row, dtype=np.float64)[np.newaxis]
    z = np.asarray(z, dtype=np.float64)[np.newaxis]
    return float(_h_values(xl, np.array([float(depth)]), z, mu, omega)[0])


def sample_gradient(x_row, depth, z, mu, omega):
    """Analytic gradient of `sample_objective` in z."""
    z = np.asarray(z, dtype=np.float64)
    _, q = _lse_and_softmax(z[np.newaxis])
    return np.asarray(x_row, dtype=np.float64) - float(depth) * q[0] - omega @ (z - mu)


def sample_hessian(x_row, depth, z, mu, omega):
    """Analytic Hessian of `sample_objective` in z (negative definite)."""
    z = np.asarray(z, dtype=np.float64)
    _, q = _lse_and_softmax(z[np.newaxis])
    q = q[0]
    return -float(depth) * (np.diag(q) - np.outer(q, q)) - omega


def _newton_batch(xl, depths, z0, mu, omega, config):
    """Maximize every sample's h_i by safeguarded Newton steps.

    Only steps that improve the per-sample objective are accepted, so
    the summed objective cannot decrease.  Returns the updated z plus
    iteration/fallback counters.
    """
    z = z0.copy()
    n, dim = z.shape
    h = _h_values(xl, depths, z, mu, omega)
    eye = np.eye(dim)
    total_iters = 0
    max_iters_sample = 0
    fallbacks = 0
    per_sample = np.zeros(n, dtype=np.int64)
    # a sample whose entire line search fails sits at its numerical
    # optimum (large depths put the gradient floor above grad_tol) and
    # is retired rather than respun until max_iters
    alive = np.ones(n, dtype=bool)
    for _ in range(config.max_iters):
        _, q = _lse_and_softmax(z)
        grad = xl - depths[:, np.newaxis] * q - (z - mu) @ omega
        active = alive & (np.abs(grad).max(axis=1) > config.grad_tol)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        qa = q[idx]
        ga = grad[idx]
        hess = depths[idx, np.newaxis, np.newaxis] * (
            qa[:, :, np.newaxis] * eye - qa[:, :, np.newaxis] * qa[:, np.newaxis, :]
        )
        hess += omega
        try:
            step = np.linalg.solve(hess, ga[:, :, np.newaxis])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.empty_like(ga)
            for r in range(len(idx)):
                try:
                    step[r] = np.linalg.solve(hess[r], ga[r])
                except np.linalg.LinAlgError:
                    step[r] = ga[r]
                    fallbacks += 1
        # Newton directions of a concave problem ascend; anything else is
        # numerical breakdown, replaced by the gradient itself.
        slope = (ga * step).sum(axis=1)
        bad = slope <= 0.0
        if bad.any():
            step[bad] = ga[bad]
            slope[bad] = (ga[bad] ** 2).sum(axis=1)
            fallbacks += int(bad.sum())

        per_sample[idx] += 1
        total_iters += len(idx)
        h_before = h[idx].copy()

        t = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(config.max_backtracks + 1):
            rows = np.flatnonzero(pending)
            if len(rows) == 0:
                break
            trial = z[idx[rows]] + t[rows, np.newaxis] * step[rows]
            h_trial = _h_values(xl[idx[rows]], depths[idx[rows]], trial, mu, omega)
            ok = h_trial >= h[idx[rows]] + 1e-4 * t[rows] * slope[rows]
            accepted = rows[ok]
            z[idx[accepted]] = trial[ok]
            h[idx[accepted]] = h_trial[ok]
            pending[accepted] = False
            t[rows[~ok]] *= 0.5
        # samples still pending keep their old z (no decrease possible);
        # samples whose accepted gain is below the float64 resolution of
        # h are likewise done
        stuck = (h[idx] - h_before) <= 1e-12 * (1.0 + np.abs(h_before))
        alive[idx[pending | stuck]] = False
    max_iters_sample = int(per_sample.max()) if n else 0
    return z, h, total_iters, max_iters_sample, fallbacks


def update_z(x_row, depth, z_init, mu, omega, config=None, return_info=False):
    """Maximize one sample's latent objective by safeguarded Newton.

    Parameters
    ----------
    x_row : array_like
        Non-reference counts in layout order (length n_taxa - 1).
    depth : float
        Total sample count including the reference taxon.
    z_init : array_like
        Starting coordinates.
    mu, omega : array_like
        Current Gaussian parameters (omega PD).
    config : NewtonConfig, optional
    return_info : bool
        Also return (iterations, fallbacks).

    Returns
    -------
    numpy.ndarray
        Coordinates with gradient infinity-norm at most `grad_tol`
        whenever the iteration budget allows.
    """
    config = config or NewtonConfig()
    xl = np.asarray(x_row, dtype=np.float64)[np.newaxis]
    z0 = np.asarray(z_init, dtype=np.float64)[np.newaxis]
    depths = np.asarray([float(depth)])
    mu = np.asarray(mu, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    z, _, iters, _, fallbacks = _newton_batch(xl, depths, z0, mu, omega, config)
    if return_info:
        return z[0], iters, fallbacks
    return z[0]


def update_mu(z):
    """Closed-form mean update: the column mean of z."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 1:
        raise DomainError("z must be a nonempty 2-D array")
    return z.mean(axis=0)


def update_omega(z, mu, penalty, config=None, warm_start=None):
    """Precision update: masked graphical lasso on the latent covariance."""
    s = empirical_cov(z, mu)
    return glasso_masked(s, penalty, config=config, warm_start=warm_start)


def objective(x, state, penalty):
    """Full penalized negative log-likelihood at the given state."""
    if x.n_taxa != len(state.layout) + 1:
        raise DomainError(
            f"counts have {x.n_taxa} taxa but the state lays out "
            f"{len(state.layout) + 1}"
        )
    if x.n_samples != state.z.shape[0]:
        raise DomainError("sample counts of x and state differ")
    xl = _layout_counts(x, state.layout)
    depths = x.depths.astype(np.float64)
    n = x.n_samples
    h = _h_values(xl, depths, state.z, state.mu, state.omega)
    sign, logdet = np.linalg.slogdet(state.omega)
    if sign <= 0:
        raise NumericalError("state.omega must be positive definite")
    return float(-h.sum() / n - 0.5 * logdet + penalty.value(state.omega))


def _initial_state(x, reference, candidates, penalty, config):
    data = alr_estimate(x, reference, candidates, config.pseudocount)
    z0 = data.z
    mu0 = update_mu(z0)
    est = glasso_masked(
        empirical_cov(z0, mu0), penalty, config=config.solver
    )
    return LatentState(
        z=z0,
        mu=mu0,
        omega=est.omega,
        reference=reference,
        layout=data.layout,
        candidates=data.candidates,
    )


def fit(x, reference, candidates, lam, config=None, penalize_diagonal=False,
        initial=None):
    """Fit the latent-variable model at one penalty value.

    Parameters
    ----------
    x : CountMatrix
    reference : int
        Reference taxon (must belong to `candidates`).
    candidates : set of int
        Taxa eligible as references; the penalized block is everything
        else.
    lam : float
        Penalty multiplier.
    config : FitConfig, optional
    penalize_diagonal : bool
    initial : LatentState, optional
        Warm start (previous path point); defaults to the plug-in
        log-ratio estimates with a masked-glasso precision.

    Returns
    -------
    (LatentState, FitDiagnostics)
        `converged=False` in the diagnostics means the iteration budget
        ran out, not that the state is unusable.
    """
    config = config or FitConfig()
    candidates = frozenset(int(c) for c in candidates)
    layout = canonical_layout(x.n_taxa, reference, candidates)
    block = tuple(j for j, t in enumerate(layout) if t not in candidates)
    if len(block) == 0:
        raise DomainError("candidate set leaves no penalized block")
    penalty = PenaltySpec(float(lam), block, penalize_diagonal)

    if initial is not None:
        if (initial.layout != layout or initial.reference != reference
                or initial.candidates != candidates):
            raise DomainError("warm start was fitted under a different layout")
        state = initial
    else:
        state = _initial_state(x, reference, candidates, penalty, config)

    xl = _layout_counts(x, layout)
    depths = x.depths.astype(np.float64)
    n = x.n_samples

    diag = FitDiagnostics()
    f = objective(x, state, penalty)
    diag.objective_trace.append(f)
    newton_total = 0
    newton_max = 0

    z, mu, omega = state.z.copy(), state.mu.copy(), state.omega.copy()
    for it in range(1, config.max_outer_iters + 1):
        diag.outer_iterations = it
        z, _, iters, iters_max, falls = _newton_batch(
            xl, depths, z, mu, omega, config.newton
        )
        newton_total += iters
        newton_max = max(newton_max, iters_max)
        diag.newton_fallbacks += falls

        mu = update_mu(z)

        s = empirical_cov(z, mu)
        previous_nll = penalized_nll(omega, s, penalty)
        est = glasso_masked(s, penalty, config=config.solver, warm_start=omega)
        candidate_nll = penalized_nll(est.omega, s, penalty)
        if candidate_nll <= previous_nll:
            omega = est.omega
            omega_change = np.linalg.norm(est.omega - state.omega)
        else:
            diag.omega_rejections += 1
            omega_change = 0.0

        new_state = LatentState(z, mu, omega, reference, layout, candidates)
        f_new = objective(x, new_state, penalty)
        diag.objective_trace.append(f_new)
        rel_obj = abs(f - f_new) / max(1.0, abs(f))
        rel_omega = omega_change / max(np.linalg.norm(state.omega), 1e-300)
        state = new_state
        f = f_new
        if rel_obj < config.objective_rel_tol and rel_omega < config.omega_rel_tol:
            diag.converged = True
            break

    diag.newton_iterations = {"total": newton_total, "max_per_sample": newton_max}
    return state, diag


def fit_path(x, reference, candidates, lambdas, config=None,
             penalize_diagonal=False):
    """Fit along a decreasing penalty path with warm starts.

    Each penalty starts from the previous one's (z, mu, omega); the
    first uses the plug-in initialization.  Per-point non-convergence is
    recorded in the diagnostics and the path continues.

    Returns
    -------
    (RegularizationPath, list of FitDiagnostics)
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    config = config or FitConfig()
    estimates = []
    diagnostics = []
    state = None
    block = None
    for lam in lambdas:
        state, diag = fit(
            x,
            reference,
            candidates,
            float(lam),
            config=config,
            penalize_diagonal=penalize_diagonal,
            initial=state,
        )
        block = state.penalized_block
        estimates.append(
            PrecisionEstimate(
                omega=state.omega,
                lam=float(lam),
                reference_index=reference,
                iterations=diag.outer_iterations,
                converged=diag.converged,
                objective=diag.objective_trace[-1],
            )
        )
        diagnostics.append(diag)
    path = RegularizationPath(lambdas=lambdas, estimates=estimates, block=block)
    return path, diagnostics
