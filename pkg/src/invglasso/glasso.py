"""Penalized Gaussian maximum likelihood for the precision matrix.

Solves

    minimize_Omega  -1/2 log det(Omega) + 1/2 tr(S Omega) + lam * ||Omega_B||_1

over symmetric positive definite matrices, where B is an index set of
coordinates (the penalized block) and ||.||_1 is the entrywise matrix
L1 norm over that block (both triangles; the diagonal only when
`penalize_diagonal` is set).  Because each off-diagonal entry appears
twice in the entrywise norm, the stationarity conditions carry an
effective per-entry threshold of 2*lam:

    |(Omega^-1 - S)_kl| <= 2*lam        on penalized zero entries,
    (Omega^-1 - S)_kl = 2*lam*sign(w_kl) on penalized nonzeros,
    (Omega^-1 - S)_kl = 0               on unpenalized entries.

`PenaltySpec.weights` exposes exactly these per-entry thresholds and
`kkt_residual` certifies solutions against them.

The algorithm is block coordinate descent over the columns of the
working covariance W = Omega^-1; each column solves a lasso with
entrywise weights, so unpenalized rows and columns (reference
candidates) are handled by zero weights with no structural change.
Entries killed by soft-thresholding are stored as exact zeros, which
downstream edge extraction relies on.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._cd import glasso_sweep
from .errors import DomainError, NumericalError

__all__ = [
    "PenaltySpec",
    "SolverConfig",
    "PrecisionEstimate",
    "RegularizationPath",
    "empirical_cov",
    "glasso_masked",
    "kkt_residual",
    "penalized_nll",
    "lambda_grid",
    "inv_glasso_path",
]

_INNER_MAX_PASSES = 1000


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty strength plus the coordinates it applies to.

    Attributes
    ----------
    lam : float
        Penalty multiplier on the entrywise L1 norm of the block.
    block : tuple of int
        Coordinates whose mutual entries are penalized.
    penalize_diagonal : bool
        Include the block's diagonal entries in the norm.  Off by
        default; the flag preserves the literal all-entries reading.
    """

    lam: float
    block: tuple
    penalize_diagonal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block", tuple(int(k) for k in self.block))
        if self.lam < 0:
            raise DomainError(f"lam must be nonnegative, got {self.lam}")
        if len(self.block) == 0:
            raise DomainError("penalized block must be nonempty")
        if len(set(self.block)) != len(self.block):
            raise DomainError("penalized block contains repeated coordinates")
        if any(k < 0 for k in self.block):
            raise DomainError("penalized block coordinates must be nonnegative")

    def weights(self, dim):
        """Effective per-entry stationarity thresholds as a dense matrix."""
        if max(self.block) >= dim:
            raise DomainError(
                f"penalized block {self.block} exceeds dimension {dim}"
            )
        w = np.zeros((dim, dim))
        idx = np.asarray(self.block, dtype=np.intp)
        w[np.ix_(idx, idx)] = 2.0 * self.lam
        if not self.penalize_diagonal:
            w[idx, idx] = 0.0
        return w

    def value(self, omega):
        """lam * entrywise L1 norm of the penalized block of omega."""
        omega = np.asarray(omega)
        idx = np.asarray(self.block, dtype=np.intp)
        sub = omega[np.ix_(idx, idx)]
        total = np.abs(sub).sum()
        if not self.penalize_diagonal:
            total -= np.abs(np.diagonal(sub)).sum()
        return self.lam * float(total)


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budgets and tolerances for glasso_masked.

    `convergence_tol` bounds the relative Frobenius change of the
    estimate between sweeps; `inner_lasso_tol` is both the coordinate
    descent tolerance and the KKT residual certified at return.
    `ridge_fallback` is added to the diagonal of a singular S when the
    penalty cannot regularize it; None picks 1e-4 * mean(diag(S))
    automatically, 0 disables the fallback.
    """

    max_outer_iters: int = 200
    convergence_tol: float = 1e-9
    inner_lasso_tol: float = 1e-7
    ridge_fallback: float = None

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise DomainError("max_outer_iters must be at least 1")
        if self.convergence_tol <= 0 or self.inner_lasso_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.ridge_fallback is not None and self.ridge_fallback < 0:
            raise DomainError("ridge_fallback must be nonnegative")


@dataclass
class PrecisionEstimate:
    """One solved precision matrix with its optimization evidence."""

    omega: np.ndarray
    lam: float
    reference_index: int = None
    iterations: int = 0
    converged: bool = True
    objective: float = math.nan
    kkt: float = math.nan
    ridge_added: float = 0.0


@dataclass
class RegularizationPath:
    """Estimates along a strictly decreasing penalty sequence."""

    lambdas: np.ndarray
    estimates: list
    block: tuple = None

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=np.float64)
        if self.lambdas.ndim != 1 or len(self.lambdas) < 1:
            raise DomainError("lambdas must be a nonempty 1-D sequence")
        if np.any(np.diff(self.lambdas) >= 0):
            raise DomainError("lambdas must be strictly decreasing")
        if len(self.estimates) != len(self.lambdas):
            raise DomainError("one estimate required per lambda")
        if self.block is not None:
            self.block = tuple(int(k) for k in self.block)


def empirical_cov(z, mu=None):
    """Sample covariance with 1/n normalization (matching the 1/(2n) term)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 1:
        raise DomainError("z must be a nonempty 2-D array")
    if mu is None:
        mu = z.mean(axis=0)
    d = z - mu
    return d.T @ d / z.shape[0]


def _check_covariance(s):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DomainError("S must be square")
    scale = max(1.0, float(np.abs(s).max()))
    if not np.allclose(s, s.T, rtol=0.0, atol=1e-10 * scale):
        raise DomainError("S must be symmetric")
    if np.linalg.eigvalsh(s)[0] < -1e-8 * scale:
        raise DomainError("S must be positive semidefinite")
    return 0.5 * (s + s.T)


def penalized_nll(omega, s, penalty):
    """Objective value -1/2 logdet + 1/2 tr(S Omega) + penalty."""
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        raise NumericalError("omega must be positive definite to score")
    return -0.5 * logdet + 0.5 * float((s * omega).sum()) + penalty.value(omega)


def kkt_residual(omega, s, penalty):
    """Largest stationarity violation of omega for the penalized problem.

    Zero entries are validated against the subgradient bound, nonzero
    ones against the sign condition, unpenalized ones against exact
    agreement of S and Omega^-1.  The return value is an absolute
    residual; optimal solutions give values near machine precision.
    """
    omega = np.asarray(omega, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    try:
        w = np.linalg.inv(omega)
    except np.linalg.LinAlgError:
        raise NumericalError("omega is numerically singular") from None
    r = w - s
    p = penalty.weights(omega.shape[0])
    zero = omega == 0.0
    viol = np.where(
        p == 0.0,
        np.abs(r),
        np.where(zero, np.maximum(np.abs(r) - p, 0.0), np.abs(r - p * np.sign(omega))),
    )
    return float(viol.max())


def _recover_omega(w, b):
    """Rebuild Omega from the working covariance and lasso coefficients."""
    dim = w.shape[0]
    omega = np.zeros_like(w)
    mask = ~np.eye(dim, dtype=bool)
    for j in range(dim):
        idx = mask[:, j]
        beta = b[idx, j]
        denom = w[j, j] - w[idx, j] @ beta
        if denom <= 0:
            raise NumericalError(
                "working covariance lost positive definiteness; the input "
                "covariance is likely near-singular (consider ridge_fallback)"
            )
        ojj = 1.0 / denom
        omega[j, j] = ojj
        omega[idx, j] = -beta * ojj
    # average the two triangles; exact zeros survive only when both agree
    # (+0.0 canonicalizes the -0.0 a killed entry leaves behind)
    return 0.5 * (omega + omega.T) + 0.0


def _cold_working_matrices(s, p):
    dim = s.shape[0]
    w = s.copy()
    w[np.diag_indices(dim)] = np.diagonal(s) + np.diagonal(p)
    return w, np.zeros((dim, dim))


def _initial_working_matrices(s, p, warm_start):
    """Working (W, B) pair plus whether a warm start was actually taken."""
    dim = s.shape[0]
    if warm_start is not None:
        omega0 = np.asarray(warm_start, dtype=np.float64)
        if omega0.shape == (dim, dim):
            try:
                w = np.linalg.inv(omega0)
                w = 0.5 * (w + w.T)
                np.linalg.cholesky(w)
            except np.linalg.LinAlgError:
                w = None
            if w is not None:
                w[np.diag_indices(dim)] = np.diagonal(s) + np.diagonal(p)
                d = np.diagonal(omega0)
                if np.all(d > 0):
                    b = -omega0 / d[np.newaxis, :]
                    np.fill_diagonal(b, 0.0)
                    try:
                        np.linalg.cholesky(w)
                        return w, b, True
                    except np.linalg.LinAlgError:
                        pass
    w, b = _cold_working_matrices(s, p)
    return w, b, False


def glasso_masked(s, penalty, config=None, warm_start=None):
    """Minimize the penalized negative log-likelihood for one penalty.

    Parameters
    ----------
    s : array_like
        Sample covariance (symmetric PSD).
    penalty : PenaltySpec
    config : SolverConfig, optional
    warm_start : array_like, optional
        Precision matrix to start from (previous path point).

    Returns
    -------
    PrecisionEstimate
        With `converged=False` when the iteration budget ran out; the
        caller decides whether that is acceptable.
    """
    config = config or SolverConfig()
    s = _check_covariance(s)
    dim = s.shape[0]
    p = penalty.weights(dim)

    ridge_added = 0.0

    def ensure_solvable(mat):
        nonlocal ridge_added
        try:
            np.linalg.cholesky(mat + np.diag(np.diagonal(p)))
            return mat
        except np.linalg.LinAlgError:
            pass
        ridge = config.ridge_fallback
        if ridge is None:
            ridge = 1e-4 * float(np.trace(mat)) / dim
        if ridge <= 0:
            raise NumericalError(
                "S is singular and the penalty cannot regularize it; set "
                "ridge_fallback > 0 or increase lam"
            )
        ridge_added = ridge
        return mat + ridge * np.eye(dim)

    if not np.any(p > 0):
        s = ensure_solvable(s)
        omega = np.linalg.inv(s)
        omega = 0.5 * (omega + omega.T)
        return PrecisionEstimate(
            omega=omega,
            lam=penalty.lam,
            iterations=0,
            converged=True,
            objective=penalized_nll(omega, s, penalty),
            kkt=kkt_residual(omega, s, penalty),
            ridge_added=ridge_added,
        )

    s = ensure_solvable(s)
    w, b, used_warm = _initial_working_matrices(s, p, warm_start)
    inner_tol = min(1e-10, 0.01 * config.inner_lasso_tol)

    def solve(w, b):
        omega_prev = None
        omega = None
        kkt = math.inf
        converged = False
        sweeps = 0
        for sweeps in range(1, config.max_outer_iters + 1):
            glasso_sweep(s, p, w, b, inner_tol, _INNER_MAX_PASSES)
            # overflow here is one of the divergence modes the isfinite
            # check below turns into a clean restart, so don't warn
            with np.errstate(over="ignore", invalid="ignore"):
                omega = _recover_omega(w, b)
            if not np.all(np.isfinite(omega)):
                raise NumericalError(
                    "working covariance lost positive definiteness; the "
                    "input covariance is likely near-singular (consider "
                    "ridge_fallback)"
                )
            if omega_prev is not None:
                num = np.linalg.norm(omega - omega_prev)
                den = max(np.linalg.norm(omega_prev), 1e-300)
                if num <= config.convergence_tol * den:
                    kkt = kkt_residual(omega, s, penalty)
                    if kkt <= config.inner_lasso_tol:
                        converged = True
                        break
            omega_prev = omega
        if not converged and not math.isfinite(kkt):
            kkt = kkt_residual(omega, s, penalty)
        try:
            np.linalg.cholesky(omega + 0.0)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "estimate lost positive definiteness during the sweeps"
            ) from None
        return omega, kkt, converged, sweeps

    # Warm starts speed the common case but the covariance-space sweeps
    # only provably preserve positive definiteness from the cold start;
    # a warm chain that drifts indefinite is rerun cold instead.
    try:
        omega, kkt, converged, sweeps = solve(w, b)
    except NumericalError:
        if not used_warm:
            raise
        w, b = _cold_working_matrices(s, p)
        omega, kkt, converged, sweeps = solve(w, b)

    return PrecisionEstimate(
        omega=omega,
        lam=penalty.lam,
        iterations=sweeps,
        converged=converged,
        objective=penalized_nll(omega, s, penalty),
        kkt=kkt,
        ridge_added=ridge_added,
    )


def lambda_grid(s, block, penalize_diagonal=False, num=70, ratio=0.01, config=None):
    """Data-driven penalty grid from lambda_max down to ratio*lambda_max.

    lambda_max is the smallest penalty that empties the penalized block:
    computed from the block-constrained maximum likelihood fit W* as
    max |W* - S| / 2 over penalized off-diagonal entries (the division
    reflects the entrywise-norm convention; see the module docstring).

    Returns
    -------
    numpy.ndarray
        `num` strictly decreasing, logarithmically spaced values.
    """
    if num < 1:
        raise DomainError("num must be at least 1")
    if not 0 < ratio < 1:
        raise DomainError("ratio must lie in (0, 1)")
    s = _check_covariance(s)
    lam_big = 2.0 * float(np.abs(s).max()) + 1.0
    for _ in range(8):
        probe = PenaltySpec(lam_big, block, penalize_diagonal)
        fit = glasso_masked(s, probe, config=config)
        mask = probe.weights(s.shape[0]) > 0
        np.fill_diagonal(mask, False)
        if not np.any(fit.omega[mask] != 0.0):
            break
        lam_big *= 4.0
    w_star = np.linalg.inv(fit.omega)
    lam_max = float(np.abs(w_star - s)[mask].max()) / 2.0
    lam_max = max(lam_max * (1.0 + 1e-8), 1e-8 * (1.0 + float(np.abs(s).max())))
    # With a penalized diagonal W* itself moves with lam, so certify that
    # lam_max really empties the block and enlarge it if not.
    for _ in range(60):
        check = glasso_masked(
            s, PenaltySpec(lam_max, block, penalize_diagonal), config=config
        )
        if not np.any(check.omega[mask] != 0.0):
            break
        lam_max *= 1.25
    if num == 1:
        return np.array([lam_max])
    return np.geomspace(lam_max, ratio * lam_max, num)


def inv_glasso_path(data, lambdas, config=None, penalize_diagonal=False):
    """Fit the masked graphical lasso along a decreasing penalty path.

    The penalized block is the non-candidate block of `data`; candidate
    rows and columns stay unpenalized, which is what makes the block
    estimate independent of the reference choice.

    Parameters
    ----------
    data : AlrDataset
        Observed (or estimated) log-ratio coordinates.
    lambdas : array_like
        Strictly decreasing penalties; see `lambda_grid`.
    config : SolverConfig, optional
    penalize_diagonal : bool

    Returns
    -------
    RegularizationPath
        Warm-started estimates, one per penalty, `block` set to the
        non-candidate coordinates.
    """
    if data.n_samples < 2:
        raise DomainError("need at least 2 samples to estimate a covariance")
    lambdas = np.asarray(lambdas, dtype=np.float64)
    block = data.penalized_block
    if len(block) == 0:
        raise DomainError("candidate set leaves no penalized block")
    s = empirical_cov(data.z)
    estimates = []
    warm = None
    for lam in lambdas:
        est = glasso_masked(
            s,
            PenaltySpec(float(lam), block, penalize_diagonal),
            config=config,
            warm_start=warm,
        )
        est.reference_index = data.reference
        estimates.append(est)
        warm = est.omega
    return RegularizationPath(lambdas=lambdas, estimates=estimates, block=block)
