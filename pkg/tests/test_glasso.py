"""Masked-penalty graphical lasso: oracles, certification, path behavior."""

import numpy as np
import numpy.testing as npt
import pytest

from invglasso.errors import DomainError, NumericalError
from invglasso.glasso import (
    PenaltySpec,
    RegularizationPath,
    SolverConfig,
    empirical_cov,
    glasso_masked,
    inv_glasso_path,
    kkt_residual,
    lambda_grid,
    penalized_nll,
)
from invglasso.transforms import AlrDataset, canonical_layout


def random_spd(rng, dim, strength=None):
    a = rng.normal(size=(dim, dim))
    return a @ a.T / dim + (strength or 1.0) * np.eye(dim)


def random_penalty(rng, dim):
    block_size = int(rng.integers(2, dim + 1))
    block = tuple(sorted(rng.choice(dim, size=block_size, replace=False)))
    lam = float(rng.uniform(0.01, 0.4))
    return PenaltySpec(lam, block, penalize_diagonal=bool(rng.integers(0, 2)))


def test_identity_covariance_full_penalty_returns_identity():
    for lam in (0.0, 0.05, 1.0):
        est = glasso_masked(np.eye(4), PenaltySpec(lam, (0, 1, 2, 3)))
        npt.assert_allclose(est.omega, np.eye(4), rtol=0, atol=1e-12)


def test_two_by_two_soft_threshold_hand_solution():
    # S = [[1, .6], [.6, 1]], lam = .1: the entrywise-norm stationarity
    # shrinks W12 by 2*lam, so Omega = inv([[1, .4], [.4, 1]])
    s = np.array([[1.0, 0.6], [0.6, 1.0]])
    est = glasso_masked(s, PenaltySpec(0.1, (0, 1)))
    expected = np.linalg.inv(np.array([[1.0, 0.4], [0.4, 1.0]]))
    npt.assert_allclose(est.omega, expected, rtol=0, atol=1e-12)
    assert est.converged
    assert est.kkt <= 1e-10


def test_two_by_two_full_kill_threshold():
    # |S12| <= 2*lam zeroes the coupling entirely
    s = np.array([[1.0, 0.6], [0.6, 1.0]])
    est = glasso_masked(s, PenaltySpec(0.31, (0, 1)))
    assert est.omega[0, 1] == 0.0 and est.omega[1, 0] == 0.0
    npt.assert_allclose(np.diag(est.omega), [1.0, 1.0], rtol=0, atol=1e-12)


def test_lambda_zero_matches_direct_inversion():
    rng = np.random.default_rng(21)
    for dim in (3, 6, 10):
        s = random_spd(rng, dim)
        est = glasso_masked(s, PenaltySpec(0.0, tuple(range(dim))))
        direct = np.linalg.inv(s)
        npt.assert_allclose(est.omega, direct, rtol=1e-8)
        assert kkt_residual(est.omega, s, PenaltySpec(0.0, (0,))) < 1e-8


def test_brute_force_oracle_three_by_three():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(3)
    a = rng.normal(size=(12, 3))
    s = a.T @ a / 12
    lam = 0.1
    x = cp.Variable((3, 3), symmetric=True)
    mask = np.ones((3, 3)) - np.eye(3)
    problem = cp.Problem(
        cp.Minimize(
            -0.5 * cp.log_det(x)
            + 0.5 * cp.trace(s @ x)
            + lam * cp.sum(cp.abs(cp.multiply(mask, x)))
        )
    )
    problem.solve()
    est = glasso_masked(s, PenaltySpec(lam, (0, 1, 2)))
    assert abs(est.objective - problem.value) < 1e-4
    assert est.objective <= problem.value + 1e-8  # we certify a true minimizer


def test_brute_force_oracle_mixed_mask():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(5)
    dim = 5
    s = random_spd(rng, dim)
    lam = 0.15
    block = (0, 1, 2)
    x = cp.Variable((dim, dim), symmetric=True)
    mask = np.zeros((dim, dim))
    for k in block:
        for l in block:
            if k != l:
                mask[k, l] = 1.0
    problem = cp.Problem(
        cp.Minimize(
            -0.5 * cp.log_det(x)
            + 0.5 * cp.trace(s @ x)
            + lam * cp.sum(cp.abs(cp.multiply(mask, x)))
        )
    )
    problem.solve()
    est = glasso_masked(s, PenaltySpec(lam, block))
    assert abs(est.objective - problem.value) < 1e-4


def test_kkt_residual_on_random_problems():
    rng = np.random.default_rng(33)
    for _ in range(60):
        dim = int(rng.integers(3, 11))
        s = random_spd(rng, dim)
        penalty = random_penalty(rng, dim)
        est = glasso_masked(s, penalty)
        assert est.converged
        assert kkt_residual(est.omega, s, penalty) < 1e-6


def test_kkt_residual_identity_optimum_is_zero():
    pen = PenaltySpec(0.5, (0, 1, 2))
    assert kkt_residual(np.eye(3), np.eye(3), pen) == 0.0


def test_kkt_residual_detects_suboptimality():
    s = np.array([[1.0, 0.6], [0.6, 1.0]])
    pen = PenaltySpec(0.1, (0, 1))
    assert kkt_residual(np.eye(2), s, pen) > 0.1


def test_exact_zeros_are_stored_exactly():
    rng = np.random.default_rng(8)
    s = random_spd(rng, 6)
    est = glasso_masked(s, PenaltySpec(0.5, tuple(range(6))))
    off = est.omega[~np.eye(6, dtype=bool)]
    killed = off[off == 0.0]
    assert killed.size > 0
    # canonical +0.0, not -0.0 (serialization stability)
    assert not np.any(np.signbit(killed))


def test_unpenalized_entries_fit_exactly():
    # rows/columns outside the block must reproduce S in the inverse
    rng = np.random.default_rng(9)
    s = random_spd(rng, 7)
    block = (0, 1, 2, 3)
    est = glasso_masked(s, PenaltySpec(0.2, block))
    w = np.linalg.inv(est.omega)
    unpen = np.ones((7, 7), dtype=bool)
    unpen[np.ix_(block, block)] = False
    assert np.abs((w - s)[unpen]).max() < 1e-7


def test_warm_start_agrees_with_cold_start():
    rng = np.random.default_rng(10)
    s = random_spd(rng, 8)
    penalty = PenaltySpec(0.1, tuple(range(8)))
    cold = glasso_masked(s, penalty)
    warm_seed = glasso_masked(s, PenaltySpec(0.3, tuple(range(8))))
    warm = glasso_masked(s, penalty, warm_start=warm_seed.omega)
    assert abs(cold.objective - warm.objective) < 1e-8
    assert np.linalg.norm(cold.omega - warm.omega) < 1e-6


def test_objective_not_above_suboptimal_candidates():
    rng = np.random.default_rng(11)
    s = random_spd(rng, 5)
    penalty = PenaltySpec(0.12, (0, 1, 2, 3, 4))
    est = glasso_masked(s, penalty)
    for _ in range(20):
        other = random_spd(rng, 5, strength=float(rng.uniform(0.5, 2.0)))
        assert est.objective <= penalized_nll(other, s, penalty) + 1e-10


def test_non_psd_covariance_rejected():
    s = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(DomainError, match="positive semidefinite"):
        glasso_masked(s, PenaltySpec(0.1, (0, 1)))


def test_singular_covariance_hard_failure_without_ridge():
    z = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    s = empirical_cov(z)  # rank <= 1, dim 3
    cfg = SolverConfig(ridge_fallback=0.0)
    with pytest.raises(NumericalError, match="ridge"):
        glasso_masked(s, PenaltySpec(0.1, (0, 1)), config=cfg)


def test_singular_covariance_auto_ridge():
    z = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
    s = empirical_cov(z)
    est = glasso_masked(s, PenaltySpec(0.1, (0, 1)))
    assert est.ridge_added > 0
    assert np.all(np.isfinite(est.omega))
    assert est.converged


def test_penalty_spec_validation():
    with pytest.raises(DomainError, match="nonnegative"):
        PenaltySpec(-0.1, (0, 1))
    with pytest.raises(DomainError, match="nonempty"):
        PenaltySpec(0.1, ())
    with pytest.raises(DomainError, match="repeated"):
        PenaltySpec(0.1, (0, 0, 1))
    with pytest.raises(DomainError, match="dimension"):
        PenaltySpec(0.1, (0, 5)).weights(3)


def test_penalty_value_counts_both_triangles():
    pen = PenaltySpec(0.5, (0, 1))
    omega = np.array([[2.0, -1.0], [-1.0, 2.0]])
    assert pen.value(omega) == 0.5 * 2.0  # both off-diagonal entries
    pen_diag = PenaltySpec(0.5, (0, 1), penalize_diagonal=True)
    assert pen_diag.value(omega) == 0.5 * 6.0


def test_lambda_grid_full_penalty_matches_hand_formula():
    # with an unpenalized diagonal the constrained fit is diag(S), so
    # lambda_max = max offdiag |S| / 2 (entrywise-norm convention)
    rng = np.random.default_rng(12)
    s = random_spd(rng, 6)
    grid = lambda_grid(s, tuple(range(6)), num=7)
    hand = np.abs(s - np.diag(np.diag(s))).max() / 2.0
    npt.assert_allclose(grid[0], hand, rtol=1e-6)
    assert len(grid) == 7
    assert np.all(np.diff(grid) < 0)
    npt.assert_allclose(grid[-1], 0.01 * grid[0], rtol=1e-12)


def test_lambda_grid_first_point_empties_block():
    rng = np.random.default_rng(13)
    z = rng.normal(size=(40, 7))
    s = empirical_cov(z)
    block = (0, 1, 2, 3, 4)
    grid = lambda_grid(s, block, num=12)
    est = glasso_masked(s, PenaltySpec(grid[0], block))
    sub = est.omega[np.ix_(block, block)].copy()
    np.fill_diagonal(sub, 0.0)
    assert np.count_nonzero(sub) == 0
    # one step below lambda_max the block need not be empty for long;
    # just confirm the grid is usable end to end
    est_last = glasso_masked(s, PenaltySpec(grid[-1], block))
    assert est_last.converged


def _dataset_pair(rng, n=60, n_taxa=8):
    """Two AlrDatasets for the same samples under the two candidate refs."""
    from invglasso.transforms import alr

    p = rng.dirichlet(np.ones(n_taxa) * 2.0, size=n)
    candidates = frozenset({n_taxa - 2, n_taxa - 1})
    layout_a = canonical_layout(n_taxa, n_taxa - 1, candidates)
    data_a = AlrDataset(
        z=alr(p, n_taxa - 1, layout_a),
        reference=n_taxa - 1,
        layout=layout_a,
        candidates=candidates,
    )
    return data_a, data_a.switch_reference(n_taxa - 2)


def test_path_block_invariance_across_references():
    rng = np.random.default_rng(14)
    data_a, data_b = _dataset_pair(rng)
    s = empirical_cov(data_a.z)
    lambdas = lambda_grid(s, data_a.penalized_block, num=10)
    path_a = inv_glasso_path(data_a, lambdas)
    path_b = inv_glasso_path(data_b, lambdas)
    b = data_a.penalized_block
    for est_a, est_b in zip(path_a.estimates, path_b.estimates):
        block_a = est_a.omega[np.ix_(b, b)]
        block_b = est_b.omega[np.ix_(b, b)]
        assert np.abs(block_a - block_b).max() < 1e-6
        # identical support, not merely close values
        assert np.array_equal(block_a == 0.0, block_b == 0.0)


def test_path_small_lambda_approaches_inverse_covariance():
    rng = np.random.default_rng(15)
    n, dim = 4000, 5
    omega_true = np.eye(dim) * 1.5
    omega_true[0, 1] = omega_true[1, 0] = 0.5
    z = rng.multivariate_normal(np.zeros(dim), np.linalg.inv(omega_true), size=n)
    data = AlrDataset(
        z=z, reference=dim, layout=tuple(range(dim)), candidates=frozenset({dim})
    )
    s = empirical_cov(z)
    path = inv_glasso_path(data, np.array([1e-4, 1e-6]))
    direct = np.linalg.inv(s)
    assert np.abs(path.estimates[-1].omega - direct).max() < 1e-3


def test_path_metadata_and_validation():
    rng = np.random.default_rng(16)
    data_a, _ = _dataset_pair(rng, n=30)
    lambdas = np.array([0.5, 0.25, 0.1])
    path = inv_glasso_path(data_a, lambdas)
    assert path.block == data_a.penalized_block
    assert [e.reference_index for e in path.estimates] == [data_a.reference] * 3
    assert [e.lam for e in path.estimates] == [0.5, 0.25, 0.1]
    with pytest.raises(DomainError, match="decreasing"):
        RegularizationPath(np.array([0.1, 0.5]), [None, None])
    with pytest.raises(DomainError, match="one estimate"):
        RegularizationPath(np.array([0.5, 0.1]), [None])


def test_empirical_cov_uses_1_over_n():
    z = np.array([[0.0, 0.0], [2.0, 4.0]])
    s = empirical_cov(z)
    npt.assert_allclose(s, [[1.0, 2.0], [2.0, 4.0]], rtol=0, atol=0)
