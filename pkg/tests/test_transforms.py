"""Log-ratio transforms, reference-change operators, invariance checks."""

import numpy as np
import numpy.testing as npt
import pytest

from invglasso.errors import DomainError, LayoutError
from invglasso.transforms import (
    AlrDataset,
    GaussianParams,
    alr,
    canonical_layout,
    reference_change_operator,
    reference_swap_discrepancy,
    softmax_inverse,
    transform_gaussian,
    validate_composition,
)


def test_alr_hand_values():
    # z_j = log(p_j / p_ref); frozen against 60-digit evaluation of the logs
    p = np.array([0.2, 0.3, 0.5])
    z = alr(p, reference=2)
    npt.assert_allclose(
        z, [-0.9162907318741550652, -0.5108256237659906832], rtol=0, atol=1e-15
    )


def test_alr_layout_reorders_coordinates():
    p = np.array([0.2, 0.3, 0.5])
    z = alr(p, reference=2, layout=(1, 0))
    npt.assert_allclose(z, [np.log(0.6), np.log(0.4)], rtol=0, atol=1e-15)


def test_alr_rejects_zero_components():
    with pytest.raises(DomainError, match="pseudocount"):
        alr(np.array([0.0, 0.5, 0.5]), reference=2)


def test_alr_rejects_bad_sum():
    with pytest.raises(DomainError, match="sum to one"):
        alr(np.array([0.2, 0.3, 0.4]), reference=2)


def test_validate_composition_rejects_negative_and_nonfinite():
    with pytest.raises(DomainError, match="negative"):
        validate_composition([-0.1, 0.6, 0.5])
    with pytest.raises(DomainError, match="non-finite"):
        validate_composition([np.nan, 0.5, 0.5])


def test_softmax_inverse_moderate_values_frozen():
    # frozen against a 60-digit evaluation of exp(z_j) / (1 + sum exp(z))
    z = np.array([1.25, -0.5, 3.0])
    p = softmax_inverse(z, reference=3)
    expected = [
        0.1386024166299548997,
        0.02408548850954881794,
        0.7976018376395996197,
        0.03971025722089666268,
    ]
    npt.assert_allclose(p, expected, rtol=1e-15)


def test_softmax_inverse_extreme_values_no_overflow():
    # frozen against a 60-digit evaluation; the +-700 range overflows a
    # naive exp(z) implementation but not the max-shifted one
    z = np.array([700.0, -700.0, 350.0])
    p = softmax_inverse(z, reference=3)
    assert np.all(np.isfinite(p))
    npt.assert_allclose(p[0], 1.0, rtol=1e-15)
    npt.assert_allclose(p[2], 9.9295903962649792963e-153, rtol=1e-13)
    npt.assert_allclose(p[3], 9.8596765437597708567e-305, rtol=1e-13)
    assert p[1] == 0.0  # true value ~1e-609 underflows float64


def test_round_trip_composition_to_coordinates():
    rng = np.random.default_rng(7)
    p = rng.dirichlet(np.ones(6), size=40)
    z = alr(p, reference=5)
    back = softmax_inverse(z, reference=5)
    npt.assert_allclose(back, p, rtol=0, atol=1e-13)


def test_round_trip_coordinates_to_composition():
    rng = np.random.default_rng(8)
    z = rng.normal(scale=3.0, size=(25, 4))
    layout = (4, 0, 3, 1)
    p = softmax_inverse(z, reference=2, layout=layout)
    npt.assert_allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-14)
    back = alr(p, reference=2, layout=layout)
    npt.assert_allclose(back, z, rtol=0, atol=1e-12)


def test_softmax_inverse_matches_direct_formula():
    # independent route: the textbook formula, safe for moderate z
    rng = np.random.default_rng(9)
    z = rng.normal(size=(10, 3))
    p = softmax_inverse(z, reference=3)
    denom = 1.0 + np.exp(z).sum(axis=1, keepdims=True)
    direct = np.hstack([np.exp(z) / denom, 1.0 / denom])
    npt.assert_allclose(p, direct, rtol=1e-14)


def test_canonical_layout_orders_noncandidates_first():
    assert canonical_layout(6, reference=5, candidates={4, 5}) == (0, 1, 2, 3, 4)
    assert canonical_layout(6, reference=4, candidates={4, 5}) == (0, 1, 2, 3, 5)
    assert canonical_layout(4, reference=1) == (0, 2, 3)
    assert canonical_layout(7, reference=3, candidates={1, 3, 5}) == (0, 2, 4, 6, 1, 5)


def test_canonical_layout_requires_reference_in_candidates():
    with pytest.raises(LayoutError, match="candidate"):
        canonical_layout(5, reference=0, candidates={3, 4})


def test_operator_canonical_matrix_form():
    # swapping with the last coordinate gives the block form [[I, -1], [0, -1]]
    op = reference_change_operator(4, 3, layout_in=(0, 1, 2, 3))
    expected = np.array(
        [
            [1.0, 0.0, 0.0, -1.0],
            [0.0, 1.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, -1.0],
            [0.0, 0.0, 0.0, -1.0],
        ]
    )
    npt.assert_array_equal(op.matrix, expected)
    assert op.layout_out == (0, 1, 2, 4)


def test_operator_is_involutory():
    layouts = [
        (5, (0, 1, 2, 3, 4), 4),
        (2, (0, 1, 3, 4, 5), 5),
        (0, (3, 1, 4, 2), 4),
    ]
    for from_ref, layout, to_ref in layouts:
        op = reference_change_operator(from_ref, to_ref, layout)
        npt.assert_array_equal(op.matrix @ op.matrix, np.eye(len(layout)))
        back = reference_change_operator(to_ref, from_ref, op.layout_out)
        npt.assert_array_equal(back.matrix, op.matrix)
        assert back.layout_out == layout


def test_operator_round_trips_data():
    rng = np.random.default_rng(11)
    z = rng.normal(size=(30, 5))
    op = reference_change_operator(5, 4, layout_in=(0, 1, 2, 3, 4))
    npt.assert_allclose(op.apply(op.apply(z)), z, rtol=0, atol=1e-14)


def test_operator_agrees_with_recomputed_transform():
    # independent route: push compositions through alr under each reference
    rng = np.random.default_rng(12)
    p = rng.dirichlet(np.ones(5), size=20)
    layout_a = canonical_layout(5, reference=4, candidates={3, 4})
    z_a = alr(p, reference=4, layout=layout_a)
    op = reference_change_operator(4, 3, layout_a)
    z_b_direct = alr(p, reference=3, layout=op.layout_out)
    npt.assert_allclose(op.apply(z_a), z_b_direct, rtol=0, atol=1e-12)


def test_operator_rejects_foreign_layout_out():
    with pytest.raises(LayoutError, match="derived"):
        reference_change_operator(3, 2, (0, 1, 2), layout_out=(3, 1, 0))


def test_operator_rejects_missing_target():
    with pytest.raises(LayoutError, match="must differ"):
        reference_change_operator(3, 3, (0, 1, 2))
    with pytest.raises(LayoutError, match="does not appear"):
        reference_change_operator(2, 5, (0, 1, 3))


def test_transform_gaussian_identity_covariance_frozen():
    # Sigma = I with one invariant coordinate: pushed-forward covariance is
    # [[2, 1], [1, 1]], frozen against a Monte Carlo check of the linear map
    params = GaussianParams(mu=np.zeros(2), sigma=np.eye(2))
    op = reference_change_operator(2, 1, layout_in=(0, 1))
    out = transform_gaussian(params, op)
    npt.assert_allclose(out.sigma, [[2.0, 1.0], [1.0, 1.0]], rtol=0, atol=0)
    npt.assert_allclose(out.mu, np.zeros(2), rtol=0, atol=0)


def test_transform_gaussian_matches_sample_statistics():
    # dual route: transforming samples then taking moments must agree with
    # transforming the moments (exact linear algebra, not an approximation)
    rng = np.random.default_rng(13)
    d = 4
    a = rng.normal(size=(d, d))
    sigma = a @ a.T + d * np.eye(d)
    mu = rng.normal(size=d)
    z = rng.multivariate_normal(mu, sigma, size=200)
    emp_mu = z.mean(axis=0)
    emp_sigma = np.cov(z.T)
    op = reference_change_operator(d, d - 1, layout_in=tuple(range(d)))
    out = transform_gaussian(GaussianParams(mu=emp_mu, sigma=emp_sigma), op)
    zt = op.apply(z)
    npt.assert_allclose(out.mu, zt.mean(axis=0), rtol=0, atol=1e-12)
    npt.assert_allclose(out.sigma, np.cov(zt.T), rtol=0, atol=1e-10)


def test_transform_gaussian_precision_block_invariant():
    # leading (d-1) x (d-1) precision block is untouched by the swap
    rng = np.random.default_rng(14)
    d = 6
    a = rng.normal(size=(d, d))
    sigma = a @ a.T + d * np.eye(d)
    params = GaussianParams(mu=np.zeros(d), sigma=sigma)
    params.precision()
    op = reference_change_operator(d, d - 1, layout_in=tuple(range(d)))
    out = transform_gaussian(params, op)
    b = d - 1
    npt.assert_allclose(out.omega[:b, :b], params.omega[:b, :b], rtol=0, atol=0)


def test_reference_swap_discrepancy_small_for_random_spd():
    rng = np.random.default_rng(15)
    for d in (3, 8, 20):
        a = rng.normal(size=(d, d))
        sigma = a @ a.T + d * np.eye(d)
        report = reference_swap_discrepancy(sigma)
        assert report["block_size"] == d - 1
        assert report["max_rel"] < 1e-10


def test_reference_swap_discrepancy_rejects_indefinite():
    with pytest.raises(DomainError, match="positive definite"):
        reference_swap_discrepancy(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_alr_dataset_penalized_block_and_switch():
    rng = np.random.default_rng(16)
    p = rng.dirichlet(np.ones(6), size=15)
    layout = canonical_layout(6, reference=5, candidates={4, 5})
    data = AlrDataset(
        z=alr(p, reference=5, layout=layout),
        reference=5,
        layout=layout,
        candidates=frozenset({4, 5}),
    )
    assert data.penalized_block == (0, 1, 2, 3)
    assert data.n_taxa == 6

    switched = data.switch_reference(4)
    assert switched.reference == 4
    assert switched.layout == (0, 1, 2, 3, 5)
    # block coordinates keep carrying the same taxa after the switch
    assert switched.penalized_block == data.penalized_block
    npt.assert_allclose(
        switched.z, alr(p, reference=4, layout=switched.layout), rtol=0, atol=1e-12
    )


def test_alr_dataset_rejects_switch_outside_candidates():
    data = AlrDataset(
        z=np.zeros((3, 4)),
        reference=4,
        layout=(0, 1, 2, 3),
        candidates=frozenset({3, 4}),
    )
    with pytest.raises(LayoutError, match="candidate"):
        data.switch_reference(1)
