from fractions import Fraction

import numpy as np
import pytest

from dicke_metrology.errors import DomainError
from dicke_metrology.loss import (
    LossChain,
    apply_loss,
    four_mode_loss,
    loss_step_matrix,
    loss_trajectory,
    lossy_twin_fock,
)
from dicke_metrology.spin_algebra import build_spin_operators


def test_step_matrix_structure():
    q = loss_step_matrix(10, 4)
    np.testing.assert_allclose(q.sum(axis=0), 1.0, atol=1e-14)
    assert np.count_nonzero(np.tril(q, -1)) == 0
    assert np.count_nonzero(np.triu(q, 2)) == 0
    np.testing.assert_array_equal(loss_step_matrix(5, 0), [[1.0]])


def test_step_matrix_rows_are_not_stochastic():
    # interior rows sum to 1 + 1/n_k, so the step is column-stochastic only
    q = loss_step_matrix(10, 4)
    assert abs(q[1].sum() - 1.1) < 1e-14


def test_exact_step_matrix_columns():
    q = loss_step_matrix(7, 5, exact=True)
    for col in range(6):
        assert sum(q[row][col] for row in range(6)) == 1


def test_single_loss_from_twin_fock():
    q = loss_step_matrix(8, 4)
    p = q @ np.eye(5)[4]
    np.testing.assert_allclose(p, [0, 0, 0, 0.5, 0.5])


def test_vacuum_loss_rejected():
    with pytest.raises(DomainError):
        loss_step_matrix(0, 0)


def test_apply_loss_examples():
    mix = apply_loss(6, 2, 0)
    np.testing.assert_array_equal(mix.weights, np.eye(7)[2])
    mix = lossy_twin_fock(4, 1)
    np.testing.assert_allclose(mix.weights, [0, 0.5, 0.5, 0])
    assert mix.sector.n_particles == 3


@pytest.mark.parametrize("n,m,k", [(4, 2, 2), (6, 1, 5), (6, 0, -1)])
def test_apply_loss_range(n, m, k):
    with pytest.raises(DomainError):
        apply_loss(n, m, k)


@pytest.mark.parametrize("n", [2, 5, 8, 12])
def test_exact_chain_agrees_with_float(n):
    for m in range(n + 1):
        for k in range(max(n - m, 1)):
            exact = apply_loss(n, m, k, exact=True)
            assert sum(exact) == 1
            assert all(isinstance(x, Fraction) for x in exact)
            approx = apply_loss(n, m, k).weights
            np.testing.assert_allclose(approx, [float(x) for x in exact], atol=1e-14)


def test_mean_jz_conserved_for_twin_fock():
    for k in range(10):
        mix = lossy_twin_fock(20, k)
        jz = np.diag(build_spin_operators(mix.sector).jz).real
        assert abs(mix.weights @ jz) < 1e-12


def test_weight_flows_only_down():
    prev = apply_loss(30, 12, 0).weights
    for k in range(1, 10):
        w = apply_loss(30, 12, k).weights
        # cumulative weight on indices <= i never decreases
        assert np.all(np.cumsum(w[: 13]) >= np.cumsum(prev[: 13]) - 1e-15)
        assert np.all(w[13:] == 0)
        prev = w


def test_trajectory_matches_direct():
    for k, mix in loss_trajectory(40, 20, 10):
        np.testing.assert_allclose(mix.weights, lossy_twin_fock(40, k).weights, atol=1e-15)


def test_loss_chain_steps():
    chain = LossChain(10, 5, 3)
    p = np.eye(6)[5]
    for q in chain.steps():
        p = q @ p
    np.testing.assert_allclose(p, chain.final_weights(), atol=1e-15)


def test_four_mode_examples():
    assert four_mode_loss((1, 2, 0, 3), 0) == {(1, 2, 0, 3): 1.0}
    assert four_mode_loss((1, 1, 0, 0), 1) == {(0, 1, 0, 0): 0.5, (1, 0, 0, 0): 0.5}
    with pytest.raises(DomainError):
        four_mode_loss((1, 1, 0, 0), 2)


def test_four_mode_conserves_probability_and_order():
    for k in range(8):
        w = four_mode_loss((3, 2, 4, 1), k)
        assert abs(sum(w.values()) - 1) < 1e-12
        assert all(sum(t) == 10 - k for t in w)
        assert list(w) == sorted(w)


def test_four_mode_reduces_to_two_mode():
    # with modes 3 and 4 empty the chain is the two-mode one
    for k in range(4):
        w = four_mode_loss((4, 3, 0, 0), k)
        two = apply_loss(7, 3, k).weights
        for (a, b, _, _), p in w.items():
            assert abs(p - two[b]) < 1e-14
