import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prepost.covariant import (
    ANTIPARALLEL_NO_POST_BASELINE,
    CovariantProblem,
    FidelityPair,
    Pattern,
    Representation,
    build_CD_from_state,
    build_CD_parallel,
    build_CD_quadrature,
    covariant_povm,
    exact_order,
    haar_nodes,
    max_generalized_eigen,
    optimal_fidelity,
    rayleigh_ratio,
    symmetric_power,
)
from prepost.errors import SingularD
from prepost.instruments import Normalization, born_probability
from prepost.qcore import (
    Direction,
    dicke_embedding,
    direction_fidelity,
    product_spin_state,
    random_unitary,
    sphere_grid,
    tensor_power,
)


def test_haar_nodes_weights_and_unitarity():
    u, w = haar_nodes(5)
    assert np.isclose(w.sum(), 1.0)
    assert np.allclose(np.einsum("nij,nkj->nik", u, u.conj()), np.eye(2), atol=1e-13)


@pytest.mark.parametrize("order", [3, 6])
def test_haar_moments(order):
    # even moments: int |U00|^2 = 1/2, int |U00|^4 = 1/3, int U00 U01 = 0,
    # int U00 U11 = 1/2 (det U = 1)
    u, w = haar_nodes(order)
    a = u[:, 0, 0]
    assert np.isclose(w @ np.abs(a) ** 2, 1 / 2)
    assert np.isclose(w @ np.abs(a) ** 4, 1 / 3)
    assert np.isclose(abs(w @ (a * u[:, 0, 1])), 0, atol=1e-13)
    assert np.isclose(w @ (a * u[:, 1, 1]), 1 / 2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_symmetric_power_matches_dicke_restriction(seed, n):
    rng = np.random.default_rng(seed)
    v = random_unitary(2, rng)
    iso = dicke_embedding(n)
    expected = iso.conj().T @ tensor_power(v, n) @ iso
    assert np.allclose(symmetric_power(v, n), expected, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_closed_form_CD_matches_quadrature(n):
    exact = build_CD_parallel(n)
    quad = build_CD_quadrature(CovariantProblem(n))
    assert np.allclose(exact.C, quad.C, atol=1e-13)
    assert np.allclose(exact.D, quad.D, atol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_full_and_symmetric_representations_agree(n):
    sym = optimal_fidelity(CovariantProblem(n, representation="symmetric"))
    full = optimal_fidelity(CovariantProblem(n, representation="full"))
    assert np.isclose(sym.fidelity, full.fidelity, atol=1e-12)


@pytest.mark.parametrize("n", range(1, 11))
def test_parallel_optimum(n):
    res = optimal_fidelity(CovariantProblem(n))
    assert abs(res.fidelity - (n + 1) / (n + 2)) < 1e-10
    assert res.convergence_delta < 1e-12
    # optimum concentrates on the all-up Dicke state
    assert abs(res.seed_vector[-1]) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("n,expected", [(2, 0.7887), (4, 0.8873), (6, 0.9306)])
def test_antiparallel_optimum(n, expected):
    res = optimal_fidelity(CovariantProblem(n, Pattern.ANTIPARALLEL))
    assert abs(res.fidelity - expected) < 5e-4
    assert res.convergence_delta < 1e-12


@pytest.mark.parametrize("n", [2, 4])
def test_antiparallel_closed_forms(n):
    # N=2: 1/2 + 1/(2 sqrt 3); N=4: 1/2 + sqrt(15)/10
    exact = {2: 0.5 + 0.5 / np.sqrt(3), 4: 0.5 + np.sqrt(15) / 10}[n]
    res = optimal_fidelity(CovariantProblem(n, Pattern.ANTIPARALLEL))
    assert res.fidelity == pytest.approx(exact, abs=1e-12)


def test_antiparallel_beats_baseline_for_large_n():
    for n in (4, 6):
        res = optimal_fidelity(CovariantProblem(n, Pattern.ANTIPARALLEL))
        assert res.fidelity > ANTIPARALLEL_NO_POST_BASELINE[n]


def test_low_quadrature_order_is_flagged():
    # an under-resolved rule changes C and D; the doubling check sees it
    res = optimal_fidelity(CovariantProblem(4, Pattern.ANTIPARALLEL, quadrature_order=2))
    assert res.convergence_delta > 1e-6


def test_problem_validation():
    with pytest.raises(ValueError):
        CovariantProblem(3, Pattern.ANTIPARALLEL)
    with pytest.raises(ValueError):
        CovariantProblem(2, Pattern.ANTIPARALLEL, representation=Representation.SYMMETRIC)
    with pytest.raises(ValueError):
        CovariantProblem(0)
    with pytest.raises(ValueError):
        CovariantProblem(2, quadrature_order=0)
    assert CovariantProblem(3).order == exact_order(3) == 10


def test_generalized_eigen_simple():
    fp = FidelityPair(np.diag([1.0, 3.0]), np.diag([1.0, 2.0]))
    lam, v = max_generalized_eigen(fp)
    assert lam == pytest.approx(1.5)
    assert rayleigh_ratio(fp, v) == pytest.approx(1.5)


def test_generalized_eigen_singular_D_is_restricted_to_range():
    fp = FidelityPair(np.diag([0.5, 100.0]), np.diag([1.0, 0.0]))
    lam, v = max_generalized_eigen(fp)
    assert lam == pytest.approx(0.5)
    with pytest.raises(SingularD):
        max_generalized_eigen(FidelityPair(np.eye(2), np.zeros((2, 2))))


@given(st.integers(0, 2**32 - 1))
def test_rayleigh_ratio_bounded_by_max(seed):
    rng = np.random.default_rng(seed)
    fp = build_CD_quadrature(CovariantProblem(2, Pattern.ANTIPARALLEL))
    lam, _ = max_generalized_eigen(fp)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert rayleigh_ratio(fp, v) <= lam + 1e-12


def test_weight_power_zero_gives_C_equal_D():
    chi = product_spin_state([0, 1])
    fp = build_CD_from_state(chi, 2, 8, weight_power=0)
    assert np.allclose(fp.C, fp.D)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_covariant_povm_is_exact_and_optimal(n):
    povm, guesses = covariant_povm(n, sphere_grid(n // 2 + 1))
    assert povm.mode is Normalization.EXACT
    from prepost.problem import parallel_spins
    problem, grid = parallel_spins(n)
    total = 0.0
    for theta, w in grid:
        p = born_probability(povm, problem.encode_pre(theta))
        total += w * sum(pk * direction_fidelity(theta, g) for pk, g in zip(p, guesses))
    assert total == pytest.approx((n + 1) / (n + 2), abs=1e-12)


def test_covariant_povm_custom_seed_is_subnormalized():
    povm, _ = covariant_povm(1, sphere_grid(2), seed=np.array([1, 0]) * 0.5)
    assert povm.mode is Normalization.SUBNORMALIZED
