import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prepost.duality import random_kraus, random_rank_one_povm
from prepost.errors import DimensionMismatch, InvalidInstrument, ZeroAcceptance
from prepost.instruments import (
    KrausSet,
    Normalization,
    Povm,
    PrePostEnsemble,
    Scenario,
    born_probability,
    conditional_prob_fixed_post,
    conditional_prob_prepost,
    deficit_operator,
    dilate_and_simulate,
    dilation_isometry,
    outcome_probabilities,
    refine_to_rank_one,
)
from prepost.qcore import SIGMA_Z, QuantumState, basis_state, random_state

EXACT, SUB = Normalization.EXACT, Normalization.SUBNORMALIZED
seeds = st.integers(0, 2**32 - 1)


def projective(dim):
    return Povm([np.outer(e, e) for e in np.eye(dim)])


def test_povm_validation():
    with pytest.raises(InvalidInstrument):
        Povm([])
    with pytest.raises(InvalidInstrument):
        Povm([np.diag([1.0, -0.1]), np.diag([0.0, 1.1])])
    with pytest.raises(InvalidInstrument):
        Povm([np.array([[0.5, 0.1], [0.0, 0.5]]), np.eye(2) / 2])
    with pytest.raises(InvalidInstrument):
        Povm([np.eye(2) / 2], EXACT)
    with pytest.raises(DimensionMismatch):
        Povm([np.eye(2), np.eye(3)], SUB)
    Povm([np.eye(2) / 2], SUB)


def test_povm_symmetrizes_tiny_defects():
    m = np.array([[1.0, 1e-13j], [0.0, 0.0]])
    povm = Povm([m, np.diag([0.0, 1.0])])
    assert np.allclose(povm.elements[0], povm.elements[0].conj().T, atol=0)


def test_povm_elements_immutable():
    povm = projective(2)
    with pytest.raises(ValueError):
        povm.elements[0][0, 0] = 2


def test_kraus_validation():
    KrausSet([np.eye(2)], SUB.value)
    with pytest.raises(InvalidInstrument):
        KrausSet([np.eye(2) / 2])
    with pytest.raises(InvalidInstrument):
        KrausSet([1.1 * np.eye(2)], SUB)
    with pytest.raises(DimensionMismatch):
        KrausSet([np.eye(2), np.eye(3)], SUB)


def test_born_requires_exact():
    with pytest.raises(InvalidInstrument):
        born_probability(Povm([np.eye(2) / 2], SUB), basis_state(2, 0))


def test_born_rule_example():
    p = born_probability(projective(2), QuantumState([1, 1], normalize=True))
    assert np.allclose(p, [0.5, 0.5])


def test_fixed_post_ratio_matches_born_for_exact(rng):
    povm = random_rank_one_povm(3, rng, EXACT)
    s = random_state(3, rng)
    assert np.allclose(conditional_prob_fixed_post(povm, s), born_probability(povm, s), atol=1e-12)


def test_fixed_post_invariant_under_scaling(rng):
    povm = random_rank_one_povm(3, rng, SUB)
    s = random_state(3, rng)
    assert np.allclose(conditional_prob_fixed_post(povm, s),
                       conditional_prob_fixed_post(povm.scaled(0.3), s), atol=1e-12)


def test_zero_acceptance():
    povm = Povm([np.diag([0.0, 1.0])], SUB)
    with pytest.raises(ZeroAcceptance):
        conditional_prob_fixed_post(povm, basis_state(2, 0))
    kraus = KrausSet([np.diag([1.0, 0.0])], SUB)
    with pytest.raises(ZeroAcceptance):
        conditional_prob_prepost(kraus, PrePostEnsemble(basis_state(2, 0), basis_state(2, 1)))


def test_prepost_dimension_check():
    kraus = KrausSet([np.ones((2, 3)) / 6], SUB)
    with pytest.raises(DimensionMismatch):
        conditional_prob_prepost(kraus, PrePostEnsemble(basis_state(2, 0), basis_state(2, 0)))


def test_prepost_deterministic_example():
    # <0|Z|0> = 1 and <0|1|0> = 1: both outcomes equally likely
    kraus = KrausSet([SIGMA_Z / np.sqrt(2), np.eye(2) / np.sqrt(2)])
    p = conditional_prob_prepost(kraus, PrePostEnsemble(basis_state(2, 0), basis_state(2, 0)))
    assert np.allclose(p, [0.5, 0.5])


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_dilation_is_isometry(seed, d, dp):
    rng = np.random.default_rng(seed)
    kraus = random_kraus(d, dp, rng, SUB)
    iso = dilation_isometry(kraus)
    assert np.allclose(iso.conj().T @ iso, np.eye(dp), atol=1e-10)
    b = deficit_operator(kraus)
    assert np.allclose(kraus.gram() + b.conj().T @ b, np.eye(dp), atol=1e-10)


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_dilation_matches_prepost_rule(seed, d, dp):
    rng = np.random.default_rng(seed)
    kraus = random_kraus(d, dp, rng, SUB)
    ens = PrePostEnsemble(random_state(dp, rng), random_state(d, rng))
    assert np.allclose(dilate_and_simulate(kraus, ens), conditional_prob_prepost(kraus, ens), atol=1e-10)


@given(seeds, st.integers(1, 5))
def test_refine_to_rank_one_preserves_probabilities(seed, dim):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, dim, dim)) + 1j * rng.normal(size=(3, dim, dim))
    elems = [a @ a.conj().T for a in g]
    total = sum(elems)
    vals, vecs = np.linalg.eigh(total)
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    povm = Povm([inv_sqrt @ m @ inv_sqrt for m in elems])
    fine, parent = refine_to_rank_one(povm)
    assert fine.mode is povm.mode
    s = random_state(dim, rng)
    coarse = np.bincount(parent, weights=born_probability(fine, s), minlength=len(povm))
    assert np.allclose(coarse, born_probability(povm, s), atol=1e-10)
    for m in fine.elements:
        assert np.linalg.matrix_rank(m, tol=1e-9) <= 1


def test_outcome_probabilities_dispatch(rng):
    povm = projective(2)
    s = basis_state(2, 1)
    assert np.allclose(outcome_probabilities(povm, Scenario.PRE_ONLY, s), [0, 1])
    assert np.allclose(outcome_probabilities(povm, "fixed_post", s), [0, 1])
    with pytest.raises(InvalidInstrument):
        outcome_probabilities(povm, Scenario.PRE_POST, s, s)
    with pytest.raises(InvalidInstrument):
        outcome_probabilities(KrausSet([np.eye(2)]), Scenario.PRE_ONLY, s)
    with pytest.raises(ValueError):
        outcome_probabilities(KrausSet([np.eye(2)]), Scenario.PRE_POST, s)
