import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prepost.duality import (
    DualityInstance,
    covariant_duality_check,
    duality_suite,
    entangled_post_equivalence,
    kraus_to_povm,
    povm_to_kraus,
    probability_gap,
    random_kraus,
    random_rank_one_povm,
    rank_one_vector,
    rotate_kraus,
    rotate_povm_vector,
)
from prepost.errors import DimensionMismatch, NonRankOne, ZeroAcceptance, ZeroInstrument
from prepost.instruments import KrausSet, Normalization, Povm, PrePostEnsemble
from prepost.qcore import Direction, random_state

EXACT, SUB = Normalization.EXACT, Normalization.SUBNORMALIZED
seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


def test_rank_one_vector_roundtrip(rng):
    v = random_state(4, rng).amplitudes * 0.7
    m = np.outer(v, v.conj())
    w = rank_one_vector(m)
    assert np.allclose(np.outer(w, w.conj()), m, atol=1e-12)


def test_rank_one_vector_rejects_rank_two():
    with pytest.raises(NonRankOne):
        rank_one_vector(np.diag([1.0, 0.5]))


def test_zero_element_maps_to_zero():
    assert np.allclose(rank_one_vector(np.zeros((3, 3))), 0)


@given(seeds, dims, dims, st.sampled_from([EXACT, SUB]))
def test_povm_to_kraus_preserves_probabilities_and_mode(seed, d, dp, mode):
    rng = np.random.default_rng(seed)
    povm = random_rank_one_povm(d * dp, rng, mode)
    kraus = povm_to_kraus(povm, DualityInstance(d, dp))
    assert kraus.mode is mode
    if mode is EXACT:
        assert np.allclose(kraus.gram(), np.eye(dp), atol=1e-10)
    phi, psi = random_state(d, rng), random_state(dp, rng)
    try:
        gap = probability_gap(povm, kraus, phi, psi)
    except ZeroAcceptance:
        return
    assert gap <= 1e-10


@given(seeds, dims, dims, st.sampled_from([EXACT, SUB]))
def test_kraus_to_povm_is_subnormalized_and_equivalent(seed, d, dp, mode):
    rng = np.random.default_rng(seed)
    try:
        kraus = random_kraus(d, dp, rng, mode)
    except ValueError:
        return
    povm, c = kraus_to_povm(kraus, DualityInstance(d, dp))
    assert povm.mode is SUB
    assert c > 0
    # scale chosen so that the POVM touches the identity bound
    top = np.linalg.eigvalsh(sum(povm.elements)).max()
    assert np.isclose(top, 1.0)
    phi, psi = random_state(d, rng), random_state(dp, rng)
    assert probability_gap(povm, kraus, phi, psi) <= 1e-10


def test_exact_kraus_can_give_non_exact_povm():
    # the converse fails: this exact Kraus set has no exact rank-one image
    kraus = KrausSet([np.eye(2)])
    povm, _ = kraus_to_povm(kraus, DualityInstance(2, 2))
    total = sum(povm.elements)
    assert not np.allclose(total, np.eye(4))


def test_kraus_to_povm_smaller_c_same_probabilities(rng):
    kraus = random_kraus(2, 3, rng, SUB)
    inst = DualityInstance(2, 3)
    povm, c = kraus_to_povm(kraus, inst)
    small, _ = kraus_to_povm(kraus, inst, c=0.5 * c)
    phi, psi = random_state(2, rng), random_state(3, rng)
    assert probability_gap(small, kraus, phi, psi) <= 1e-10
    assert probability_gap(povm, kraus, phi, psi) <= 1e-10


def test_zero_instrument():
    with pytest.raises(ZeroInstrument):
        kraus_to_povm(KrausSet([np.zeros((2, 2))], SUB), DualityInstance(2, 2))


def test_dimension_checks(rng):
    with pytest.raises(DimensionMismatch):
        povm_to_kraus(random_rank_one_povm(5, rng), DualityInstance(2, 2))
    with pytest.raises(DimensionMismatch):
        kraus_to_povm(random_kraus(2, 3, rng), DualityInstance(3, 2))
    with pytest.raises(ValueError):
        DualityInstance(0, 2)


@given(seeds, st.integers(1, 3))
def test_entangled_post_selection_equivalence(seed, d):
    rng = np.random.default_rng(seed)
    kraus = random_kraus(d, d, rng, SUB)
    ens = PrePostEnsemble(random_state(d, rng), random_state(d, rng))
    try:
        report = entangled_post_equivalence(ens, kraus)
    except ZeroAcceptance:
        return
    assert report.passed


def test_entangled_post_needs_square(rng):
    kraus = random_kraus(2, 3, rng)
    ens = PrePostEnsemble(random_state(3, rng), random_state(2, rng))
    with pytest.raises(DimensionMismatch):
        entangled_post_equivalence(ens, kraus)


PATTERNS = [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0), (1, 1, 1, 0), (1, 1, 0, 1), (1, 1, 1, 1),
            (2, 0, 0, 1), (2, 1, 1, 0), (2, 1, 0, 2), (2, 1, 1, 2)]


@pytest.mark.parametrize("pattern", PATTERNS)
@pytest.mark.parametrize("kind", ["povm", "kraus"])
def test_covariant_duality(pattern, kind, rng):
    n, m, k, l = pattern
    d_post, d_pre = 2 ** (k + l), 2 ** (n + m - k - l)
    dirs = [Direction.random(rng) for _ in range(20)]
    if kind == "povm":
        v = random_state(d_post * d_pre, rng).amplitudes
        seed = np.outer(v, v.conj())
    else:
        seed = rng.normal(size=(d_post, d_pre)) + 1j * rng.normal(size=(d_post, d_pre))
    report = covariant_duality_check(seed, pattern, dirs, seed_kind=kind, c=0.7)
    assert report.passed, report.max_deviation


def test_covariant_rotation_preserves_probabilities(rng):
    # rotating both the seed and the ensemble leaves P_A unchanged
    pattern = (1, 1, 1, 0)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    d = Direction.random(rng)
    rotated = rotate_kraus(a, d, pattern)
    m_vec = rotate_povm_vector(np.conj(a).reshape(-1) / np.sqrt(2), d, pattern)
    assert np.allclose(np.conj(m_vec).reshape(2, 2) * np.sqrt(2), rotated, atol=1e-12)


def test_invalid_pattern():
    with pytest.raises(DimensionMismatch):
        covariant_duality_check(np.eye(2), (1, 0, 0, 2), [Direction(0.1)])


def test_duality_suite_small():
    reports = duality_suite(seed=3, instances=20, max_dim=3)
    assert all(r.passed for r in reports)
    assert reports[0].details["mode_transported"]


def test_duality_suite_trivial():
    reports = duality_suite(seed=0, instances=1, max_dim=1)
    assert all(r.passed for r in reports)


def test_duality_suite_fault_injection_detected():
    reports = duality_suite(seed=0, instances=5, max_dim=3, inject_fault=True)
    assert not reports[0].passed
