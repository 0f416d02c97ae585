import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prepost.instruments import Normalization, PrePostEnsemble, dilate_and_simulate
from prepost.qcore import tensor
from prepost.scenarios import (
    GAP_FIELDS,
    UseParams,
    gap_rows_to_csv,
    ivanovic_dieks_peres,
    small_eps_ratio_limit,
    use_gap_report,
    use_optimal_no_post,
    use_prepost_inconclusive_closed_form,
    use_prepost_instrument,
    use_prepost_probabilities,
)

alpha_sq = st.floats(0.51, 0.99)
eps = st.floats(0.0, 0.95)


def test_params_validation():
    with pytest.raises(ValueError):
        UseParams(0.6, 0.8)
    with pytest.raises(ValueError):
        UseParams(0.9, 0.1)
    with pytest.raises(ValueError):
        UseParams.from_alpha_sq(0.8, 1.0)
    with pytest.raises(ValueError):
        UseParams.from_alpha_sq(0.5)
    with pytest.raises(ValueError):
        UseParams.from_alpha_sq(0.8).psi("0")


def test_states_and_perp():
    p = UseParams.from_alpha_sq(0.8, 0.3)
    for s in "+-":
        assert abs(np.vdot(p.psi_perp(s), p.psi(s).amplitudes)) < 1e-15
    overlap = np.vdot(tensor(p.psi("+"), p.phi("+")).amplitudes, tensor(p.psi("-"), p.phi("-")).amplitudes)
    assert overlap.real == pytest.approx(p.overlap)


def test_no_post_examples():
    res = use_optimal_no_post(UseParams.from_alpha_sq(0.8, 0.0))
    assert res.p_success == pytest.approx(0.8, abs=1e-12)
    assert res.p_inconclusive == pytest.approx(0.2, abs=1e-12)
    assert use_optimal_no_post(UseParams.from_alpha_sq(0.8, 2**-0.5)).p_success == pytest.approx(1.0)
    # alpha^2 - beta^2 -> 0 makes the states orthogonal-like
    assert use_optimal_no_post(UseParams.from_alpha_sq(0.5 + 1e-9)).p_success == pytest.approx(1.0)


@given(alpha_sq, eps)
def test_no_post_complement(a2, e):
    res = use_optimal_no_post(UseParams.from_alpha_sq(a2, e))
    assert res.p_success + res.p_inconclusive == pytest.approx(1.0)


@given(alpha_sq, eps)
def test_prepost_instrument_exact(a2, e):
    kraus = use_prepost_instrument(UseParams.from_alpha_sq(a2, e))
    assert kraus.mode is Normalization.EXACT
    assert np.max(np.abs(kraus.gram() - np.eye(2))) <= 1e-12


@given(alpha_sq, st.floats(0.01, 0.95))
def test_prepost_unambiguous_and_closed_form(a2, e):
    p = UseParams.from_alpha_sq(a2, e)
    plus = use_prepost_probabilities(p, "+")
    minus = use_prepost_probabilities(p, "-")
    assert plus[1] == 0.0 and minus[0] == 0.0
    assert plus[2] == pytest.approx(minus[2], abs=1e-14)
    assert plus[2] == pytest.approx(use_prepost_inconclusive_closed_form(p), abs=1e-12)


def test_prepost_matches_dilation():
    p = UseParams.from_alpha_sq(0.8, 0.1)
    kraus = use_prepost_instrument(p)
    for s in "+-":
        ens = PrePostEnsemble(p.psi(s), p.phi(s))
        assert np.allclose(dilate_and_simulate(kraus, ens), use_prepost_probabilities(p, s), atol=1e-12)


def test_gap_report_limits():
    rows = use_gap_report(0.8, [0.0, 0.1, 0.05, 0.025, 1e-4])
    p = UseParams.from_alpha_sq(0.8)
    assert rows[0].ratio is None and rows[0].p_a_inconclusive == 0.0
    assert rows[0].p_m_inconclusive == pytest.approx(1 - np.sqrt(1 - 0.6**2))
    assert rows[-1].ratio == pytest.approx(small_eps_ratio_limit(p), rel=1e-6)
    assert small_eps_ratio_limit(p) == pytest.approx(1.5)


def test_gap_witness():
    for row in use_gap_report(0.8, [0.1, 0.05, 0.025, 0.01]):
        assert row.p_a_inconclusive < row.p_m_inconclusive / 10


def test_gap_csv_roundtrip():
    import csv
    import io
    rows = use_gap_report()
    parsed = list(csv.DictReader(io.StringIO(gap_rows_to_csv(rows))))
    assert tuple(parsed[0]) == GAP_FIELDS
    for r, q in zip(rows, parsed):
        assert float(q["p_a_inconclusive"]) == r.p_a_inconclusive


def test_reference_formula_differs_from_true_optimum():
    p = UseParams.from_alpha_sq(0.8)
    assert ivanovic_dieks_peres(p).p_success == pytest.approx(0.4)
    assert use_optimal_no_post(p).p_success > ivanovic_dieks_peres(p).p_success


@pytest.mark.parametrize("a2,e", [(0.8, 0.0), (0.7, 0.2), (0.9, 0.1)])
def test_true_optimum_by_sdp(a2, e):
    cp = pytest.importorskip("cvxpy")
    p = UseParams.from_alpha_sq(a2, e)
    s = [tensor(p.psi(x), p.phi(x)).amplitudes.real for x in "+-"]
    perp = [s[1] - (s[0] @ s[1]) * s[0], s[0] - (s[0] @ s[1]) * s[1]]  # orthogonal to s[0], s[1]
    perp = [v / np.linalg.norm(v) for v in perp]
    # error-free elements must be supported on the orthogonal complements
    a = cp.Variable(nonneg=True)
    b = cp.Variable(nonneg=True)
    # perp[1] is orthogonal to s[0]: it can only fire on s[1], and vice versa
    total = a * np.outer(perp[1], perp[1]) + b * np.outer(perp[0], perp[0])
    prob = cp.Problem(cp.Maximize(0.5 * a * (s[0] @ perp[1]) ** 2 + 0.5 * b * (s[1] @ perp[0]) ** 2),
                      [np.eye(4) - total >> 0])
    prob.solve(solver="CLARABEL")
    assert prob.value == pytest.approx(ivanovic_dieks_peres(p).p_success, abs=1e-6)
