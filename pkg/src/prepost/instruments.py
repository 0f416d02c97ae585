"""POVMs, Kraus instruments and the conditional outcome rules.

Three probability rules are implemented:

* :func:`born_probability` -- pre-selection only, normalized POVM;
* :func:`conditional_prob_fixed_post` -- pre-selection plus a fixed
  post-selected ancilla, subnormalized POVM, ratio ``<M_k> / sum <M_k'>``;
* :func:`conditional_prob_prepost` -- pre- and post-selected ensemble,
  Kraus operators, ratio ``|<f|A_k|i>|^2 / sum |<f|A_k'|i>|^2``.

:func:`dilate_and_simulate` recomputes the last rule from an explicit
isometric dilation (system, outcome register, post-selection qubit) and is
used as an independent oracle.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InvalidInstrument, ZeroAcceptance
from .qcore import DERIVED_TOL, QuantumState, as_state

ACCEPTANCE_FLOOR = 1e-14
RANK_CUTOFF = 1e-12


class Normalization(enum.Enum):
    EXACT = "exact"
    SUBNORMALIZED = "subnormalized"


class Scenario(enum.Enum):
    PRE_ONLY = "pre_only"
    FIXED_POST = "fixed_post"
    PRE_POST = "pre_post"


def _coerce_mode(mode) -> Normalization:
    return mode if isinstance(mode, Normalization) else Normalization(mode)


def _check_bounded(total: np.ndarray, mode: Normalization, tol: float, what: str) -> None:
    eye = np.eye(total.shape[0])
    if mode is Normalization.EXACT:
        defect = np.max(np.abs(total - eye))
        if defect > tol:
            raise InvalidInstrument(f"{what} sums to identity only up to {defect:.3g}")
    else:
        lo = np.linalg.eigvalsh(eye - (total + total.conj().T) / 2).min()
        if lo < -tol:
            raise InvalidInstrument(f"{what} exceeds the identity (min eigenvalue of 1 - sum = {lo:.3g})")


class Povm:
    """Finite list of positive operators with a normalization mode.

    Elements whose Hermiticity defect is below ``tol`` are symmetrized on
    ingestion; anything worse is rejected.
    """

    __slots__ = ("elements", "mode")

    def __init__(self, elements: Sequence, mode=Normalization.EXACT, *, tol: float = DERIVED_TOL):
        mode = _coerce_mode(mode)
        mats = [np.array(m, dtype=complex) for m in elements]
        if not mats:
            raise InvalidInstrument("a POVM needs at least one element")
        dim = mats[0].shape[0]
        cleaned = []
        for k, m in enumerate(mats):
            if m.shape != (dim, dim):
                raise DimensionMismatch(f"element {k} has shape {m.shape}, expected {(dim, dim)}")
            herm_defect = np.max(np.abs(m - m.conj().T))
            if herm_defect > tol:
                raise InvalidInstrument(f"element {k} is not Hermitian (defect {herm_defect:.3g})")
            m = (m + m.conj().T) / 2
            if np.linalg.eigvalsh(m).min() < -tol:
                raise InvalidInstrument(f"element {k} is not positive semidefinite")
            m.setflags(write=False)
            cleaned.append(m)
        _check_bounded(sum(cleaned), mode, tol, "POVM")
        self.elements = tuple(cleaned)
        self.mode = mode

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self) -> str:
        return f"Povm({len(self)} elements, dim={self.dim}, mode={self.mode.value})"

    def scaled(self, factor: float) -> "Povm":
        mode = self.mode if factor == 1 else Normalization.SUBNORMALIZED
        return Povm([factor * m for m in self.elements], mode)


class KrausSet:
    """Kraus operators ``A_k : C^{d'} -> C^{d}`` sharing one shape.

    ``Exact`` requires ``sum A_k^dag A_k = 1``, ``Subnormalized`` only ``<= 1``.
    """

    __slots__ = ("operators", "mode")

    def __init__(self, operators: Sequence, mode=Normalization.EXACT, *, tol: float = DERIVED_TOL):
        mode = _coerce_mode(mode)
        ops = [np.array(a, dtype=complex) for a in operators]
        if not ops:
            raise InvalidInstrument("a Kraus set needs at least one operator")
        shape = ops[0].shape
        if len(shape) != 2:
            raise DimensionMismatch("Kraus operators must be matrices")
        for k, a in enumerate(ops):
            if a.shape != shape:
                raise DimensionMismatch(f"operator {k} has shape {a.shape}, expected {shape}")
            a.setflags(write=False)
        _check_bounded(self._gram(ops), mode, tol, "sum A^dag A")
        self.operators = tuple(ops)
        self.mode = mode

    @staticmethod
    def _gram(ops) -> np.ndarray:
        return sum(a.conj().T @ a for a in ops)

    def gram(self) -> np.ndarray:
        """``sum_k A_k^dag A_k``."""
        return self._gram(self.operators)

    @property
    def dim_out(self) -> int:
        return self.operators[0].shape[0]

    @property
    def dim_in(self) -> int:
        return self.operators[0].shape[1]

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self):
        return iter(self.operators)

    def __repr__(self) -> str:
        return (f"KrausSet({len(self)} operators, {self.dim_in}->{self.dim_out}, "
                f"mode={self.mode.value})")

    def scaled(self, factor: float) -> "KrausSet":
        mode = self.mode if factor == 1 else Normalization.SUBNORMALIZED
        return KrausSet([factor * a for a in self.operators], mode)


@dataclass(frozen=True)
class PrePostEnsemble:
    """Pre-selected state (dim d') and post-selected state (dim d)."""

    pre: QuantumState
    post: QuantumState

    def __post_init__(self):
        object.__setattr__(self, "pre", as_state(self.pre))
        object.__setattr__(self, "post", as_state(self.post))


Instrument = Union[Povm, KrausSet]


# ---------------------------------------------------------------------------
# probability rules


def _expectations(povm: Povm, s: QuantumState) -> np.ndarray:
    s = as_state(s)
    if s.dim != povm.dim:
        raise DimensionMismatch(f"state has dim {s.dim}, POVM acts on dim {povm.dim}")
    v = s.amplitudes
    return np.array([np.vdot(v, m @ v).real for m in povm.elements])


def _ratio(weights: np.ndarray, what: str) -> np.ndarray:
    total = weights.sum()
    if total <= ACCEPTANCE_FLOOR:
        raise ZeroAcceptance(f"{what}: acceptance probability {total:.3g} below {ACCEPTANCE_FLOOR}")
    return weights / total


def born_probability(povm: Povm, s: QuantumState) -> np.ndarray:
    """Outcome distribution ``<s|M_k|s>`` of a normalized POVM."""
    if povm.mode is not Normalization.EXACT:
        raise InvalidInstrument("born_probability requires an exact POVM; "
                                "use conditional_prob_fixed_post for subnormalized ones")
    return _expectations(povm, s)


def conditional_prob_fixed_post(povm: Povm, s: QuantumState) -> np.ndarray:
    """Outcome distribution conditional on a fixed post-selection succeeding."""
    return _ratio(_expectations(povm, s), "fixed post-selection")


def stable_apply(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``a @ v`` with entries below their rounding-error bound set to zero.

    The bound is ``4 n u sum_j |a_ij| |v_j|`` (``u`` the unit roundoff), so
    an amplitude that vanishes analytically comes out as exactly 0.
    """
    a = np.asarray(a)
    v = np.asarray(v)
    out = a @ v
    bound = 4 * a.shape[-1] * np.finfo(float).eps * (np.abs(a) @ np.abs(v))
    return np.where(np.abs(out) <= bound, 0, out)


def prepost_weights(kraus: KrausSet, ensemble: PrePostEnsemble) -> np.ndarray:
    """Unnormalized joint weights ``|<post|A_k|pre>|^2``."""
    pre, post = ensemble.pre, ensemble.post
    if pre.dim != kraus.dim_in or post.dim != kraus.dim_out:
        raise DimensionMismatch(
            f"ensemble dims (post {post.dim}, pre {pre.dim}) do not match "
            f"Kraus shape {kraus.dim_out}x{kraus.dim_in}"
        )
    bra = post.bra()[None, :]
    return np.array([abs(stable_apply(bra @ a, pre.amplitudes)[0]) ** 2 for a in kraus.operators])


def conditional_prob_prepost(kraus: KrausSet, ensemble: PrePostEnsemble) -> np.ndarray:
    """Outcome distribution for a pre- and post-selected ensemble."""
    return _ratio(prepost_weights(kraus, ensemble), "pre/post-selection")


def refine_to_rank_one(povm: Povm, cutoff: float = RANK_CUTOFF) -> tuple[Povm, tuple[int, ...]]:
    """Split every element into rank-one pieces from its eigendecomposition.

    Returns the refined POVM (same mode) and, for each refined outcome, the
    index of the original element it came from. Eigenvalues below ``cutoff``
    are dropped.
    """
    pieces, parent = [], []
    for k, m in enumerate(povm.elements):
        vals, vecs = np.linalg.eigh(m)
        kept = 0
        for lam, v in zip(vals, vecs.T):
            if lam > cutoff:
                pieces.append(lam * np.outer(v, v.conj()))
                parent.append(k)
                kept += 1
        if kept == 0:
            # keep the outcome alive so labels stay aligned
            pieces.append(np.zeros_like(m))
            parent.append(k)
    return Povm(pieces, povm.mode), tuple(parent)


def deficit_operator(kraus: KrausSet) -> np.ndarray:
    """``sqrt(1 - sum A^dag A)`` (zero for an exact set)."""
    gap = np.eye(kraus.dim_in) - kraus.gram()
    vals, vecs = np.linalg.eigh((gap + gap.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def dilation_isometry(kraus: KrausSet) -> np.ndarray:
    """Isometry ``|psi> -> sum_k A_k|psi> |k>_R |0>_P + B|psi> |0>_R |1>_P``.

    The system register is padded to ``max(d, d')`` so that the deficit
    branch ``B = sqrt(1 - sum A^dag A)`` fits. Index order: system, register,
    post-selection qubit.
    """
    d_out, d_in = kraus.dim_out, kraus.dim_in
    dim_sys = max(d_out, d_in)
    n_out = len(kraus)
    iso = np.zeros((dim_sys, n_out, 2, d_in), dtype=complex)
    for k, a in enumerate(kraus.operators):
        iso[:d_out, k, 0, :] = a
    iso[:d_in, 0, 1, :] = deficit_operator(kraus)
    return iso.reshape(dim_sys * n_out * 2, d_in)


def dilate_and_simulate(kraus: KrausSet, ensemble: PrePostEnsemble) -> np.ndarray:
    """Conditional outcome distribution from the explicit dilation.

    Applies the dilation to the pre-selected state and projects onto
    ``<post| <k|_R <0|_P`` for every ``k``, then renormalizes over the
    accepted branches.
    """
    pre, post = ensemble.pre, ensemble.post
    if pre.dim != kraus.dim_in or post.dim != kraus.dim_out:
        raise DimensionMismatch("ensemble does not match the Kraus shape")
    iso = dilation_isometry(kraus)
    dim_sys = max(kraus.dim_out, kraus.dim_in)
    out = (iso @ pre.amplitudes).reshape(dim_sys, len(kraus), 2)
    post_padded = np.zeros(dim_sys, dtype=complex)
    post_padded[: post.dim] = post.amplitudes
    amps = post_padded.conj() @ out[:, :, 0]
    return _ratio(np.abs(amps) ** 2, "dilation")


def outcome_probabilities(instrument: Instrument, scenario: Scenario,
                          pre: QuantumState, post: QuantumState | None = None) -> np.ndarray:
    """Dispatch to the probability rule of ``scenario``."""
    scenario = Scenario(scenario)
    if scenario is Scenario.PRE_POST:
        if not isinstance(instrument, KrausSet):
            raise InvalidInstrument("pre/post-selected scenario needs a KrausSet")
        if post is None:
            raise ValueError("pre/post-selected scenario needs a post-selected state")
        return conditional_prob_prepost(instrument, PrePostEnsemble(pre, post))
    if not isinstance(instrument, Povm):
        raise InvalidInstrument(f"{scenario.value} scenario needs a Povm")
    if scenario is Scenario.PRE_ONLY:
        return born_probability(instrument, pre)
    return conditional_prob_fixed_post(instrument, pre)


Estimator = Union[Callable[[int], Any], Sequence[Any]]


def estimate(estimator: Estimator, k: int):
    return estimator(k) if callable(estimator) else estimator[k]


def average_merit(problem, instrument: Instrument, estimator: Estimator,
                  scenario: Scenario, grid: Sequence[tuple[Any, float]]) -> float:
    """Expected merit ``sum_theta w(theta) sum_k P(k|theta) F(theta, est(k))``.

    ``grid`` is a finite list of ``(theta, weight)`` pairs standing in for
    the prior; weights are used as given. ``problem`` provides
    ``encode_pre``, ``encode_post`` (optional) and ``merit``.
    """
    scenario = Scenario(scenario)
    guesses = [estimate(estimator, k) for k in range(len(instrument))]
    total = 0.0
    for theta, weight in grid:
        pre = problem.encode_pre(theta)
        post = problem.encode_post(theta) if scenario is Scenario.PRE_POST else None
        try:
            probs = outcome_probabilities(instrument, scenario, pre, post)
        except ZeroAcceptance as exc:
            raise ZeroAcceptance(str(exc), theta=theta) from exc
        total += weight * sum(p * problem.merit(theta, g) for p, g in zip(probs, guesses))
    return float(total)
