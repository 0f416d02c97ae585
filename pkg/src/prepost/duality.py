"""Mappings between rank-one POVMs and Kraus instruments.

A rank-one element ``|m_k><m_k|`` on ``C^d (x) C^{d'}`` is identified with
the ``d x d'`` coefficient matrix ``m^k[a, b] = <m_k|(|a> (x) |b>)``, i.e.
the complex conjugate of the amplitudes of ``|m_k>`` reshaped with the
post-side index ``a`` as row and the pre-side index ``b`` as column.
With that convention

    <phi|A_k|psi>  is proportional to  <m_k| (conj(phi) (x) psi)

so a POVM measured on ``conj(phi) (x) psi`` and the Kraus set measured on
the pre/post-selected ensemble ``<phi||psi>`` give identical conditional
outcome distributions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonRankOne, ZeroAcceptance, ZeroInstrument
from .instruments import (
    KrausSet,
    Normalization,
    Povm,
    PrePostEnsemble,
    conditional_prob_fixed_post,
    conditional_prob_prepost,
)
from .qcore import (
    DERIVED_TOL,
    Direction,
    QuantumState,
    conjugate_in_basis,
    covariant_rotation,
    tensor,
)

RANK_ONE_CUTOFF = 1e-12


@dataclass(frozen=True)
class DualityInstance:
    """Dimensions of the post-selected (``d``) and pre-selected (``d_prime``) spaces."""

    d: int
    d_prime: int
    conj_basis: str = "computational"

    def __post_init__(self):
        if self.d < 1 or self.d_prime < 1:
            raise ValueError("dimensions must be positive")


def rank_one_vector(element: np.ndarray, cutoff: float = RANK_ONE_CUTOFF) -> np.ndarray:
    """Return ``|m>`` with ``element == |m><m|`` (global phase arbitrary).

    Raises :class:`NonRankOne` when a second eigenvalue exceeds ``cutoff``
    times the largest one.
    """
    vals, vecs = np.linalg.eigh(element)
    top = vals[-1]
    if top <= 0:
        return np.zeros(element.shape[0], dtype=complex)
    if vals.size > 1 and vals[-2] > cutoff * top:
        raise NonRankOne(f"element has second eigenvalue {vals[-2]:.3g} (largest {top:.3g})")
    return np.sqrt(top) * vecs[:, -1]


def vector_to_kraus(m_vec: np.ndarray, d: int, d_prime: int) -> np.ndarray:
    """``A[a, b] = m[a, b] / sqrt(d)`` with ``m[a, b] = <m|a b>``."""
    return np.conj(np.asarray(m_vec)).reshape(d, d_prime) / np.sqrt(d)


def kraus_to_vector(a: np.ndarray, c: float) -> np.ndarray:
    """Amplitudes of ``|m>`` with ``<m|a b> = c A[a, b]``."""
    return np.conj(c * np.asarray(a)).reshape(-1)


def povm_to_kraus(povm: Povm, inst: DualityInstance) -> KrausSet:
    """Kraus set reproducing a rank-one POVM on the conjugated pre-selection.

    The output keeps the input's normalization mode: an exact POVM yields an
    exact Kraus set, a subnormalized one a subnormalized set.
    """
    if povm.dim != inst.d * inst.d_prime:
        raise DimensionMismatch(f"POVM dim {povm.dim} != d*d' = {inst.d * inst.d_prime}")
    ops = [vector_to_kraus(rank_one_vector(m), inst.d, inst.d_prime) for m in povm.elements]
    return KrausSet(ops, povm.mode)


def kraus_to_povm(kraus: KrausSet, inst: DualityInstance, c: float | None = None) -> tuple[Povm, float]:
    """Rank-one POVM equivalent to ``kraus``, and the scale ``c`` used.

    By default ``c = 1/sqrt(lambda_max)`` where ``lambda_max`` is the top
    eigenvalue of ``sum_k |a_k><a_k|`` over the vectorized operators, so the
    resulting POVM touches the identity bound. The output is always
    subnormalized. Any smaller ``c`` yields the same conditional
    probabilities.
    """
    if (kraus.dim_out, kraus.dim_in) != (inst.d, inst.d_prime):
        raise DimensionMismatch("Kraus shape does not match the duality instance")
    vecs = np.array([a.reshape(-1) for a in kraus.operators])
    lam_max = np.linalg.eigvalsh(vecs.T @ vecs.conj()).max() if len(vecs) else 0.0
    if lam_max <= 1e-300 or np.max(np.abs(vecs)) < 1e-150:
        raise ZeroInstrument("all Kraus operators vanish")
    if c is None:
        c = 1.0 / np.sqrt(lam_max)
    elements = []
    for a in kraus.operators:
        v = kraus_to_vector(a, c)
        elements.append(np.outer(v, v.conj()))
    return Povm(elements, Normalization.SUBNORMALIZED), float(c)


# ---------------------------------------------------------------------------
# equivalence checks


@dataclass
class EquivalenceReport:
    name: str
    instances: int
    max_deviation: float
    tolerance: float = DERIVED_TOL
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "max_deviation": float(self.max_deviation),
            "tolerance": self.tolerance,
            "passed": self.passed,
            **self.details,
        }


def probability_gap(povm: Povm, kraus: KrausSet, phi: QuantumState, psi: QuantumState) -> float:
    """``max_k |P_A(k|phi psi) - P_M(k|conj(phi) psi)|``."""
    p_m = conditional_prob_fixed_post(povm, tensor(conjugate_in_basis(phi), psi))
    p_a = conditional_prob_prepost(kraus, PrePostEnsemble(pre=psi, post=phi))
    return float(np.max(np.abs(p_m - p_a)))


def _pattern_dims(pattern: Sequence[int]) -> tuple[int, int, int, int]:
    n, m, k, l = pattern
    if min(pattern) < 0 or l > n or k > m or n + m < 1:
        raise DimensionMismatch(f"invalid pattern (n, m, k, l) = {tuple(pattern)}")
    return n, m, k, l


def _post_rotation(d: Direction, k: int, l: int) -> np.ndarray:
    """``U^{(x)k} (x) conj(U)^{(x)l}`` acting on the output (post) factors."""
    return _mixed_rotation(d, [(0, k), (1, l)])


def _pre_rotation(d: Direction, n: int, m: int, k: int, l: int) -> np.ndarray:
    """``U^{(x)(n-l)} (x) conj(U)^{(x)(m-k)}`` acting on the input (pre) factors."""
    return _mixed_rotation(d, [(0, n - l), (1, m - k)])


def _mixed_rotation(d: Direction, blocks) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for conj, count in blocks:
        if count:
            rot = covariant_rotation(d, 0, count) if conj else covariant_rotation(d, count, 0)
            out = np.kron(out, rot)
    return out


def rotate_povm_vector(m_vec: np.ndarray, d: Direction, pattern: Sequence[int]) -> np.ndarray:
    """Covariant rotation of a rank-one seed ``|m_z>``.

    The POVM acts on the pre-selected equivalent of the ensemble, whose factor
    order is ``[conj x k, plain x l, plain x (n-l), conj x (m-k)]``; every
    plain factor is rotated by ``U`` and every conjugated one by ``conj(U)``.
    """
    n, m, k, l = _pattern_dims(pattern)
    rot = _mixed_rotation(d, [(1, k), (0, l), (0, n - l), (1, m - k)])
    return rot @ m_vec


def rotate_kraus(a: np.ndarray, d: Direction, pattern: Sequence[int]) -> np.ndarray:
    """``A_d = U^k conj(U)^l A_z (U^dag)^(n-l) (conj(U)^dag)^(m-k)``."""
    n, m, k, l = _pattern_dims(pattern)
    return _post_rotation(d, k, l) @ a @ _pre_rotation(d, n, m, k, l).conj().T


def covariant_duality_check(seed: np.ndarray, pattern: Sequence[int], directions: Sequence[Direction],
                            seed_kind: str = "povm", c: float = 1.0) -> EquivalenceReport:
    """Check that the POVM/Kraus mappings commute with covariant rotation.

    ``seed`` is either a rank-one POVM element (``seed_kind="povm"``, shape
    ``2^(n+m)`` square) or a Kraus operator (``seed_kind="kraus"``, shape
    ``2^(k+l) x 2^(n+m-k-l)``). For each direction the seed is mapped then
    rotated, and rotated then mapped; the largest entrywise difference is
    reported.
    """
    n, m, k, l = _pattern_dims(pattern)
    d_post = 2 ** (k + l)
    d_pre = 2 ** (n + m - k - l)
    seed = np.asarray(seed, dtype=complex)
    worst = 0.0
    if seed_kind == "povm":
        if seed.shape != (d_post * d_pre,) * 2:
            raise DimensionMismatch(f"POVM seed must be {d_post * d_pre}x{d_post * d_pre}")
        m_z = rank_one_vector(seed)
        a_z = vector_to_kraus(m_z, d_post, d_pre)
        for d in directions:
            via_povm = vector_to_kraus(rotate_povm_vector(m_z, d, pattern), d_post, d_pre)
            via_kraus = rotate_kraus(a_z, d, pattern)
            worst = max(worst, float(np.max(np.abs(via_povm - via_kraus))))
    elif seed_kind == "kraus":
        if seed.shape != (d_post, d_pre):
            raise DimensionMismatch(f"Kraus seed must be {d_post}x{d_pre}")
        m_z = kraus_to_vector(seed, c)
        for d in directions:
            via_kraus = kraus_to_vector(rotate_kraus(seed, d, pattern), c)
            via_povm = rotate_povm_vector(m_z, d, pattern)
            worst = max(worst, float(np.max(np.abs(via_povm - via_kraus))))
    else:
        raise ValueError(f"unknown seed kind {seed_kind!r}")
    return EquivalenceReport(
        name=f"covariant-{seed_kind}", instances=len(directions), max_deviation=worst,
        details={"pattern": list(pattern)},
    )


def entangled_post_equivalence(ensemble: PrePostEnsemble, kraus: KrausSet) -> EquivalenceReport:
    """Compare ``<phi||psi>`` with ``A_k`` against an entangled post-selection.

    The right-hand side pre-selects ``conj(phi) (x) psi``, applies
    ``1 (x) A_k`` and post-selects the unnormalized functional
    ``sum_j <j| (x) <j|``.
    """
    phi, psi = ensemble.post, ensemble.pre
    dim = kraus.dim_in
    if kraus.dim_out != dim or phi.dim != dim or psi.dim != dim:
        raise DimensionMismatch("entangled post-selection needs square Kraus operators and d == d'")
    lhs = conditional_prob_prepost(kraus, ensemble)
    joint = tensor(conjugate_in_basis(phi), psi).amplitudes
    bell = np.eye(dim, dtype=complex).reshape(-1)
    eye = np.eye(dim)
    amps = np.array([bell.conj() @ (np.kron(eye, a) @ joint) for a in kraus.operators])
    weights = np.abs(amps) ** 2
    if weights.sum() <= 1e-14:
        raise ZeroAcceptance("entangled post-selection never succeeds for this instance")
    rhs = weights / weights.sum()
    return EquivalenceReport("entangled-post", 1, float(np.max(np.abs(lhs - rhs))))


# ---------------------------------------------------------------------------
# random instances and the property suite


def random_rank_one_povm(dim: int, rng: np.random.Generator, mode=Normalization.SUBNORMALIZED,
                         n_outcomes: int | None = None) -> Povm:
    """Random rank-one POVM on ``C^dim``.

    Exact POVMs come from the rows of a random isometry; subnormalized ones
    additionally shrink each element by a random factor in ``(0, 1]``.
    """
    mode = Normalization(mode)
    n_outcomes = n_outcomes or dim + int(rng.integers(0, 4))
    if n_outcomes < dim and mode is Normalization.EXACT:
        raise ValueError("an exact rank-one POVM needs at least dim outcomes")
    z = rng.normal(size=(n_outcomes, dim)) + 1j * rng.normal(size=(n_outcomes, dim))
    if n_outcomes >= dim:
        iso, _ = np.linalg.qr(z)
    else:
        iso = z / np.linalg.norm(z, 2)
    scales = np.ones(n_outcomes)
    if mode is Normalization.SUBNORMALIZED:
        scales = rng.uniform(0.05, 1.0, size=n_outcomes)
    elements = []
    for k in range(n_outcomes):
        u = np.conj(iso[k])
        elements.append(scales[k] * np.outer(u, u.conj()))
    return Povm(elements, mode)


def random_kraus(d: int, d_prime: int, rng: np.random.Generator, mode=Normalization.SUBNORMALIZED,
                 n_ops: int | None = None) -> KrausSet:
    """Random Kraus set ``C^{d'} -> C^{d}``."""
    mode = Normalization(mode)
    n_ops = n_ops or 1 + int(rng.integers(0, 4))
    g = rng.normal(size=(n_ops * d, d_prime)) + 1j * rng.normal(size=(n_ops * d, d_prime))
    if mode is Normalization.EXACT:
        if n_ops * d < d_prime:
            raise ValueError("not enough output dimensions for an exact Kraus set")
        g, _ = np.linalg.qr(g)
    else:
        g = g / np.linalg.norm(g, 2) * rng.uniform(0.3, 1.0)
    return KrausSet(list(g.reshape(n_ops, d, d_prime)), mode)


def _random_pair(rng: np.random.Generator, max_dim: int) -> tuple[int, int]:
    return int(rng.integers(1, max_dim + 1)), int(rng.integers(1, max_dim + 1))


def _safe_gap(povm, kraus, phi, psi) -> float | None:
    try:
        return probability_gap(povm, kraus, phi, psi)
    except ZeroAcceptance:
        return None


def duality_suite(seed: int = 0, instances: int = 200, max_dim: int = 4,
                  inject_fault: bool = False) -> list[EquivalenceReport]:
    """Random-instance checks of both mapping directions.

    Runs ``instances`` subnormalized rank-one POVMs through
    :func:`povm_to_kraus` (plus the same number of exact ones, checking mode
    transport), and ``instances`` subnormalized Kraus sets through
    :func:`kraus_to_povm` and back. ``inject_fault`` scales one mapped
    operator by 1.01 as a negative control.
    """
    from .qcore import random_state

    rng = np.random.default_rng(seed)
    reports = []

    worst, mode_ok, skipped = 0.0, True, 0
    for i in range(instances):
        for mode in (Normalization.SUBNORMALIZED, Normalization.EXACT):
            d, dp = _random_pair(rng, max_dim)
            povm = random_rank_one_povm(d * dp, rng, mode)
            kraus = povm_to_kraus(povm, DualityInstance(d, dp))
            mode_ok &= kraus.mode is povm.mode
            if inject_fault and i == 0:
                ops = list(kraus.operators)
                ops[0] = 1.01 * ops[0]
                kraus = KrausSet(ops, Normalization.SUBNORMALIZED, tol=1.0)
            phi, psi = random_state(d, rng), random_state(dp, rng)
            gap = _safe_gap(povm, kraus, phi, psi)
            if gap is None:
                skipped += 1
            else:
                worst = max(worst, gap)
    reports.append(EquivalenceReport(
        "povm_to_kraus", 2 * instances, worst if mode_ok else float("inf"),
        details={"mode_transported": bool(mode_ok), "skipped_zero_acceptance": skipped},
    ))

    worst, round_trip, sub_ok, skipped = 0.0, 0.0, True, 0
    for _ in range(instances):
        d, dp = _random_pair(rng, max_dim)
        inst = DualityInstance(d, dp)
        kraus = random_kraus(d, dp, rng, Normalization.SUBNORMALIZED)
        povm, _c = kraus_to_povm(kraus, inst)
        sub_ok &= povm.mode is Normalization.SUBNORMALIZED
        back = povm_to_kraus(povm, inst)
        phi, psi = random_state(d, rng), random_state(dp, rng)
        gap = _safe_gap(povm, kraus, phi, psi)
        if gap is None:
            skipped += 1
            continue
        worst = max(worst, gap)
        p_a = conditional_prob_prepost(kraus, PrePostEnsemble(pre=psi, post=phi))
        p_back = conditional_prob_prepost(back, PrePostEnsemble(pre=psi, post=phi))
        round_trip = max(round_trip, float(np.max(np.abs(p_a - p_back))))
    reports.append(EquivalenceReport(
        "kraus_to_povm", instances, max(worst, round_trip) if sub_ok else float("inf"),
        details={"round_trip_deviation": round_trip, "mode_transported": bool(sub_ok),
                 "skipped_zero_acceptance": skipped},
    ))
    return reports
