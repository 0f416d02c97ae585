"""Unambiguous discrimination of two product states, with and without post-selection.

States: ``psi_pm = alpha|0> +- beta|1>`` and ``phi_pm = sqrt(1-eps^2)|0> +- eps|1>``.
Without post-selection Bob receives ``psi_pm (x) phi_pm``; with it he faces the
ensemble ``<phi_pm|| psi_pm>``. Outcome labels are ``+``, ``-`` and ``0``
(inconclusive), in that index order.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .instruments import KrausSet, Normalization, PrePostEnsemble, conditional_prob_prepost
from .qcore import QuantumState

OUTCOMES = ("+", "-", "0")
DEFAULT_ALPHA_SQ = 0.8
DEFAULT_EPSILONS = (0.1, 0.05, 0.025)


@dataclass(frozen=True)
class UseParams:
    alpha: float
    beta: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not (self.alpha > self.beta > 0):
            raise ValueError("need alpha > beta > 0")
        if abs(self.alpha**2 + self.beta**2 - 1) > 1e-12:
            raise ValueError("need alpha^2 + beta^2 = 1")
        if not (0 <= self.epsilon < 1):
            raise ValueError("need 0 <= epsilon < 1")

    @classmethod
    def from_alpha_sq(cls, alpha_sq: float, epsilon: float = 0.0) -> "UseParams":
        if not (0.5 < alpha_sq < 1):
            raise ValueError("need 1/2 < alpha^2 < 1")
        return cls(float(np.sqrt(alpha_sq)), float(np.sqrt(1 - alpha_sq)), epsilon)

    @property
    def overlap(self) -> float:
        """``<psi_+ phi_+ | psi_- phi_->``."""
        return (self.alpha**2 - self.beta**2) * (1 - 2 * self.epsilon**2)

    def psi(self, sign: str) -> QuantumState:
        s = _sign(sign)
        return QuantumState([self.alpha, s * self.beta])

    def psi_perp(self, sign: str) -> np.ndarray:
        """``beta|0> -+ alpha|1>`` (orthogonal to ``psi(sign)``)."""
        s = _sign(sign)
        return np.array([self.beta, -s * self.alpha], dtype=complex)

    def phi(self, sign: str) -> QuantumState:
        s = _sign(sign)
        return QuantumState([np.sqrt(1 - self.epsilon**2), s * self.epsilon])


def _sign(sign: str) -> int:
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return 1 if sign == "+" else -1


@dataclass(frozen=True)
class UseNoPost:
    p_success: float
    p_inconclusive: float


def use_optimal_no_post(p: UseParams) -> UseNoPost:
    """Reference no-post-selection rates ``sqrt(1 - overlap^2)`` and its complement.

    This closed form is the contract for the gap table. It is not the
    true unambiguous-discrimination optimum for two pure states with equal
    priors, which is ``1 - |overlap|`` (see :func:`ivanovic_dieks_peres`).
    """
    success = float(np.sqrt(1 - p.overlap**2))
    return UseNoPost(success, 1.0 - success)


def ivanovic_dieks_peres(p: UseParams) -> UseNoPost:
    """Standard equal-prior unambiguous discrimination optimum ``1 - |overlap|``."""
    success = 1.0 - abs(p.overlap)
    return UseNoPost(success, abs(p.overlap))


def use_prepost_instrument(p: UseParams) -> KrausSet:
    """Kraus triple ``(A+, A-, A0)`` for the pre/post-selected problem.

    ``A+ = |0><psi_-perp| / sqrt(2 alpha^2)``,
    ``A- = |0><psi_+perp| / sqrt(2 alpha^2)``,
    ``A0 = sqrt(1 - beta^2/alpha^2) |1><0|``.
    """
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex)
    norm = np.sqrt(2 * p.alpha**2)
    a_plus = np.outer(zero, p.psi_perp("-").conj()) / norm
    a_minus = np.outer(zero, p.psi_perp("+").conj()) / norm
    a_zero = np.sqrt(1 - p.beta**2 / p.alpha**2) * np.outer(one, zero)
    return KrausSet([a_plus, a_minus, a_zero], Normalization.EXACT, tol=1e-12)


def use_prepost_probabilities(p: UseParams, sign: str = "+") -> np.ndarray:
    """``P_A(. | sign)`` over ``(+, -, 0)`` from the conditional rule."""
    ens = PrePostEnsemble(pre=p.psi(sign), post=p.phi(sign))
    return conditional_prob_prepost(use_prepost_instrument(p), ens)


def use_prepost_inconclusive_closed_form(p: UseParams) -> float:
    """``P_A(0|+)`` written out: ``x / (x + 2 beta^2 (1 - eps^2))``, ``x = eps^2 alpha^2 (1 - beta^2/alpha^2)``."""
    x = p.epsilon**2 * p.alpha**2 * (1 - p.beta**2 / p.alpha**2)
    return float(x / (x + 2 * p.beta**2 * (1 - p.epsilon**2)))


def small_eps_ratio_limit(p: UseParams) -> float:
    """``lim P_A(0|+) / eps^2 = alpha^2 (1 - beta^2/alpha^2) / (2 beta^2)``."""
    return float(p.alpha**2 * (1 - p.beta**2 / p.alpha**2) / (2 * p.beta**2))


@dataclass(frozen=True)
class GapRow:
    epsilon: float
    p_m_inconclusive: float
    p_a_inconclusive: float
    ratio: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def use_gap_report(alpha_sq: float = DEFAULT_ALPHA_SQ, epsilons=DEFAULT_EPSILONS) -> list[GapRow]:
    """Inconclusive rates with and without post-selection over a list of ``eps``.

    ``ratio`` is ``P_A(0|+) / eps^2`` (``None`` at ``eps = 0``, where both
    ``phi`` states coincide and the ratio is undefined).
    """
    rows = []
    for eps in epsilons:
        p = UseParams.from_alpha_sq(alpha_sq, float(eps))
        p_m = use_optimal_no_post(p).p_inconclusive
        p_a = float(use_prepost_probabilities(p, "+")[2])
        rows.append(GapRow(float(eps), p_m, p_a, p_a / eps**2 if eps > 0 else None))
    return rows


GAP_FIELDS = ("epsilon", "p_m_inconclusive", "p_a_inconclusive", "ratio")


def gap_rows_to_csv(rows: list[GapRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=GAP_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if v is None else repr(v)) for k, v in r.to_dict().items()})
    return buf.getvalue()
