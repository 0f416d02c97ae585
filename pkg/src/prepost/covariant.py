"""Covariant direction estimation with spin-1/2 particles.

For a seed state ``chi`` on N spins the fidelity of a covariant rank-one
measurement with seed ``|m>`` is the Rayleigh ratio ``<m|C|m> / <m|D|m>``
where

    C = int dU  U^dag |chi><chi| U  cos^2(Phi/2),
    D = int dU  U^dag |chi><chi| U,

``Phi`` being the angle between +z and ``U`` applied to +z. The integrals
run over SU(2) with the normalized Haar measure, discretized with Euler
angles ``U = Rz(a) Ry(b) Rz(g)``: Gauss-Legendre in ``cos b`` and uniform
rules in ``a`` and ``g``. Every integrand is a trigonometric polynomial of
degree at most ``2N + 2`` per angle, so ``order = 2N + 4`` is exact up to
roundoff. ``cos^2(Phi/2)`` equals ``|U_00|^2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import SingularD
from .instruments import Normalization, Povm
from .qcore import (
    DERIVED_TOL,
    PLUS_Z,
    Direction,
    dicke_embedding,
    product_spin_state,
    su2_rotation,
)

# Optimal covariant fidelities without any post-selection for the
# antiparallel state (N = 2, 4, 6), as reported in the literature.
ANTIPARALLEL_NO_POST_BASELINE = {2: 0.7887, 4: 0.8848, 6: 0.9235}


class Pattern(enum.Enum):
    PARALLEL = "parallel"
    ANTIPARALLEL = "antiparallel"


class Representation(enum.Enum):
    SYMMETRIC = "symmetric"
    FULL = "full"


@dataclass(frozen=True)
class CovariantProblem:
    n_spins: int
    pattern: Pattern = Pattern.PARALLEL
    quadrature_order: int | None = None
    representation: Representation | None = None

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        rep = self.representation
        if rep is None:
            rep = Representation.SYMMETRIC if self.pattern is Pattern.PARALLEL else Representation.FULL
        object.__setattr__(self, "representation", Representation(rep))
        if self.n_spins < 1:
            raise ValueError("need at least one spin")
        if self.pattern is Pattern.ANTIPARALLEL and self.n_spins % 2:
            raise ValueError("the antiparallel pattern needs an even number of spins")
        if self.pattern is Pattern.ANTIPARALLEL and self.representation is Representation.SYMMETRIC:
            raise ValueError("the symmetric representation only holds the parallel state")
        if self.quadrature_order is not None and self.quadrature_order < 1:
            raise ValueError("quadrature order must be positive")

    @property
    def order(self) -> int:
        return self.quadrature_order or exact_order(self.n_spins)

    @property
    def dim(self) -> int:
        return self.n_spins + 1 if self.representation is Representation.SYMMETRIC else 2**self.n_spins

    def seed_state(self) -> np.ndarray:
        """The un-rotated encoding state ``chi`` in the chosen representation."""
        if self.representation is Representation.SYMMETRIC:
            out = np.zeros(self.n_spins + 1, dtype=complex)
            out[-1] = 1.0
            return out
        half = self.n_spins // 2
        if self.pattern is Pattern.PARALLEL:
            return product_spin_state([0] * self.n_spins)
        return product_spin_state([0] * half + [1] * half)


@dataclass
class FidelityPair:
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=complex)
        self.D = np.asarray(self.D, dtype=complex)
        if self.C.shape != self.D.shape or self.C.shape[0] != self.C.shape[1]:
            raise ValueError("C and D must be square matrices of equal shape")

    @property
    def dim(self) -> int:
        return self.C.shape[0]


def exact_order(n_spins: int) -> int:
    return 2 * n_spins + 4


def build_CD_parallel(n_spins: int) -> FidelityPair:
    """Closed-form C and D for N parallel spins in the ``S_z`` basis (m ascending)."""
    if n_spins < 1:
        raise ValueError("need at least one spin")
    m = np.arange(n_spins + 1) - n_spins / 2
    c = (m + n_spins / 2 + 1) / ((n_spins + 1) * (n_spins + 2))
    return FidelityPair(np.diag(c).astype(complex), np.eye(n_spins + 1, dtype=complex) / (n_spins + 1))


def haar_nodes(order: int, alpha_nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """SU(2) quadrature: ``(U, w)`` with ``U`` of shape ``(n, 2, 2)`` and ``sum w = 1``.

    Euler angles ``Rz(a) Ry(b) Rz(g)`` with ``a, g`` on ``[0, 2 pi)``: this
    covers SU(2) modulo ``U -> -U``, so the rule is exact only for integrands
    even under that sign flip (all ``U ... U^dag`` conjugations are).
    ``alpha_nodes`` overrides the number of nodes for the leftmost angle; one
    node suffices when the integrand does not depend on it.
    """
    x, wb = np.polynomial.legendre.leggauss(order)
    beta = np.arccos(x)
    n_alpha = alpha_nodes or order
    alphas = 2 * np.pi * np.arange(n_alpha) / n_alpha
    angles = 2 * np.pi * np.arange(order) / order
    a, b, g = np.meshgrid(alphas, beta, angles, indexing="ij")
    wt = np.broadcast_to(wb[None, :, None] / 2 / order / n_alpha, a.shape)
    a, b, g, wt = (t.reshape(-1) for t in (a, b, g, wt))
    ea = np.exp(-0.5j * a)
    eg = np.exp(-0.5j * g)
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    # Rz(a) Ry(b) Rz(g)
    u = np.empty((a.size, 2, 2), dtype=complex)
    u[:, 0, 0] = ea * cb * eg
    u[:, 0, 1] = -ea * sb * eg.conj()
    u[:, 1, 0] = ea.conj() * sb * eg
    u[:, 1, 1] = ea.conj() * cb * eg.conj()
    return u, np.ascontiguousarray(wt)


def _rotated_seeds(chi: np.ndarray, n_spins: int, u: np.ndarray, symmetric: bool) -> np.ndarray:
    """Rows ``U^dag chi`` for every node (``(n_nodes, dim)``)."""
    udag = np.conj(np.swapaxes(u, 1, 2))
    if symmetric:
        return symmetric_power(udag, n_spins, columns=chi)
    chi_full = chi
    # apply udag to every spin factor of chi_full
    t = chi_full.reshape((1,) + (2,) * n_spins)
    t = np.broadcast_to(t, (u.shape[0],) + (2,) * n_spins)
    for axis in range(1, n_spins + 1):
        t = np.moveaxis(np.einsum("nij,n...j->n...i", udag, np.moveaxis(t, axis, -1)), -1, axis)
    return t.reshape(u.shape[0], -1)


def symmetric_power(v: np.ndarray, n_spins: int, columns: np.ndarray | None = None) -> np.ndarray:
    """Action of ``V^{(x)N}`` on the Dicke basis for a batch of 2x2 matrices.

    Returns ``(n, N+1, N+1)``; column ``i`` is the image of the normalized
    symmetric state with ``i`` spins up. Built by expanding
    ``(a x + c y)^i (b x + d y)^(N-i)`` with ``V = [[a, b], [c, d]]``.
    If ``columns`` (a Dicke-basis vector) is given, only its image
    ``(n, N+1)`` is returned, skipping columns where it vanishes.
    """
    v = np.asarray(v, dtype=complex)
    if v.ndim == 2:
        return symmetric_power(v[None], n_spins, columns)[0]
    n = n_spins
    # up[i][:, j]: coefficient of x^j in (a x + c y)^i; same for down with (b, d)
    up = [np.ones((v.shape[0], 1), dtype=complex)]
    down = [np.ones((v.shape[0], 1), dtype=complex)]
    for _ in range(n):
        up.append(_times_linear(up[-1], v[:, 0, 0], v[:, 1, 0]))
        down.append(_times_linear(down[-1], v[:, 0, 1], v[:, 1, 1]))
    binom = np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    wanted = range(n + 1) if columns is None else np.flatnonzero(np.asarray(columns) != 0)
    out = np.zeros((v.shape[0], n + 1, n + 1), dtype=complex) if columns is None else \
        np.zeros((v.shape[0], n + 1), dtype=complex)
    for i in wanted:
        poly = np.zeros((v.shape[0], n + 1), dtype=complex)
        p, q = up[i], down[n - i]
        for j in range(p.shape[1]):
            poly[:, j:j + q.shape[1]] += p[:, j:j + 1] * q
        col = poly * np.sqrt(binom[i] / binom)
        if columns is None:
            out[:, :, i] = col
        else:
            out += columns[i] * col
    return out


def _times_linear(poly: np.ndarray, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    """Multiply a batch of polynomials in x by ``cx x + cy`` (y set to 1)."""
    out = np.zeros((poly.shape[0], poly.shape[1] + 1), dtype=complex)
    out[:, 1:] += poly * cx[:, None]
    out[:, :-1] += poly * cy[:, None]
    return out


def _is_sz_eigenstate(chi: np.ndarray, n_spins: int, symmetric: bool) -> bool:
    support = np.flatnonzero(chi != 0)
    if symmetric:
        return support.size == 1
    downs = {bin(int(i)).count("1") for i in support}
    return len(downs) == 1


def build_CD_from_state(chi: np.ndarray, n_spins: int, order: int, symmetric: bool = False,
                        weight_power: int = 1) -> FidelityPair:
    """Haar-integrate ``U^dag |chi><chi| U`` with and without the fidelity weight.

    ``weight_power=0`` replaces ``cos^2(Phi/2)`` by 1 (then C equals D).
    """
    chi = np.asarray(chi, dtype=complex)
    # U^dag = Rz(-g) Ry(-b) Rz(-a): Rz(-a) only rephases an S_z eigenstate
    u, w = haar_nodes(order, alpha_nodes=1 if _is_sz_eigenstate(chi, n_spins, symmetric) else None)
    rows = _rotated_seeds(chi, n_spins, u, symmetric)
    fid = np.abs(u[:, 0, 0]) ** 2
    weighted = rows * w[:, None]
    D = rows.T @ weighted.conj()
    C = rows.T @ (weighted * fid[:, None] ** weight_power).conj()
    return FidelityPair((C + C.conj().T) / 2, (D + D.conj().T) / 2)


def build_CD_quadrature(problem: CovariantProblem) -> FidelityPair:
    """C and D for the problem's seed state by Haar quadrature."""
    return build_CD_from_state(problem.seed_state(), problem.n_spins, problem.order,
                               symmetric=problem.representation is Representation.SYMMETRIC)


def max_generalized_eigen(fp: FidelityPair, cutoff: float = 1e-10) -> tuple[float, np.ndarray]:
    """Largest root of ``det(C - lambda D) = 0`` on the range of D.

    D is diagonalized, its kernel (eigenvalues below ``cutoff * max``)
    discarded and the remainder whitened; the top eigenvector of the
    whitened C is mapped back to the original space.
    """
    vals, vecs = np.linalg.eigh(fp.D)
    top = vals.max(initial=0.0)
    if top <= 1e-300:
        raise SingularD("D is numerically zero")
    keep = vals > cutoff * top
    whiten = vecs[:, keep] / np.sqrt(vals[keep])
    reduced = whiten.conj().T @ fp.C @ whiten
    lam, y = np.linalg.eigh((reduced + reduced.conj().T) / 2)
    vec = whiten @ y[:, -1]
    return float(lam[-1]), vec / np.linalg.norm(vec)


def rayleigh_ratio(fp: FidelityPair, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=complex)
    return float(np.vdot(v, fp.C @ v).real / np.vdot(v, fp.D @ v).real)


@dataclass
class OptimalFidelity:
    fidelity: float
    seed_vector: np.ndarray
    order: int
    convergence_delta: float
    povm_scale: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "seed_vector": [[float(z.real), float(z.imag)] for z in self.seed_vector],
            "quadrature_order": self.order,
            "convergence_delta": self.convergence_delta,
            "povm_scale": self.povm_scale,
            **self.details,
        }


def seed_normalization(problem: CovariantProblem, seed: np.ndarray, order: int | None = None) -> float:
    """Largest ``s`` with ``s * int dU U|m><m|U^dag <= 1``.

    Only the scale of the covariant family changes; the fidelity ratio does
    not depend on it.
    """
    order = order or problem.order
    u, w = haar_nodes(order)
    # U |m> is U^dag-rotation with U -> U^dag; reuse by conjugating the nodes
    rows = _rotated_seeds(np.asarray(seed, dtype=complex), problem.n_spins,
                          np.conj(np.swapaxes(u, 1, 2)),
                          problem.representation is Representation.SYMMETRIC)
    g = rows.T @ (rows * w[:, None]).conj()
    return float(1.0 / np.linalg.eigvalsh((g + g.conj().T) / 2).max())


def optimal_fidelity(problem: CovariantProblem) -> OptimalFidelity:
    """Best covariant fidelity for the problem, with a quadrature-doubling check."""
    fp = build_CD_quadrature(problem)
    lam, vec = max_generalized_eigen(fp)
    doubled = build_CD_quadrature(CovariantProblem(
        problem.n_spins, problem.pattern, 2 * problem.order, problem.representation))
    delta = max(float(np.max(np.abs(doubled.C - fp.C))), float(np.max(np.abs(doubled.D - fp.D))))
    return OptimalFidelity(
        fidelity=lam, seed_vector=vec, order=problem.order, convergence_delta=delta,
        povm_scale=seed_normalization(problem, vec),
        details={"n_spins": problem.n_spins, "pattern": problem.pattern.value,
                 "representation": problem.representation.value},
    )


def covariant_povm(n_spins: int, grid: list[tuple[Direction, float]],
                   seed: np.ndarray | None = None) -> tuple[Povm, list[Direction]]:
    """Discretized covariant POVM on the full ``2^N`` space.

    Elements are ``w_j s R_j |m><m| R_j^dag`` over the sphere ``grid``; the
    default seed is the all-up state with ``s = N + 1``, which resolves the
    symmetric subspace exactly whenever the grid integrates degree-N
    spherical polynomials exactly. For ``N >= 2`` a last element
    ``1 - P_sym`` (guess ``+z``) completes the POVM; it never fires on
    symmetric inputs. Returns the POVM and the guessed direction for each
    outcome.
    """
    exact = seed is None
    if exact:
        seed = product_spin_state([0] * n_spins)
        scale = n_spins + 1
    else:
        scale = 1.0
    elements, guesses = [], []
    for d, w in grid:
        u = su2_rotation(d)
        rot = np.ones((1, 1), dtype=complex)
        for _ in range(n_spins):
            rot = np.kron(rot, u)
        v = rot @ seed
        elements.append(w * scale * np.outer(v, v.conj()))
        guesses.append(d)
    if exact and n_spins > 1:
        iso = dicke_embedding(n_spins)
        elements.append(np.eye(2**n_spins) - iso @ iso.conj().T)
        guesses.append(PLUS_Z)
    mode = Normalization.EXACT if exact else Normalization.SUBNORMALIZED
    return Povm(elements, mode), guesses
