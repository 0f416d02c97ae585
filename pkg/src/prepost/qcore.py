"""Complex linear-algebra primitives: states, operators, SU(2) rotations.

Operators are plain complex ``numpy`` arrays; properties such as
Hermiticity or unitarity are checked by the predicates below rather than
encoded in types. States are wrapped in :class:`QuantumState`, which
guarantees unit norm, so that unnormalized vectors (returned as bare
arrays) are never confused with physical states.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import comb
from typing import Iterable, Union

import numpy as np

NORM_TOL = 1e-12
DERIVED_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


class QuantumState:
    """Unit vector of complex amplitudes in the computational basis.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes. Their Euclidean norm must be 1 within ``tol``.
    normalize : bool, optional
        Rescale the input to unit norm instead of rejecting it.
    """

    __slots__ = ("_amplitudes",)

    def __init__(self, amplitudes, *, normalize: bool = False, tol: float = NORM_TOL):
        vec = np.array(amplitudes, dtype=complex).reshape(-1)
        if vec.size == 0:
            raise ValueError("a state needs at least one amplitude")
        norm = np.linalg.norm(vec)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / norm
        elif abs(norm - 1.0) > tol:
            raise ValueError(f"amplitudes have norm {norm!r}, expected 1")
        vec.setflags(write=False)
        self._amplitudes = vec

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amplitudes

    @property
    def dim(self) -> int:
        return self._amplitudes.size

    def bra(self) -> np.ndarray:
        return self._amplitudes.conj()

    def projector(self) -> np.ndarray:
        return np.outer(self._amplitudes, self._amplitudes.conj())

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self._amplitudes, dtype=dtype)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"QuantumState({np.array2string(self._amplitudes, precision=4)})"

    def allclose(self, other: "QuantumState", atol: float = DERIVED_TOL) -> bool:
        return self.dim == other.dim and np.allclose(
            self._amplitudes, other._amplitudes, atol=atol, rtol=0
        )


StateLike = Union[QuantumState, np.ndarray]


def as_state(x) -> QuantumState:
    """Coerce ``x`` to a :class:`QuantumState`, validating its norm."""
    if isinstance(x, QuantumState):
        return x
    return QuantumState(x)


def basis_state(dim: int, index: int) -> QuantumState:
    vec = np.zeros(dim, dtype=complex)
    vec[index] = 1.0
    return QuantumState(vec)


@dataclass(frozen=True)
class Direction:
    """Point on the unit sphere, polar angle ``theta`` and azimuth ``phi`` (radians)."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= np.pi):
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2 * np.pi):
            raise ValueError(f"phi={self.phi} outside [0, 2pi)")

    @classmethod
    def from_vector(cls, v) -> "Direction":
        x, y, z = np.asarray(v, dtype=float) / np.linalg.norm(v)
        theta = float(np.arccos(np.clip(z, -1.0, 1.0)))
        phi = float(np.arctan2(y, x)) % (2 * np.pi)
        if phi >= 2 * np.pi:
            phi = 0.0
        return cls(theta, phi)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Direction":
        """Uniformly distributed direction."""
        cos_t = rng.uniform(-1.0, 1.0)
        return cls(float(np.arccos(cos_t)), float(rng.uniform(0.0, 2 * np.pi)))

    def vector(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


PLUS_Z = Direction(0.0, 0.0)


def direction_fidelity(true: Direction, guess: Direction) -> float:
    """``cos^2(Phi/2) = (1 + n . n') / 2`` for the angle ``Phi`` between directions."""
    return float((1.0 + true.vector() @ guess.vector()) / 2)


# ---------------------------------------------------------------------------
# predicates


def is_hermitian(op: np.ndarray, tol: float = DERIVED_TOL) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.max(np.abs(op - op.conj().T), initial=0.0) <= tol


def is_psd(op: np.ndarray, tol: float = DERIVED_TOL) -> bool:
    if not is_hermitian(op, tol):
        return False
    return np.linalg.eigvalsh((op + op.conj().T) / 2).min() >= -tol


def is_unitary(op: np.ndarray, tol: float = NORM_TOL) -> bool:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        return False
    return np.max(np.abs(op.conj().T @ op - np.eye(op.shape[0]))) <= tol


def bloch_vector(s: StateLike) -> np.ndarray:
    """Expectation values of the Pauli matrices for a single qubit."""
    v = np.asarray(s, dtype=complex)
    return np.array([np.vdot(v, P @ v).real for P in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


# ---------------------------------------------------------------------------
# operations


def conjugate_in_basis(s: QuantumState) -> QuantumState:
    """Complex-conjugate every amplitude in the computational basis."""
    return QuantumState(np.conj(s.amplitudes))


def tensor(a, b, *more):
    """Kronecker product of states or of operators.

    Two :class:`QuantumState` arguments give a :class:`QuantumState`;
    arrays give an array.
    """
    items = (a, b) + more
    if all(isinstance(x, QuantumState) for x in items):
        return QuantumState(reduce(np.kron, (x.amplitudes for x in items)))
    if any(isinstance(x, QuantumState) for x in items):
        raise TypeError("cannot mix states and operators in a tensor product")
    return reduce(np.kron, (np.asarray(x, dtype=complex) for x in items))


def tensor_power(op: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return np.ones((1, 1), dtype=complex) if np.ndim(op) == 2 else np.ones(1, dtype=complex)
    return reduce(np.kron, [np.asarray(op, dtype=complex)] * n)


def su2_rotation(d: Direction) -> np.ndarray:
    """SU(2) matrix rotating +z onto ``d`` about the axis z x d.

    ``exp(-i theta (-sin(phi) sx + cos(phi) sy) / 2)``; its first column is
    ``(cos(theta/2), exp(i phi) sin(theta/2))``.
    """
    c = np.cos(d.theta / 2)
    s = np.sin(d.theta / 2)
    e = np.exp(1j * d.phi)
    return np.array([[c, -np.conj(e) * s], [e * s, c]], dtype=complex)


def covariant_rotation(d: Direction, n_plain: int, n_conj: int) -> np.ndarray:
    """``U^{(x) n_plain} (x) conj(U)^{(x) n_conj}`` for ``U = su2_rotation(d)``."""
    if n_plain < 0 or n_conj < 0 or n_plain + n_conj < 1:
        raise ValueError("need n_plain + n_conj >= 1 with non-negative counts")
    u = su2_rotation(d)
    return tensor_power(u, n_plain) if n_conj == 0 else (
        np.kron(tensor_power(u, n_plain), tensor_power(u.conj(), n_conj))
    )


def spin_coherent_expansion(n_spins: int, d: Direction) -> np.ndarray:
    """Coefficients of the rotated all-up state in the ``S_z`` basis.

    Entry ``i`` corresponds to ``m = i - N/2`` (so the last entry is the
    all-up state ``m = N/2``). The coefficient of ``|m>`` is
    ``cos^{N/2+m}(t/2) sin^{N/2-m}(t/2) exp(-i (N/2-m) phi) sqrt(C(N, N/2-m))``.
    """
    if n_spins < 1:
        raise ValueError("need at least one spin")
    c = np.cos(d.theta / 2)
    s = np.sin(d.theta / 2)
    out = np.empty(n_spins + 1, dtype=complex)
    for i in range(n_spins + 1):
        down = n_spins - i
        out[i] = c**i * s**down * np.exp(-1j * down * d.phi) * np.sqrt(comb(n_spins, down))
    return out


def dicke_embedding(n_spins: int) -> np.ndarray:
    """Isometry ``(2^N, N+1)`` mapping ``|m>`` to the normalized Dicke state.

    Column ``i`` holds the symmetric state with ``N - i`` spins down, matching
    the ordering of :func:`spin_coherent_expansion`.
    """
    dim = 2**n_spins
    iso = np.zeros((dim, n_spins + 1), dtype=complex)
    for idx in range(dim):
        down = bin(idx).count("1")
        iso[idx, n_spins - down] = 1.0
    return iso / np.sqrt((iso * iso).sum(axis=0).real)


def product_spin_state(pattern: Iterable[int]) -> np.ndarray:
    """Product of ``|up>`` (0) and ``|down>`` (1) factors in the given order."""
    factors = [UP if p == 0 else DOWN for p in pattern]
    return reduce(np.kron, factors)


def sphere_grid(order: int) -> list[tuple[Direction, float]]:
    """Product quadrature on the sphere with weights summing to 1.

    Gauss-Legendre in ``cos(theta)`` with ``order`` nodes times a uniform
    ``2*order``-point rule in ``phi``. Exact for spherical polynomials of
    degree ``<= 2*order - 1``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    grid = []
    for xi, wi in zip(x, w):
        theta = float(np.arccos(xi))
        for j in range(n_phi):
            grid.append((Direction(theta, 2 * np.pi * j / n_phi), wi / 2 / n_phi))
    return grid


def random_state(dim: int, rng: np.random.Generator) -> QuantumState:
    """Haar-random pure state."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QuantumState(v, normalize=True)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
