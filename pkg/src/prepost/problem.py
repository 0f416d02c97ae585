"""Estimation problems: parameter prior, encoders and merit function.

A problem bundles what Alice and Bob both know: how to draw ``theta``,
the pre-selected state ``psi_i(theta)``, optionally the post-selected state
``psi_f(theta)``, and the merit ``F(theta, guess)``. Each catalog builder
also returns a finite quadrature grid for exact analytic averages.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .qcore import (
    Direction,
    QuantumState,
    direction_fidelity,
    product_spin_state,
    sphere_grid,
    su2_rotation,
    tensor_power,
)

Grid = list  # list[tuple[theta, weight]]


@dataclass(frozen=True)
class EstimationProblem:
    sampler: Callable[[np.random.Generator], Any]
    encode_pre: Callable[[Any], QuantumState]
    merit: Callable[[Any, Any], float]
    encode_post: Callable[[Any], QuantumState] | None = None
    name: str = "problem"


def indicator_merit(theta, guess) -> float:
    return 1.0 if theta == guess else 0.0


def discrete_problem(values: Sequence, pre_states: Sequence, post_states: Sequence | None = None,
                     weights: Sequence[float] | None = None,
                     merit: Callable[[Any, Any], float] = indicator_merit,
                     name: str = "discrete") -> tuple[EstimationProblem, Grid]:
    """Problem over a finite parameter set with explicit state lists."""
    values = list(values)
    if weights is None:
        weights = np.full(len(values), 1.0 / len(values))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(values),) or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector over the values")
    pre = {v: s if isinstance(s, QuantumState) else QuantumState(s) for v, s in zip(values, pre_states)}
    post = None
    if post_states is not None:
        post = {v: s if isinstance(s, QuantumState) else QuantumState(s)
                for v, s in zip(values, post_states)}
    cdf = np.cumsum(weights)

    def sampler(rng):
        return values[min(int(np.searchsorted(cdf, rng.random(), side="right")), len(values) - 1)]

    problem = EstimationProblem(
        sampler=sampler, encode_pre=pre.__getitem__, merit=merit,
        encode_post=post.__getitem__ if post is not None else None, name=name,
    )
    return problem, list(zip(values, weights))


def spin_encoder(pattern: Sequence[int]) -> Callable[[Direction], QuantumState]:
    """``theta -> U_theta^{(x)N} |pattern>`` on the full product space."""
    base = product_spin_state(pattern)
    n = len(pattern)

    def encode(d: Direction) -> QuantumState:
        return QuantumState(tensor_power(su2_rotation(d), n) @ base, tol=1e-10)

    return encode


def sphere_problem(pattern: Sequence[int], name: str, grid_order: int | None = None
                   ) -> tuple[EstimationProblem, Grid]:
    n = len(pattern)
    problem = EstimationProblem(
        sampler=Direction.random, encode_pre=spin_encoder(pattern),
        merit=direction_fidelity, name=name,
    )
    return problem, sphere_grid(grid_order or n + 2)


def parallel_spins(n_spins: int, grid_order: int | None = None) -> tuple[EstimationProblem, Grid]:
    """Direction encoded in N parallel spins, uniform prior, fidelity merit."""
    return sphere_problem([0] * n_spins, f"parallel-spins-{n_spins}", grid_order)


def antiparallel_spins(n_spins: int, grid_order: int | None = None) -> tuple[EstimationProblem, Grid]:
    if n_spins % 2:
        raise ValueError("antiparallel encoding needs an even number of spins")
    half = n_spins // 2
    return sphere_problem([0] * half + [1] * half, f"antiparallel-spins-{n_spins}", grid_order)
