"""Quantum estimation games with pre- and post-selection.

Submodules
----------
qcore
    States, operators, SU(2) rotations and sphere quadrature.
instruments
    POVMs, Kraus sets, the three conditional probability rules and a
    dilation oracle.
duality
    Correspondence between rank-one POVMs and Kraus operators, plain and
    covariant.
covariant
    Optimal covariant direction estimation via a generalized eigenproblem.
scenarios
    Unambiguous discrimination with and without post-selection.
gamesim
    Seeded Monte-Carlo simulation of the estimation game.
cli
    ``prepost`` command-line front end.
"""
from .errors import (
    DimensionMismatch,
    InvalidInstrument,
    NonRankOne,
    PrePostError,
    RetryExhausted,
    SingularD,
    ZeroAcceptance,
    ZeroInstrument,
)
from .instruments import (
    KrausSet,
    Normalization,
    Povm,
    PrePostEnsemble,
    Scenario,
    born_probability,
    conditional_prob_fixed_post,
    conditional_prob_prepost,
    dilate_and_simulate,
)
from .qcore import Direction, QuantumState

__all__ = [
    "Direction",
    "DimensionMismatch",
    "InvalidInstrument",
    "KrausSet",
    "NonRankOne",
    "Normalization",
    "Povm",
    "PrePostEnsemble",
    "PrePostError",
    "QuantumState",
    "RetryExhausted",
    "Scenario",
    "SingularD",
    "ZeroAcceptance",
    "ZeroInstrument",
    "born_probability",
    "conditional_prob_fixed_post",
    "conditional_prob_prepost",
    "dilate_and_simulate",
]
