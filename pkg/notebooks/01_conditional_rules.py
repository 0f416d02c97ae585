# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Three ways to condition a measurement
#
# A measurer holds an instrument and receives a state. Depending on what
# else is fixed, the outcome statistics follow different rules:
#
# * pre-selection only: the Born rule, normalized POVM;
# * pre-selection plus a fixed post-selected ancilla: a subnormalized POVM,
#   renormalized over accepted runs;
# * pre- and post-selection: Kraus operators, weights ``|<f|A_k|i>|^2``.
#
# The last rule is cross-checked against an explicit dilation.

# %%
import numpy as np

from prepost import KrausSet, Povm, PrePostEnsemble
from prepost.duality import DualityInstance, kraus_to_povm, povm_to_kraus, random_kraus
from prepost.instruments import (
    born_probability,
    conditional_prob_fixed_post,
    conditional_prob_prepost,
    dilate_and_simulate,
)
from prepost.qcore import QuantumState, conjugate_in_basis, random_state, tensor

rng = np.random.default_rng(1)

# %% [markdown]
# ## Born rule and the fixed post-selection ratio
#
# Shrinking every element of a POVM by the same factor leaves the
# conditional distribution unchanged; only the acceptance rate drops.

# %%
povm = Povm([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
s = QuantumState([np.sqrt(0.3), np.sqrt(0.7)])
print("Born:", born_probability(povm, s))
print("fixed post, scaled by 0.1:", conditional_prob_fixed_post(povm.scaled(0.1), s))

# %% [markdown]
# A subnormalized POVM can favour one outcome over another by discarding runs.

# %%
biased = Povm([np.diag([1.0, 0.0]), np.diag([0.0, 0.2])], "subnormalized")
print("biased:", conditional_prob_fixed_post(biased, s))

# %% [markdown]
# ## Pre- and post-selected ensembles
#
# The dilation realizes the instrument with a measurement register and a
# post-selection qubit. Both computations agree to machine precision.

# %%
kraus = random_kraus(2, 3, rng)
ens = PrePostEnsemble(pre=random_state(3, rng), post=random_state(2, rng))
print("rule:    ", conditional_prob_prepost(kraus, ens))
print("dilation:", dilate_and_simulate(kraus, ens))

# %% [markdown]
# ## From Kraus operators to a POVM and back
#
# Measuring the POVM on ``conj(phi) x psi`` reproduces the Kraus statistics
# on the ensemble ``<phi||psi>``.

# %%
inst = DualityInstance(2, 3)
m, c = kraus_to_povm(kraus, inst)
p_m = conditional_prob_fixed_post(m, tensor(conjugate_in_basis(ens.post), ens.pre))
print("POVM side:", p_m, " scale c =", round(c, 4))
back = povm_to_kraus(m, inst)
print("round trip:", conditional_prob_prepost(back, ens))
