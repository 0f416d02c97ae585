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
# # Unambiguous discrimination with information from the future
#
# Bob must tell ``alpha|0> + beta|1>`` from ``alpha|0> - beta|1>`` without
# ever being wrong. Without post-selection he also holds a weakly
# distinguishable second system; with post-selection that same system
# becomes the final state. The inconclusive rate drops from O(1) to O(eps^2).

# %%
import numpy as np

from prepost.gamesim import GameConfig, run_game
from prepost.problem import discrete_problem
from prepost.scenarios import (
    OUTCOMES,
    UseParams,
    gap_rows_to_csv,
    ivanovic_dieks_peres,
    small_eps_ratio_limit,
    use_gap_report,
    use_prepost_instrument,
)

# %% [markdown]
# ## The gap table
#
# ``p_m_inconclusive`` uses the reference no-post-selection closed form,
# ``p_a_inconclusive`` the pre/post-selected Kraus triple.

# %%
rows = use_gap_report(0.8, [0.0, 0.1, 0.05, 0.025])
print(gap_rows_to_csv(rows))
print("ratio limit:", small_eps_ratio_limit(UseParams.from_alpha_sq(0.8)))

# %% [markdown]
# The reference closed form is more optimistic than the standard optimum
# for two pure states with equal priors, ``1 - |overlap|``. The gap
# survives either way.

# %%
p = UseParams.from_alpha_sq(0.8, 0.1)
print("standard optimum inconclusive rate:", ivanovic_dieks_peres(p).p_inconclusive)

# %% [markdown]
# ## Simulation
#
# Wrong conclusive answers never happen, and the inconclusive rate matches
# the table.

# %%
problem, grid = discrete_problem(["+", "-"], [p.psi(s) for s in "+-"], [p.phi(s) for s in "+-"])
res = run_game(problem, use_prepost_instrument(p), list(OUTCOMES), GameConfig(20000, seed=0, scenario="pre_post"))
counts = res.histogram
print(dict(zip(OUTCOMES, counts.tolist())), "inconclusive fraction:", counts[2] / counts.sum())
print("mean attempts per accepted round:", res.mean_attempts)
