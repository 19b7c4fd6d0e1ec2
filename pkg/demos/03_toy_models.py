"""
Two classical toy models
========================

Fair coins supply the settings and the outcomes. Rejection sampling alone
reproduces singlet statistics. Sorting every run into four hoppers
by Bayes' rule reproduces all four Bell states with nothing thrown away.
"""

# %%
from bellsel import analysis
from bellsel.toy_models import charlie_hoppers, charlie_retention, inverse_probabilities

res = charlie_retention(400_000, seed=3)
print(res.summary())
print("retained S =", analysis.estimate_chsh(analysis.estimate_correlations(res.retained)).S)

# %% [markdown]
# Keeping only runs whose outcomes match is too crude: E is +1 for every
# setting pair, and S sits exactly on the classical bound.

# %%
crude = charlie_retention(40_000, seed=3, rule="perfect_match_only")
print("perfect-match S =", analysis.estimate_chsh(analysis.estimate_correlations(crude.retained)).S)

# %%
print("P(C_i | a=0, b=1, A=0, B=0) =", inverse_probabilities(0, 1, 0, 0).round(4))

hop = charlie_hoppers(400_000, seed=4)
print(hop.summary()["sizes"])

# %%
for group, est in analysis.chsh_by_group(hop.pooled(), "sel").items():
    print(f"hopper {group}: S = {est.S:+.4f}")
print("pooled S =", analysis.estimate_chsh(analysis.estimate_correlations(hop.pooled())).S)
