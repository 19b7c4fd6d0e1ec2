"""
Exact Born-rule probabilities
=============================

No sampling here: joint outcome distributions, correlators and CHSH values
straight from the state vectors.
"""

# %%
import math

from bellsel.quantum_core import (
    AngleConfig, BellLabel, bell_state, chsh_value, correlator,
    joint_probabilities, mixed_joint_probabilities,
)

angles = AngleConfig()          # 0, pi/4, pi/8, 3pi/8
print(angles)

# %% [markdown]
# The singlet C0 at equal analyzer angles: outcomes always disagree.

# %%
p = joint_probabilities(bell_state("C0"), 0.3, 0.3)
print(p, "E =", correlator(p))

# %%
for label in BellLabel:
    s = chsh_value(bell_state(label), angles)
    print(f"{label.name}: S = {s:+.12f}   |S| - 2*sqrt(2) = {abs(s) - 2 * math.sqrt(2):+.1e}")

# %% [markdown]
# An equal mixture of the four Bell states is featureless: every cell is 1/4
# for every pair of settings.

# %%
for a in (0, 1):
    for b in (0, 1):
        mix = mixed_joint_probabilities((0.25,) * 4, angles.alpha(a), angles.beta(b))
        print(a, b, [round(x, 12) for x in mix])
