"""
Selection in classical data
===========================

Conditioning on a common effect creates a correlation. Conditioning on a
common cause can hide one.
"""

# %%
from bellsel.classical_forks import (
    collider_demo, fixture_path, load_digits, mice_demo, mice_exact_corr,
    parity_correlator,
)

for f in (0, 1):
    rep = collider_demo(100_000, seed=6, condition_on=f)
    print(f"F = {f}: population {rep.population_corr:+.4f}, restricted {rep.restricted_corr:+.4f}")

# %% [markdown]
# Digit parities of pi and e are independent. Restricted to the runs where at
# least one digit is even, the odd-odd cell is empty and a correlation of
# about -1/2 appears.

# %%
pi = load_digits(fixture_path("pi"), 100_000)
e = load_digits(fixture_path("e"), 100_000)
rep = parity_correlator(pi, e)
print(rep.population_corr, rep.restricted_corr)
print(rep.cells["restricted"])

# %%
mice = mice_demo(1_000_000, seed=7)
print("all mice:", round(mice.population_corr, 4), " exact:", round(mice_exact_corr(), 4))
print("white only:", round(mice.restricted_corr, 4), "->", mice.direction)
