"""
W-shaped experiment: entanglement swapping
==========================================

Two singlets, a Bell-state measurement on the inner pair, analyzers on the
outer pair. The BSM outcome M_i picks out a subensemble that behaves like a
V-run with Bell state C_i.
"""

# %%
import numpy as np

from bellsel import analysis
from bellsel.experiments import VConfig, run_v, run_w
from bellsel.quantum_core import AngleConfig, bsm_decompose, swap_input_state

for branch in bsm_decompose(swap_input_state()):
    print(branch.label.name, round(branch.probability, 12))

# %%
angles = AngleConfig()
w = run_w(angles, 400_000, seed=5)
print("BSM outcome frequencies:", np.bincount(w.sel - 4) / len(w))
print("whole W ensemble S =", analysis.estimate_chsh(analysis.estimate_correlations(w)).S)

# %%
for i in range(4):
    sub = analysis.estimate_correlations(w.select(f"M{i}"))
    ref = analysis.estimate_correlations(run_v(VConfig(f"C{i}", angles), 100_000, seed=50 + i))
    diff = max(abs(sub[p].E - ref[p].E) for p in analysis.PAIRS)
    print(f"M{i} vs C{i}: max |dE| = {diff:.4f}")
