"""
How a warden's detection error depends on its threshold
=======================================================

The warden compares its average received power with a threshold.  It does
not know its own noise floor exactly, only that it lies within a factor
``varsigma`` of a nominal value.  Below we sweep the threshold for a few
leaked signal powers and mark the threshold that minimises the detection
error.  The error at that threshold is what the covert constraint keeps
above ``1 - xi``.
"""

import matplotlib.pyplot as plt
import numpy as np

from fdris.covert import CovertConfig, covert_power_budget, dbm_to_watt, optimal_dep, optimal_threshold
from fdris.experiments import dep_curve

sigma2 = float(dbm_to_watt(-110.0))
cfg = CovertConfig(varsigma=2.0, xi=0.2, psi=0.0, sigma2_w=(sigma2,), sigma2_b=sigma2, p_t=1.0)
omegas = dbm_to_watt(np.array([-125.0, -120.0, -115.0, -112.0]))

rows = dep_curve(cfg, omegas, n_tau=400)

# %%
# Each curve falls until the threshold clears the signal plus the lowest
# possible noise, then rises again.

fig, ax = plt.subplots(figsize=(6, 4))
for omega in omegas:
    sel = [r for r in rows if r["omega"] == omega]
    ax.semilogx([r["tau"] for r in sel], [r["dep"] for r in sel], label=f"{10 * np.log10(omega) + 30:.0f} dBm")
    ax.plot(optimal_threshold(omega, cfg), optimal_dep(omega, cfg), "k.")
ax.set_xlabel("threshold (W)")
ax.set_ylabel("detection error probability")
ax.legend(title="leaked power")

# %%
# The largest leaked power that still keeps the minimum above ``1 - xi``:

budget = covert_power_budget(cfg)
print(f"budget {10 * np.log10(budget) + 30:.2f} dBm, optimal DEP there {optimal_dep(budget, cfg):.4f}")
for xi in (0.05, 0.1, 0.2, 0.4):
    b = covert_power_budget(cfg.replace(xi=xi))
    print(f"xi={xi:<5} budget {10 * np.log10(b) + 30:7.2f} dBm")

plt.show()
