"""
Achievable rate versus phase-noise level
========================================

Rate at 5 dB SNR as the Wiener step tau grows.  Large tau spreads the CFO
spectrum beyond the kept slabs and the rank-1 split degrades.
"""

import numpy as np

from tensorcfo.harness import ExperimentConfig, summarize, sweep

taus = tuple(np.round(np.linspace(0, 1.6, 9), 2))
cfg = ExperimentConfig(snr_db=(5.0,), tau=taus, trials=50, master_seed=0)
rows = summarize(list(sweep(cfg)))
print(f"{'tau':>6}" + "".join(f"{m:>18}" for m in cfg.methods))
for tau in taus:
    means = {r["method"]: r["mean_rate"] for r in rows if r["tau_rad"] == tau}
    print(f"{tau:6.2f}" + "".join(f"{means[m]:18.2f}" for m in cfg.methods))
