"""
Achievable rate versus SNR
==========================

A reduced Monte Carlo sweep (50 trials per point) comparing tensor OMP,
CFO-ignorant OMP and perfect CSI.  Pass a path to also save the CSV.
The full 200-trial run is ``tensorcfo sweep-snr --out rate_vs_snr.csv``.
"""

import sys

from tensorcfo.harness import ExperimentConfig, format_summary, summarize, sweep, write_csv

cfg = ExperimentConfig(snr_db=(-10.0, -5.0, 0.0, 5.0, 10.0, 15.0), trials=50, master_seed=0)
records = list(sweep(cfg))
print(format_summary(summarize(records)))

if len(sys.argv) > 1:
    with open(sys.argv[1], "w", newline="") as fh:
        write_csv(records, fh)
