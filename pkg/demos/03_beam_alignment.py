"""
A few beam-training trials
==========================

Runs the three methods on shared realizations at 28 GHz with 64
measurements, CFO 265.625 kHz and tau = 0.27 rad.  Single trials vary a
lot; averages are in 04_rate_vs_snr.py.
"""

from tensorcfo.harness import ExperimentConfig, run_trial

cfg = ExperimentConfig(master_seed=3)
for snr_db in (0.0, 10.0):
    print(f"SNR {snr_db:g} dB")
    for trial in range(3):
        for rec in run_trial(cfg, snr_db, tau=0.27, M=64, trial=trial):
            print(f"  trial {trial}  {rec.method:<16} rate {rec.rate_bps_hz:6.2f} bit/s/Hz   "
                  f"CFO error {rec.cfo_err_hz / 1e3:8.2f} kHz   NMSE {rec.chan_nmse_db:7.2f} dB   "
                  f"iterations {rec.omp_iters}")
