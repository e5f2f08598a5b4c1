"""
Channel and CFO as one sparse tensor
====================================

Builds the coefficient tensor G = C ⊚ p for an off-grid clustered channel
with CFO and phase noise, and shows how its energy concentrates in a few
CFO slabs around the true offset.
"""

import numpy as np

from tensorcfo.channel import ChannelParams, draw_channel
from tensorcfo.frontend import SystemConfig, make_trace, practical_tau
from tensorcfo.sensing import cfo_coefficients, full_grid, grid_for

rng = np.random.default_rng(1)
cfg = SystemConfig()
tau = practical_tau(cfg.f_c, T_s=cfg.T)
print(f"phase-noise step at 28 GHz: tau = {tau:.3f} rad")

# %%
# Critically-sampled grid coefficients of an off-grid channel are only
# approximately sparse.
H = draw_channel(ChannelParams(), rng).H
C = np.fft.fft(np.fft.fft(H, axis=0), axis=1) / H.size
energy = np.sort(np.abs(C.ravel()) ** 2)[::-1]
print("fraction of channel energy in the 10 largest grid cells:",
      round(energy[:10].sum() / energy.sum(), 3))

# %%
# The CFO spectrum p is the DFT of exp(j(omega_e n + phi_n)).
trace = make_trace(cfg, 265.625e3, tau, rng)
p = cfo_coefficients(trace.e_Omega, full_grid(cfg.M))
grid = grid_for(cfg)
kept = np.sum(np.abs(p[grid.dft_index]) ** 2) / np.sum(np.abs(p) ** 2)
print(f"{grid.size} of {cfg.M} slabs kept (P = {grid.P}); they hold {kept:.1%} of the CFO energy")

peak = np.argsort(np.abs(p))[::-1][:4]
for k in peak:
    b = k - cfg.M if k > cfg.M / 2 else k
    print(f"  bin {b:+3d} ({b / (cfg.M * cfg.T) / 1e3:8.2f} kHz): |p| = {abs(p[k]):.3f}")

# %%
# G(i, j, k) = C(i, j) p(k): the reduced tensor is N_r x N_t x (2P+1).
G = C[:, :, None] * p[grid.dft_index]
print("reduced tensor shape", G.shape, "instead of", (cfg.N_r, cfg.N_t, cfg.M))
