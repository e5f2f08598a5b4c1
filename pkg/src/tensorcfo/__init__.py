"""Joint CFO and sparse mmWave MIMO channel estimation with tensor OMP."""

from .channel import ChannelParams, draw_channel, draw_sparse_coeffs, synth_on_grid
from .estimator import (
    OmpConfig,
    estimate,
    estimate_cfo,
    reconstruct_channel,
    restricted_least_squares,
    select_beams,
    split_rank_one,
    tensor_omp,
)
from .frontend import SystemConfig, make_trace, phase_quantize, practical_tau, random_codebook, simulate_measurements
from .harness import ExperimentConfig, achievable_rate, run_trial, sweep
from .sensing import build_operator, cfo_grid, full_grid, reduced_grid

__version__ = "0.1.0"
