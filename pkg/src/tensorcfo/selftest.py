"""Fast invariant checks over every module, at small sizes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import crandn, draw_sparse_coeffs, synth_on_grid
from .estimator import OmpConfig, split_rank_one, tensor_omp
from .frontend import SystemConfig, make_trace, phase_quantize, random_codebook, simulate_measurements
from .harness import achievable_rate
from .sensing import SensingOperator, build_operator, cfo_coefficients, full_grid, lift, lifted_forward, lifted_system, reduced_grid
from .tensor_core import dft_matrix, inner_product, mode3_fold, mode3_unfold

__all__ = ["SelftestReport", "selftest"]


@dataclass
class SelftestReport:
    results: list[tuple[str, bool, str]] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.results)

    def __str__(self) -> str:
        lines = [f"{'PASS' if ok else 'FAIL'}  {name}  {detail}" for name, ok, detail in self.results]
        lines.append(f"{'ok' if self.passed else 'FAILED'} in {self.elapsed:.2f} s")
        return "\n".join(lines)


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _on_grid_instance(rng, N, M, K):
    cfg = SystemConfig(N_t=N, N_r=N, M=M, sigma2=0.0, f_max=1 / (2 * 0.5e-6), gamma_leak=1.0, oversampling=1)
    C = draw_sparse_coeffs(K, N, N, rng)
    H = synth_on_grid(C, N, N)
    cb = random_codebook(cfg, rng)
    trace = make_trace(cfg, int(rng.integers(-M // 4, M // 4)) / (M * cfg.T), 0.0)
    grid = full_grid(M)
    p = cfo_coefficients(trace.e_Omega, grid)
    y = simulate_measurements(H, cb, trace, cfg).y
    return C, p, y, build_operator(cb, grid, 1)


def selftest(seed: int = 0, adjoint: Callable[[SensingOperator, np.ndarray], np.ndarray] | None = None) -> SelftestReport:
    """Run the invariant checks.

    ``adjoint`` replaces ``SensingOperator.adjoint`` in the adjoint-identity
    check; it exists so the harness itself can be tested with a faulty map.
    """
    rng = np.random.default_rng(seed)
    report = SelftestReport()
    t0 = time.perf_counter()

    def check(name, ok, detail=""):
        report.results.append((name, bool(ok), detail))

    A = crandn(rng, 3, 4, 5)
    B = crandn(rng, 3, 4, 5)
    err = abs(inner_product(A, B) - np.conj(inner_product(B, A)))
    check("inner product conjugate symmetry", err < 1e-12, f"err={err:.1e}")
    check("mode-3 unfold round trip", np.array_equal(mode3_fold(mode3_unfold(A), A.shape), A))
    worst = max(_rel(dft_matrix(N) @ dft_matrix(N).conj().T / N, np.eye(N)) for N in (1, 2, 8, 64))
    check("DFT unitarity", worst < 1e-12, f"err={worst:.1e}")

    cfg = SystemConfig(N_t=8, N_r=8, M=32, oversampling=2, f_max=60e3)
    grid = reduced_grid(32, cfg.gamma_leak, cfg.f_max, cfg.T)
    op = build_operator(random_codebook(cfg, rng), grid, 2)
    adj = adjoint or (lambda o, v: o.adjoint(v))
    worst = 0.0
    for _ in range(10):
        G = crandn(rng, *op.shape)
        y = crandn(rng, op.M)
        lhs = np.vdot(y, op.forward(G))
        rhs = inner_product(G, adj(op, y))
        worst = max(worst, abs(lhs - rhs) / (np.linalg.norm(G) * np.linalg.norm(y)))
    check("adjoint identity", worst < 1e-10, f"err={worst:.1e}")

    C, p, y, op = _on_grid_instance(rng, 4, 16, 2)
    G = C[:, :, None] * p[None, None, :]
    err = _rel(op.forward(G), y)
    check("model chain equivalence", err < 1e-9, f"err={err:.1e}")
    err = _rel(lifted_forward(lifted_system(op), lift(C, p)), op.forward(G))
    check("lifting equivalence", err < 1e-9, f"err={err:.1e}")

    res = tensor_omp(y, op, OmpConfig(n_iter=16))
    err = _rel(res.G_hat, G)
    check("noiseless OMP recovery", err < 1e-8, f"err={err:.1e} iters={res.iterations}")
    split = split_rank_one(G)
    corr = abs(np.vdot(split.C, C)) / (np.linalg.norm(split.C) * np.linalg.norm(C))
    check("rank-1 split", corr > 1 - 1e-10, f"corr={corr:.12f}")

    v = phase_quantize(crandn(rng, 16), 8)
    k = np.angle(v * 4) / (2 * np.pi / 8)
    check("phase quantizer alphabet", np.allclose(k, np.rint(k)) and np.isclose(np.linalg.norm(v), 1))
    check("achievable rate", achievable_rate(np.ones((1, 1)), [1], [1], 1.0, 1.0) == 1.0)

    report.elapsed = time.perf_counter() - t0
    return report
