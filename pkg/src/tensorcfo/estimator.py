"""Tensor OMP recovery, rank-1 split, channel reconstruction, beam selection and CFO read-out."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .channel import synth_on_grid
from .frontend import phase_quantize
from .sensing import ReducedFrequencyGrid, SensingOperator
from .tensor_core import as_tensor3, mode3_unfold, unvec

__all__ = [
    "OmpConfig",
    "OmpResult",
    "RankOneSplit",
    "EstimationResult",
    "default_n_iter",
    "restricted_least_squares",
    "tensor_omp",
    "vector_omp",
    "split_rank_one",
    "reconstruct_channel",
    "select_beams",
    "estimate_cfo",
    "scale_aligned_nmse",
    "estimate",
]

logger = logging.getLogger(__name__)


def default_n_iter(K_expected: int, n_slabs: int, M: int) -> int:
    """``2 K (2P+1)`` iterations, capped at the measurement count."""
    return max(1, min(M, 2 * K_expected * n_slabs))


@dataclass(frozen=True)
class OmpConfig:
    """Stopping rule for OMP.

    Iteration stops once ``||residual||^2 <= max(eps, rel_floor * ||y||^2)``
    or after ``n_iter`` atoms.  The relative floor only matters for
    noiseless data, where ``eps = 0`` would otherwise never be met in
    floating point.
    """

    eps: float = 0.0
    n_iter: int = 64
    rel_floor: float = 1e-20
    rcond: float = 1e-12
    ridge: float = 1e-10
    tie_rtol: float = 1e-12

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")


@dataclass
class OmpResult:
    G_hat: np.ndarray
    support: list[tuple[int, ...]]
    residual_norms: list[float]
    iterations: int
    rank_deficient: bool = False

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.G_hat[s] for s in self.support])


def _first_max(values: np.ndarray, rtol: float) -> int:
    """Index of the first entry within ``rtol`` of the maximum.

    Structured dictionaries produce exact ties that rounding would otherwise
    break arbitrarily; this keeps the choice lexicographic.
    """
    return int(np.flatnonzero(values >= values.max() * (1 - rtol))[0])


def _solve_columns(Phi: np.ndarray, y: np.ndarray, rcond: float, ridge: float) -> tuple[np.ndarray, bool]:
    """Least squares ``min ||y - Phi x||`` by QR, with a ridge fallback when ``Phi`` is rank deficient."""
    k = Phi.shape[1]
    if k == 0:
        return np.zeros(0, dtype=np.complex128), False
    Q, Rm = np.linalg.qr(Phi)
    d = np.abs(np.diag(Rm))
    if k <= Phi.shape[0] and d.min() > rcond * d.max():
        return solve_triangular(Rm, Q.conj().T @ y), False
    gram = Phi.conj().T @ Phi
    lam = ridge * np.trace(gram).real / k
    x = np.linalg.solve(gram + lam * np.eye(k), Phi.conj().T @ y)
    return x, True


def restricted_least_squares(y, op: SensingOperator, support) -> np.ndarray:
    """Tensor supported on ``support`` minimizing ``||y - op.forward(V)||``."""
    y = np.asarray(y, dtype=np.complex128)
    support = [tuple(int(i) for i in s) for s in support]
    if len(support) > op.M:
        raise ValueError("support larger than the number of measurements")
    x, flagged = _solve_columns(op.atoms(support), y, OmpConfig.rcond, OmpConfig.ridge)
    if flagged:
        logger.warning("rank-deficient support of size %d; used ridge solve", len(support))
    V = np.zeros(op.shape, dtype=np.complex128)
    for s, val in zip(support, x):
        V[s] = val
    return V


def tensor_omp(y, op: SensingOperator, cfg: OmpConfig = OmpConfig()) -> OmpResult:
    """Greedy recovery of a sparse coefficient tensor from ``y ≈ op.forward(G)``.

    Each pass picks the single entry of ``op.adjoint(residual)`` with the
    largest modulus (first in C order on exact ties), grows the support and
    re-solves least squares on it.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (op.M,):
        raise ValueError(f"expected {op.M} measurements, got shape {y.shape}")
    threshold = max(cfg.eps, cfg.rel_floor * np.vdot(y, y).real)

    support: list[tuple[int, ...]] = []
    flat: list[int] = []
    Phi = np.zeros((op.M, 0), dtype=np.complex128)
    x = np.zeros(0, dtype=np.complex128)
    residual = y.copy()
    history = [float(np.vdot(residual, residual).real)]
    deficient = False

    while history[-1] > threshold and len(support) < cfg.n_iter:
        corr = np.abs(op.adjoint(residual)).ravel()
        corr[flat] = -1.0  # selected atoms are orthogonal to the residual up to rounding
        idx = _first_max(corr, cfg.tie_rtol)
        flat.append(idx)
        support.append(tuple(int(i) for i in np.unravel_index(idx, op.shape)))
        Phi = np.column_stack([Phi, op.atoms(support[-1:])])
        x, flagged = _solve_columns(Phi, y, cfg.rcond, cfg.ridge)
        deficient |= flagged
        residual = y - Phi @ x
        history.append(float(np.vdot(residual, residual).real))

    G_hat = np.zeros(op.shape, dtype=np.complex128)
    if support:
        G_hat.ravel()[flat] = x
    if deficient:
        logger.warning("tensor OMP hit a rank-deficient support; ridge solve used")
    return OmpResult(G_hat, support, history, len(support), deficient)


def vector_omp(y, A: np.ndarray, cfg: OmpConfig = OmpConfig()) -> tuple[np.ndarray, int]:
    """Standard OMP for ``y ≈ A x`` with the same stopping rule as :func:`tensor_omp`.

    Returns the sparse estimate and the number of iterations.
    """
    y = np.asarray(y, dtype=np.complex128)
    M, n = A.shape
    threshold = max(cfg.eps, cfg.rel_floor * np.vdot(y, y).real)
    chosen: list[int] = []
    x = np.zeros(0, dtype=np.complex128)
    residual = y.copy()
    while np.vdot(residual, residual).real > threshold and len(chosen) < cfg.n_iter:
        corr = np.abs(A.conj().T @ residual)
        corr[chosen] = -1.0
        chosen.append(_first_max(corr, cfg.tie_rtol))
        Phi = A[:, chosen]
        x, _ = _solve_columns(Phi, y, cfg.rcond, cfg.ridge)
        residual = y - Phi @ x
    out = np.zeros(n, dtype=np.complex128)
    out[chosen] = x
    return out, len(chosen)


@dataclass
class RankOneSplit:
    """Best rank-1 factorization ``G ≈ C ⊚ p`` with ``||p|| = 1``.

    ``sigma`` holds all singular values of the mode-3 unfolding;
    ``ambiguous`` is set when the top two coincide.
    """

    C: np.ndarray
    p: np.ndarray
    sigma: np.ndarray
    ambiguous: bool = False

    def __iter__(self):
        return iter((self.C, self.p))


def split_rank_one(G_hat, tie_rtol: float = 1e-9) -> RankOneSplit:
    """Split a coefficient tensor into a grid matrix and a CFO spectrum via SVD.

    The top left singular vector of the mode-3 unfolding is ``p``; the top
    right singular vector, scaled by the top singular value, is
    ``vec(conj(C))``.  The common phase is fixed by making the
    largest-modulus entry of ``p`` real positive.
    """
    G_hat = as_tensor3(G_hat)
    if not np.any(G_hat):
        raise ValueError("cannot split an all-zero tensor")
    U, s, Vh = np.linalg.svd(mode3_unfold(G_hat), full_matrices=False)
    p = U[:, 0]
    c = s[0] * Vh[0]  # Vh[0] is v^H with v = vec(conj(C)) / ||C||
    rot = np.exp(-1j * np.angle(p[np.argmax(np.abs(p))]))
    p = p * rot
    c = c / rot
    ambiguous = s.size > 1 and s[1] >= (1 - tie_rtol) * s[0]
    C = unvec(c, G_hat.shape[:2])
    return RankOneSplit(C=C, p=p, sigma=s, ambiguous=bool(ambiguous))


def reconstruct_channel(C_hat, N_r: int, N_t: int, oversampling: int = 1) -> np.ndarray:
    """Channel estimate from grid coefficients; known only up to a complex scale."""
    return synth_on_grid(C_hat, N_r, N_t, oversampling)


def select_beams(H_est, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Quantized beams ``(f, w)`` from the dominant singular pair of ``H_est``."""
    H_est = np.asarray(H_est)
    if not np.any(H_est):
        raise ValueError("cannot select beams from an all-zero channel")
    U, _, Vh = np.linalg.svd(H_est)
    # fixing each vector's phase makes the result independent of the global
    # phase of H_est, which the estimator cannot resolve
    w = phase_quantize(_canonical_phase(U[:, 0]), q)
    f = phase_quantize(_canonical_phase(Vh[0].conj()), q)
    return f, w


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its largest-modulus entry is real positive."""
    k = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[k]))


def estimate_cfo(p_hat, grid: ReducedFrequencyGrid, T: float) -> float:
    """CFO in Hz from an estimated spectrum.

    Takes the peak bin and refines it with the energy-weighted centroid over
    the peak and its signed-frequency neighbours that are on the grid.
    """
    p_hat = np.asarray(p_hat)
    if p_hat.shape != (grid.size,) or not np.any(p_hat):
        raise ValueError("p_hat must be a non-zero vector over the grid")
    energy = np.abs(p_hat) ** 2
    peak = int(grid.bins[np.argmax(energy)])
    num = den = 0.0
    for b in (peak - 1, peak, peak + 1):
        slab = grid.slab_of_bin(b)
        if slab is not None:
            num += b * energy[slab]
            den += energy[slab]
    return float(num / den / (grid.M * T))


def scale_aligned_nmse(H_true, H_est) -> float:
    """``||H - a H_est||^2 / ||H||^2`` minimized over the complex scale ``a``."""
    H_true = np.asarray(H_true)
    H_est = np.asarray(H_est)
    e = np.vdot(H_est, H_est).real
    a = np.vdot(H_est, H_true) / e if e > 0 else 0.0
    return float(np.linalg.norm(H_true - a * H_est) ** 2 / np.linalg.norm(H_true) ** 2)


@dataclass
class EstimationResult:
    C_hat: np.ndarray
    p_hat: np.ndarray
    H_est: np.ndarray
    f_est: np.ndarray
    w_est: np.ndarray
    f_e_hat: float
    omp: OmpResult = field(repr=False)
    ambiguous_split: bool = False


def estimate(y, op: SensingOperator, cfg: OmpConfig, N_r: int, N_t: int, q: int, T: float) -> EstimationResult:
    """Full pipeline: OMP, rank-1 split, channel, beams and CFO."""
    res = tensor_omp(y, op, cfg)
    split = split_rank_one(res.G_hat)
    H_est = reconstruct_channel(split.C, N_r, N_t, op.oversampling)
    f, w = select_beams(H_est, q)
    return EstimationResult(
        C_hat=split.C,
        p_hat=split.p,
        H_est=H_est,
        f_est=f,
        w_est=w,
        f_e_hat=estimate_cfo(split.p, op.grid, T),
        omp=res,
        ambiguous_split=split.ambiguous,
    )
