"""Measurement tensors, the sensing operator and its adjoint.

Measurement ``n`` is the inner product of the coefficient tensor ``G``
(shape ``G_r x G_t x S``) with the rank-1 tensor

    M_n = (D_r w_n) ⊚ (D_t conj(f_n)) ⊚ (U_M e_n)[kept bins]

where ``D_r``, ``D_t`` are (possibly oversampled) steering dictionaries and
the third factor is the DFT column for measurement ``n`` restricted to the
kept CFO bins.  The operator keeps only the three factor matrices; dense
``M_n`` are built on request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .frontend import Codebook, SystemConfig
from .tensor_core import as_tensor3, outer3, steering_dictionary, unvec, vec

__all__ = [
    "ReducedFrequencyGrid",
    "full_grid",
    "reduced_grid",
    "grid_for",
    "SensingOperator",
    "build_operator",
    "forward",
    "adjoint",
    "LiftedSystem",
    "lifted_system",
    "lifted_forward",
    "CfoGridPoint",
    "cfo_grid",
    "cfo_coefficients",
    "lift",
]


@dataclass(frozen=True)
class ReducedFrequencyGrid:
    """Subset of the ``M``-point DFT grid on which CFO energy is modelled.

    ``bins`` are signed DFT bins (bin ``b`` is frequency ``b / (M T)``),
    ordered by ascending DFT index: ``0, 1, ..., P`` then ``-P, ..., -1``.
    """

    M: int
    P: int
    bins: np.ndarray

    @property
    def size(self) -> int:
        return int(self.bins.size)

    @property
    def dft_index(self) -> np.ndarray:
        """0-based DFT index of each kept slab."""
        return np.mod(self.bins, self.M)

    def frequencies(self, T: float) -> np.ndarray:
        return self.bins / (self.M * T)

    def slab_of_bin(self, b: int) -> int | None:
        hits = np.flatnonzero(self.bins == b)
        return int(hits[0]) if hits.size else None


def full_grid(M: int) -> ReducedFrequencyGrid:
    """All ``M`` bins; 0-based indices above ``M/2`` are read as negative frequencies."""
    k = np.arange(M)
    return ReducedFrequencyGrid(M=M, P=M // 2, bins=np.where(k > M / 2, k - M, k))


def reduced_grid(M: int, gamma_leak: float, f_max: float, T: float) -> ReducedFrequencyGrid:
    """Bins ``-P..P`` with ``P = ceil(M gamma_leak f_max T)``; collapses to :func:`full_grid` if ``2P+1 >= M``."""
    P = math.ceil(M * gamma_leak * f_max * T - 1e-12)
    if 2 * P + 1 >= M:
        return full_grid(M)
    bins = np.concatenate([np.arange(0, P + 1), np.arange(-P, 0)])
    return ReducedFrequencyGrid(M=M, P=P, bins=bins)


def grid_for(cfg: SystemConfig) -> ReducedFrequencyGrid:
    return reduced_grid(cfg.M, cfg.gamma_leak, cfg.f_max, cfg.T)


@dataclass(frozen=True)
class SensingOperator:
    """Factored sensing operator.

    ``R[n] = D_r w_n``, ``Tx[n] = D_t conj(f_n)`` and ``F[n]`` is the third
    factor over kept bins, so ``M_n = outer3(R[n], Tx[n], F[n])``.
    """

    R: np.ndarray
    Tx: np.ndarray
    F: np.ndarray
    grid: ReducedFrequencyGrid
    oversampling: int = 1

    def __post_init__(self):
        # Khatri-Rao product of the TX and CFO factors, reused by both maps
        M = self.R.shape[0]
        kr = (self.Tx[:, :, None] * self.F[:, None, :]).reshape(M, -1)
        object.__setattr__(self, "_kr", kr)

    @property
    def M(self) -> int:
        return self.R.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.R.shape[1], self.Tx.shape[1], self.F.shape[1])

    def measurement_tensor(self, n: int) -> np.ndarray:
        """Dense ``M_n`` (0-based ``n``)."""
        return outer3(self.R[n], self.Tx[n], self.F[n])

    def forward(self, G) -> np.ndarray:
        """``[<G, M_1>, ..., <G, M_M>]``."""
        G = as_tensor3(G)
        if G.shape != self.shape:
            raise ValueError(f"tensor shape {G.shape} does not match operator {self.shape}")
        X = G.reshape(self.shape[0], -1) @ self._kr.conj().T
        return np.einsum("na,an->n", self.R.conj(), X)

    def adjoint(self, y) -> np.ndarray:
        """``sum_n y[n] M_n``."""
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (self.M,):
            raise ValueError(f"expected {self.M} measurements, got shape {y.shape}")
        return ((self.R * y[:, None]).T @ self._kr).reshape(self.shape)

    def atoms(self, support) -> np.ndarray:
        """Images ``forward(unit tensor at s)`` of support tuples, as columns of an ``M x len(support)`` matrix."""
        if len(support) == 0:
            return np.zeros((self.M, 0), dtype=np.complex128)
        a, b, c = np.asarray(support, dtype=np.int64).T
        return (self.R[:, a] * self.Tx[:, b] * self.F[:, c]).conj()


def build_operator(
    codebook: Codebook,
    grid: ReducedFrequencyGrid,
    oversampling: int = 1,
) -> SensingOperator:
    """Sensing operator for the codebook's ``M`` beam pairs over ``grid``."""
    M, N_r = codebook.W.shape
    N_t = codebook.F.shape[1]
    if grid.M != M:
        raise ValueError(f"grid built for M={grid.M}, codebook has {M} measurements")
    D_r = steering_dictionary(N_r, oversampling)
    D_t = steering_dictionary(N_t, oversampling)
    n = np.arange(M)[:, None]
    F = np.exp(-2j * np.pi * ((n * grid.dft_index[None, :]) % M) / M)
    return SensingOperator(
        R=codebook.W @ D_r.T,
        Tx=codebook.F.conj() @ D_t.T,
        F=F,
        grid=grid,
        oversampling=oversampling,
    )


def forward(op: SensingOperator, G) -> np.ndarray:
    return op.forward(G)


def adjoint(op: SensingOperator, y) -> np.ndarray:
    return op.adjoint(y)


@dataclass(frozen=True)
class LiftedSystem:
    """Lifted form ``y[n] = Ustar[n] X A[n]^T`` with ``X = p vec(C)^T``.

    ``A[n] = kron(conj(D_t) f_n, conj(D_r w_n))`` acts on column-major
    ``vec(C)``; ``Ustar[n]`` holds the conjugated third-factor row.
    """

    A: np.ndarray
    Ustar: np.ndarray
    grid_shape: tuple[int, int]

    def z(self, C) -> np.ndarray:
        """Phase-error-free noiseless measurements ``A vec(C)``."""
        return self.A @ vec(C)


def lifted_system(op: SensingOperator) -> LiftedSystem:
    M = op.M
    G_r, G_t, _ = op.shape
    # column a + b*G_r of A[n] is conj(R[n, a] Tx[n, b])
    A = (op.Tx.conj()[:, :, None] * op.R.conj()[:, None, :]).reshape(M, G_r * G_t)
    return LiftedSystem(A=A, Ustar=op.F.conj(), grid_shape=(G_r, G_t))


def lifted_forward(sys: LiftedSystem, X) -> np.ndarray:
    """Apply the lifted operator to ``X`` of shape ``(S, G_r G_t)``."""
    X = np.asarray(X)
    if X.shape != (sys.Ustar.shape[1], sys.A.shape[1]):
        raise ValueError(f"X must be {(sys.Ustar.shape[1], sys.A.shape[1])}, got {X.shape}")
    return np.einsum("nc,cs,ns->n", sys.Ustar, X, sys.A)


def lift(C, p) -> np.ndarray:
    """``X = p vec(C)^T``."""
    return np.outer(p, vec(C))


def unlift(x, grid_shape) -> np.ndarray:
    return unvec(x, grid_shape)


class CfoGridPoint(NamedTuple):
    on_grid: bool
    index: int
    """0-based DFT index of the nearest bin (0 is DC)."""
    offset_hz: float
    """``f_e`` minus the nearest bin frequency."""


def cfo_grid(f_e: float, M: int, T: float, atol: float = 1e-9) -> CfoGridPoint:
    """Nearest point of the ``1/(M T)`` resolution grid; exact midpoints round toward zero."""
    if abs(f_e) > 1 / (2 * T):
        raise ValueError("|f_e| must not exceed 1/(2T)")
    x = f_e * M * T
    b = int(np.sign(x) * np.ceil(abs(x) - 0.5))
    offset = f_e - b / (M * T)
    return CfoGridPoint(abs(x - b) < atol, b % M, offset)


def cfo_coefficients(e_Omega, grid: ReducedFrequencyGrid | None = None) -> np.ndarray:
    """DFT coefficients ``p = U_M e_Omega / M`` of the phase sequence, restricted to ``grid``."""
    e_Omega = np.asarray(e_Omega)
    p = np.fft.fft(e_Omega) / e_Omega.size
    return p if grid is None else p[grid.dft_index]
