"""Order-3 complex tensor primitives.

Tensors are plain ``numpy`` arrays of shape ``(N1, N2, N3)`` with complex
dtype, stored C-contiguously so entry ``(i, j, k)`` (0-based) lives at linear
offset ``i*N2*N3 + j*N3 + k``.  Formulas in the docstrings are written with
1-based indices where that reads more naturally; the code is 0-based.

``vec`` of a matrix is column-major stacking, so the mode-3 unfolding has
row ``k`` equal to ``vec(A[:, :, k])``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_tensor3",
    "inner_product",
    "l1_norm",
    "frob_norm",
    "vec",
    "unvec",
    "mode3_unfold",
    "mode3_fold",
    "outer3",
    "dft_matrix",
    "steering_dictionary",
    "array_response",
]


def as_tensor3(A) -> np.ndarray:
    """Return ``A`` as a complex order-3 array, raising on any other order."""
    A = np.asarray(A)
    if A.ndim != 3:
        raise ValueError(f"expected an order-3 tensor, got shape {A.shape}")
    if any(n < 1 for n in A.shape):
        raise ValueError(f"tensor dimensions must be positive, got {A.shape}")
    return A.astype(np.complex128, copy=False)


def inner_product(A, B) -> complex:
    """Tensor inner product ``sum A(i,j,k) * conj(B(i,j,k))``.

    The second argument is conjugated, matching ``np.vdot(B, A)``.
    """
    A = as_tensor3(A)
    B = as_tensor3(B)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return complex(np.vdot(B.ravel(), A.ravel()))


def l1_norm(A) -> float:
    """Sum of entry moduli."""
    return float(np.abs(as_tensor3(A)).sum())


def frob_norm(A) -> float:
    """Frobenius norm, ``sqrt(Re <A, A>)``."""
    A = as_tensor3(A)
    return float(np.sqrt(np.vdot(A.ravel(), A.ravel()).real))


def vec(X: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a matrix."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(x).reshape(shape, order="F")


def mode3_unfold(A) -> np.ndarray:
    """Mode-3 unfolding, shape ``(N3, N1*N2)``; row ``k`` is ``vec(A[:, :, k])``."""
    A = as_tensor3(A)
    n1, n2, n3 = A.shape
    return A.reshape(n1 * n2, n3, order="F").T.copy()


def mode3_fold(U: np.ndarray, shape: tuple[int, int, int]) -> np.ndarray:
    """Inverse of :func:`mode3_unfold`."""
    n1, n2, n3 = shape
    U = np.asarray(U)
    if U.shape != (n3, n1 * n2):
        raise ValueError(f"unfolding of shape {U.shape} does not match {shape}")
    return np.ascontiguousarray(U.T.reshape(n1, n2, n3, order="F"))


def outer3(u, v, w) -> np.ndarray:
    """Outer product ``u ⊚ v ⊚ w`` without conjugation."""
    u, v, w = (np.asarray(x, dtype=np.complex128).ravel() for x in (u, v, w))
    return u[:, None, None] * v[None, :, None] * w[None, None, :]


def dft_matrix(N: int) -> np.ndarray:
    """DFT matrix with entries ``exp(-2j*pi*(k-1)(l-1)/N)`` (unnormalized)."""
    return steering_dictionary(N, 1)


def steering_dictionary(N: int, oversampling: int = 1) -> np.ndarray:
    """Oversampled DFT dictionary of shape ``(G, N)`` with ``G = oversampling*N``.

    Row ``g`` is the conjugate transpose of ``array_response(N, 2*pi*g/G)``
    (0-based ``g``), so ``oversampling=1`` gives :func:`dft_matrix`.
    """
    if N < 1 or oversampling < 1:
        raise ValueError("N and oversampling must be positive integers")
    G = oversampling * N
    g = np.arange(G)[:, None]
    i = np.arange(N)[None, :]
    # reduce the integer product mod G first so large sizes keep full precision
    return np.exp(-2j * np.pi * ((g * i) % G) / G)


def array_response(N: int, theta: float) -> np.ndarray:
    """ULA response ``[1, e^{j theta}, ..., e^{j (N-1) theta}]``."""
    return np.exp(1j * theta * np.arange(N))
