"""Clustered narrowband mmWave MIMO channels and their virtual (grid) representation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import steering_dictionary

__all__ = [
    "ChannelParams",
    "PathSet",
    "ChannelRealization",
    "channel_from_paths",
    "draw_channel",
    "synth_on_grid",
    "grid_coefficients",
    "draw_sparse_coeffs",
    "aod_grid_index",
    "crandn",
]


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Circularly-symmetric complex normal samples with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@dataclass(frozen=True)
class ChannelParams:
    """Geometry and cluster statistics of the channel.

    ``angular_spread_deg`` is the full width of the uniform ray-angle window
    around each cluster center.
    """

    N_t: int = 32
    N_r: int = 16
    N_cl: int = 2
    N_ray: int = 10
    angular_spread_deg: float = 3.0
    d_over_lambda: float = 0.5

    def __post_init__(self):
        if min(self.N_t, self.N_r, self.N_cl, self.N_ray) < 1:
            raise ValueError("antenna, cluster and ray counts must be >= 1")
        if not 0 <= self.angular_spread_deg < 180:
            raise ValueError("angular_spread_deg must lie in [0, 180)")
        if self.d_over_lambda <= 0:
            raise ValueError("d_over_lambda must be positive")


@dataclass(frozen=True)
class PathSet:
    """Per-path gains and angles, flattened over (cluster, ray)."""

    gains: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray
    cluster: np.ndarray
    d_over_lambda: float = 0.5

    @property
    def omega_r(self) -> np.ndarray:
        return 2 * np.pi * self.d_over_lambda * np.sin(self.aoa)

    @property
    def omega_t(self) -> np.ndarray:
        return 2 * np.pi * self.d_over_lambda * np.sin(self.aod)


@dataclass(frozen=True)
class ChannelRealization:
    H: np.ndarray
    paths: PathSet = field(repr=False)


def channel_from_paths(
    N_r: int,
    N_t: int,
    gains,
    omega_r,
    omega_t,
    cluster=None,
) -> np.ndarray:
    """Assemble ``H`` as the normalized sum of ``a_r(omega_r) a_t(omega_t)^H`` terms.

    Each path is weighted by ``1/sqrt(N_cl * N_ray(cluster))``, where the ray
    count is taken per cluster label.  Without labels all paths form a single
    cluster.
    """
    gains = np.atleast_1d(np.asarray(gains, dtype=np.complex128))
    omega_r = np.atleast_1d(np.asarray(omega_r, dtype=float))
    omega_t = np.atleast_1d(np.asarray(omega_t, dtype=float))
    if cluster is None:
        cluster = np.zeros(gains.size, dtype=int)
    cluster = np.asarray(cluster)
    labels, counts = np.unique(cluster, return_counts=True)
    per_ray = dict(zip(labels.tolist(), counts.tolist()))
    weight = np.array([1.0 / np.sqrt(per_ray[c]) for c in cluster.tolist()])
    weight /= np.sqrt(labels.size)

    A_r = np.exp(1j * np.outer(np.arange(N_r), omega_r))
    A_t = np.exp(1j * np.outer(np.arange(N_t), omega_t))
    return (A_r * (weight * gains)) @ A_t.conj().T


def draw_channel(params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw one clustered channel.

    Cluster AoA and AoD centers are independent and uniform over
    ``[-pi/2, pi/2)``; ray angles are uniform within half the angular spread
    of their center; gains are i.i.d. CN(0, 1).
    """
    n_paths = params.N_cl * params.N_ray
    half = np.deg2rad(params.angular_spread_deg) / 2
    centers_r = rng.uniform(-np.pi / 2, np.pi / 2, params.N_cl)
    centers_t = rng.uniform(-np.pi / 2, np.pi / 2, params.N_cl)
    cluster = np.repeat(np.arange(params.N_cl), params.N_ray)
    aoa = centers_r[cluster] + rng.uniform(-half, half, n_paths)
    aod = centers_t[cluster] + rng.uniform(-half, half, n_paths)
    gains = crandn(rng, n_paths)
    paths = PathSet(gains, aoa, aod, cluster, params.d_over_lambda)
    H = channel_from_paths(params.N_r, params.N_t, gains, paths.omega_r, paths.omega_t, cluster)
    return ChannelRealization(H, paths)


def synth_on_grid(C: np.ndarray, N_r: int, N_t: int, oversampling: int = 1) -> np.ndarray:
    """Channel matrix from grid coefficients.

    Computes ``H = D_r^H C conj(D_t)``, so a single coefficient ``alpha`` at
    grid cell ``(i, j)`` (0-based) gives
    ``alpha * a_r(2*pi*i/G_r) a_t(2*pi*j/G_t)^T``.  With ``oversampling=1``
    this is ``U_r^* C U_t^*``.
    """
    C = np.asarray(C)
    G_r, G_t = oversampling * N_r, oversampling * N_t
    if C.shape != (G_r, G_t):
        raise ValueError(f"coefficient matrix must be {(G_r, G_t)}, got {C.shape}")
    D_r = steering_dictionary(N_r, oversampling)
    D_t = steering_dictionary(N_t, oversampling)
    return D_r.conj().T @ C @ D_t.conj()


def grid_coefficients(H: np.ndarray) -> np.ndarray:
    """Critically-sampled DFT coefficients ``U_r H U_t / (N_r N_t)``; inverts :func:`synth_on_grid`."""
    H = np.asarray(H)
    N_r, N_t = H.shape
    return np.fft.fft(np.fft.fft(H, axis=0), axis=1) / (N_r * N_t)


def aod_grid_index(omega_t: float, G_t: int) -> int:
    """Grid column on which a departure frequency ``omega_t`` lands.

    The channel carries ``conj(a_t(omega_t)) = a_t(-omega_t)``, so the
    index is that of ``-omega_t`` modulo ``2*pi``.
    """
    return int(np.rint((-omega_t % (2 * np.pi)) * G_t / (2 * np.pi))) % G_t


def draw_sparse_coeffs(K: int, G_r: int, G_t: int, rng: np.random.Generator) -> np.ndarray:
    """``G_r x G_t`` matrix with ``K`` CN(0, 1) entries at distinct uniform positions."""
    if not 0 <= K <= G_r * G_t:
        raise ValueError(f"K={K} out of range for a {G_r}x{G_t} grid")
    C = np.zeros(G_r * G_t, dtype=np.complex128)
    pos = rng.choice(G_r * G_t, size=K, replace=False)
    values = crandn(rng, K)
    # a CN(0,1) draw is zero with probability 0, but keep the count exact anyway
    values[values == 0] = 1.0
    C[pos] = values
    return C.reshape(G_r, G_t)
