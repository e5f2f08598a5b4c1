"""Analog front end: quantized beam codebooks, CFO, Wiener phase noise and the measurement model.

The ``n``-th measurement (``n = 1..M``) is::

    y[n] = w_n^H H f_n exp(j (omega_e n + phi_n)) + v[n],   v ~ CN(0, sigma2 / rho)

with ``omega_e = 2 pi f_e T`` and ``phi`` a Wiener process started at
``phi_0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import crandn

__all__ = [
    "OSCILLATOR_C",
    "SystemConfig",
    "ImpairmentTrace",
    "Codebook",
    "MeasurementSet",
    "practical_tau",
    "draw_phase_noise",
    "make_trace",
    "random_codebook",
    "phase_quantize",
    "simulate_measurements",
]

#: Oscillator constant in (rad Hz)^-1 for a 28 GHz local oscillator.
OSCILLATOR_C = 4.7e-18


@dataclass(frozen=True)
class SystemConfig:
    """Link-level constants.  Defaults follow the 28 GHz desk setup."""

    N_t: int = 32
    N_r: int = 16
    M: int = 64
    q: int = 8
    T: float = 0.5e-6
    rho: float = 1.0
    sigma2: float = 1.0
    f_c: float = 28e9
    f_max: float = 280e3
    gamma_leak: float = 2.0
    oversampling: int = 2

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.q < 2:
            raise ValueError("q must be >= 2")
        if self.T <= 0 or self.rho <= 0 or self.sigma2 < 0:
            raise ValueError("need T > 0, rho > 0, sigma2 >= 0")
        if not 0 < 2 * self.T * self.f_max <= 1:
            raise ValueError("need 0 < 2 T f_max <= 1")
        if not 1 <= self.gamma_leak <= 1 / (2 * self.T * self.f_max):
            raise ValueError("gamma_leak must lie in [1, 1/(2 T f_max)]")
        if self.oversampling < 1:
            raise ValueError("oversampling must be >= 1")

    @property
    def snr_db(self) -> float:
        return float(10 * np.log10(self.rho / self.sigma2)) if self.sigma2 > 0 else np.inf

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        """Copy with ``rho = 1`` and ``sigma2`` set from ``snr_db = 10 log10(rho / sigma2)``."""
        return replace(self, rho=1.0, sigma2=10 ** (-snr_db / 10))

    @property
    def noise_var(self) -> float:
        """Variance of the normalized measurement noise, ``sigma2 / rho``."""
        return self.sigma2 / self.rho


def practical_tau(f_c: float, c: float = OSCILLATOR_C, T_s: float = 0.5e-6) -> float:
    """Phase-noise increment standard deviation ``2 pi f_c sqrt(c T_s)`` in radians."""
    return float(2 * np.pi * f_c * np.sqrt(c * T_s))


def draw_phase_noise(M: int, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Wiener phase path ``phi_1..phi_M`` with N(0, tau^2) increments and ``phi_0 = 0``.

    The increments are unit normals scaled by ``tau``, so one seed gives the
    same path shape for every ``tau``.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return tau * np.cumsum(rng.standard_normal(M))


@dataclass(frozen=True)
class ImpairmentTrace:
    f_e: float
    T: float
    tau: float
    phi: np.ndarray

    @property
    def omega_e(self) -> float:
        return 2 * np.pi * self.f_e * self.T

    @property
    def Omega(self) -> np.ndarray:
        n = np.arange(1, self.phi.size + 1)
        return self.omega_e * n + self.phi

    @property
    def e_Omega(self) -> np.ndarray:
        return np.exp(1j * self.Omega)


def make_trace(cfg: SystemConfig, f_e: float, tau: float, rng: np.random.Generator | None = None,
               check_range: bool = True) -> ImpairmentTrace:
    """Impairment trace with CFO ``f_e`` (Hz) and a fresh phase-noise path.

    ``rng`` may be omitted when ``tau == 0``.
    """
    if check_range and abs(f_e) > cfg.f_max:
        raise ValueError(f"|f_e|={abs(f_e):g} Hz exceeds f_max={cfg.f_max:g} Hz")
    if rng is None:
        if tau != 0:
            raise ValueError("an rng is required for tau > 0")
        phi = np.zeros(cfg.M)
    else:
        phi = draw_phase_noise(cfg.M, tau, rng)
    return ImpairmentTrace(f_e=f_e, T=cfg.T, tau=tau, phi=phi)


@dataclass(frozen=True)
class Codebook:
    """Training beams, one row per measurement: ``W`` is ``(M, N_r)``, ``F`` is ``(M, N_t)``."""

    W: np.ndarray
    F: np.ndarray
    q: int

    @property
    def M(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class MeasurementSet:
    y: np.ndarray
    r: np.ndarray | None = None
    s: complex | None = None
    v: np.ndarray | None = None


def random_codebook(cfg: SystemConfig, rng: np.random.Generator) -> Codebook:
    """Independent uniformly drawn q-level phases with magnitude ``1/sqrt(N)``."""
    alphabet = np.exp(2j * np.pi * np.arange(cfg.q) / cfg.q)
    W = alphabet[rng.integers(0, cfg.q, (cfg.M, cfg.N_r))] / np.sqrt(cfg.N_r)
    F = alphabet[rng.integers(0, cfg.q, (cfg.M, cfg.N_t))] / np.sqrt(cfg.N_t)
    return Codebook(W, F, cfg.q)


def phase_quantize(v, q: int) -> np.ndarray:
    """Snap each entry to the nearest phase in ``{2 pi i / q}`` and scale to unit norm.

    Exact ties go to the smaller alphabet phase; zero entries get phase 0.
    """
    v = np.atleast_1d(np.asarray(v, dtype=np.complex128))
    step = 2 * np.pi / q
    x = np.mod(np.angle(v), 2 * np.pi) / step
    idx = np.mod(np.ceil(x - 0.5), q).astype(np.int64)
    idx[v == 0] = 0
    return np.exp(1j * step * idx) / np.sqrt(v.size)


def simulate_measurements(
    H: np.ndarray,
    codebook: Codebook,
    trace: ImpairmentTrace,
    cfg: SystemConfig,
    rng: np.random.Generator | None = None,
) -> MeasurementSet:
    """Noisy, phase-rotated measurements of ``H`` through the codebook.

    Noise is unit CN(0, 1) scaled by ``sqrt(sigma2 / rho)``; ``rng`` may be
    omitted when ``sigma2 == 0``.
    """
    clean = np.einsum("ni,ij,nj->n", codebook.W.conj(), H, codebook.F) * trace.e_Omega
    if cfg.sigma2 > 0:
        if rng is None:
            raise ValueError("an rng is required for noisy measurements")
        v = np.sqrt(cfg.noise_var) * crandn(rng, clean.size)
    else:
        v = np.zeros_like(clean)
    s = complex(np.sqrt(cfg.rho))
    r = clean * s + v * s
    return MeasurementSet(y=clean + v, r=r, s=s, v=v)
