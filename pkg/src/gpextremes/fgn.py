"""Spectral samplers for stationary Gaussian sequences.

Exact-in-distribution sampling through circulant embedding: the target
covariance row is embedded in (or periodized onto) a circle, the circle's
FFT eigenvalues are the sampling spectrum, and one complex FFT of weighted
noise yields two independent real sample rows.  Fractional Gaussian noise
gets dedicated handling: white noise at Hurst 1/2, a single shared normal at
Hurst 1, Davies-Harte embedding otherwise.

Noise is drawn in float32 (the statistical error of any Monte Carlo use is
orders of magnitude above 1e-7 roundoff); spectra and scalings stay float64.
"""
from __future__ import annotations

import math
import os
from typing import Iterator, Optional

import numpy as np
import scipy.fft as sfft

from .errors import SamplerError

__all__ = [
    "workers",
    "fgn_spectrum",
    "sample_fgn",
    "periodized_spectrum",
    "sample_stationary",
    "spawn_rngs",
]

_EIG_CLIP = 1e-8  # relative; embeddings this negative mean a genuine failure


def workers() -> int:
    """FFT worker count, capped by the GE_THREADS environment variable."""
    cap = os.environ.get("GE_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n


def spawn_rngs(seed: int, n_units: int) -> list[np.random.Generator]:
    """Independent per-unit generators derived from one seed.

    Unit streams are fixed by (seed, unit index), so aggregation in unit
    order is deterministic regardless of scheduling.
    """
    return [np.random.Generator(np.random.SFC64(ss))
            for ss in np.random.SeedSequence(seed).spawn(n_units)]


def _fgn_autocov(hurst: float, k: np.ndarray) -> np.ndarray:
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)


def fgn_spectrum(n: int, hurst: float) -> np.ndarray:
    """sqrt eigenvalue weights for circulant embedding of length-n fGn.

    Returns the array w with w**2 = eig/m (m = 2n the circle length), ready
    for ``sample_fgn``.  None is returned for the degenerate Hurst values
    handled by dedicated fast paths (1/2: white noise, 1: one shared normal).
    """
    if not (0 < hurst <= 1):
        raise SamplerError(f"Hurst parameter {hurst} outside (0, 1]")
    if hurst in (0.5, 1.0):
        return None
    k = np.arange(n + 1)
    row = _fgn_autocov(hurst, k)
    circ = np.concatenate([row, row[-2:0:-1]])
    eig = np.fft.fft(circ).real
    floor = -_EIG_CLIP * eig.max()
    if eig.min() < floor:
        raise SamplerError(
            f"fGn embedding produced negative eigenvalues (min {eig.min():.3e})")
    eig = np.maximum(eig, 0.0)
    return np.sqrt(eig / len(eig))


def sample_fgn(rng: np.random.Generator, n: int, hurst: float, n_paths: int,
               spectrum: Optional[np.ndarray] = None) -> np.ndarray:
    """(n_paths, n) array of exact fractional Gaussian noise rows."""
    if hurst == 0.5:
        return rng.standard_normal((n_paths, n), dtype=np.float32).astype(np.float64)
    if hurst == 1.0:
        xi = rng.standard_normal((n_paths, 1))
        return np.repeat(xi, n, axis=1)
    w = fgn_spectrum(n, hurst) if spectrum is None else spectrum
    m = len(w)
    rows = (n_paths + 1) // 2
    z = rng.standard_normal((rows, m), dtype=np.float32) \
        + 1j * rng.standard_normal((rows, m), dtype=np.float32)
    z *= w.astype(np.float32)
    x = sfft.fft(z, axis=1, workers=workers())
    out = np.empty((2 * rows, n))
    out[0::2] = x.real[:, :n]
    out[1::2] = x.imag[:, :n]
    return out[:n_paths]


def periodized_spectrum(cov_fn, delta: float, window: int,
                        decay_tol: float = 1e-7,
                        max_len: int = 2 ** 22) -> tuple[np.ndarray, int]:
    """Spectrum for a stationary kernel wrapped onto a circle.

    ``cov_fn`` evaluates the covariance at an array of lags; the circle is
    sized so the kernel has decayed below ``decay_tol`` before the seam, and
    the row is the wrapped sum of kernel tails, whose FFT is nonnegative up
    to aliasing of the (nonnegative) spectral density.  Returns (w, m) with w
    the sqrt-eigenvalue weights and m the circle length.
    """
    # find the decay range by doubling
    reach = window * delta
    for _ in range(40):
        if abs(cov_fn(np.array([reach]))[0]) < decay_tol:
            break
        reach *= 2.0
        if reach / delta > max_len:
            raise SamplerError(
                "covariance does not decay within the embeddable range; "
                "use the dense sampler")
    m = sfft.next_fast_len(int(math.ceil(reach / delta)) + window)
    j = np.arange(m, dtype=np.float64)
    # both principal wraps; further ones sit below the decay floor
    row = cov_fn(delta * j) + cov_fn(delta * (m - j))
    eig = np.fft.fft(row).real
    floor = -_EIG_CLIP * eig.max()
    if eig.min() < floor:
        raise SamplerError(
            f"periodized embedding not nonnegative (min eig {eig.min():.3e})")
    eig = np.maximum(eig, 0.0)
    return np.sqrt(eig / m), m


def sample_stationary(rng: np.random.Generator, spectrum: np.ndarray, m: int,
                      window: int, n_paths: int) -> np.ndarray:
    """(n_paths, window) standard stationary rows from a precomputed spectrum."""
    rows = (n_paths + 1) // 2
    w32 = spectrum.astype(np.float32)
    z = rng.standard_normal((rows, m), dtype=np.float32) \
        + 1j * rng.standard_normal((rows, m), dtype=np.float32)
    z *= w32
    x = sfft.fft(z, axis=1, workers=workers())
    out = np.empty((2 * rows, window), dtype=np.float64)
    out[0::2] = x.real[:, :window]
    out[1::2] = x.imag[:, :window]
    return out[:n_paths]
