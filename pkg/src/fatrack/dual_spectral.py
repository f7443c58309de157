"""Frequency localisation and outlier detection from the dual solution.

At an optimum the dual polynomial ``Y(f) = sum_t q_t exp(-i 2 pi f t)`` has
modulus ``gamma`` exactly at the frequencies of the recovered signal (and at
most ``gamma`` elsewhere), and the dual vector has modulus ``lam`` wherever the
sparse corruption is nonzero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EstimationError
from .feature_signal import ObservationPattern, atoms


@dataclass
class DualCertificate:
    q: np.ndarray
    gamma: float
    lam: float
    g: np.ndarray | None = None

    @classmethod
    def from_solution(cls, sol) -> "DualCertificate":
        return cls(q=sol.q_hat, gamma=sol.gamma, lam=sol.lam, g=sol.g_hat)

    @property
    def atomic(self) -> np.ndarray:
        return self.q if self.g is None else self.q + self.g


@dataclass
class RecoveredSpectrum:
    freqs: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    source: str = ""
    peak_values: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.freqs.size

    @property
    def lines(self) -> list[tuple[float, float, float]]:
        return [(float(f), float(a), float(p))
                for f, a, p in zip(self.freqs, self.amplitudes, self.phases)]

    @classmethod
    def empty(cls, source: str = "") -> "RecoveredSpectrum":
        z = np.zeros(0)
        return cls(z, z.copy(), z.copy(), source, z.copy())


def dual_polynomial(q, f):
    """``Y(f) = <q, a(f, 0)>``, conjugate-linear in the atom. Vectorised over ``f``."""
    q = np.asarray(q, dtype=complex)
    f = np.asarray(f, dtype=float)
    t = np.arange(q.size)
    out = np.exp(-2j * np.pi * np.multiply.outer(f, t)) @ q
    return complex(out) if out.ndim == 0 else out


def dual_polynomial_grid(q, grid_size: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    """``Y`` on the uniform grid ``k / grid_size`` (via FFT)."""
    q = np.asarray(q, dtype=complex)
    if grid_size < q.size:
        raise ValueError(f"grid_size {grid_size} smaller than signal length {q.size}")
    return np.arange(grid_size) / grid_size, np.fft.fft(q, grid_size)


def _circular_dist(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


def locate_frequencies(cert: DualCertificate, grid_size: int = 4096, tol: float = 1e-2,
                       x_hat=None, pattern: ObservationPattern | None = None,
                       source: str = "") -> RecoveredSpectrum:
    """Frequencies where ``|Y|`` reaches ``gamma``.

    Local maxima of ``|Y|`` on the grid that are at least ``(1 - tol) gamma``
    are refined to ``1e-6`` by a bounded scalar search, phases are read from
    ``arg Y``. When ``x_hat`` is given, amplitudes are least-squares fits of the
    located atoms to ``x_hat`` (on ``pattern`` if supplied, otherwise on all
    samples); otherwise they are left as NaN.
    """
    q = cert.atomic
    N = q.size
    grid, Y = dual_polynomial_grid(q, grid_size)
    mag = np.abs(Y)
    is_peak = (mag >= np.roll(mag, 1)) & (mag > np.roll(mag, -1)) & (mag >= (1 - tol) * cert.gamma)
    peaks = np.flatnonzero(is_peak)
    if peaks.size == 0:
        return RecoveredSpectrum.empty(source)

    step = 1.0 / grid_size
    found = []
    for k in peaks:
        res = minimize_scalar(lambda f: -abs(dual_polynomial(q, f)),
                              bounds=(grid[k] - step, grid[k] + step), method="bounded",
                              options={"xatol": 1e-7})
        f = float(res.x) % 1.0
        found.append((f, -float(res.fun)))

    # merge peaks closer than a quarter of the Rayleigh resolution
    found.sort(key=lambda p: -p[1])
    kept = []
    for f, v in found:
        if all(_circular_dist(f, g) > 1.0 / (4 * N) for g, _ in kept):
            kept.append((f, v))
    kept.sort()
    freqs = np.array([f for f, _ in kept])
    peak_vals = np.array([v for _, v in kept])
    phases = np.angle(dual_polynomial(q, freqs)) % (2 * np.pi)

    amps = np.full(freqs.size, np.nan)
    if x_hat is not None:
        x_hat = np.asarray(x_hat, dtype=complex)
        rows = np.arange(N) if pattern is None else pattern.omega
        coef, *_ = np.linalg.lstsq(atoms(freqs, N)[rows], x_hat[rows], rcond=None)
        amps = np.abs(coef)
    return RecoveredSpectrum(freqs, amps, phases, source, peak_vals)


def detect_misassociations(cert: DualCertificate, pattern: ObservationPattern,
                           tol: float = 5e-2) -> np.ndarray:
    """Positions ``j`` in the observed set where ``|q(omega[j])| >= (1 - tol) lam``."""
    qo = np.abs(cert.q[pattern.omega])
    return np.flatnonzero(qo >= (1 - tol) * cert.lam)


def vibration_frequency(spec: RecoveredSpectrum, dt: float) -> float:
    """Spacing (Hz) between the two strongest lines, measured circularly."""
    if len(spec) < 2:
        raise EstimationError(f"need at least two spectral lines, got {len(spec)}")
    w = spec.amplitudes
    if np.any(np.isnan(w)):
        w = spec.peak_values
    i, j = np.argsort(-w, kind="stable")[:2]
    return float(_circular_dist(spec.freqs[i], spec.freqs[j])) / dt
