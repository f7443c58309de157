"""Sparse-sinusoid feature signals: atoms, synthesis and partial observation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigurationError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpectralLine:
    c: float
    f: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigurationError(f"line magnitude must be positive, got {self.c}")
        object.__setattr__(self, "f", float(self.f) % 1.0)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class ObservationPattern:
    """Sorted set of observed sample indices ``omega`` out of ``N``."""

    omega: np.ndarray
    N: int

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=int).reshape(-1)
        if omega.size and (omega.min() < 0 or omega.max() >= self.N):
            raise ConfigurationError(f"observation indices must lie in [0, {self.N})")
        if np.any(np.diff(omega) <= 0):
            raise ConfigurationError("observation indices must be strictly increasing")
        object.__setattr__(self, "omega", omega)

    @classmethod
    def full(cls, N: int) -> "ObservationPattern":
        return cls(np.arange(N), N)

    @classmethod
    def from_mask(cls, mask) -> "ObservationPattern":
        mask = np.asarray(mask, dtype=bool)
        return cls(np.flatnonzero(mask), mask.size)

    @property
    def alpha(self) -> int:
        return int(self.omega.size)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=bool)
        m[self.omega] = True
        return m

    @property
    def complement(self) -> np.ndarray:
        return np.flatnonzero(~self.mask)


def atom(f: float, phi: float, N: int) -> np.ndarray:
    """``a(f, phi)[t] = exp(i (2 pi f t + phi))`` for ``t = 0..N-1``."""
    t = np.arange(N)
    return np.exp(1j * (TWO_PI * f * t + phi))


def atoms(freqs, N: int) -> np.ndarray:
    """Matrix whose columns are zero-phase atoms at ``freqs``."""
    return np.exp(1j * TWO_PI * np.outer(np.arange(N), np.atleast_1d(freqs)))


def synthesize(lines: Iterable[SpectralLine], N: int) -> np.ndarray:
    x = np.zeros(N, dtype=complex)
    for line in lines:
        x += line.c * atom(line.f, line.phi, N)
    return x


def restrict(x, pattern: ObservationPattern) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != pattern.N:
        raise ConfigurationError(f"signal length {x.shape[0]} != pattern length {pattern.N}")
    return x[pattern.omega]


def scatter(values, pattern: ObservationPattern, fill=0.0) -> np.ndarray:
    """Inverse of :func:`restrict`: place ``values`` at ``omega`` in a length-N vector."""
    values = np.asarray(values)
    if values.shape[0] != pattern.alpha:
        raise ConfigurationError(f"{values.shape[0]} values for {pattern.alpha} observed indices")
    out = np.full(pattern.N, fill, dtype=np.result_type(values, complex))
    out[pattern.omega] = values
    return out
