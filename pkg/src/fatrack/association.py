"""Measurement-to-track likelihoods, NN-JPDA association probabilities and
greedy one-to-one assignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError


@dataclass(frozen=True)
class AssocConfig:
    B: float = 0.0
    eta: float = 0.15

    def __post_init__(self):
        if self.B < 0:
            raise ConfigurationError(f"B must be nonnegative, got {self.B}")
        if not 0 < self.eta < 1:
            raise ConfigurationError(f"eta must lie in (0, 1), got {self.eta}")


@dataclass
class Assignment:
    """``chi[m]`` is the 1-based measurement index given to track ``m`` (0: none)."""

    chi: np.ndarray
    beta_chosen: np.ndarray

    def measurement_of(self, m: int) -> int | None:
        r = int(self.chi[m])
        return None if r == 0 else r - 1


def kinematic_likelihood(innovation, S) -> float:
    """Gaussian density of the innovation under covariance ``S``."""
    v = np.atleast_1d(np.asarray(innovation, dtype=float))
    S = np.atleast_2d(np.asarray(S, dtype=float))
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    y = np.linalg.solve(L, v)
    d = v.size
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    return float(np.exp(-0.5 * (y @ y) - 0.5 * log_det - 0.5 * d * np.log(2 * np.pi)))


def kinematic_likelihoods(innovations, S) -> np.ndarray:
    """Vectorised :func:`kinematic_likelihood` for a stack of innovations (n, d)."""
    V = np.asarray(innovations, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    S = np.atleast_2d(np.asarray(S, dtype=float))
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    Y = np.linalg.solve(L, V.T)
    d = S.shape[0]
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    return np.exp(-0.5 * np.sum(Y * Y, axis=0) - 0.5 * log_det - 0.5 * d * np.log(2 * np.pi))


def feature_likelihood(z_f, x_f, sigma2: float):
    """Likelihood of feature measurement(s) ``z_f`` given the predicted feature ``x_f``.

    Uses the real-Gaussian normaliser ``(2 pi sigma2)^-1/2`` on the complex
    modulus of the residual. Broadcasts over arrays.
    """
    if not sigma2 > 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    r2 = np.abs(np.asarray(z_f) - np.asarray(x_f)) ** 2
    out = np.exp(-r2 / (2.0 * sigma2)) / np.sqrt(2.0 * np.pi * sigma2)
    return float(out) if np.ndim(out) == 0 else out


def joint_likelihood(c_k, c_f):
    return np.multiply(c_k, c_f)


def association_probabilities(C, cfg: AssocConfig | None = None) -> np.ndarray:
    """Approximate posterior probabilities ``beta[m, r]``.

    ``beta = C / (D_m + E_r - C + B)`` with ``D`` the row sums (per track) and
    ``E`` the column sums (per measurement). Entries whose denominator is zero
    are set to zero.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise ConfigurationError(f"likelihood table must be 2-D, got shape {C.shape}")
    if np.any(C < 0) or not np.all(np.isfinite(C)):
        raise ConfigurationError("likelihoods must be finite and nonnegative")
    B = 0.0 if cfg is None else cfg.B
    D = C.sum(axis=1, keepdims=True)
    E = C.sum(axis=0, keepdims=True)
    denom = D + E - C + B
    beta = np.zeros_like(C)
    np.divide(C, denom, out=beta, where=denom > 0)
    return beta


def greedy_assign(beta, eta: float) -> Assignment:
    """Repeatedly take the largest remaining ``beta`` (>= eta) and strike its row and column.

    Ties go to the lowest track index, then the lowest measurement index.
    """
    beta = np.array(beta, dtype=float)
    if beta.ndim != 2:
        raise ConfigurationError(f"beta must be 2-D, got shape {beta.shape}")
    M, n = beta.shape
    chi = np.zeros(M, dtype=int)
    chosen = np.zeros(M)
    if n == 0:
        return Assignment(chi, chosen)
    work = beta.copy()
    for _ in range(min(M, n)):
        # argmax on the flattened row-major array resolves ties lexicographically
        k = int(np.argmax(work))
        m, r = divmod(k, n)
        if not work[m, r] >= eta:
            break
        chi[m] = r + 1
        chosen[m] = beta[m, r]
        work[m, :] = -np.inf
        work[:, r] = -np.inf
    return Assignment(chi, chosen)


def nn_jpda_assign(C, cfg: AssocConfig) -> Assignment:
    """NN-JPDA assignment that re-evaluates ``beta`` on the reduced table after
    every accepted pair, so each later choice sees only the tracks and
    measurements still unassigned."""
    C = np.asarray(C, dtype=float)
    M, n = C.shape
    chi = np.zeros(M, dtype=int)
    chosen = np.zeros(M)
    rows = np.arange(M)
    cols = np.arange(n)
    while rows.size and cols.size:
        beta = association_probabilities(C[np.ix_(rows, cols)], cfg)
        k = int(np.argmax(beta))
        i, j = divmod(k, cols.size)
        if not beta[i, j] >= cfg.eta:
            break
        m, r = rows[i], cols[j]
        chi[m] = r + 1
        chosen[m] = beta[i, j]
        rows = np.delete(rows, i)
        cols = np.delete(cols, j)
    return Assignment(chi, chosen)
