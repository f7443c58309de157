"""Atomic-norm + l1 denoising of partially observed, sparsely corrupted
line-spectral signals, solved by ADMM on the Toeplitz SDP reformulation.

The problem is::

    min_{x, e}  gamma ||x||_A + lam ||e||_1 + 1/2 ||z - x[omega] - e||^2
                (+ zeta/2 ||x[:A] - x_bar||^2   when an overlap prior is given)

with ``||x||_A`` written as ``min (u_0 + theta)/2`` subject to
``[[Toep(u), x], [x^H, theta]] >= 0``. The splitting introduces ``Psi`` (the PSD
copy of that block matrix) and its multiplier ``Upsilon``.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, NumericalError
from .feature_signal import ObservationPattern

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OverlapPrior:
    """Feature estimate ``x_bar`` for indices ``0..A-1`` carried over from the
    previous batch, anchored with weight ``zeta``."""

    x_bar: np.ndarray
    zeta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x_bar", np.asarray(self.x_bar, dtype=complex).reshape(-1))
        if not self.zeta > 0:
            raise ConfigurationError(f"zeta must be positive, got {self.zeta}")

    @property
    def A(self) -> int:
        return self.x_bar.size

    @property
    def xi(self) -> np.ndarray:
        return np.arange(self.A)


@dataclass(frozen=True)
class DenoiseProblem:
    z_tilde: np.ndarray
    pattern: ObservationPattern
    gamma: float
    lam: float
    prior: OverlapPrior | None = None

    def __post_init__(self):
        z = np.asarray(self.z_tilde, dtype=complex).reshape(-1)
        object.__setattr__(self, "z_tilde", z)
        if z.size != self.pattern.alpha:
            raise ConfigurationError(
                f"{z.size} samples supplied for {self.pattern.alpha} observed indices")
        if not (self.gamma > 0 and self.lam > 0):
            raise ConfigurationError(f"gamma and lam must be positive, got {self.gamma}, {self.lam}")
        if self.prior is not None and self.prior.A > self.N:
            raise ConfigurationError(f"prior length {self.prior.A} exceeds N={self.N}")

    @property
    def N(self) -> int:
        return self.pattern.N

    @property
    def alpha(self) -> int:
        return self.pattern.alpha


def default_weights(sigma: float, N: int, alpha: int) -> tuple[float, float]:
    """``gamma = sigma sqrt(N log N)`` and ``lam = gamma / sqrt(alpha)``."""
    gamma = sigma * np.sqrt(N * np.log(N))
    return gamma, gamma / np.sqrt(max(alpha, 1))


@dataclass
class AdmmState:
    x: np.ndarray
    e: np.ndarray
    u: np.ndarray
    theta: float
    Psi: np.ndarray
    Upsilon: np.ndarray
    rho: float
    iter: int = 0

    @classmethod
    def zeros(cls, N: int, alpha: int, rho: float) -> "AdmmState":
        return cls(x=np.zeros(N, complex), e=np.zeros(alpha, complex), u=np.zeros(N, complex),
                   theta=0.0, Psi=np.zeros((N + 1, N + 1), complex),
                   Upsilon=np.zeros((N + 1, N + 1), complex), rho=rho)

    def copy(self) -> "AdmmState":
        return replace(self, x=self.x.copy(), e=self.e.copy(), u=self.u.copy(),
                       Psi=self.Psi.copy(), Upsilon=self.Upsilon.copy())


@dataclass
class DenoiseSolution:
    x_hat: np.ndarray
    e_hat: np.ndarray
    q_hat: np.ndarray
    objective: float
    misassoc_count: int
    iters: int
    converged: bool
    gamma: float
    lam: float
    g_hat: np.ndarray | None = None
    u: np.ndarray = field(default=None, repr=False)
    theta: float = 0.0

    @property
    def certificate(self) -> np.ndarray:
        """Vector whose dual polynomial touches ``gamma`` at the recovered
        frequencies (``q_hat + g_hat`` when a prior was used)."""
        return self.q_hat if self.g_hat is None else self.q_hat + self.g_hat

    @property
    def atomic_norm_bound(self) -> float:
        """``Tr(Toep(u))/(2N) + theta/2`` at the converged SDP blocks."""
        return 0.5 * (float(self.u[0].real) + self.theta)


def toeplitz_from(u) -> np.ndarray:
    """Hermitian Toeplitz matrix with first column ``u`` (imaginary part of u[0] dropped)."""
    u = np.array(u, dtype=complex).reshape(-1)
    u[0] = u[0].real
    return scipy.linalg.toeplitz(u, u.conj())


def subdiag_trace(M, j: int) -> complex:
    """Sum of the ``j``-th subdiagonal ``M[k + j, k]``."""
    M = np.asarray(M)
    if not 0 <= j < M.shape[0]:
        raise ConfigurationError(f"subdiagonal {j} out of range for {M.shape[0]}x{M.shape[0]} matrix")
    return complex(np.trace(M, offset=-j))


@lru_cache(maxsize=32)
def _lower_index(N: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.tril_indices(N)
    return i * N + j, i - j


def trace_adjoint(M) -> np.ndarray:
    """All subdiagonal sums ``[Tr_0(M), ..., Tr_{N-1}(M)]``."""
    M = np.asarray(M, dtype=complex)
    N = M.shape[0]
    flat, diag = _lower_index(N)
    vals = M.reshape(-1)[flat]
    return (np.bincount(diag, weights=vals.real, minlength=N)
            + 1j * np.bincount(diag, weights=vals.imag, minlength=N))


def prox_l1(v, lam: float) -> np.ndarray:
    """Complex soft threshold: shrink each modulus by ``lam``, keep the phase."""
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    scale = np.zeros_like(mag)
    np.divide(np.maximum(mag - lam, 0.0), mag, out=scale, where=mag > 0)
    return scale * v


def psd_project(M) -> np.ndarray:
    """Frobenius-nearest Hermitian PSD matrix (negative eigenvalues clipped)."""
    M = np.asarray(M)
    H = 0.5 * (M + M.conj().T)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigendecomposition failed in PSD projection") from exc
    w = np.maximum(w, 0.0)
    P = (V * w) @ V.conj().T
    return 0.5 * (P + P.conj().T)


def block_matrix(u, x, theta) -> np.ndarray:
    N = x.size
    T = np.empty((N + 1, N + 1), dtype=complex)
    T[:N, :N] = toeplitz_from(u)
    T[:N, N] = x
    T[N, :N] = x.conj()
    T[N, N] = theta
    return T


class _Layout:
    """Full-length masks and data used by the elementwise x-update."""

    def __init__(self, prob: DenoiseProblem):
        N = prob.N
        self.omega = prob.pattern.omega
        self.obs = prob.pattern.mask.astype(float)
        self.z_full = np.zeros(N, complex)
        self.z_full[self.omega] = prob.z_tilde
        self.pri_w = np.zeros(N)
        self.xbar_full = np.zeros(N, complex)
        if prob.prior is not None:
            self.pri_w[prob.prior.xi] = prob.prior.zeta
            self.xbar_full[prob.prior.xi] = prob.prior.x_bar
        self.inv_diag = 1.0 / np.arange(N, 0, -1)  # 1/(N - j), j = 0..N-1


def admm_step(state: AdmmState, prob: DenoiseProblem, layout: _Layout | None = None) -> AdmmState:
    """One ADMM sweep; returns a new state.

    The (x, theta, u) block minimises the augmented Lagrangian at the previous
    ``(Psi, Upsilon)`` and previous ``e``; ``e`` is the soft threshold of the
    residual at the previous ``x``. Then ``Psi`` is projected and ``Upsilon``
    takes a dual ascent step.
    """
    N, rho, gamma = prob.N, state.rho, prob.gamma
    if state.x.size != N or state.e.size != prob.alpha:
        raise ConfigurationError("state dimensions do not match the problem")
    L = layout or _Layout(prob)
    Psi, Ups = state.Psi, state.Upsilon
    psi1, ups1 = Psi[:N, N], Ups[:N, N]

    e_full = np.zeros(N, complex)
    e_full[L.omega] = state.e
    num = L.obs * (L.z_full - e_full) + L.pri_w * L.xbar_full + 2 * rho * psi1 + 2 * ups1
    x = num / (2 * rho + L.obs + L.pri_w)

    theta = Psi[N, N].real + (Ups[N, N].real - gamma / 2) / rho

    G = Psi[:N, :N] + Ups[:N, :N] / rho
    # lower subdiagonals of G and (conjugated) upper ones agree when G is Hermitian
    u = 0.5 * (trace_adjoint(G) + trace_adjoint(G.conj().T)) * L.inv_diag
    u[0] = u[0].real - gamma / (2 * N * rho)

    e = prox_l1(prob.z_tilde - state.x[L.omega], prob.lam)

    T = block_matrix(u, x, theta)
    Psi_new = psd_project(T - Ups / rho)
    Ups_new = Ups + rho * (Psi_new - T)
    return AdmmState(x=x, e=e, u=u, theta=float(theta), Psi=Psi_new, Upsilon=Ups_new,
                     rho=rho, iter=state.iter + 1)


def objective(prob: DenoiseProblem, x, e, u, theta) -> float:
    r = prob.z_tilde - x[prob.pattern.omega] - e
    val = 0.5 * prob.gamma * (float(np.real(u[0])) + theta) + prob.lam * np.sum(np.abs(e)) \
        + 0.5 * np.vdot(r, r).real
    if prob.prior is not None:
        d = x[prob.prior.xi] - prob.prior.x_bar
        val += 0.5 * prob.prior.zeta * np.vdot(d, d).real
    return float(val)


def _residuals(state: AdmmState, prev: AdmmState) -> tuple[float, float]:
    # Psi - T equals the multiplier increment divided by rho
    primal = np.linalg.norm(state.Upsilon - prev.Upsilon) / state.rho
    dual = state.rho * np.linalg.norm(state.Psi - prev.Psi)
    return primal, dual


def extract_solution(state: AdmmState, prob: DenoiseProblem, converged: bool) -> DenoiseSolution:
    N = prob.N
    # x-stationarity at a fixed point gives 2*upsilon_1 = -(residual on omega) - prior pull
    cert = -2.0 * state.Upsilon[:N, N]
    g_hat = None
    if prob.prior is not None:
        xi = prob.prior.xi
        g_hat = np.zeros(N, complex)
        g_hat[xi] = prob.prior.zeta * (prob.prior.x_bar - state.x[xi])
    q_hat = cert if g_hat is None else cert - g_hat
    q_hat = q_hat.copy()
    q_hat[prob.pattern.complement] = 0.0
    return DenoiseSolution(
        x_hat=state.x.copy(), e_hat=state.e.copy(), q_hat=q_hat, g_hat=g_hat,
        objective=objective(prob, state.x, state.e, state.u, state.theta),
        misassoc_count=int(np.sum(np.abs(state.e) > 0.1 * prob.lam)),
        iters=state.iter, converged=converged, gamma=prob.gamma, lam=prob.lam,
        u=state.u.copy(), theta=state.theta)


def solve(prob: DenoiseProblem, rho: float = 0.1, max_iter: int = 500, tol: float = 1e-6,
          state: AdmmState | None = None) -> DenoiseSolution:
    """Run ADMM from a cold (all-zero) start until both the primal residual
    ``||Psi - [Toep(u), x; x^H, theta]||_F`` and the dual residual
    ``rho ||Psi^{l+1} - Psi^l||_F`` drop below ``tol * (N + 1)``.

    If ``max_iter`` is reached first, the iterate with the smallest combined
    residual is returned with ``converged=False``.
    """
    if not rho > 0:
        raise ConfigurationError(f"rho must be positive, got {rho}")
    N = prob.N
    layout = _Layout(prob)
    st = state.copy() if state is not None else AdmmState.zeros(N, prob.alpha, rho)
    thresh = tol * (N + 1)
    best, best_res = st, np.inf
    for _ in range(max_iter):
        prev = st
        st = admm_step(st, prob, layout)
        primal, dual = _residuals(st, prev)
        if primal <= thresh and dual <= thresh:
            return extract_solution(st, prob, converged=True)
        res = max(primal, dual)
        if res < best_res:
            best, best_res = st, res
    log.debug("ADMM stopped at max_iter=%d with residual %.3g", max_iter, best_res)
    return extract_solution(best, prob, converged=False)
