"""Linear-Gaussian prediction, update and coasting for a single track."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, NumericalError


@dataclass
class StateEstimate:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))


@dataclass
class LinearModel:
    """State-space matrices ``x' = F x + v``, ``z = H x + w``."""

    F: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n = self.F.shape[0]
        if self.F.shape != (n, n) or self.Q.shape != (n, n):
            raise ConfigurationError(f"F {self.F.shape} and Q {self.Q.shape} must both be {n}x{n}")
        d = self.H.shape[0]
        if self.H.shape[1] != n or self.R.shape != (d, d):
            raise ConfigurationError(
                f"H {self.H.shape} / R {self.R.shape} inconsistent with state dimension {n}")

    @property
    def state_dim(self) -> int:
        return self.F.shape[0]

    @property
    def meas_dim(self) -> int:
        return self.H.shape[0]


@dataclass
class Prediction:
    x_pred: np.ndarray
    z_pred: np.ndarray
    P_pred: np.ndarray
    S: np.ndarray


def cv_process_noise(kappa: float, dt: float) -> np.ndarray:
    """Discrete white-noise-acceleration covariance for a constant-velocity state."""
    return kappa ** 2 * np.array([[dt ** 4 / 4, dt ** 3 / 2],
                                  [dt ** 3 / 2, dt ** 2]])


def cv_model(dt: float, kappa: float, r: float) -> LinearModel:
    """Range / range-rate constant-velocity model with a scalar range measurement."""
    return LinearModel(F=np.array([[1.0, dt], [0.0, 1.0]]),
                       H=np.array([[1.0, 0.0]]),
                       Q=cv_process_noise(kappa, dt),
                       R=np.array([[r]]),
                       dt=dt)


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _check(est: StateEstimate, model: LinearModel):
    n = model.state_dim
    if est.mean.shape != (n,) or est.cov.shape != (n, n):
        raise ConfigurationError(
            f"estimate of shape {est.mean.shape}/{est.cov.shape} does not match model dimension {n}")


def predict(est: StateEstimate, model: LinearModel) -> Prediction:
    _check(est, model)
    x_pred = model.F @ est.mean
    P_pred = symmetrize(model.F @ est.cov @ model.F.T + model.Q)
    S = symmetrize(model.H @ P_pred @ model.H.T + model.R)
    if not np.all(np.isfinite(S)):
        raise NumericalError("innovation covariance is not finite")
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    return Prediction(x_pred=x_pred, z_pred=model.H @ x_pred, P_pred=P_pred, S=S)


def gain(pred: Prediction, model: LinearModel) -> np.ndarray:
    # W = P H^T S^-1, computed as a solve against S (symmetric)
    try:
        return scipy.linalg.solve(pred.S, model.H @ pred.P_pred, assume_a="sym").T
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError("innovation covariance is singular") from exc


def update(pred: Prediction, z, model: LinearModel, joseph: bool = False) -> StateEstimate:
    """Kalman measurement update.

    The default is the subtractive form ``P - W S W^T``; ``joseph=True`` uses
    ``(I - W H) P (I - W H)^T + W R W^T`` which is algebraically the same for
    the optimal gain but better behaved when ``P`` is ill-conditioned.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != pred.z_pred.shape:
        raise ConfigurationError(f"measurement shape {z.shape} != {pred.z_pred.shape}")
    W = gain(pred, model)
    mean = pred.x_pred + W @ (z - pred.z_pred)
    if joseph:
        IKH = np.eye(model.state_dim) - W @ model.H
        cov = IKH @ pred.P_pred @ IKH.T + W @ model.R @ W.T
    else:
        cov = pred.P_pred - W @ pred.S @ W.T
    return StateEstimate(mean, symmetrize(cov))


def coast(pred: Prediction) -> StateEstimate:
    """No measurement assigned: the prediction becomes the posterior."""
    return StateEstimate(pred.x_pred.copy(), pred.P_pred.copy())
