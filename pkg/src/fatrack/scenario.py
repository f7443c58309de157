"""Ground truth and cluttered scans for vibrating targets observed by a
range-only radar that also reports the complex return as a feature.

Time is zero-based: step ``t`` is at ``tau = t * dt`` and step 0 is the
initial state.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError
from .kinematics import cv_model, LinearModel

CLUTTER = -1


@dataclass(frozen=True)
class TruthTarget:
    r0: float
    v0: float
    rho_vib: float = 0.0
    f_vib: float = 0.0
    b: float = 1.0
    phi: float = 0.0
    phi0: float = 0.0
    xi: float = 0.3

    def __post_init__(self):
        if self.f_vib < 0:
            raise ConfigurationError("vibration frequency must be nonnegative")
        if not self.b > 0 or not self.xi > 0:
            raise ConfigurationError("return strength and wavelength must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    M: int = 4
    N: int = 80
    dt: float = 0.5
    Pd: float = 0.9
    mu: float = 5e-3
    region: tuple[float, float] = (-1500.0, -500.0)
    R: float = 25.0
    sigma2: float = 0.1
    clutter_amp: tuple[float, float] = (0.5, 1.5)
    seed: int = 0
    kappa: float | None = None

    def __post_init__(self):
        if not 0 < self.Pd <= 1:
            raise ConfigurationError(f"Pd must lie in (0, 1], got {self.Pd}")
        if self.mu < 0:
            raise ConfigurationError(f"clutter density must be nonnegative, got {self.mu}")
        lo, hi = self.region
        if not hi > lo:
            raise ConfigurationError(f"empty region {self.region}")
        if self.R < 0 or self.sigma2 < 0:
            raise ConfigurationError("noise variances must be nonnegative")
        if self.N < 2 or self.M < 1:
            raise ConfigurationError("need at least one target and two time steps")
        object.__setattr__(self, "region", (float(lo), float(hi)))
        object.__setattr__(self, "clutter_amp", tuple(float(a) for a in self.clutter_amp))

    @property
    def width(self) -> float:
        return self.region[1] - self.region[0]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Scan:
    t: int
    z_k: np.ndarray
    z_f: np.ndarray
    truth_origin: np.ndarray = field(repr=False)

    def __len__(self):
        return self.z_k.size


def truth_state(target: TruthTarget, t, dt: float) -> np.ndarray:
    """(range, range-rate) at step ``t``; broadcasts over an array of steps
    (result shape ``(..., 2)``)."""
    tau = np.asarray(t, dtype=float) * dt
    w = 2 * np.pi * target.f_vib
    rng_ = target.r0 + tau * target.v0 + target.rho_vib * np.sin(w * tau)
    rate = target.v0 + target.rho_vib * w * np.cos(w * tau)
    return np.stack([rng_, rate], axis=-1)


def radar_return(target: TruthTarget, t, dt: float):
    """Complex return ``b exp(i (4 pi / xi) range + i phi + i phi0)``."""
    r = truth_state(target, t, dt)[..., 0]
    out = target.b * np.exp(1j * (4 * np.pi / target.xi * r + target.phi + target.phi0))
    return complex(out) if np.ndim(out) == 0 else out


def process_noise_variance(rho_vib: float, f_vib: float) -> float:
    """Variance of a uniformly distributed acceleration of amplitude
    ``rho_vib (2 pi f_vib)^2``."""
    if rho_vib < 0 or f_vib < 0:
        raise ConfigurationError("vibration magnitude and frequency must be nonnegative")
    return rho_vib ** 2 * (2 * np.pi * f_vib) ** 4 / 3.0


def feature_snr_db(b: float, sigma2: float) -> float:
    return 10.0 * np.log10(b ** 2 / sigma2)


def sigma2_for_snr(snr_db: float, b: float = 1.0) -> float:
    return b ** 2 * 10.0 ** (-snr_db / 10.0)


def paper_targets(rng: np.random.Generator | None = None, xi: float = 0.3) -> list[TruthTarget]:
    """The four-target crossing scenario. Target phase shifts are drawn
    uniformly when ``rng`` is given, otherwise spread evenly."""
    init = [(-1020.0, 3.2), (-960.0, 1.6), (-920.0, 0.2), (-900.0, 0.2)]
    vib = [(0.0244, 0.6), (0.0244, 0.6), (0.0137, 0.8), (0.0137, 0.8)]
    if rng is None:
        phis = np.arange(4) * np.pi / 2
    else:
        phis = rng.uniform(0, 2 * np.pi, 4)
    return [TruthTarget(r0=r, v0=v, rho_vib=a, f_vib=f, b=1.0, phi=float(p), xi=xi)
            for (r, v), (a, f), p in zip(init, vib, phis)]


def tracking_model(cfg: ScenarioConfig, targets: list[TruthTarget]) -> LinearModel:
    kappa = cfg.kappa
    if kappa is None:
        kappa = max(np.sqrt(process_noise_variance(t.rho_vib, t.f_vib)) for t in targets)
    return cv_model(cfg.dt, kappa, cfg.R)


def generate_scan(truths: list[TruthTarget], cfg: ScenarioConfig, rng: np.random.Generator,
                  t: int) -> Scan:
    """One scan: detected target returns plus Poisson clutter, shuffled."""
    zk, zf, origin = [], [], []
    for m, tgt in enumerate(truths):
        if rng.random() >= cfg.Pd:
            continue
        r = truth_state(tgt, t, cfg.dt)[0]
        zk.append(r + np.sqrt(cfg.R) * rng.standard_normal())
        # circular complex noise, E|w|^2 = sigma2
        w = np.sqrt(cfg.sigma2 / 2) * (rng.standard_normal() + 1j * rng.standard_normal())
        zf.append(radar_return(tgt, t, cfg.dt) + w)
        origin.append(m)
    n_c = rng.poisson(cfg.mu * cfg.width)
    if n_c:
        zk.extend(rng.uniform(cfg.region[0], cfg.region[1], n_c))
        amp = rng.uniform(cfg.clutter_amp[0], cfg.clutter_amp[1], n_c)
        zf.extend(amp * np.exp(1j * rng.uniform(0, 2 * np.pi, n_c)))
        origin.extend([CLUTTER] * n_c)
    order = rng.permutation(len(zk))
    return Scan(t=t,
                z_k=np.asarray(zk, dtype=float)[order],
                z_f=np.asarray(zf, dtype=complex)[order],
                truth_origin=np.asarray(origin, dtype=int)[order])


def generate_scans(truths, cfg: ScenarioConfig, rng: np.random.Generator) -> list[Scan]:
    return [generate_scan(truths, cfg, rng, t) for t in range(cfg.N)]


@dataclass
class ScenarioTruth:
    targets: list[TruthTarget]
    states: np.ndarray  # (M, T, 2)
    features: np.ndarray  # (M, T)

    @classmethod
    def build(cls, targets: list[TruthTarget], cfg: ScenarioConfig) -> "ScenarioTruth":
        t = np.arange(cfg.N)
        return cls(targets=list(targets),
                   states=np.stack([truth_state(g, t, cfg.dt) for g in targets]),
                   features=np.stack([radar_return(g, t, cfg.dt) for g in targets]))
