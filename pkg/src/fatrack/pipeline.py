"""Batch feature-aided NN-JPDAF (FA-NN-JPDAF), the kinematic-only and
augmented-state baselines, and Monte Carlo scoring.

Batch sliding: a batch covers ``N`` steps whose step 0 is the hand-off state
of the previous batch. The last ``A`` steps of a batch are the first ``A``
steps of the next one, so batches start every ``N - A`` steps. Re-filtered
states for steps ``1..N-A`` are final; the hand-off state is step ``N - A``
and the feature prior for the next batch is ``x_hat[N-A:N]``. In the final
batch of a run the steps after ``N - A`` keep their first-pass estimates
unless ``BatchConfig.refilter_final_tail`` is set.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import association as assoc
from .atomic_admm import DenoiseProblem, DenoiseSolution, OverlapPrior, default_weights, solve
from .dual_spectral import DualCertificate, RecoveredSpectrum, locate_frequencies, vibration_frequency
from .errors import ConfigurationError, EstimationError, NumericalError
from .feature_signal import ObservationPattern
from .kinematics import LinearModel, StateEstimate, coast, predict, update
from .scenario import (ScenarioConfig, ScenarioTruth, Scan, generate_scans, paper_targets,
                       tracking_model)

log = logging.getLogger(__name__)

ALGORITHMS = ("baseline", "fa", "augmented")


@dataclass(frozen=True)
class BatchConfig:
    N: int = 32
    A: int = 16
    zeta: float = 1.0
    rho: float = 0.1
    max_iter: int = 500
    tol: float = 1e-4
    sigma_tilde_factor: float = float(np.sqrt(10.0))
    gamma_scale: float = 1.0
    lambda_scale: float = 1.0
    assoc: assoc.AssocConfig = field(default_factory=assoc.AssocConfig)
    P0: tuple[float, float] = (10.0, 10.0)
    const_feature_likelihood: float | None = None
    refilter_final_tail: bool = False

    def __post_init__(self):
        if not 1 <= self.A < self.N:
            raise ConfigurationError(f"overlap A must satisfy 1 <= A < N, got A={self.A}, N={self.N}")
        if isinstance(self.assoc, dict):
            object.__setattr__(self, "assoc", assoc.AssocConfig(**self.assoc))

    def weights(self, sigma: float, N: int, alpha: int) -> tuple[float, float]:
        g, l = default_weights(sigma, N, alpha)
        return self.gamma_scale * g, self.lambda_scale * l

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- one scan

def associate(preds, scan: Scan, cfg: assoc.AssocConfig, feature_pred=None,
              sigma2_tilde: float | None = None, const_feature: float | None = None):
    """Likelihood table for all tracks against ``scan`` and NN-JPDA assignment.

    ``feature_pred[m]`` is the predicted feature of track ``m`` (NaN: none, so
    that row stays kinematic-only). Returns the assignment and the table.
    """
    M, n = len(preds), len(scan)
    C = np.zeros((M, n))
    if n == 0:
        return assoc.Assignment(np.zeros(M, int), np.zeros(M)), C
    for m, p in enumerate(preds):
        C[m] = assoc.kinematic_likelihoods(scan.z_k[:, None] - p.z_pred[None, :], p.S)
    if feature_pred is not None:
        for m in range(M):
            if np.isnan(feature_pred[m]):
                continue
            if const_feature is not None:
                cf = np.full(n, const_feature)
            else:
                cf = assoc.feature_likelihood(scan.z_f, feature_pred[m], sigma2_tilde)
            C[m] = assoc.joint_likelihood(C[m], cf)
    return assoc.nn_jpda_assign(C, cfg), C


def filter_step(ests: list[StateEstimate], model: LinearModel, scan: Scan, cfg: assoc.AssocConfig,
                feature_pred=None, sigma2_tilde=None, const_feature=None):
    preds = [predict(e, model) for e in ests]
    a, _ = associate(preds, scan, cfg, feature_pred, sigma2_tilde, const_feature)
    out = []
    for m, p in enumerate(preds):
        r = a.measurement_of(m)
        out.append(coast(p) if r is None else update(p, scan.z_k[r:r + 1], model))
    return out, a.chi


# ---------------------------------------------------------------- histories

@dataclass
class TrackHistory:
    """Final per-step estimates of all tracks from one algorithm on one run."""

    means: np.ndarray            # (M, T, d)
    covs: np.ndarray             # (M, T, d, d)
    chi: np.ndarray              # (M, T)
    features: np.ndarray         # (M, T) complex, NaN where not estimated
    fvib: list = field(default_factory=list)  # (target, batch_start, Hz or NaN)
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, M: int, T: int, d: int = 2) -> "TrackHistory":
        return cls(means=np.zeros((M, T, d)), covs=np.zeros((M, T, d, d)),
                   chi=np.zeros((M, T), int), features=np.full((M, T), np.nan, complex))

    def record(self, t: int, ests, chi=None):
        for m, e in enumerate(ests):
            self.means[m, t] = e.mean
            self.covs[m, t] = e.cov
        if chi is not None:
            self.chi[:, t] = chi


def init_tracks(truth: ScenarioTruth, P0, rng: np.random.Generator) -> list[StateEstimate]:
    """Initial estimates drawn from ``N(true state at step 0, P0)``."""
    P0 = np.diag(np.asarray(P0, dtype=float)) if np.ndim(P0) == 1 else np.asarray(P0, float)
    L = np.linalg.cholesky(P0) if np.any(P0) else np.zeros_like(P0)
    return [StateEstimate(truth.states[m, 0] + L @ rng.standard_normal(P0.shape[0]), P0.copy())
            for m in range(truth.states.shape[0])]


def run_baseline(init: list[StateEstimate], scans: list[Scan], model: LinearModel,
                 cfg: BatchConfig) -> TrackHistory:
    """Kinematic-only NN-JPDAF over the whole run."""
    hist = TrackHistory.empty(len(init), len(scans))
    ests = init
    hist.record(0, ests)
    for t in range(1, len(scans)):
        ests, chi = filter_step(ests, model, scans[t], cfg.assoc)
        hist.record(t, ests, chi)
    return hist


# ---------------------------------------------------------------- feature-aided batches

@dataclass
class Carryover:
    states: list[StateEstimate]
    x_bar: list  # per track: complex array of length A, or None


@dataclass
class BatchResult:
    start: int
    last: int                   # re-filtered steps are 1..last
    states: list                # [k][m] StateEstimate, k = 0..last
    chi: np.ndarray             # (M, last + 1) from the re-filter pass
    chi_pass1: np.ndarray       # (M, n)
    features: list              # per track x_hat (length n) or None
    spectra: list               # per track RecoveredSpectrum or None
    solutions: list             # per track DenoiseSolution or None


def estimate_feature(z_f_assoc, chi_row, sigma: float, cfg: BatchConfig,
                     x_bar=None) -> tuple[DenoiseSolution | None, RecoveredSpectrum | None]:
    """Sparse feature recovery for one track in one batch.

    ``chi_row`` marks the steps with an associated measurement and
    ``z_f_assoc`` holds the feature samples at those steps.
    """
    n = chi_row.size
    pattern = ObservationPattern.from_mask(chi_row != 0)
    if pattern.alpha == 0:
        return None, None
    gamma, lam = cfg.weights(sigma, n, pattern.alpha)
    prior = None if x_bar is None else OverlapPrior(x_bar, cfg.zeta)
    prob = DenoiseProblem(np.asarray(z_f_assoc), pattern, gamma, lam, prior)
    sol = solve(prob, rho=cfg.rho, max_iter=cfg.max_iter, tol=cfg.tol)
    spec = locate_frequencies(DualCertificate.from_solution(sol), x_hat=sol.x_hat,
                              source="fa-admm")
    return sol, spec


def _assoc_features(scans: list[Scan], chi: np.ndarray, m: int) -> np.ndarray:
    return np.array([scans[k].z_f[chi[m, k] - 1] for k in range(chi.shape[1]) if chi[m, k]],
                    dtype=complex)


def run_batch(ests: list[StateEstimate], scans: list[Scan], model: LinearModel, cfg: BatchConfig,
              sigma: float, prior_features=None, final: bool = False) -> tuple[BatchResult, Carryover | None]:
    """Process one batch of scans (``scans[0]`` is the hand-off step, its
    measurements are not used).

    Pass 1 tracks through the batch, using the carried-over feature prior for
    association on the overlap steps ``1..A-1``. Each track's associated
    feature samples are then denoised (with the overlap prior when present).
    Pass 2 re-filters from the hand-off state with feature-aided association.
    """
    n, M, A = len(scans), len(ests), cfg.A
    if n < 2:
        raise ConfigurationError("a batch needs at least two steps")
    s2t = (cfg.sigma_tilde_factor * sigma) ** 2
    cf = cfg.const_feature_likelihood
    if prior_features is None:
        prior_features = [None] * M

    # pass 1
    chi1 = np.zeros((M, n), dtype=int)
    cur = ests
    states1 = [list(ests)]
    for k in range(1, n):
        fp = None
        if k <= A - 1 and any(x is not None for x in prior_features):
            fp = np.array([np.nan if x is None else x[k] for x in prior_features], dtype=complex)
        cur, chi1[:, k] = filter_step(cur, model, scans[k], cfg.assoc, fp, s2t, cf)
        states1.append(cur)

    # feature recovery
    sols, specs, feats = [], [], []
    for m in range(M):
        sol, spec = estimate_feature(_assoc_features(scans, chi1, m), chi1[m], sigma, cfg,
                                     prior_features[m])
        sols.append(sol)
        specs.append(spec)
        feats.append(None if sol is None else sol.x_hat)
    fmat = np.array([np.full(n, np.nan, complex) if f is None else f for f in feats])

    # pass 2
    stop = n - 1 if final and cfg.refilter_final_tail else max(n - A, 1)
    last = n - 1 if final else n - A
    states = [list(ests)]
    chi2 = np.zeros((M, last + 1), dtype=int)
    cur = ests
    for k in range(1, last + 1):
        if k <= stop:
            cur, chi2[:, k] = filter_step(cur, model, scans[k], cfg.assoc, fmat[:, k], s2t, cf)
            states.append(cur)
        else:
            states.append(states1[k])
            chi2[:, k] = chi1[:, k]

    res = BatchResult(start=scans[0].t, last=last, states=states, chi=chi2, chi_pass1=chi1,
                      features=feats, spectra=specs, solutions=sols)
    if final:
        return res, None
    carry = Carryover(states=list(states[n - A]),
                      x_bar=[None if f is None else f[n - A:].copy() for f in feats])
    return res, carry


def run_first_batch(ests, scans, model, cfg: BatchConfig, sigma: float, final: bool = False):
    """First batch of a run: no feature prior, so pass 1 is kinematic-only and
    the denoising problem has no overlap term."""
    return run_batch(ests, scans, model, cfg, sigma, prior_features=None, final=final)


def batch_starts(T: int, N: int, A: int) -> list[tuple[int, int]]:
    """(start, end) step ranges of the sliding batches covering ``0..T-1``."""
    out, start = [], 0
    while True:
        end = min(start + N, T)
        out.append((start, end))
        if end == T:
            return out
        start = end - A


def run_fa(init: list[StateEstimate], scans: list[Scan], model: LinearModel, cfg: BatchConfig,
           sigma: float, dt: float) -> TrackHistory:
    """Feature-aided NN-JPDAF over a whole run."""
    M, T = len(init), len(scans)
    hist = TrackHistory.empty(M, T)
    hist.record(0, init)
    carry = Carryover(init, [None] * M)
    n_nonconv = 0
    for start, end in batch_starts(T, cfg.N, cfg.A):
        final = end == T
        window = scans[start:end]
        if start == 0:
            res, nxt = run_first_batch(carry.states, window, model, cfg, sigma, final)
        else:
            res, nxt = run_batch(carry.states, window, model, cfg, sigma, carry.x_bar, final)
        for k in range(1, res.last + 1):
            hist.record(start + k, res.states[k], res.chi[:, k])
        k0 = 0 if start == 0 else 1
        for m in range(M):
            f = res.features[m]
            if f is not None:
                hist.features[m, start + k0:start + res.last + 1] = f[k0:res.last + 1]
                n_nonconv += not res.solutions[m].converged
            try:
                fv = vibration_frequency(res.spectra[m], dt) if res.spectra[m] is not None else np.nan
            except EstimationError:
                fv = np.nan
            hist.fvib.append((m, start, fv))
        carry = nxt
    hist.meta["admm_nonconverged"] = n_nonconv
    hist.meta["final_tail_refiltered"] = cfg.refilter_final_tail
    return hist


# ---------------------------------------------------------------- augmented-state comparator

def augmented_model(model: LinearModel, q_feature: np.ndarray, sigma2: float) -> LinearModel:
    """Kinematic CV model stacked with CV models for Re/Im of each feature.

    ``q_feature`` is the acceleration variance of the feature (one value,
    shared by the real and imaginary parts).
    """
    dt = model.dt
    Fcv = np.array([[1.0, dt], [0.0, 1.0]])
    Qshape = np.array([[dt ** 4 / 4, dt ** 3 / 2], [dt ** 3 / 2, dt ** 2]])
    F = np.zeros((6, 6))
    Q = np.zeros((6, 6))
    F[:2, :2], Q[:2, :2] = model.F, model.Q
    for i in (2, 4):
        F[i:i + 2, i:i + 2] = Fcv
        Q[i:i + 2, i:i + 2] = q_feature * Qshape
    H = np.zeros((3, 6))
    H[0, 0] = H[1, 2] = H[2, 4] = 1.0
    R = np.diag([model.R[0, 0], sigma2 / 2, sigma2 / 2])
    return LinearModel(F, H, Q, R, dt)


def run_augmented(init: list[StateEstimate], scans: list[Scan], truth: ScenarioTruth,
                  model: LinearModel, cfg: BatchConfig, sigma2: float) -> TrackHistory:
    """NN-JPDAF on the state (range, rate, Re f, Re f', Im f, Im f'), feature
    parts initialised at truth."""
    M, T = len(init), len(scans)
    dt = model.dt
    models, ests = [], []
    for m, e in enumerate(init):
        tgt = truth.targets[m]
        feat = truth.features[m]
        dphase = 4 * np.pi / tgt.xi * truth.states[m, :, 1]
        # |d2/dt2 b e^{i phase}| <= b (phase'^2 + |phase''|)
        phase_acc = np.gradient(dphase, dt)
        acc_max = np.max(tgt.b * (dphase ** 2 + np.abs(phase_acc)))
        models.append(augmented_model(model, acc_max ** 2 / 3.0, max(sigma2, 1e-12)))
        f0, fd0 = feat[0], 1j * dphase[0] * feat[0]
        mean = np.r_[e.mean, f0.real, fd0.real, f0.imag, fd0.imag]
        ests.append(StateEstimate(mean, np.diag(np.r_[np.diag(e.cov), [10.0] * 4])))
    hist = TrackHistory.empty(M, T)
    hist.record(0, [StateEstimate(e.mean[:2], e.cov[:2, :2]) for e in ests])
    hist.features[:, 0] = [e.mean[2] + 1j * e.mean[4] for e in ests]
    for t in range(1, T):
        scan = scans[t]
        preds = [predict(e, md) for e, md in zip(ests, models)]
        C = np.zeros((M, len(scan)))
        if len(scan):
            Z = np.column_stack([scan.z_k, scan.z_f.real, scan.z_f.imag])
            for m, p in enumerate(preds):
                C[m] = assoc.kinematic_likelihoods(Z - p.z_pred[None, :], p.S)
        a = assoc.nn_jpda_assign(C, cfg.assoc)
        ests = []
        for m, p in enumerate(preds):
            r = a.measurement_of(m)
            ests.append(coast(p) if r is None else update(p, Z[r], models[m]))
        hist.record(t, [StateEstimate(e.mean[:2], e.cov[:2, :2]) for e in ests], a.chi)
        hist.features[:, t] = [e.mean[2] + 1j * e.mean[4] for e in ests]
    return hist


# ---------------------------------------------------------------- scoring

def nees(est: StateEstimate, truth) -> float:
    """Normalised estimation error squared ``e^T P^-1 e``."""
    err = est.mean - np.asarray(truth, dtype=float)
    try:
        return float(err @ np.linalg.solve(est.cov, err))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("state covariance is singular") from exc


def nees_series(means, covs, truth_states) -> np.ndarray:
    err = means - truth_states
    return np.einsum("...i,...i->...", err, np.linalg.solve(covs, err[..., None])[..., 0])


def track_loss_check(est: StateEstimate, truth, sigma_m: float, nees_max: float = 20.0) -> bool:
    """True when the position error exceeds ``10 sigma_m`` or NEES exceeds ``nees_max``."""
    pos_err = abs(est.mean[0] - truth[0])
    return bool(pos_err > 10 * sigma_m or nees(est, truth) > nees_max)


def loss_times(pos_err: np.ndarray, nees_vals: np.ndarray, sigma_m: float,
               nees_max: float = 20.0) -> np.ndarray:
    """First violating step per track (``T`` if never lost); loss is permanent."""
    bad = (pos_err > 10 * sigma_m) | (nees_vals > nees_max)
    T = bad.shape[-1]
    return np.where(bad.any(axis=-1), np.argmax(bad, axis=-1), T)


@dataclass
class RunScore:
    """Per-run, per-algorithm scores (arrays are (M, T))."""

    pos_err: np.ndarray
    nees: np.ndarray
    lost_at: np.ndarray
    feat_err2: np.ndarray
    fvib_err2: np.ndarray   # per (track, batch) squared error, NaN when unavailable
    fvib_track: np.ndarray  # track index of each fvib entry
    meta: dict = field(default_factory=dict)


def score(hist: TrackHistory, truth: ScenarioTruth, sigma_m: float) -> RunScore:
    pos_err = np.abs(hist.means[..., 0] - truth.states[..., 0])
    nv = nees_series(hist.means, hist.covs, truth.states)
    lost = loss_times(pos_err, nv, sigma_m)
    feat_err2 = np.abs(hist.features - truth.features) ** 2
    fv = np.array([(m, h) for m, _, h in hist.fvib], dtype=float).reshape(-1, 2)
    f_true = np.array([truth.targets[int(m)].f_vib for m in fv[:, 0]])
    return RunScore(pos_err=pos_err, nees=nv, lost_at=lost, feat_err2=feat_err2,
                    fvib_err2=(fv[:, 1] - f_true) ** 2, fvib_track=fv[:, 0].astype(int),
                    meta=dict(hist.meta))


@dataclass
class RunMetrics:
    """Monte Carlo aggregate for one algorithm."""

    algorithm: str
    continuity_pct: np.ndarray   # (T,) percent of tracks not lost by step t
    rmse: np.ndarray             # (T,) position RMSE over tracks not lost at t
    nees_mean: np.ndarray        # (T,) mean NEES over tracks not lost at t
    feat_rmse: np.ndarray        # (T,) feature RMSE over tracks not lost at t
    fvib_rmse: float             # vibration-frequency RMSE over tracks never lost
    runs: int
    meta: dict = field(default_factory=dict)

    @property
    def final_continuity(self) -> float:
        return float(self.continuity_pct[-1])

    @property
    def mean_rmse(self) -> float:
        return float(np.nanmean(self.rmse))

    @property
    def overall_feat_rmse(self) -> float:
        sq = self.feat_rmse[~np.isnan(self.feat_rmse)] ** 2
        return float(np.sqrt(sq.mean())) if sq.size else float("nan")


def _nanmean(a, axis=0):
    with np.errstate(invalid="ignore", divide="ignore"):
        cnt = np.sum(~np.isnan(a), axis=axis)
        return np.where(cnt > 0, np.nansum(a, axis=axis) / np.maximum(cnt, 1), np.nan)


def aggregate(algorithm: str, scores: list[RunScore]) -> RunMetrics:
    pos = np.concatenate([s.pos_err for s in scores])      # (R*M, T)
    nv = np.concatenate([s.nees for s in scores])
    lost = np.concatenate([s.lost_at for s in scores])
    fe = np.concatenate([s.feat_err2 for s in scores])
    T = pos.shape[1]
    alive = np.arange(T)[None, :] < lost[:, None]
    cont = 100.0 * alive.mean(axis=0)
    rmse = np.sqrt(_nanmean(np.where(alive, pos ** 2, np.nan)))
    nees_mean = _nanmean(np.where(alive, nv, np.nan))
    feat = np.sqrt(_nanmean(np.where(alive, fe, np.nan)))
    fv = []
    for s in scores:
        ok = s.lost_at[s.fvib_track] == T
        fv.append(s.fvib_err2[ok])
    fv = np.concatenate(fv) if fv else np.zeros(0)
    fv_ok = fv[~np.isnan(fv)]
    fvib = float(np.sqrt(fv_ok.mean())) if fv_ok.size else float("nan")
    meta = {"fvib_failures": int(np.isnan(fv).sum()),
            "admm_nonconverged": int(sum(s.meta.get("admm_nonconverged", 0) for s in scores))}
    return RunMetrics(algorithm, cont, rmse, nees_mean, feat, fvib, len(scores), meta)


# ---------------------------------------------------------------- Monte Carlo

def run_seed(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.default_rng(seq)


def simulate_run(scenario: ScenarioConfig, batch: BatchConfig, seed_seq, algorithms,
                 targets=None) -> dict[str, RunScore]:
    """One Monte Carlo realisation scored for every requested algorithm."""
    rng = np.random.default_rng(seed_seq)
    tg = targets if targets is not None else paper_targets(rng)[:scenario.M]
    truth = ScenarioTruth.build(tg, scenario)
    scans = generate_scans(tg, scenario, rng)
    init = init_tracks(truth, batch.P0, rng)
    model = tracking_model(scenario, tg)
    sigma = float(np.sqrt(scenario.sigma2))
    sigma_m = float(np.sqrt(scenario.R))
    out = {}
    for alg in algorithms:
        if alg == "baseline":
            h = run_baseline(init, scans, model, batch)
        elif alg == "fa":
            h = run_fa(init, scans, model, batch, sigma, scenario.dt)
        elif alg == "augmented":
            h = run_augmented(init, scans, truth, model, batch, scenario.sigma2)
        else:
            raise ConfigurationError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        out[alg] = score(h, truth, sigma_m)
    return out


def _job(args):
    return simulate_run(*args)


def monte_carlo(scenario: ScenarioConfig, batch: BatchConfig, runs: int,
                algorithms=("baseline", "fa"), jobs: int = 1, targets=None) -> dict[str, RunMetrics]:
    """Run ``runs`` seeded realisations and aggregate per algorithm.

    Run ``i`` uses the ``i``-th child of ``SeedSequence(scenario.seed)``, so
    results do not depend on ``jobs``.
    """
    if runs < 1:
        raise ConfigurationError("runs must be >= 1")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
    seqs = np.random.SeedSequence(scenario.seed).spawn(runs)
    args = [(scenario, batch, s, tuple(algorithms), targets) for s in seqs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1)) as ex:
            results = list(ex.map(_job, args, chunksize=max(1, runs // (4 * jobs))))
    else:
        results = [_job(a) for a in args]
    return {a: aggregate(a, [r[a] for r in results]) for a in algorithms}
