import dataclasses

import numpy as np
import pytest

from fatrack.association import AssocConfig
from fatrack.errors import ConfigurationError, NumericalError
from fatrack.kinematics import StateEstimate
from fatrack.pipeline import (BatchConfig, augmented_model, batch_starts, init_tracks, loss_times,
                              monte_carlo, nees, run_augmented, run_baseline, run_batch, run_fa,
                              simulate_run, track_loss_check)
from fatrack.scenario import (ScenarioConfig, ScenarioTruth, Scan, TruthTarget, generate_scans,
                              paper_targets, tracking_model)


def _setup(cfg, targets, seed=0):
    truth = ScenarioTruth.build(targets, cfg)
    rng = np.random.default_rng(seed)
    scans = generate_scans(targets, cfg, rng)
    model = tracking_model(dataclasses.replace(cfg, kappa=0.2), targets)
    init = [StateEstimate(truth.states[m, 0], np.diag([10.0, 10.0])) for m in range(len(targets))]
    return truth, scans, model, init


def test_batch_windows():
    assert batch_starts(80, 32, 16) == [(0, 32), (16, 48), (32, 64), (48, 80)]
    assert batch_starts(8, 4, 2) == [(0, 4), (2, 6), (4, 8)]
    assert batch_starts(40, 32, 16) == [(0, 32), (16, 40)]
    assert batch_starts(20, 32, 16) == [(0, 20)]


def test_fig2_carryover_indices():
    cfg = ScenarioConfig(M=1, N=4, Pd=1.0, mu=0.0, sigma2=1e-3)
    tg = [TruthTarget(-900.0, 0.2)]
    _, scans, model, init = _setup(cfg, tg)
    bc = BatchConfig(N=4, A=2)
    res, carry = run_batch(init, scans, model, bc, sigma=np.sqrt(cfg.sigma2))
    assert res.last == 2
    # hand-off state is the re-filtered estimate at step 2
    np.testing.assert_array_equal(carry.states[0].mean, res.states[2][0].mean)
    np.testing.assert_array_equal(carry.states[0].cov, res.states[2][0].cov)
    # feature prior covers steps 2 and 3
    np.testing.assert_array_equal(carry.x_bar[0], res.features[0][2:4])


def test_unambiguous_scans_give_same_association_in_both_passes():
    cfg = ScenarioConfig(M=1, N=32, Pd=1.0, mu=0.0, sigma2=0.01)
    _, scans, model, init = _setup(cfg, [TruthTarget(-920.0, 0.2)])
    res, _ = run_batch(init, scans, model, BatchConfig(refilter_final_tail=True),
                       sigma=0.1, final=True)
    np.testing.assert_array_equal(res.chi, res.chi_pass1)
    assert np.all(res.chi[:, 1:] == 1)


def test_undetected_target_skips_feature_estimation():
    cfg = ScenarioConfig(M=2, N=32, Pd=1.0, mu=0.0, sigma2=0.01)
    tg = [TruthTarget(-920.0, 0.2), TruthTarget(-700.0, 0.0)]
    _, scans, model, init = _setup(cfg, tg)
    # remove every return of the second target
    scans = [Scan(s.t, s.z_k[s.truth_origin == 0], s.z_f[s.truth_origin == 0],
                  s.truth_origin[s.truth_origin == 0]) for s in scans]
    res, carry = run_batch(init, scans, model, BatchConfig(), sigma=0.1)
    assert res.features[1] is None and res.spectra[1] is None and carry.x_bar[1] is None
    assert res.features[0] is not None
    assert np.all(res.chi[1] == 0)


def test_crossing_targets_resolved_by_refilter():
    # Two targets with distinct carriers cross at step 22 of a 32-step batch.
    cfg = ScenarioConfig(M=2, N=32, Pd=1.0, mu=0.0, sigma2=1e-3)
    tg = [TruthTarget(-1000.0, 2.0), TruthTarget(-1000.0 + 2.0 * 22, -2.0, phi=1.0)]
    truth = ScenarioTruth.build(tg, cfg)
    model = tracking_model(dataclasses.replace(cfg, kappa=0.2), tg)
    bc = BatchConfig(refilter_final_tail=True)

    def wrong(chi, scans):
        return sum(scans[k].truth_origin[chi[m, k] - 1] != m
                   for k in range(1, 32) for m in range(2) if chi[m, k])

    confused = resolved = 0
    for seed in range(100):
        scans = generate_scans(tg, cfg, np.random.default_rng(seed))
        init = [StateEstimate(truth.states[m, 0], np.diag([10.0, 10.0])) for m in range(2)]
        res, _ = run_batch(init, scans, model, bc, sigma=np.sqrt(cfg.sigma2), final=True)
        if wrong(res.chi_pass1, scans):
            confused += 1
            resolved += wrong(res.chi, scans) == 0
    assert confused >= 50
    assert resolved >= 0.9 * confused


def test_final_tail_flag():
    cfg = ScenarioConfig(N=40, sigma2=0.01)
    tg = paper_targets()
    truth, scans, model, init = _setup(cfg, tg, seed=4)
    a = run_fa(init, scans, model, BatchConfig(), 0.1, cfg.dt)
    b = run_fa(init, scans, model, BatchConfig(refilter_final_tail=True), 0.1, cfg.dt)
    # the last batch is (16, 40): steps up to 16 + 8 are re-filtered either way
    np.testing.assert_array_equal(a.means[:, :25], b.means[:, :25])
    assert a.meta["final_tail_refiltered"] is False


def test_init_tracks():
    cfg = ScenarioConfig(N=5)
    truth = ScenarioTruth.build(paper_targets(), cfg)
    exact = init_tracks(truth, np.zeros((2, 2)), np.random.default_rng(0))
    for m, e in enumerate(exact):
        np.testing.assert_array_equal(e.mean, truth.states[m, 0])
    a = init_tracks(truth, (10.0, 10.0), np.random.default_rng(7))
    b = init_tracks(truth, (10.0, 10.0), np.random.default_rng(7))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.mean, y.mean)
        np.testing.assert_array_equal(x.cov, np.diag([10.0, 10.0]))
    assert BatchConfig().P0 == (10.0, 10.0)


def test_nees_examples():
    assert nees(StateEstimate([1.0, 2.0], np.eye(2)), [1.0, 2.0]) == 0.0
    assert nees(StateEstimate([1.0, 0.0], 4 * np.eye(2)), [0.0, 0.0]) == pytest.approx(0.25)
    rng = np.random.default_rng(0)
    T = rng.standard_normal((2, 2)) + 2 * np.eye(2)
    P = np.array([[3.0, 0.4], [0.4, 1.0]])
    x, tr = np.array([0.3, -1.2]), np.array([0.1, 0.5])
    assert nees(StateEstimate(T @ x, T @ P @ T.T), T @ tr) == pytest.approx(
        nees(StateEstimate(x, P), tr))
    with pytest.raises(NumericalError):
        nees(StateEstimate([1.0, 0.0], np.zeros((2, 2))), [0.0, 0.0])


def test_track_loss_rule():
    sigma = 5.0
    assert not track_loss_check(StateEstimate([3.0, 1.0], np.eye(2)), [3.0, 1.0], sigma)
    assert track_loss_check(StateEstimate([50.0 + 1e-6, 0.0], 1e6 * np.eye(2)), [0.0, 0.0], sigma)
    assert not track_loss_check(StateEstimate([50.0, 0.0], 1e6 * np.eye(2)), [0.0, 0.0], sigma)
    # position error 1 m, but P makes NEES = 1/0.0499 > 20
    assert track_loss_check(StateEstimate([1.0, 0.0], np.diag([0.0499, 1.0])), [0.0, 0.0], sigma)


def test_loss_is_permanent_first_violation():
    pos = np.array([[0.0, 60.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
    nv = np.array([[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 25.0, 1.0]])
    np.testing.assert_array_equal(loss_times(pos, nv, 5.0), [1, 2])


def test_monte_carlo_trivial_scenario_keeps_all_tracks():
    cfg = ScenarioConfig(M=1, N=40, Pd=1.0, mu=0.0, sigma2=0.01, seed=3)
    tg = [TruthTarget(-920.0, 0.2, rho_vib=0.0137, f_vib=0.8)]
    res = monte_carlo(cfg, BatchConfig(), 3, ("baseline", "fa", "augmented"), targets=tg)
    for m in res.values():
        np.testing.assert_array_equal(m.continuity_pct, 100.0)
        assert np.all((m.continuity_pct >= 0) & (m.continuity_pct <= 100))
    assert res["fa"].overall_feat_rmse < 0.2


def test_monte_carlo_is_deterministic_and_job_independent():
    cfg = ScenarioConfig(N=24, seed=5)
    bc = BatchConfig(N=16, A=8)
    a = monte_carlo(cfg, bc, 3, ("baseline", "fa"))
    b = monte_carlo(cfg, bc, 3, ("baseline", "fa"), jobs=2)
    for k in a:
        np.testing.assert_array_equal(a[k].rmse, b[k].rmse)
        np.testing.assert_array_equal(a[k].continuity_pct, b[k].continuity_pct)
        np.testing.assert_array_equal(a[k].feat_rmse, b[k].feat_rmse)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_constant_feature_likelihood_reproduces_baseline(seed):
    cfg = ScenarioConfig(N=50, sigma2=0.01)
    tg = paper_targets(np.random.default_rng(seed))
    truth, scans, model, _ = _setup(cfg, tg, seed)
    init = init_tracks(truth, (10.0, 10.0), np.random.default_rng(seed + 100))
    base = run_baseline(init, scans, model, BatchConfig())
    fa = run_fa(init, scans, model, BatchConfig(const_feature_likelihood=1.0), 0.1, cfg.dt)
    assert base.means.tobytes() == fa.means.tobytes()
    assert base.covs.tobytes() == fa.covs.tobytes()
    np.testing.assert_array_equal(base.chi, fa.chi)


def test_augmented_model_layout():
    cfg = ScenarioConfig()
    m = augmented_model(tracking_model(cfg, paper_targets()), 2.0, 0.01)
    assert m.F.shape == (6, 6) and m.H.shape == (3, 6)
    np.testing.assert_allclose(np.diag(m.R), [25.0, 0.005, 0.005])
    np.testing.assert_allclose(m.Q[2:4, 2:4], 2.0 * np.array([[0.5 ** 4 / 4, 0.5 ** 3 / 2],
                                                               [0.5 ** 3 / 2, 0.25]]))


def test_augmented_run_starts_features_at_truth():
    cfg = ScenarioConfig(N=10, sigma2=0.01)
    tg = paper_targets(np.random.default_rng(1))
    truth, scans, model, init = _setup(cfg, tg)
    h = run_augmented(init, scans, truth, model, BatchConfig(), cfg.sigma2)
    np.testing.assert_allclose(h.features[:, 0], truth.features[:, 0])
    assert h.means.shape == (4, 10, 2)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        BatchConfig(N=16, A=16)
    with pytest.raises(ConfigurationError):
        BatchConfig(A=0)
    assert BatchConfig(assoc={"B": 0.0, "eta": 0.2}).assoc == AssocConfig(0.0, 0.2)
    with pytest.raises(ConfigurationError):
        monte_carlo(ScenarioConfig(N=5), BatchConfig(N=4, A=2), 0)
    with pytest.raises(ConfigurationError):
        simulate_run(ScenarioConfig(N=5), BatchConfig(N=4, A=2), np.random.SeedSequence(0), ("bogus",))
