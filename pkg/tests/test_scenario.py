import numpy as np
import pytest

from fatrack.errors import ConfigurationError
from fatrack.scenario import (CLUTTER, ScenarioConfig, ScenarioTruth, TruthTarget, feature_snr_db,
                              generate_scan, generate_scans, paper_targets, process_noise_variance,
                              radar_return, sigma2_for_snr, tracking_model, truth_state)


def test_no_vibration_is_constant_velocity():
    tg = TruthTarget(r0=-1020.0, v0=3.2)
    t = np.arange(10)
    s = truth_state(tg, t, 0.5)
    np.testing.assert_allclose(s[:, 0], -1020.0 + 0.5 * t * 3.2)
    np.testing.assert_allclose(s[:, 1], 3.2)


def test_range_where_sine_vanishes():
    tg = TruthTarget(r0=-1020.0, v0=3.2, rho_vib=0.0244, f_vib=0.6)
    # tau = 2.5 s gives 2*pi*0.6*2.5 = 3*pi
    assert truth_state(tg, 5, 0.5)[0] == pytest.approx(-1020.0 + 2.5 * 3.2, abs=1e-12)


def test_vibration_offset_one_step_in():
    tg = TruthTarget(r0=0.0, v0=0.0, rho_vib=0.0244, f_vib=0.6)
    assert truth_state(tg, 1, 0.5)[0] == pytest.approx(0.0244 * np.sin(0.6 * np.pi))


def test_return_modulus_and_phase_increment():
    tg = TruthTarget(r0=-960.0, v0=1.6, rho_vib=0.0244, f_vib=0.6, b=1.7, phi=0.4, xi=0.3)
    t = np.arange(40)
    x = radar_return(tg, t, 0.5)
    np.testing.assert_allclose(np.abs(x), 1.7)
    r = truth_state(tg, t, 0.5)[:, 0]
    dphi = np.angle(x[1:] / x[:-1])
    expect = np.angle(np.exp(1j * 4 * np.pi / 0.3 * np.diff(r)))
    np.testing.assert_allclose(dphi, expect, atol=1e-9)


def test_return_without_vibration_is_one_line():
    tg = TruthTarget(r0=-900.0, v0=0.2, xi=0.3)
    N = 48
    X = np.abs(np.fft.fft(radar_return(tg, np.arange(N), 0.5)))
    # carrier at 2 v dt / xi = 2/3 cycles per step, exactly bin 32 for N = 48
    assert np.argmax(X) == 32
    assert X[32] ** 2 / np.sum(X ** 2) > 1 - 1e-12


def test_vibration_sidelines_are_symmetric_about_carrier():
    N, dt = 256, 0.5
    tg = TruthTarget(r0=-900.0, v0=0.3, rho_vib=0.0244, f_vib=0.625, xi=0.3)
    # carrier 2*0.3*0.5/0.3 = 1.0 -> 0 (mod 1); side lines at +-f_vib*dt = +-0.3125
    X = np.abs(np.fft.fft(radar_return(tg, np.arange(N), dt)))
    k = int(round(0.3125 * N))
    assert X[k] > 0.2 * X[0]
    assert X[k] == pytest.approx(X[N - k], rel=1e-6)


def test_process_noise_constants():
    assert np.sqrt(process_noise_variance(0.0244, 0.6)) == pytest.approx(0.2, abs=1e-3)
    assert np.sqrt(process_noise_variance(0.0137, 0.8)) == pytest.approx(0.2, abs=1e-3)
    assert process_noise_variance(0.0, 0.8) == 0.0
    with pytest.raises(ConfigurationError):
        process_noise_variance(-1.0, 0.5)


def test_snr_conversion_round_trip():
    assert feature_snr_db(1.0, sigma2_for_snr(13.0)) == pytest.approx(13.0)
    assert sigma2_for_snr(20.0) == pytest.approx(0.01)


def test_noiseless_scan_is_the_truth():
    cfg = ScenarioConfig(Pd=1.0, mu=0.0, sigma2=0.0, R=0.0)
    tg = paper_targets()
    scan = generate_scan(tg, cfg, np.random.default_rng(0), 3)
    order = np.argsort(scan.truth_origin)
    np.testing.assert_array_equal(scan.truth_origin[order], np.arange(4))
    np.testing.assert_allclose(scan.z_k[order], [truth_state(g, 3, 0.5)[0] for g in tg])
    np.testing.assert_allclose(scan.z_f[order], [radar_return(g, 3, 0.5) for g in tg])


def test_clutter_and_detection_statistics():
    cfg = ScenarioConfig()
    assert cfg.width == pytest.approx(1e3)
    rng = np.random.default_rng(1)
    tg = paper_targets()
    scans = [generate_scan(tg, cfg, rng, 0) for _ in range(10_000)]
    n_clutter = np.mean([np.sum(s.truth_origin == CLUTTER) for s in scans])
    det = np.mean([np.sum(s.truth_origin >= 0) for s in scans]) / 4
    assert abs(n_clutter - 5.0) < 0.2
    assert abs(det - 0.9) < 0.01
    amps = np.concatenate([np.abs(s.z_f[s.truth_origin == CLUTTER]) for s in scans[:500]])
    assert amps.min() >= 0.5 and amps.max() <= 1.5


def test_feature_noise_variance():
    cfg = ScenarioConfig(Pd=1.0, mu=0.0, sigma2=0.2, R=0.0)
    tg = [TruthTarget(r0=0.0, v0=0.0)]
    rng = np.random.default_rng(2)
    w = np.array([generate_scan(tg, cfg, rng, 0).z_f[0] for _ in range(20_000)]) - radar_return(tg[0], 0, 0.5)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(0.2, rel=0.03)
    assert np.var(w.real) == pytest.approx(np.var(w.imag), rel=0.06)


def test_same_seed_same_scans():
    cfg = ScenarioConfig(N=20)
    a = generate_scans(paper_targets(), cfg, np.random.default_rng(9))
    b = generate_scans(paper_targets(), cfg, np.random.default_rng(9))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.z_k, y.z_k)
        np.testing.assert_array_equal(x.z_f, y.z_f)


def test_truth_tables_and_tracking_model():
    cfg = ScenarioConfig(N=12)
    tg = paper_targets(np.random.default_rng(0))
    truth = ScenarioTruth.build(tg, cfg)
    assert truth.states.shape == (4, 12, 2) and truth.features.shape == (4, 12)
    np.testing.assert_allclose(truth.states[:, 0], [[-1020.0, 3.2 + 0.0244 * 2 * np.pi * 0.6],
                                                    [-960.0, 1.6 + 0.0244 * 2 * np.pi * 0.6],
                                                    [-920.0, 0.2 + 0.0137 * 2 * np.pi * 0.8],
                                                    [-900.0, 0.2 + 0.0137 * 2 * np.pi * 0.8]])
    model = tracking_model(cfg, tg)
    assert np.sqrt(model.Q[1, 1] / 0.25) == pytest.approx(0.2, abs=1e-3)


def test_config_validation():
    for kw in ({"Pd": 0.0}, {"mu": -1.0}, {"region": (5.0, 5.0)}, {"N": 1}):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(**kw)
    with pytest.raises(ConfigurationError):
        TruthTarget(0.0, 0.0, b=0.0)
