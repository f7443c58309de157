"""
Range tracking with a constant-velocity Kalman filter
=====================================================

A single target moves along the range axis. We simulate it from the same
linear-Gaussian model the filter assumes and check that the normalised
estimation error squared averages to the state dimension (2).
"""
import numpy as np

from fatrack.kinematics import StateEstimate, cv_model, predict, update
from fatrack.scenario import process_noise_variance

# the process-noise level matches a target vibrating with 0.0244 m at 0.6 Hz
kappa = np.sqrt(process_noise_variance(0.0244, 0.6))
print(f"process noise std kappa = {kappa:.4f}")

dt, R, T, runs = 0.5, 25.0, 80, 300
model = cv_model(dt, kappa, R)
g = np.array([dt ** 2 / 2, dt])

nees = np.zeros((runs, T))
for i in range(runs):
    rng = np.random.default_rng(i)
    x = np.array([-1020.0, 3.2])
    est = StateEstimate(x + rng.normal(0, np.sqrt(10.0), 2), np.diag([10.0, 10.0]))
    for t in range(T):
        err = est.mean - x
        nees[i, t] = err @ np.linalg.solve(est.cov, err)
        x = model.F @ x + kappa * g * rng.standard_normal()
        z = x[0] + np.sqrt(R) * rng.standard_normal()
        est = update(predict(est, model), [z], model)

print(f"mean NEES over {runs} runs: {nees.mean():.3f}")
print("per-step mean NEES (every 10th step):", np.round(nees.mean(axis=0)[::10], 2))
