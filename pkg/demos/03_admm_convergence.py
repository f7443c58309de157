"""
How fast does the ADMM solver settle?
=====================================

We follow the objective of a noisy N=128 instance over the iterations and
compare it with a long, tightly converged run. With rho = 0.1 the gap drops
below 1e-4 within a few hundred iterations.
"""
import numpy as np

from fatrack.atomic_admm import AdmmState, DenoiseProblem, admm_step, default_weights, objective, solve
from fatrack.feature_signal import ObservationPattern, SpectralLine, synthesize

rng = np.random.default_rng(0)
N, alpha, sigma2 = 128, 100, 0.02
x = synthesize([SpectralLine(1.0, 0.12, 0.3), SpectralLine(0.8, 0.47, 2.0),
                SpectralLine(0.6, 0.81, 1.0)], N)
omega = np.sort(rng.choice(N, alpha, replace=False))
z = x[omega] + np.sqrt(sigma2 / 2) * (rng.standard_normal(alpha) + 1j * rng.standard_normal(alpha))
gamma, lam = default_weights(np.sqrt(sigma2), N, alpha)
prob = DenoiseProblem(z, ObservationPattern(omega, N), gamma, lam)

ref = solve(prob, max_iter=20000, tol=1e-9)
print(f"reference objective {ref.objective:.8f} after {ref.iters} iterations")

st = AdmmState.zeros(N, alpha, 0.1)
for it in range(1, 1001):
    st = admm_step(st, prob)
    if it in (10, 50, 100, 200, 300, 500, 1000):
        gap = abs(objective(prob, st.x, st.e, st.u, st.theta) - ref.objective) / ref.objective
        mse = np.sum(np.abs(st.x - ref.x_hat) ** 2) / np.sum(np.abs(ref.x_hat) ** 2)
        print(f"iter {it:5d}  relative objective gap {gap:.2e}  relative MSE {mse:.2e}")
