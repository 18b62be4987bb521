# Simulated Pauli measurements and the maximum-likelihood baseline.
import numpy as np

from nnqst.measurement import ideal_features, pauli_set, simulate_counts, to_settings
from nnqst.mle import MleConfig, mle_estimate
from nnqst.qcore import infidelity
from nnqst.rng import seeded_rng
from nnqst.states import sample_bures

rng = seeded_rng(2)
ms = pauli_set(2)
print(f"{ms.n_features} outcomes in {ms.n_settings} settings; feature 0 is {ms.labels(0)}, feature 7 is {ms.labels(7)}")

rho = sample_bures(2, rng)
exact = ideal_features(rho, ms)
print("exact outcome probabilities of the first setting:", np.round(to_settings(exact, 2)[0], 4))

# finite statistics: N0 copies per setting, outcome counts drawn from a multinomial;
# one draw is noisy, so average the MLE infidelity over a few
for n0 in (200, 2000, 20000):
    draws = [simulate_counts(rho, ms, n0, rng) for _ in range(10)]
    infid = [infidelity(mle_estimate(f, ms).rho, rho) for f in draws]
    print(f"N0={n0:6d}: max |f - p| = {np.abs(draws[0] - exact).max():.4f}, "
          f"mean MLE infidelity {np.mean(infid):.2e}")

# with exact probabilities the likelihood maximum is the state itself
res = mle_estimate(exact, ms, MleConfig(dilution=1.0, tolerance=1e-13, max_iterations=200_000))
print(f"exact data: infidelity {infidelity(res.rho, rho):.1e}")
