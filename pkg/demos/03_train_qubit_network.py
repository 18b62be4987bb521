# Train the 1-qubit estimator with the tabulated configuration and score it.
# Takes well under a minute on one core.
import numpy as np

from nnqst.harness import NNEEstimator, average_fidelity, bures_test_set, simulate_tomography
from nnqst.nne import TrainingConfig, generate_training_set, train
from nnqst.rng import seeded_rng

seed = 3
train_set = generate_training_set(1, 10000, seeded_rng(seed, 2), seed)
test_states = bures_test_set(1, 1000, seed, stream=5)

result = train(train_set, test_states, TrainingConfig(seed=seed), seeded_rng(seed, 3))
print(f"stopped early: {result.stopped_early}, epochs: {result.model.metadata['epochs']}")
print("step   train MLSE   test MLSE")
for step, tr, te in result.curve[:: max(1, len(result.curve) // 12)]:
    print(f"{step:5d}   {tr:.5f}      {te:.5f}")

# fresh states, two noise levels
est = NNEEstimator(result.model)
fresh = bures_test_set(1, 2000, seed, stream=6)
for n0 in (2000, 20000):
    recs = simulate_tomography(fresh, est, n0, seed)
    print(f"N0={n0}: average fidelity {average_fidelity(recs):.4f}")
print("median time per estimate: %.1f us" % (1e6 * np.median([r.wall_time_step1 + r.wall_time_step2 for r in recs])))
