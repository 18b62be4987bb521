# Network versus maximum likelihood on Werner states (2 qubits).
# Training on 20000 examples takes roughly half a minute with the default early
# stopping; TrainingConfig(patience=200, max_epochs=3000) trains much further.
from nnqst.harness import MLEEstimator, NNEEstimator, mixed_state_study, werner_sweep
from nnqst.nne import TrainingConfig, generate_training_set, train
from nnqst.rng import seeded_rng
from nnqst.states import sample_bures

seed = 4
train_set = generate_training_set(2, 20000, seeded_rng(seed, 2), seed)
test_rng = seeded_rng(seed, 5)
model = train(train_set, [sample_bures(2, test_rng) for _ in range(1000)], TrainingConfig(seed=seed),
              seeded_rng(seed, 3)).model

estimators = [NNEEstimator(model), MLEEstimator(2)]
rows = werner_sweep([0.0, 0.25, 0.5, 0.75, 1.0], estimators, n0=2000, seed=seed, repeats=20)
print("   q  estimator  mean infidelity")
for r in rows:
    print(f"{r['q']:4.2f}  {r['estimator']:9s}  {r['mean_infidelity']:.2e}")

# the network is weakest close to pure states such as the singlet (q = 1)
for r in mixed_state_study([2], {2: estimators}, n0=2000, seed=seed, repeats=20):
    print(f"I/4, {r['estimator']}: {r['mean_infidelity']:.2e}")
