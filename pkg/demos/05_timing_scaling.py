# Feed-forward cost against qubit number, and the exponential fit t = A x^n log n.
# n = 8 allocates about 2 GB of untrained weights; lower MAX_N on small machines.
from nnqst.harness import bench_feedforward, fit_scaling

MAX_N = 7

rows = bench_feedforward(range(2, MAX_N + 1), seed=5)
print(" n   network (s)   projection (s)")
for r in rows:
    print(f"{r['n']:2d}   {r['step1_seconds']:.2e}      {r['step2_seconds']:.2e}")

fit = fit_scaling(rows)
print(f"fit: A = {fit.A:.2e}, x = {fit.x:.2f}, RMS log residual {fit.residual:.2f}"
      + ("  (rejected)" if fit.rejected else ""))
# the network dominates and grows about 4x per qubit, as d^2 = 4^n suggests;
# at small n fixed call overhead flattens the curve
