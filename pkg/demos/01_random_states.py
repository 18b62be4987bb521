# Random mixed states under the Bures prior, and a look at their spectra.
import numpy as np

from nnqst.qcore import fidelity, is_density, purity
from nnqst.rng import seeded_rng
from nnqst.states import maximally_mixed, sample_bures, werner_state

rng = seeded_rng(1)

rho = sample_bures(2, rng)
print("one 2-qubit Bures state, eigenvalues:", np.round(np.linalg.eigvalsh(rho), 4))
print("valid density matrix:", is_density(rho), " purity:", round(purity(rho), 4))

# purity spreads between 1/d and 1; the Bures prior leans towards purer states than Hilbert-Schmidt
for n in (1, 2, 3):
    p = np.array([purity(sample_bures(n, rng)) for _ in range(2000)])
    print(f"n={n}: mean purity {p.mean():.3f}  (1/d = {1 / 2**n:.3f})")

# Werner states run from I/4 (q=0) to the singlet (q=1)
for q in (0.0, 0.5, 1.0):
    w = werner_state(q)
    print(f"q={q}: purity {purity(w):.3f}, fidelity to I/4 {fidelity(w, maximally_mixed(2)):.3f}")
