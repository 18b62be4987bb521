"""Neural-network estimation for full quantum state tomography.

The pieces, bottom up:

``qcore``        density-matrix kernels (projection, fidelity, Bures distance)
``states``       Bures-random, Werner and maximally mixed states
``measurement``  Pauli projectors, ideal features, shot-noise simulation
``nne``          the network estimator, its training and model files
``mle``          diluted R-rho-R maximum-likelihood baseline
``harness``      simulated tomography studies and timing
``cli``          the ``nnqst`` command
"""

from .measurement import MeasurementSet, ideal_features, pauli_set, simulate_counts
from .mle import MleConfig, mle_estimate
from .nne import (
    NetworkModel,
    TrainingConfig,
    TrainingSet,
    forward,
    generate_training_set,
    init_model,
    load_model,
    save_model,
    train,
)
from .qcore import (
    bures_distance,
    check_density,
    fidelity,
    hermitian_eig,
    infidelity,
    kron,
    matrix_sqrt_psd,
    project_physical,
)
from .rng import seeded_rng
from .states import ginibre, haar_unitary, maximally_mixed, sample_bures, werner_state

__version__ = "0.1.0"
