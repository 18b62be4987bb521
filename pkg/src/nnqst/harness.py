"""Simulated tomography experiments and feed-forward timing.

Every experiment takes an integer ``seed``.  Record ``i`` of a run draws
its shot noise from ``seeded_rng(seed, stream, i)``, so two estimators run
with the same seed and stream see exactly the same measurement data.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import EmptyInput, InsufficientData, MissingModel, QSTError, ValidationError
from .measurement import ideal_features, pauli_set, simulate_counts
from .mle import MleConfig, mle_estimate
from .nne import NetworkModel, build_model, default_hidden, network_to_t, project_batch, _network
from .qcore import fidelity, n_qubits_of, project_physical
from .rng import seeded_rng
from .states import maximally_mixed, sample_bures, werner_state

RECORD_COLUMNS = [
    "state_index",
    "estimator",
    "n0",
    "point_fidelity",
    "wall_time_step1",
    "wall_time_step2",
    "flagged",
]
WERNER_COLUMNS = ["q", "estimator", "n0", "mean_infidelity", "std_infidelity"]
MIXED_COLUMNS = ["n", "estimator", "n0", "mean_infidelity", "std_infidelity"]
BENCH_COLUMNS = ["n", "step1_seconds", "step2_seconds"]


class Estimate(NamedTuple):
    rho: np.ndarray
    step1_seconds: float
    step2_seconds: float
    flagged: bool


class NNEEstimator:
    """Wraps a trained model; step (i) is the network, step (ii) the projection."""

    name = "nne"

    def __init__(self, model: NetworkModel):
        model.validate()
        self.model = model
        self.n_qubits = model.n_qubits

    def __call__(self, freqs) -> Estimate:
        x = np.asarray(freqs, dtype=np.float64)[None]
        t0 = time.perf_counter()
        _, _, out = _network(self.model, x)
        t = network_to_t(out, self.model.dim)
        t1 = time.perf_counter()
        rho, tr = project_batch(t)
        t2 = time.perf_counter()
        if tr[0] <= 1e-300:
            return Estimate(maximally_mixed(self.n_qubits), t1 - t0, t2 - t1, True)
        return Estimate(rho[0], t1 - t0, t2 - t1, False)


class MLEEstimator:
    name = "mle"

    def __init__(self, n_qubits: int, config: MleConfig = MleConfig()):
        self.n_qubits = n_qubits
        self.ms = pauli_set(n_qubits)
        self.config = config

    def __call__(self, freqs) -> Estimate:
        t0 = time.perf_counter()
        res = mle_estimate(freqs, self.ms, self.config)
        t1 = time.perf_counter()
        return Estimate(res.rho, t1 - t0, 0.0, not res.converged)


@dataclass
class TomographyRecord:
    state_index: int
    estimator: str
    n0: int | None
    point_fidelity: float
    wall_time_step1: float
    wall_time_step2: float
    flagged: bool = False
    error: str | None = None

    def as_row(self) -> dict:
        return asdict(self)


def simulate_tomography(
    targets: Sequence[np.ndarray],
    estimator,
    n0: int | None,
    seed: int,
    stream: int = 0,
) -> list[TomographyRecord]:
    """Measure each target with ``n0`` shots per setting, estimate, score.

    ``n0=None`` feeds the exact probabilities instead of sampled ones.
    A record whose estimation raises is kept with ``flagged=True`` and a
    NaN fidelity; the run carries on.  MLE records are also flagged when
    the iteration hit its cap.
    """
    if len(targets) == 0:
        raise EmptyInput("no target states")
    ms = pauli_set(estimator.n_qubits)
    records = []
    for i, rho in enumerate(targets):
        try:
            if n0 is None:
                freqs = ideal_features(rho, ms)
            else:
                freqs = simulate_counts(rho, ms, n0, seeded_rng(seed, stream, i))
            est = estimator(freqs)
            rec = TomographyRecord(
                i, estimator.name, n0, fidelity(est.rho, rho),
                est.step1_seconds, est.step2_seconds, est.flagged,
            )
        except QSTError as exc:
            rec = TomographyRecord(i, estimator.name, n0, math.nan, 0.0, 0.0, True, str(exc))
        records.append(rec)
    return records


def average_fidelity(records: Iterable[TomographyRecord]) -> float:
    records = list(records)
    if not records:
        raise EmptyInput("no records to average")
    if any(r.flagged for r in records):
        raise ValidationError("flagged records cannot enter the average")
    return float(np.mean([r.point_fidelity for r in records]))


def default_test_set_size(n_qubits: int) -> int:
    """5000 * 2^n states, capped at 5000 from three qubits on."""
    return 5000 * 2**n_qubits if n_qubits <= 2 else 5000


def bures_test_set(n_qubits: int, count: int, seed: int, stream: int = 0) -> list[np.ndarray]:
    rng = seeded_rng(seed, stream)
    return [sample_bures(n_qubits, rng) for _ in range(count)]


def _infidelity_stats(records) -> tuple[float, float]:
    infid = np.array([1.0 - r.point_fidelity for r in records if not r.flagged])
    if infid.size == 0:
        return math.nan, math.nan
    return float(infid.mean()), float(infid.std())


def werner_sweep(
    q_values: Sequence[float],
    estimators: Sequence,
    n0: int,
    seed: int,
    repeats: int = 100,
) -> list[dict]:
    """Mean and spread of the infidelity on Werner states over noise draws."""
    rows = []
    for qi, q in enumerate(q_values):
        rho = werner_state(q)
        for est in estimators:
            recs = simulate_tomography([rho] * repeats, est, n0, seed, stream=qi)
            mean, std = _infidelity_stats(recs)
            rows.append({"q": q, "estimator": est.name, "n0": n0,
                         "mean_infidelity": mean, "std_infidelity": std})
    return rows


def mixed_state_study(
    n_range: Iterable[int],
    estimators: Mapping[int, Sequence],
    n0: int,
    seed: int,
    repeats: int = 100,
) -> list[dict]:
    """Infidelity on I/2^n for each qubit count, per estimator."""
    rows = []
    for n in n_range:
        if n not in estimators or not estimators[n]:
            raise MissingModel(f"no estimator available for {n} qubits")
        rho = maximally_mixed(n)
        for est in estimators[n]:
            recs = simulate_tomography([rho] * repeats, est, n0, seed, stream=n)
            mean, std = _infidelity_stats(recs)
            rows.append({"n": n, "estimator": est.name, "n0": n0,
                         "mean_infidelity": mean, "std_infidelity": std})
    return rows


# -- timing ---------------------------------------------------------------


def bench_model(n_qubits: int, rng: np.random.Generator) -> NetworkModel:
    """Untrained network with a minimal informationally complete input of 4^n."""
    h1, h2 = default_hidden(n_qubits)
    d2 = 4**n_qubits
    return build_model([d2, h1, h2, 2 * d2], n_qubits, rng)


def _median_time(fn, repeats: int) -> float:
    fn()  # warm-up, not timed
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def bench_feedforward(n_range: Iterable[int], seed: int, repeats: int | None = None) -> list[dict]:
    """Median wall time of step (i) and step (ii) for each qubit count."""
    rows = []
    for n in n_range:
        rng = seeded_rng(seed, n)
        model = bench_model(n, rng)
        x = rng.random(4**n)
        x /= x.sum()
        d = 2**n

        def step1():
            _, _, out = _network(model, x[None])
            return network_to_t(out[0], d)

        t = step1()
        reps = repeats if repeats is not None else (100 if n <= 6 else 10)
        rows.append({
            "n": n,
            "step1_seconds": _median_time(step1, reps),
            "step2_seconds": _median_time(lambda: project_physical(t), reps),
        })
        del model
    return rows


@dataclass(frozen=True)
class ScalingFit:
    A: float
    x: float
    residual: float
    n_points: int
    rejected: bool


def fit_scaling(rows: Iterable[dict], column: str = "step1_seconds",
                max_residual: float = 0.25) -> ScalingFit:
    """Least-squares fit of ``t = A x^n log(n)`` in log space.

    Solves ``log t - log log n = log A + n log x`` by ordinary least squares.
    n = 1 rows are dropped since ``log 1 = 0``.  ``residual`` is the RMS of
    the log-space residuals; the fit is marked ``rejected`` when it exceeds
    ``max_residual`` or when the growth factor ``x`` is not above 1.
    """
    pts = [(int(r["n"]), float(r[column])) for r in rows]
    pts = [(n, t) for n, t in pts if n >= 2]
    if len(pts) < 4:
        raise InsufficientData(f"need at least 4 rows with n >= 2, got {len(pts)}")
    if any(t <= 0 for _, t in pts):
        raise InsufficientData("all times must be positive")
    n = np.array([p[0] for p in pts], dtype=np.float64)
    t = np.array([p[1] for p in pts])
    y = np.log(t) - np.log(np.log(n))
    design = np.column_stack([np.ones_like(n), n])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    a, x = float(np.exp(coef[0])), float(np.exp(coef[1]))
    return ScalingFit(a, x, rms, len(pts), rms > max_residual or x <= 1.0)
