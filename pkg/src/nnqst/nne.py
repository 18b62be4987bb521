"""Neural-network state estimator.

A fully connected network ``6^n -> h1 -> h2 -> 2*4^n`` with sigmoid
hidden units turns a feature vector into the real and imaginary parts of
a matrix ``T`` (row-major, real block first).  The estimate is
``T^H T / Tr(T^H T)``, so every output is a valid density matrix.

Training minimises the mean over a minibatch of the root-mean-square
entrywise error between estimate and target with Adam, and stops early
on the error measured over a fixed set of noisy test features.

Weights are stored as ``(fan_in, fan_out)`` so a batch of row-vector
inputs propagates as ``x @ W + b``.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    Diverged,
    FormatError,
    ShapeMismatch,
    ValidationError,
    VersionMismatch,
)
from .fileio import atomic_write_text
from .measurement import check_features, ideal_features, pauli_set, simulate_counts
from .qcore import dagger, n_qubits_of
from .states import maximally_mixed, sample_bures

log = logging.getLogger(__name__)

MODEL_MAGIC = "QSTNNE"
MODEL_VERSION = 1
OUTPUT_ACTIVATIONS = ("sigmoid_sym", "sigmoid")

#: hidden-layer widths and training-set sizes that worked for 1..5 qubits
TABLE_HIDDEN = {1: (200, 200), 2: (300, 300), 3: (400, 400), 4: (600, 600), 5: (800, 800)}
TABLE_TRAINING_EXAMPLES = {1: 10000, 2: 20000, 3: 40000, 4: 80000, 5: 100000}

_DEGENERATE_TRACE = 1e-300
# LSE values at rounding level count as an exact fit (zero gradient)
_LSE_ZERO = 1e-14


def default_hidden(n_qubits: int) -> tuple[int, int]:
    """Tabulated widths for n <= 5, else 200 + 150 (n - 1) rounded to 50."""
    if n_qubits in TABLE_HIDDEN:
        return TABLE_HIDDEN[n_qubits]
    h = int(50 * round((200 + 150 * (n_qubits - 1)) / 50))
    return (h, h)


@dataclass
class TrainingConfig:
    hidden: tuple[int, int] | None = None
    batch_size: int = 200
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    test_n0: int = 1000
    eval_interval: int = 50
    patience: int = 10
    min_improvement: float = 1e-5
    max_epochs: int = 500
    output_activation: str = "sigmoid_sym"
    shuffle: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if self.eval_interval < 1:
            raise ValidationError("eval_interval must be >= 1")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValidationError("Adam betas must lie strictly between 0 and 1")
        if self.learning_rate < 0:
            raise ValidationError("learning_rate must be non-negative")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValidationError(f"unknown output activation {self.output_activation!r}")

    def hidden_for(self, n_qubits: int) -> tuple[int, int]:
        return tuple(self.hidden) if self.hidden is not None else default_hidden(n_qubits)


@dataclass
class NetworkModel:
    n_qubits: int
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "sigmoid_sym"
    metadata: dict = field(default_factory=dict)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def validate(self, input_size: int | None = None) -> None:
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise ShapeMismatch("a model has exactly three weight layers")
        expected_in = 6**self.n_qubits if input_size is None else input_size
        sizes = self.layer_sizes
        if sizes[0] != expected_in:
            raise ShapeMismatch(f"input layer has {sizes[0]} units, expected {expected_in}")
        if sizes[-1] != 2 * 4**self.n_qubits:
            raise ShapeMismatch(
                f"output layer has {sizes[-1]} units, expected {2 * 4 ** self.n_qubits}"
            )
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeMismatch(f"layer {i}: bias shape {b.shape} vs weight {w.shape}")
            if i and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ShapeMismatch(f"layer {i} does not chain with layer {i - 1}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {i} has non-finite parameters")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValidationError(f"unknown output activation {self.output_activation!r}")

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "NetworkModel":
        return copy.deepcopy(self)


class Gradients(NamedTuple):
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]


class ForwardResult(NamedTuple):
    t: np.ndarray
    rho_hat: np.ndarray
    fallback: bool


class TrainingSet(NamedTuple):
    n_qubits: int
    features: np.ndarray  # (count, 6**n)
    targets: np.ndarray  # (count, d, d)
    seed: int | None = None

    def __len__(self):
        return self.features.shape[0]


class TrainResult(NamedTuple):
    model: NetworkModel
    curve: list[tuple[int, float, float]]
    stopped_early: bool


def _glorot(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def build_model(
    layer_sizes, n_qubits: int, rng: np.random.Generator, output_activation="sigmoid_sym"
) -> NetworkModel:
    weights = [_glorot(a, b, rng) for a, b in zip(layer_sizes[:-1], layer_sizes[1:])]
    biases = [np.zeros(b) for b in layer_sizes[1:]]
    return NetworkModel(n_qubits, weights, biases, output_activation)


def init_model(n_qubits: int, config: TrainingConfig, rng: np.random.Generator) -> NetworkModel:
    """Uniform fan-in/fan-out initialisation, zero biases."""
    h1, h2 = config.hidden_for(n_qubits)
    if h1 < 1 or h2 < 1:
        raise ValidationError("hidden sizes must be >= 1")
    sizes = [6**n_qubits, h1, h2, 2 * 4**n_qubits]
    model = build_model(sizes, n_qubits, rng, config.output_activation)
    model.metadata = {"seed": config.seed, "epochs": 0, "test_mlse": None}
    return model


# -- forward pass ---------------------------------------------------------


def _network(model: NetworkModel, x: np.ndarray):
    """Return hidden activations, output sigmoid and output values."""
    acts = [x]
    a = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        a = expit(a @ w + b)
        acts.append(a)
    s = expit(a @ model.weights[-1] + model.biases[-1])
    out = 2.0 * s - 1.0 if model.output_activation == "sigmoid_sym" else s
    return acts, s, out


def network_to_t(out: np.ndarray, d: int) -> np.ndarray:
    """Split ``(batch, 2 d^2)`` outputs into a ``(batch, d, d)`` complex T."""
    dd = d * d
    return (out[..., :dd] + 1j * out[..., dd:]).reshape(out.shape[:-1] + (d, d))


def project_batch(t: np.ndarray):
    """Batched ``T^H T / Tr``; also returns the traces for degeneracy checks."""
    a = dagger(t) @ t
    tr = np.trace(a, axis1=-2, axis2=-1).real
    safe = np.where(tr > _DEGENERATE_TRACE, tr, 1.0)
    return a / safe[:, None, None], tr


def predict_t(model: NetworkModel, features: np.ndarray) -> np.ndarray:
    """Step (i) alone: features ``(batch, in)`` to T ``(batch, d, d)``."""
    _, _, out = _network(model, np.atleast_2d(features))
    return network_to_t(out, model.dim)


def predict(model: NetworkModel, features: np.ndarray):
    """Batched estimates; degenerate rows fall back to the maximally mixed state.

    Returns ``(rho_hat, fallback_mask)``.
    """
    t = predict_t(model, features)
    rho, tr = project_batch(t)
    bad = tr <= _DEGENERATE_TRACE
    if np.any(bad):
        rho[bad] = maximally_mixed(model.n_qubits)
    return rho, bad


def forward(model: NetworkModel, features) -> ForwardResult:
    """Feed one feature vector through the network and the projection."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (model.layer_sizes[0],):
        raise DimensionMismatch(
            f"model expects {model.layer_sizes[0]} features, got shape {features.shape}"
        )
    t = predict_t(model, features)
    rho, tr = project_batch(t)
    if tr[0] <= _DEGENERATE_TRACE:
        log.warning("degenerate T (trace %.3g); returning the maximally mixed state", tr[0])
        return ForwardResult(t[0], maximally_mixed(model.n_qubits), True)
    rho = rho[0]
    return ForwardResult(t[0], 0.5 * (rho + dagger(rho)), False)


# -- loss and gradients ---------------------------------------------------


def lse(rho_hat, target) -> float:
    """Root of the mean squared entrywise modulus difference."""
    rho_hat = np.asarray(rho_hat)
    target = np.asarray(target)
    if rho_hat.shape != target.shape:
        raise DimensionMismatch(f"shapes differ: {rho_hat.shape} vs {target.shape}")
    n_qubits_of(rho_hat)
    return float(np.sqrt(np.sum(np.abs(rho_hat - target) ** 2) / rho_hat.size))


def lse_batch(rho_hat: np.ndarray, targets: np.ndarray) -> np.ndarray:
    d2 = rho_hat.shape[-1] ** 2
    return np.sqrt(np.sum(np.abs(rho_hat - targets) ** 2, axis=(-2, -1)) / d2)


def projection_vjp(t: np.ndarray, rho: np.ndarray, tr: np.ndarray, g_rho: np.ndarray):
    """Pull a gradient through ``rho = T^H T / Tr(T^H T)``.

    Gradients of a real loss with respect to a complex matrix are written as
    ``dL/dRe + i dL/dIm``.  ``g_rho`` must be Hermitian (true for any loss of
    a Hermitian argument); then ``dL/dT = 2 T (g_rho - c I) / Tr`` with
    ``c = Re <g_rho, rho>``.
    """
    c = np.real(np.sum(np.conj(g_rho) * rho, axis=(-2, -1)))
    d = t.shape[-1]
    b = (g_rho - c[:, None, None] * np.eye(d)) / tr[:, None, None]
    return 2.0 * (t @ b)


def _loss_and_grads(model: NetworkModel, x: np.ndarray, targets: np.ndarray):
    """MLSE over the batch and its gradient with respect to every parameter."""
    d = model.dim
    acts, s, out = _network(model, x)
    t = network_to_t(out, d)
    rho, tr = project_batch(t)
    if np.any(tr <= _DEGENERATE_TRACE):
        raise Diverged("degenerate T during training")
    diff = rho - targets
    per = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(-2, -1)) / (d * d))
    batch = x.shape[0]
    # the square root is not differentiable at 0; its gradient is taken as 0 there
    scale = np.divide(1.0, d * d * per * batch, out=np.zeros_like(per), where=per > _LSE_ZERO)
    g_rho = diff * scale[:, None, None]
    g_t = projection_vjp(t, rho, tr, g_rho).reshape(batch, d * d)
    g_out = np.concatenate([g_t.real, g_t.imag], axis=1)
    if model.output_activation == "sigmoid_sym":
        delta = g_out * 2.0 * s * (1.0 - s)
    else:
        delta = g_out * s * (1.0 - s)

    gw = [None] * 3
    gb = [None] * 3
    for layer in (2, 1, 0):
        gw[layer] = acts[layer].T @ delta
        gb[layer] = delta.sum(axis=0)
        if layer:
            a = acts[layer]
            delta = (delta @ model.weights[layer].T) * a * (1.0 - a)
    return float(per.mean()), Gradients(gw, gb)


def backward(model: NetworkModel, features, target) -> Gradients:
    """Gradient of the single-example LSE with respect to all parameters."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    target = np.asarray(target, dtype=np.complex128)[None]
    _, grads = _loss_and_grads(model, features, target)
    return grads


def batch_loss(model: NetworkModel, x: np.ndarray, targets: np.ndarray) -> float:
    """MLSE of the model over a batch, without the degenerate fallback."""
    _, _, out = _network(model, x)
    rho, _ = project_batch(network_to_t(out, model.dim))
    return float(lse_batch(rho, targets).mean())


def mlse(model: NetworkModel, features: np.ndarray, targets: np.ndarray, chunk: int = 4096) -> float:
    """Mean LSE over a set of examples (fallback estimates included)."""
    total = 0.0
    for start in range(0, features.shape[0], chunk):
        rho, _ = predict(model, features[start : start + chunk])
        total += float(lse_batch(rho, targets[start : start + chunk]).sum())
    return total / features.shape[0]


# -- training -------------------------------------------------------------


def generate_training_set(n_qubits: int, count: int, rng: np.random.Generator, seed=None) -> TrainingSet:
    """Bures-distributed targets paired with their noise-free features."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    ms = pauli_set(n_qubits)
    d = 2**n_qubits
    features = np.empty((count, 6**n_qubits))
    targets = np.empty((count, d, d), dtype=np.complex128)
    for i in range(count):
        rho = sample_bures(n_qubits, rng)
        targets[i] = rho
        features[i] = ideal_features(rho, ms)
    return TrainingSet(n_qubits, features, targets, seed)


class _Adam:
    def __init__(self, params, config: TrainingConfig):
        self.lr = config.learning_rate
        self.b1 = config.beta1
        self.b2 = config.beta2
        self.eps = config.epsilon
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def noisy_test_features(targets, n0: int, rng: np.random.Generator) -> np.ndarray:
    targets = np.asarray(targets)
    ms = pauli_set(n_qubits_of(targets[0]))
    return np.stack([simulate_counts(rho, ms, n0, rng) for rho in targets])


def train(
    train_set: TrainingSet,
    test_targets,
    config: TrainingConfig,
    rng: np.random.Generator,
    model: NetworkModel | None = None,
) -> TrainResult:
    """Adam on minibatch MLSE with early stopping on the noisy test MLSE.

    The test features are drawn once, with ``config.test_n0`` shots per
    setting.  Every ``eval_interval`` batches the full training and test
    MLSE are recorded; training stops after ``patience`` evaluations
    without an improvement of at least ``min_improvement``.  The returned
    model holds the parameters with the lowest test MLSE seen.
    """
    n = train_set.n_qubits
    if len(train_set) == 0:
        raise ValidationError("training set is empty")
    test_targets = np.asarray(test_targets, dtype=np.complex128)
    if test_targets.ndim != 3 or len(test_targets) == 0:
        raise ValidationError("test set is empty")
    if test_targets.shape[1] != 2**n:
        raise DimensionMismatch("test targets and training set differ in qubit count")

    test_x = noisy_test_features(test_targets, config.test_n0, rng)
    if model is None:
        model = init_model(n, config, rng)
    else:
        model = model.copy()
    model.validate()
    x, y = train_set.features, train_set.targets
    params = model.parameters()
    adam = _Adam(params, config)

    def evaluate(step):
        tr_mlse = mlse(model, x, y)
        te_mlse = mlse(model, test_x, test_targets)
        if not (math.isfinite(tr_mlse) and math.isfinite(te_mlse)):
            raise Diverged(f"MLSE became non-finite at step {step}")
        curve.append((step, tr_mlse, te_mlse))
        log.debug("step %d: train %.6f test %.6f", step, tr_mlse, te_mlse)
        return te_mlse

    curve: list[tuple[int, float, float]] = []
    best_value = evaluate(0)
    best = model.copy()
    reference = best_value
    stale = 0
    step = 0
    epoch = 0
    stopped = False
    while epoch < config.max_epochs and not stopped:
        order = rng.permutation(len(x)) if config.shuffle else np.arange(len(x))
        for start in range(0, len(x), config.batch_size):
            idx = order[start : start + config.batch_size]
            _, grads = _loss_and_grads(model, x[idx], y[idx])
            adam.step(params, grads.flat())
            step += 1
            if step % config.eval_interval:
                continue
            value = evaluate(step)
            if value < best_value:
                best_value = value
                best = model.copy()
            if value <= reference - config.min_improvement:
                reference = value
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    stopped = True
                    break
        epoch += 1

    best.metadata = {"seed": config.seed, "epochs": epoch, "test_mlse": best_value}
    log.info("training finished after %d epochs (%d steps), best test MLSE %.6f", epoch, step, best_value)
    return TrainResult(best, curve, stopped)


# -- persistence ----------------------------------------------------------


def model_to_json(model: NetworkModel) -> dict:
    return {
        "magic": MODEL_MAGIC,
        "version": MODEL_VERSION,
        "n_qubits": model.n_qubits,
        "layer_sizes": model.layer_sizes,
        "activation": {"hidden": "sigmoid", "output": model.output_activation},
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "metadata": model.metadata,
    }


def model_from_json(doc: dict, n_qubits: int | None = None) -> NetworkModel:
    if not isinstance(doc, dict) or doc.get("magic") != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatch(f"model version {doc.get('version')!r} is not {MODEL_VERSION}")
    try:
        n = int(doc["n_qubits"])
        weights = [np.asarray(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
        activation = doc["activation"]
        sizes = list(doc["layer_sizes"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed model file: {exc}") from exc
    if activation.get("hidden") != "sigmoid":
        raise FormatError(f"unsupported hidden activation {activation.get('hidden')!r}")
    model = NetworkModel(n, weights, biases, activation.get("output"), doc.get("metadata", {}))
    model.validate()
    if model.layer_sizes != sizes:
        raise ShapeMismatch("layer_sizes disagrees with the stored weights")
    if n_qubits is not None and n != n_qubits:
        raise ShapeMismatch(f"model is for {n} qubits, {n_qubits} requested")
    return model


def save_model(model: NetworkModel, path) -> None:
    model.validate()
    atomic_write_text(path, json.dumps(model_to_json(model)))


def load_model(path, n_qubits: int | None = None) -> NetworkModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from exc
    return model_from_json(doc, n_qubits)


def estimate(model: NetworkModel, features) -> ForwardResult:
    """Validated single-shot estimate from a frequency vector."""
    check_features(features, model.n_qubits)
    return forward(model, features)
