"""Base learners, training by plain mini-batch gradient descent, and prediction.

A base learner maps inputs ``x`` in ``R^n`` to tangent vectors ``y`` in ``R^d``;
``exp_origin(y)`` is the point in the Poincaré ball that is scored against the
class prototypes.
"""

import copy
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .loss import batch_loss


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch, batch, value):
        super().__init__(f"non-finite value {value} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class ModelFileError(ValueError):
    pass


class FeedForward:
    """Affine layers with tanh between them and a linear output layer.

    ``weights[l]`` has shape ``(out, in)``; ``biases[l]`` has shape ``(out,)``.
    """

    kind = "mlp"

    def __init__(self, weights, biases):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} are inconsistent")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: expects {w.shape[1]} inputs, previous layer emits {self.weights[i - 1].shape[0]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")

    @classmethod
    def initialize(cls, layer_sizes, seed=0):
        """Uniform weights on ``[-0.5/sqrt(fan_in), 0.5/sqrt(fan_in)]``, zero biases."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 0.5 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_inputs(self):
        return self.weights[0].shape[1]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[0]

    def copy(self):
        return copy.deepcopy(self)

    def parameters(self):
        return self.weights + self.biases

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_inputs or x.ndim > 2:
            raise ValueError(f"expected inputs with {self.n_inputs} features, got shape {x.shape}")
        return x

    def _activations(self, x):
        acts = [x]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            acts.append(np.tanh(acts[-1] @ w.T + b))
        return acts

    def forward(self, x):
        """``y = B(x)`` for a single input ``(n,)`` or a batch ``(N, n)``."""
        x = self._check_input(x)
        return self._activations(x)[-1] @ self.weights[-1].T + self.biases[-1]

    def backward(self, x, upstream):
        """Gradients of ``sum(upstream * forward(x))`` with respect to every parameter.

        Returns ``(weight_grads, bias_grads)`` summed over the batch.
        """
        x = self._check_input(x)
        single = x.ndim == 1
        x2 = x[None, :] if single else x
        delta = np.asarray(upstream, dtype=np.float64).reshape(x2.shape[0], -1)
        if delta.shape[1] != self.n_outputs:
            raise ValueError(f"upstream gradient must have {self.n_outputs} columns, got {delta.shape[1]}")
        acts = self._activations(x2)
        w_grads, b_grads = [], []
        for layer in range(len(self.weights) - 1, -1, -1):
            w_grads.append(delta.T @ acts[layer])
            b_grads.append(delta.sum(axis=0))
            if layer:
                delta = (delta @ self.weights[layer]) * (1.0 - acts[layer] ** 2)
        return w_grads[::-1], b_grads[::-1]

    def step(self, w_grads, b_grads, lr):
        for w, g in zip(self.weights, w_grads):
            w -= lr * g
        for b, g in zip(self.biases, b_grads):
            b -= lr * g


class LinearLearner(FeedForward):
    """``B(x) = W x + b``."""

    kind = "linear"

    def __init__(self, weights, biases):
        super().__init__(weights, biases)
        if len(self.weights) != 1:
            raise ValueError("a linear learner has exactly one layer")

    @classmethod
    def initialize(cls, n, d, seed=0):
        return super().initialize([n, d], seed)


class MlpLearner(FeedForward):
    def __init__(self, weights, biases):
        super().__init__(weights, biases)
        if len(self.weights) < 2:
            raise ValueError("an MLP needs at least one hidden layer")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    shuffle: bool = True
    record_steps: bool = False

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")


@dataclass
class TrainReport:
    losses: list
    accuracies: list
    learner: FeedForward
    steps: list = field(default_factory=list)

    def to_csv(self):
        lines = ["epoch,loss,accuracy"]
        for epoch, (loss, acc) in enumerate(zip(self.losses, self.accuracies), start=1):
            lines.append(f"{epoch},{loss:.17g},{acc:.17g}")
        return "\n".join(lines) + "\n"


def iter_batches(n, batch_size, rng, shuffle):
    order = rng.permutation(n) if shuffle else np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def _check_task(learner, dataset, prototypes):
    if dataset.n_features != learner.n_inputs or learner.n_outputs != prototypes.dim:
        raise ValueError(
            f"dimension mismatch: data has n={dataset.n_features} features, learner maps "
            f"n={learner.n_inputs} -> d={learner.n_outputs}, prototypes have d={prototypes.dim}"
        )
    if dataset.labels.max() >= prototypes.n_classes:
        raise ValueError(
            f"dataset label {int(dataset.labels.max())} has no prototype (K={prototypes.n_classes})"
        )


def _snapshot(learner):
    return [p.copy() for p in learner.parameters()]


def train(learner, dataset, prototypes, config):
    """Minimize the mean peBu loss by mini-batch gradient descent.

    The input learner is left untouched; the trained copy is ``report.learner``.
    Loss and accuracy are recorded on the full dataset at the end of each epoch.
    """
    _check_task(learner, dataset, prototypes)
    learner = learner.copy()
    rng = np.random.default_rng(config.seed)
    losses, accuracies = [], []
    steps = [_snapshot(learner)] if config.record_steps else []
    for epoch in range(1, config.epochs + 1):
        for batch_no, index in enumerate(iter_batches(len(dataset), config.batch_size, rng, config.shuffle), start=1):
            x = dataset.features[index]
            y = learner.forward(x)
            if not np.all(np.isfinite(y)):
                raise TrainingDivergedError(epoch, batch_no, y[~np.isfinite(y)][0])
            value, grads = batch_loss(y, dataset.labels[index], prototypes)
            if not np.isfinite(value) or not np.all(np.isfinite(grads)):
                raise TrainingDivergedError(epoch, batch_no, value)
            learner.step(*learner.backward(x, grads), config.learning_rate)
            if config.record_steps:
                steps.append(_snapshot(learner))
        result = evaluate(learner, dataset, prototypes)
        if not np.isfinite(result.loss):
            raise TrainingDivergedError(epoch, batch_no, result.loss)
        losses.append(result.loss)
        accuracies.append(result.accuracy)
    return TrainReport(losses, accuracies, learner, steps)


def nearest_prototype(y, directions):
    """Label of the largest cosine between ``y`` rows and prototypes; ties and ``y = 0`` go to the smallest label."""
    r = np.linalg.norm(y, axis=1)
    cos = (y / np.where(r == 0.0, 1.0, r)[:, None]) @ directions.T
    return np.argmax(cos, axis=1), r


def predict_with_confidence(learner, x, prototypes):
    """Nearest-prototype labels and confidence radii ``|y|``."""
    y = np.atleast_2d(learner.forward(x))
    if y.shape[1] != prototypes.dim:
        raise ValueError(f"learner emits d={y.shape[1]}, prototypes have d={prototypes.dim}")
    labels, r = nearest_prototype(y, prototypes.directions)
    if np.ndim(x) == 1:
        return int(labels[0]), float(r[0])
    return labels, r


def predict(learner, x, prototypes):
    return predict_with_confidence(learner, x, prototypes)[0]


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    loss: float
    confidence: np.ndarray


def evaluate(learner, dataset, prototypes):
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    labels, r = predict_with_confidence(learner, dataset.features, prototypes)
    loss, _ = batch_loss(learner.forward(dataset.features), dataset.labels, prototypes)
    return Evaluation(float(np.mean(labels == dataset.labels)), loss, r)


def logistic_reference_train(dataset, config, initial):
    """Logistic regression by the same mini-batch schedule as :func:`train`.

    Labels must be 0/1 and ``initial`` a one-output :class:`LinearLearner`.
    Returns the parameter snapshots ``[W, b]`` before training and after every step.
    """
    if initial.n_outputs != 1 or not isinstance(initial, LinearLearner):
        raise ValueError("the logistic reference needs a linear learner with d=1")
    if not np.all(np.isin(dataset.labels, (0, 1))):
        raise ValueError("logistic regression needs binary 0/1 labels")
    w = initial.weights[0].copy()
    b = initial.biases[0].copy()
    rng = np.random.default_rng(config.seed)
    trajectory = [[w.copy(), b.copy()]]
    for _ in range(config.epochs):
        for index in iter_batches(len(dataset), config.batch_size, rng, config.shuffle):
            x = dataset.features[index]
            target = dataset.labels[index].astype(np.float64)
            residual = (expit(x @ w.T + b)[:, 0] - target) / len(index)
            w -= config.learning_rate * (residual[None, :] @ x)
            b -= config.learning_rate * residual.sum()
            trajectory.append([w.copy(), b.copy()])
    return trajectory


def format_model(learner):
    lines = [" ".join([learner.kind] + [str(s) for s in learner.layer_sizes])]
    for w in learner.weights:
        lines.extend(",".join(format(v, ".17g") for v in row) for row in w)
    for b in learner.biases:
        lines.append(",".join(format(v, ".17g") for v in b))
    return "\n".join(lines) + "\n"


def save_model(learner, path):
    """Write atomically so a failed run never leaves a partial model behind."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".model-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(format_model(learner))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    try:
        with open(path) as fh:
            lines = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc.strerror}") from None
    if not lines:
        raise ModelFileError(f"{path}: empty model file")
    header = lines[0].split()
    if header[0] not in ("linear", "mlp"):
        raise ModelFileError(f"{path}: unknown model kind {header[0]!r}")
    try:
        sizes = [int(s) for s in header[1:]]
        rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    except ValueError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
    if len(sizes) < 2:
        raise ModelFileError(f"{path}: header needs at least input and output sizes")
    expected = sum(sizes[1:]) + len(sizes) - 1
    if len(rows) != expected:
        raise ModelFileError(f"{path}: expected {expected} rows for sizes {sizes}, got {len(rows)}")
    weights, pos = [], 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        for offset, row in enumerate(rows[pos:pos + fan_out]):
            if len(row) != fan_in:
                raise ModelFileError(f"{path}: line {pos + offset + 2}: expected {fan_in} weights, got {len(row)}")
        weights.append(rows[pos:pos + fan_out])
        pos += fan_out
    biases = rows[pos:]
    for offset, (row, size) in enumerate(zip(biases, sizes[1:])):
        if len(row) != size:
            raise ModelFileError(f"{path}: line {pos + offset + 2}: expected {size} biases, got {len(row)}")
    cls = LinearLearner if header[0] == "linear" else MlpLearner
    try:
        return cls([np.array(w) for w in weights], [np.array(b) for b in biases])
    except ValueError as exc:
        raise ModelFileError(f"{path}: {exc}") from None
