"""scikit-learn estimator for hyperbolic prototype classification."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import Dataset
from .geometry import euclidean_from_hp, exp_origin
from .learner import LinearLearner, MlpLearner, TrainConfig, evaluate, nearest_prototype, train
from .loss import pebu_loss
from .prototypes import PrototypeSet, place_line, place_separated, place_uniform_circle


def make_prototypes(n_classes, dim, method="auto", seed=0):
    """Prototype set for ``n_classes`` labels in ``dim`` dimensions.

    ``"auto"`` picks the two endpoints for ``dim == 1``, an evenly spaced circle
    for ``dim == 2`` and cosine separation otherwise.
    """
    if method == "auto":
        method = {1: "line", 2: "uniform-circle"}.get(dim, "separated")
    if method == "line":
        if dim != 1 or n_classes != 2:
            raise ValueError("the hyperbolic line has exactly two ideal points (d=1, K=2)")
        return place_line()
    if method == "uniform-circle":
        if dim != 2:
            raise ValueError(f"uniform-circle placement needs d=2, got d={dim}")
        return place_uniform_circle(n_classes)
    if method == "separated":
        return place_separated(n_classes, dim, seed=seed)
    raise ValueError(f"unknown placement method {method!r}")


class HyperbolicPrototypeClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Classifier whose outputs live in the Poincaré ball, scored against ideal-point prototypes.

    Parameters
    ----------
    dim : int, default=2
        Dimension ``d`` of the hyperbolic output space.
    hidden_layer_sizes : tuple of int, default=()
        Hidden tanh layers of the base learner; empty means a linear learner.
    prototypes : {"auto", "line", "uniform-circle", "separated"} or array of shape (K, d)
        Placement method, or fixed unit vectors whose row ``j`` is the
        prototype of ``classes_[j]``.
    learning_rate, epochs, batch_size, shuffle :
        Mini-batch gradient descent settings.
    random_state : int, default=0
        Seeds weight initialization, batch shuffling and prototype placement.

    Attributes
    ----------
    classes_ : ndarray of shape (K,)
    prototypes_ : PrototypeSet
    learner_ : LinearLearner or MlpLearner
    loss_curve_ : list of float
        Mean peBu loss on the training data after each epoch.
    """

    def __init__(self, dim=2, hidden_layer_sizes=(), prototypes="auto", learning_rate=0.05,
                 epochs=200, batch_size=32, shuffle=True, random_state=0):
        self.dim = dim
        self.hidden_layer_sizes = hidden_layer_sizes
        self.prototypes = prototypes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.shuffle = shuffle
        self.random_state = random_state

    def _resolve_prototypes(self, n_classes):
        if isinstance(self.prototypes, str):
            return make_prototypes(n_classes, self.dim, self.prototypes, seed=self.random_state)
        protos = self.prototypes if isinstance(self.prototypes, PrototypeSet) else PrototypeSet(self.prototypes)
        if protos.n_classes != n_classes or protos.dim != self.dim:
            raise ValueError(
                f"prototypes have K={protos.n_classes}, d={protos.dim}; data has K={n_classes}, dim={self.dim}"
            )
        return protos

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        check_classification_targets(y)
        encoder = LabelEncoder().fit(y)
        self.classes_ = encoder.classes_
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes, got 1 class")
        self.prototypes_ = self._resolve_prototypes(len(self.classes_))
        if self.hidden_layer_sizes:
            sizes = [X.shape[1], *self.hidden_layer_sizes, self.dim]
            initial = MlpLearner.initialize(sizes, seed=self.random_state)
        else:
            initial = LinearLearner.initialize(X.shape[1], self.dim, seed=self.random_state)
        config = TrainConfig(self.learning_rate, self.epochs, self.batch_size, self.random_state, self.shuffle)
        report = train(initial, Dataset(X, encoder.transform(y)), self.prototypes_, config)
        self.learner_ = report.learner
        self.loss_curve_ = report.losses
        return self

    def _tangent(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return self.learner_.forward(X)

    def decision_function(self, X):
        """Cosine similarity between each output direction and each prototype."""
        y = self._tangent(X)
        r = np.linalg.norm(y, axis=1, keepdims=True)
        scores = (y / np.where(r == 0.0, 1.0, r)) @ self.prototypes_.directions.T
        return scores[:, 1] if len(self.classes_) == 2 else scores

    def predict(self, X):
        labels, _ = nearest_prototype(self._tangent(X), self.prototypes_.directions)
        return self.classes_[labels]

    def confidence(self, X):
        """Hyperbolic radius ``|y|`` of each output."""
        return np.linalg.norm(self._tangent(X), axis=1)

    def transform(self, X):
        """Euclidean coordinates of the outputs in the Poincaré ball."""
        return euclidean_from_hp(exp_origin(self._tangent(X)))

    def _encode(self, y):
        y = np.asarray(y)
        unknown = ~np.isin(y, self.classes_)
        if np.any(unknown):
            raise ValueError(f"unknown class {y[unknown][0]!r}")
        return np.searchsorted(self.classes_, y)

    def loss(self, X, y):
        """Per-sample peBu loss against the prototypes of the true labels."""
        h = exp_origin(self._tangent(X))
        return pebu_loss(h, self.prototypes_.directions[self._encode(y)])

    def evaluate(self, X, y):
        """Accuracy, mean peBu loss and per-sample confidence."""
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return evaluate(self.learner_, Dataset(X, self._encode(y)), self.prototypes_)
