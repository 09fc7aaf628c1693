"""Hyperbolic prototype learning on the Poincaré ball.

Class labels are ideal points of hyperbolic space; a base learner's output is
mapped into the ball by the exponential map at the origin and trained with the
penalized Busemann loss.
"""

from .data import Dataset, gen_blobs, load_csv, save_csv, split
from .estimator import HyperbolicPrototypeClassifier, make_prototypes
from .geometry import (
    GeometryError,
    HyperbolicPolar,
    angle_to_unit,
    as_ideal_point,
    busemann,
    busemann_euclidean,
    euclidean_from_hp,
    exp_origin,
    hp_from_euclidean,
    hyperbolic_distance,
)
from .learner import (
    LinearLearner,
    MlpLearner,
    TrainConfig,
    TrainReport,
    evaluate,
    logistic_reference_train,
    predict,
    predict_with_confidence,
    train,
)
from .loss import (
    LOWER_BOUND,
    batch_loss,
    cross_entropy_1d,
    pebu_grad_hp,
    pebu_grad_y,
    pebu_loss,
    pebu_loss_euclidean,
)
from .prototypes import (
    PrototypeSet,
    load_prototypes,
    max_pairwise_cosine,
    place_line,
    place_separated,
    place_uniform_circle,
    project_to_ideal,
    save_prototypes,
)

__version__ = "0.1.0"

__all__ = [
    "GeometryError",
    "HyperbolicPolar",
    "angle_to_unit",
    "as_ideal_point",
    "busemann",
    "busemann_euclidean",
    "euclidean_from_hp",
    "exp_origin",
    "hp_from_euclidean",
    "hyperbolic_distance",
    "LinearLearner",
    "MlpLearner",
    "TrainConfig",
    "TrainReport",
    "evaluate",
    "logistic_reference_train",
    "predict",
    "predict_with_confidence",
    "train",
    "LOWER_BOUND",
    "batch_loss",
    "cross_entropy_1d",
    "pebu_grad_hp",
    "pebu_grad_y",
    "pebu_loss",
    "pebu_loss_euclidean",
    "PrototypeSet",
    "load_prototypes",
    "max_pairwise_cosine",
    "place_line",
    "place_separated",
    "place_uniform_circle",
    "project_to_ideal",
    "save_prototypes",
    "Dataset",
    "gen_blobs",
    "load_csv",
    "save_csv",
    "split",
    "HyperbolicPrototypeClassifier",
    "make_prototypes",
]
