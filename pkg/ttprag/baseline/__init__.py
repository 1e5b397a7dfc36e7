"""
Stand-in supervised baseline: TF-IDF features and 14 sigmoid heads.
"""

from .features import FeatureVector, Vocabulary, fit_vocabulary
from .model import (
    MultiLabelModel,
    TrainConfig,
    bce_loss_and_grad,
    load_model,
    predict,
    predict_many,
    predict_proba,
    save_model,
    train,
)

__all__ = [
    "FeatureVector",
    "MultiLabelModel",
    "TrainConfig",
    "Vocabulary",
    "bce_loss_and_grad",
    "fit_vocabulary",
    "load_model",
    "predict",
    "predict_many",
    "predict_proba",
    "save_model",
    "train",
]
