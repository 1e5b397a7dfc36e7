"""
Multi-label linear classifier: one sigmoid head per tactic over TF-IDF
features, trained with mean binary cross-entropy.

File layout of a saved model (integers little-endian):
    magic b"TTPRAGLM" | version u16 | header length u32 | header JSON
    idf (|V| float64) | weights (|V| x 14 float64) | bias (14 float64)
    SHA-256 of everything above (32 bytes)
The header holds the vocabulary terms, the tactic order and the training
config.
"""

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ..corpus.models import LabeledDescription
from ..corpus.tactics import TACTIC_ORDER, Tactic
from ..utils.errors import ErrorCode, create_error
from ..utils.io import atomic_write_bytes
from .features import Vocabulary, fit_vocabulary, to_matrix

logger = logging.getLogger(__name__)

N_HEADS = len(TACTIC_ORDER)
THRESHOLD = 0.5
MAGIC = b"TTPRAGLM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHI")
_DIGEST_LEN = 32


class TrainConfig(BaseModel):
    """Training hyperparameters. Defaults match the encoder fine-tuning setup."""
    loss: Literal["bce"] = Field("bce", description="Binary cross-entropy over all heads")
    batch_size: int = Field(16, ge=1)
    epochs: int = Field(30, ge=1)
    learning_rate: float = Field(5e-5, gt=0)
    seed: int = 0
    optimizer: Literal["sgd", "adam"] = Field("sgd", description="Plain mini-batch descent or Adam moments")
    adam_beta1: float = Field(0.9, ge=0, lt=1)
    adam_beta2: float = Field(0.999, ge=0, lt=1)
    adam_epsilon: float = Field(1e-8, gt=0)
    weight_decay: float = Field(0.0, ge=0, description="Decoupled decay, Adam only")


@dataclass(eq=False)
class MultiLabelModel:
    vocabulary: Vocabulary
    weights: np.ndarray  # (|V|, 14)
    bias: np.ndarray  # (14,)
    config: TrainConfig = field(default_factory=TrainConfig)
    tactics: Tuple[Tactic, ...] = TACTIC_ORDER
    loss_history: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.weights.shape != (len(self.vocabulary), len(self.tactics)):
            raise ValueError("weights must be |V| x number of heads")
        if self.bias.shape != (len(self.tactics),):
            raise ValueError("one bias per head is required")
        if len(self.tactics) != N_HEADS or set(self.tactics) != set(TACTIC_ORDER):
            raise ValueError(f"exactly {N_HEADS} heads, one per tactic, are required")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-free logistic function; sigmoid(0) is exactly 0.5."""
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def bce_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Mean binary cross-entropy over samples x heads, and its gradient.

    Returns:
        (loss, d loss / d weights, d loss / d bias)
    """
    logits = features @ weights + bias
    # log(1 + e^z) - y*z == -[y log p + (1-y) log(1-p)]
    loss = float(np.mean(np.logaddexp(0.0, logits) - labels * logits))
    residual = (sigmoid(logits) - labels) / labels.size
    return loss, features.T @ residual, residual.sum(axis=0)


def label_matrix(label_sets: Sequence[FrozenSet[Tactic]], tactics: Sequence[Tactic] = TACTIC_ORDER) -> np.ndarray:
    out = np.zeros((len(label_sets), len(tactics)), dtype=np.float64)
    column = {t: i for i, t in enumerate(tactics)}
    for row, labels in enumerate(label_sets):
        for tactic in labels:
            out[row, column[tactic]] = 1.0
    return out


def train(
    descriptions: Sequence[LabeledDescription],
    config: Optional[TrainConfig] = None,
    tactics: Sequence[Tactic] = TACTIC_ORDER,
) -> MultiLabelModel:
    """
    Fit the vocabulary and all heads on labeled descriptions.

    Weights and biases start at zero. Each epoch visits the samples in an
    order drawn from numpy's default_rng(seed), so training is reproducible.

    Raises:
        TrainingError: empty corpus, an unlabeled description, or a
            non-finite loss.
    """
    config = config or TrainConfig()
    if not descriptions:
        raise create_error(ErrorCode.TRAIN_EMPTY_CORPUS)
    for d in descriptions:
        if not d.tactic_labels:
            raise create_error(ErrorCode.TRAIN_UNLABELED, attack_id=d.attack_id)

    vocabulary = fit_vocabulary([d.description_text for d in descriptions])
    vectors = [vocabulary.featurize(d.description_text) for d in descriptions]
    labels = label_matrix([d.tactic_labels for d in descriptions], tactics)

    weights = np.zeros((len(vocabulary), len(tactics)), dtype=np.float64)
    bias = np.zeros(len(tactics), dtype=np.float64)
    adam = _AdamState(weights.shape, bias.shape) if config.optimizer == "adam" else None

    rng = np.random.default_rng(config.seed)
    n = len(descriptions)
    history: List[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for batch_num, start in enumerate(range(0, n, config.batch_size), 1):
            idx = order[start:start + config.batch_size]
            x = to_matrix([vectors[i] for i in idx], len(vocabulary))
            loss, grad_w, grad_b = bce_loss_and_grad(weights, bias, x, labels[idx])
            if not np.isfinite(loss):
                raise create_error(ErrorCode.TRAIN_DIVERGED, epoch=epoch, batch=batch_num, loss=loss)
            if adam is None:
                weights -= config.learning_rate * grad_w
                bias -= config.learning_rate * grad_b
            else:
                adam.step(weights, bias, grad_w, grad_b, config)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
        logger.debug("epoch %d loss %.6f", epoch, history[-1])

    logger.info("Trained %d heads on %d descriptions, |V|=%d, final loss %.6f",
                len(tactics), n, len(vocabulary), history[-1])
    return MultiLabelModel(vocabulary, weights, bias, config, tuple(tactics), history)


class _AdamState:
    def __init__(self, w_shape, b_shape):
        self.t = 0
        self.m_w, self.v_w = np.zeros(w_shape), np.zeros(w_shape)
        self.m_b, self.v_b = np.zeros(b_shape), np.zeros(b_shape)

    def step(self, weights, bias, grad_w, grad_b, config: TrainConfig) -> None:
        b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate
        self.t += 1
        for param, grad, m, v in ((weights, grad_w, self.m_w, self.v_w), (bias, grad_b, self.m_b, self.v_b)):
            m *= b1
            m += (1 - b1) * grad
            v *= b2
            v += (1 - b2) * grad * grad
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            if config.weight_decay:
                param -= lr * config.weight_decay * param
            param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def predict_proba(model: MultiLabelModel, texts: Sequence[str], batch_size: int = 512) -> np.ndarray:
    """(n, 14) head probabilities, columns in the model's tactic order."""
    out = np.zeros((len(texts), len(model.tactics)), dtype=np.float64)
    for start in range(0, len(texts), batch_size):
        x = model.vocabulary.transform(texts[start:start + batch_size])
        out[start:start + batch_size] = sigmoid(x @ model.weights + model.bias)
    return out


def predict_many(model: MultiLabelModel, texts: Sequence[str]) -> List[FrozenSet[Tactic]]:
    probs = predict_proba(model, list(texts))
    return [frozenset(t for t, p in zip(model.tactics, row) if p > THRESHOLD) for row in probs]


def predict(model: MultiLabelModel, text: str) -> FrozenSet[Tactic]:
    """Tactics whose head outputs strictly more than 0.5. May be empty."""
    return predict_many(model, [text])[0]


def serialize_model(model: MultiLabelModel) -> bytes:
    header = json.dumps({
        "terms": list(model.vocabulary.terms),
        "n_documents": model.vocabulary.n_documents,
        "tactics": [t.value for t in model.tactics],
        "config": model.config.model_dump(mode="json"),
        "loss_history": model.loss_history,
    }, sort_keys=True, ensure_ascii=False).encode("utf-8")
    body = b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, len(header)),
        header,
        np.asarray(model.vocabulary.idf, dtype="<f8").tobytes(),
        np.asarray(model.weights, dtype="<f8").tobytes(),
        np.asarray(model.bias, dtype="<f8").tobytes(),
    ])
    return body + hashlib.sha256(body).digest()


def deserialize_model(data: bytes, path: str = "<bytes>") -> MultiLabelModel:
    if len(data) < _HEADER.size + _DIGEST_LEN:
        raise create_error(ErrorCode.MODEL_FORMAT, path=path, reason="file too short")
    body, digest = data[:-_DIGEST_LEN], data[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise create_error(ErrorCode.MODEL_FORMAT, path=path, reason="checksum mismatch")
    magic, version, header_len = _HEADER.unpack_from(body, 0)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise create_error(ErrorCode.MODEL_FORMAT, path=path, reason="bad magic or version")

    offset = _HEADER.size
    try:
        header = json.loads(body[offset:offset + header_len].decode("utf-8"))
        offset += header_len
        terms = tuple(header["terms"])
        tactics = tuple(Tactic(name) for name in header["tactics"])
        v, h = len(terms), len(tactics)
        arrays = np.frombuffer(body, dtype="<f8", offset=offset)
        if arrays.size != v + v * h + h:
            raise ValueError("array section has the wrong size")
        idf = arrays[:v].copy()
        weights = arrays[v:v + v * h].reshape(v, h).copy()
        bias = arrays[v + v * h:].copy()
        vocabulary = Vocabulary(terms=terms, idf=idf, n_documents=int(header["n_documents"]))
        return MultiLabelModel(
            vocabulary=vocabulary,
            weights=weights,
            bias=bias,
            config=TrainConfig.model_validate(header["config"]),
            tactics=tactics,
            loss_history=list(header.get("loss_history", [])),
        )
    except (KeyError, ValueError, UnicodeDecodeError) as e:
        raise create_error(ErrorCode.MODEL_FORMAT, path=path, reason=str(e)) from e


def save_model(model: MultiLabelModel, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, serialize_model(model))


def load_model(path: Union[str, Path]) -> MultiLabelModel:
    """
    Raises:
        TrainingError: checksum mismatch or malformed file.
    """
    path = Path(path)
    return deserialize_model(path.read_bytes(), str(path))
