"""Dense softmax classifier that learns the solver's direction choices and
serves as a fast drop-in controller."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .system import QuantizedPlant, enumerate_alphabet

DEFAULT_HIDDEN = (512, 480, 256)
FEATURE_SCHEMA_VERSION = 1
_KEY_DECIMALS = 12


@dataclass(eq=False)
class Dataset:
    """Feature rows (one per closed-loop step) with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be 2-d and labels 1-d")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature and label row counts differ")

    def __len__(self) -> int:
        return self.labels.shape[0]


def _direction_key(d: np.ndarray) -> tuple:
    return tuple(np.round(d, _KEY_DECIMALS) + 0.0)  # +0.0 folds -0.0 into 0.0


@dataclass(eq=False)
class DirectionCodec:
    """Bijection between class indices and distinct aggregate directions B_q u.

    directions are sorted lexicographically; canonical_inputs[i] is the
    minimum-1-norm ternary input producing directions[i], ties resolved to the
    lexicographically largest candidate (prefers +1 entries in the earliest
    coordinates).  b_q is None when the codec was loaded from disk without its
    plant, which disables input-to-class lookups but not control.
    """

    directions: np.ndarray
    canonical_inputs: np.ndarray
    b_q: np.ndarray | None = None
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.directions = np.asarray(self.directions, dtype=float)
        self.canonical_inputs = np.asarray(self.canonical_inputs, dtype=int)
        if self.directions.shape[0] != self.canonical_inputs.shape[0]:
            raise ValueError("directions and canonical inputs disagree in count")
        self._index = {_direction_key(d): i for i, d in enumerate(self.directions)}
        if len(self._index) != self.directions.shape[0]:
            raise ValueError("directions are not pairwise distinct")

    @property
    def class_count(self) -> int:
        return self.directions.shape[0]

    def class_of_direction(self, d) -> int:
        key = _direction_key(np.asarray(d, dtype=float))
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(f"direction {d} is not represented in this codec") from None

    def class_of_input(self, u) -> int:
        if self.b_q is None:
            raise ValueError("codec has no plant attached; cannot map inputs")
        u = np.asarray(u, dtype=float).ravel()
        if u.shape[0] != self.b_q.shape[1]:
            raise ValueError(f"codec expects {self.b_q.shape[1]} input entries, "
                             f"got {u.shape[0]}")
        return self.class_of_direction(self.b_q @ u)


def codec_build(plant: QuantizedPlant) -> DirectionCodec:
    """Enumerate the plant's input alphabet and group it by aggregate direction."""
    alphabet = enumerate_alphabet(plant.m)
    raw = alphabet.astype(float) @ plant.B_q.T
    groups: dict[tuple, dict] = {}
    for u, d in zip(alphabet, raw):
        key = _direction_key(d)
        entry = groups.setdefault(key, {"direction": d, "candidates": []})
        entry["candidates"].append(u)
    reps = sorted(groups.values(), key=lambda g: tuple(g["direction"]))
    directions = np.array([g["direction"] for g in reps])
    canonical = []
    for g in reps:
        cands = g["candidates"]
        min_norm = min(int(np.abs(u).sum()) for u in cands)
        best = max(tuple(u) for u in cands if int(np.abs(u).sum()) == min_norm)
        canonical.append(best)
    return DirectionCodec(directions=directions,
                          canonical_inputs=np.array(canonical, dtype=int),
                          b_q=plant.B_q.copy())


@dataclass(eq=False)
class Mlp:
    """Fully connected net: rectified-linear hidden layers, softmax output."""

    layer_dims: list
    weights: list
    biases: list

    @classmethod
    def initialize(cls, layer_dims, seed: int = 0) -> "Mlp":
        """Seeded scaled-uniform initialization, +-sqrt(6/(fan_in+fan_out))."""
        dims = [int(d) for d in layer_dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs at least an input and an output size")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(layer_dims=dims, weights=weights, biases=biases)

    @classmethod
    def for_features(cls, feature_dim: int, class_count: int, seed: int = 0) -> "Mlp":
        return cls.initialize([feature_dim, *DEFAULT_HIDDEN, class_count], seed=seed)


def _logits(mlp: Mlp, X: np.ndarray) -> np.ndarray:
    a = X
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = a @ w + b
        a = z if i == last else np.maximum(z, 0.0)
    return a


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(mlp: Mlp, features) -> np.ndarray:
    """Class probabilities for one feature vector (non-negative, sum to 1)."""
    x = np.asarray(features, dtype=float).ravel()
    if x.shape[0] != mlp.layer_dims[0]:
        raise ValueError(f"expected {mlp.layer_dims[0]} features, got {x.shape[0]}")
    z = _logits(mlp, x[None, :])
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite activations in the forward pass")
    return np.exp(_log_softmax(z))[0]


def _loss_and_grads(mlp: Mlp, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over a batch plus gradients for every parameter."""
    acts = [X]
    zs = []
    a = X
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = a @ w + b
        zs.append(z)
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    logp = _log_softmax(zs[-1])
    batch = X.shape[0]
    loss = -float(logp[np.arange(batch), y].mean())
    delta = np.exp(logp)
    delta[np.arange(batch), y] -= 1.0
    delta /= batch
    grads_w = [None] * len(mlp.weights)
    grads_b = [None] * len(mlp.biases)
    for i in range(last, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ mlp.weights[i].T) * (zs[i - 1] > 0.0)
    return loss, grads_w, grads_b


def _accuracy(mlp: Mlp, X: np.ndarray, y: np.ndarray) -> float:
    if X.shape[0] == 0:
        return float("nan")
    pred = np.argmax(_logits(mlp, X), axis=1)
    return float(np.mean(pred == y))


@dataclass
class TrainReport:
    epoch_losses: list
    train_accuracy: float
    test_accuracy: float


class TrainingDivergedError(RuntimeError):
    """Raised when the loss goes non-finite; carries the partial report."""

    def __init__(self, report: TrainReport):
        super().__init__("training diverged: loss is not finite")
        self.report = report


def train(mlp: Mlp, dataset: Dataset, epochs: int = 20, batch_size: int = 32,
          lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
          eps: float = 1e-8, split: float = 0.2, seed: int = 0,
          test_dataset: Dataset | None = None) -> TrainReport:
    """Mini-batch Adam on mean cross-entropy; deterministic for a fixed seed.

    When test_dataset is given it is the held-out set; otherwise a seeded
    split of the input reserves the given fraction for testing.  Epoch losses
    are the mean over that epoch's batches.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if np.any(dataset.labels < 0) or np.any(dataset.labels >= mlp.layer_dims[-1]):
        raise ValueError("labels fall outside the class count")
    rng = np.random.default_rng(seed)
    if test_dataset is not None:
        X_tr, y_tr = dataset.features, dataset.labels
        X_te, y_te = test_dataset.features, test_dataset.labels
    else:
        perm = rng.permutation(len(dataset))
        n_test = int(round(split * len(dataset)))
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        X_tr, y_tr = dataset.features[train_idx], dataset.labels[train_idx]
        X_te, y_te = dataset.features[test_idx], dataset.labels[test_idx]
    if X_tr.shape[0] == 0:
        raise ValueError("train split is empty")

    m_w = [np.zeros_like(w) for w in mlp.weights]
    v_w = [np.zeros_like(w) for w in mlp.weights]
    m_b = [np.zeros_like(b) for b in mlp.biases]
    v_b = [np.zeros_like(b) for b in mlp.biases]
    t = 0
    epoch_losses: list[float] = []
    for _ in range(epochs):
        order = rng.permutation(X_tr.shape[0])
        batch_losses = []
        for start in range(0, X_tr.shape[0], batch_size):
            idx = order[start:start + batch_size]
            loss, gw, gb = _loss_and_grads(mlp, X_tr[idx], y_tr[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(TrainReport(
                    epoch_losses=epoch_losses, train_accuracy=float("nan"),
                    test_accuracy=float("nan")))
            batch_losses.append(loss)
            t += 1
            correction = np.sqrt(1.0 - beta2 ** t) / (1.0 - beta1 ** t)
            for params, grads, ms, vs in ((mlp.weights, gw, m_w, v_w),
                                          (mlp.biases, gb, m_b, v_b)):
                for p, g, m_, v_ in zip(params, grads, ms, vs):
                    m_ *= beta1
                    m_ += (1.0 - beta1) * g
                    v_ *= beta2
                    v_ += (1.0 - beta2) * g * g
                    p -= lr * correction * m_ / (np.sqrt(v_) + eps)
        epoch_losses.append(float(np.mean(batch_losses)))
    return TrainReport(epoch_losses=epoch_losses,
                       train_accuracy=_accuracy(mlp, X_tr, y_tr),
                       test_accuracy=_accuracy(mlp, X_te, y_te))


def gradient_check(mlp: Mlp, features, label: int, step: float = 1e-5) -> float:
    """Max relative gap between backprop and central finite differences.

    Only sensible for small nets; touches every parameter twice per entry.
    """
    X = np.asarray(features, dtype=float).reshape(1, -1)
    y = np.array([label], dtype=int)
    _, gw, gb = _loss_and_grads(mlp, X, y)
    worst = 0.0
    for params, grads in ((mlp.weights, gw), (mlp.biases, gb)):
        for p, g in zip(params, grads):
            flat = p.ravel()
            for i in range(flat.shape[0]):
                keep = flat[i]
                flat[i] = keep + step
                up, _, _ = _loss_and_grads(mlp, X, y)
                flat[i] = keep - step
                down, _, _ = _loss_and_grads(mlp, X, y)
                flat[i] = keep
                numeric = (up - down) / (2.0 * step)
                analytic = g.ravel()[i]
                denom = max(abs(analytic), abs(numeric), 1e-6)
                worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def predict_class(mlp: Mlp, features) -> int:
    """Most probable class; ties resolve to the lowest index."""
    return int(np.argmax(forward(mlp, features)))


def predict_input(mlp: Mlp, codec: DirectionCodec, features) -> np.ndarray:
    """Canonical ternary input for the most probable direction class."""
    if codec.class_count != mlp.layer_dims[-1]:
        raise ValueError("codec class count does not match the output layer")
    return codec.canonical_inputs[predict_class(mlp, features)].copy()


def save_model(mlp: Mlp, codec: DirectionCodec, path) -> None:
    """Persist weights and codec as one JSON document (row-major arrays)."""
    doc = {
        "feature_schema_version": FEATURE_SCHEMA_VERSION,
        "layer_dims": list(mlp.layer_dims),
        "weights": [w.ravel().tolist() for w in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
        "codec_directions": codec.directions.tolist(),
        "codec_canonical_inputs": codec.canonical_inputs.tolist(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_model(path) -> tuple[Mlp, DirectionCodec]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    version = doc.get("feature_schema_version")
    if version != FEATURE_SCHEMA_VERSION:
        raise ValueError(f"unsupported feature schema version {version}")
    dims = [int(d) for d in doc["layer_dims"]]
    weights = [np.array(w, dtype=float).reshape(fan_in, fan_out)
               for w, fan_in, fan_out in zip(doc["weights"], dims[:-1], dims[1:])]
    biases = [np.array(b, dtype=float) for b in doc["biases"]]
    mlp = Mlp(layer_dims=dims, weights=weights, biases=biases)
    codec = DirectionCodec(directions=np.array(doc["codec_directions"], dtype=float),
                           canonical_inputs=np.array(doc["codec_canonical_inputs"], dtype=int))
    return mlp, codec
