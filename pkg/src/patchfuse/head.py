"""Trainable classifier head: input -> 512 ReLU -> 2 softmax.

Trained with mini-batch gradient descent on cross-entropy. All
arithmetic is float64 (32-bit features are widened on load) and every
source of randomness flows from the config seed, so a (data, config)
pair fully determines the trained model bit-for-bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelFormatError, TrainingDivergenceError

HIDDEN_DIM = 512
N_CLASSES = 2
PROB_FLOOR = 1e-12


@dataclass
class TrainingMeta:
    seed: int
    epochs_run: int
    final_val_loss: float
    train_loss_history: list[float] = field(default_factory=list, repr=False)
    val_loss_history: list[float] = field(default_factory=list, repr=False)


@dataclass
class ClassifierModel:
    """Dense head weights; w1 is (hidden, in_dim), w2 is (classes, hidden)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    meta: TrainingMeta | None = None

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        hidden = self.w1.shape[0]
        if self.b1.shape != (hidden,) or self.w2.shape[1] != hidden:
            raise ValueError("inconsistent hidden-layer dimensions")
        if self.b2.shape != (self.w2.shape[0],):
            raise ValueError("inconsistent output-layer dimensions")
        for name, arr in (("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite parameter in {name}")

    @property
    def in_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[0]


@dataclass(frozen=True)
class LabeledExample:
    """One training example: feature vector plus class index."""

    features: np.ndarray
    label: int

    def __post_init__(self):
        object.__setattr__(
            self, "features", np.asarray(self.features, dtype=np.float64)
        )
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector (softmax over logits)."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (model.in_dim,):
        raise ValueError(f"expected feature vector of length {model.in_dim}, got {x.shape}")
    h = np.maximum(model.w1 @ x + model.b1, 0.0)
    z = model.w2 @ h + model.b2
    return _softmax_rows(z)


def loss(probs: np.ndarray, label: int) -> float:
    """Cross-entropy of a one-hot target: -log p[label], floored at 1e-12."""
    return float(-np.log(max(float(probs[label]), PROB_FLOOR)))


@dataclass
class Gradients:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def backward(model: ClassifierModel, example: LabeledExample) -> Gradients:
    """Analytic cross-entropy gradients for a single example.

    The softmax/cross-entropy output delta is probs - onehot(label); the
    hidden gradient is gated by the ReLU (strictly positive
    pre-activations pass, zeros block).
    """
    x = example.features
    if x.shape != (model.in_dim,):
        raise ValueError(f"expected feature vector of length {model.in_dim}, got {x.shape}")
    pre = model.w1 @ x + model.b1
    h = np.maximum(pre, 0.0)
    probs = _softmax_rows(model.w2 @ h + model.b2)
    delta = probs.copy()
    delta[example.label] -= 1.0
    g_w2 = np.outer(delta, h)
    g_b2 = delta
    d_h = model.w2.T @ delta
    d_pre = np.where(pre > 0.0, d_h, 0.0)
    g_w1 = np.outer(d_pre, x)
    g_b1 = d_pre
    return Gradients(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)


def _as_matrix(examples, what: str) -> tuple[np.ndarray, np.ndarray]:
    if not examples:
        raise ValueError(f"{what} set is empty")
    dims = {e.features.shape[0] for e in examples}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions in {what} set: {sorted(dims)}")
    x = np.stack([e.features for e in examples]).astype(np.float64)
    y = np.array([e.label for e in examples], dtype=np.int64)
    return x, y


def _mean_loss(model: ClassifierModel, x: np.ndarray, y: np.ndarray) -> float:
    # overflow here is the divergence signal, reported as nan, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        h = np.maximum(x @ model.w1.T + model.b1, 0.0)
        z = h @ model.w2.T + model.b2
        if not np.all(np.isfinite(z)):
            return float("nan")
        probs = _softmax_rows(z)
        picked = np.maximum(probs[np.arange(len(y)), y], PROB_FLOOR)
        return float(np.mean(-np.log(picked)))


def train(
    data_train: list[LabeledExample],
    data_val: list[LabeledExample],
    config: TrainConfig,
    hidden_dim: int = HIDDEN_DIM,
) -> ClassifierModel:
    """Mini-batch gradient descent with early stopping on validation loss.

    Weights start from scaled-uniform initialization (+-sqrt(6/(fan_in +
    fan_out))) drawn from a generator seeded by config.seed; the same
    stream shuffles the data each epoch. The parameters from the epoch
    with the lowest validation mean loss are retained, and training stops
    after `patience` epochs without improvement.
    """
    x_train, y_train = _as_matrix(data_train, "training")
    x_val, y_val = _as_matrix(data_val, "validation")
    if x_train.shape[1] != x_val.shape[1]:
        raise ValueError("training and validation feature dimensions differ")

    in_dim = x_train.shape[1]
    rng = np.random.default_rng(config.seed)
    lim1 = np.sqrt(6.0 / (in_dim + hidden_dim))
    lim2 = np.sqrt(6.0 / (hidden_dim + N_CLASSES))
    model = ClassifierModel(
        w1=rng.uniform(-lim1, lim1, size=(hidden_dim, in_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-lim2, lim2, size=(N_CLASSES, hidden_dim)),
        b2=np.zeros(N_CLASSES),
    )

    n = len(x_train)
    onehot = np.zeros((n, N_CLASSES), dtype=np.float64)
    onehot[np.arange(n), y_train] = 1.0

    train_hist = [_mean_loss(model, x_train, y_train)]
    val_hist = [_mean_loss(model, x_val, y_val)]
    best_val = val_hist[0]
    best = _snapshot(model)
    epochs_without_improvement = 0
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = x_train[idx]
            with np.errstate(over="ignore", invalid="ignore"):
                pre = xb @ model.w1.T + model.b1
                h = np.maximum(pre, 0.0)
                z = h @ model.w2.T + model.b2
            if not np.all(np.isfinite(z)):
                raise TrainingDivergenceError(epoch)
            probs = _softmax_rows(z)
            delta = (probs - onehot[idx]) / len(idx)
            g_w2 = delta.T @ h
            g_b2 = delta.sum(axis=0)
            d_h = delta @ model.w2
            d_pre = np.where(pre > 0.0, d_h, 0.0)
            g_w1 = d_pre.T @ xb
            g_b1 = d_pre.sum(axis=0)
            model.w1 -= config.learning_rate * g_w1
            model.b1 -= config.learning_rate * g_b1
            model.w2 -= config.learning_rate * g_w2
            model.b2 -= config.learning_rate * g_b2

        epochs_run = epoch
        train_loss = _mean_loss(model, x_train, y_train)
        val_loss = _mean_loss(model, x_val, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergenceError(epoch)
        train_hist.append(train_loss)
        val_hist.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best = _snapshot(model)
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= config.patience:
                break

    return ClassifierModel(
        w1=best[0], b1=best[1], w2=best[2], b2=best[3],
        meta=TrainingMeta(
            seed=config.seed,
            epochs_run=epochs_run,
            final_val_loss=best_val,
            train_loss_history=train_hist,
            val_loss_history=val_hist,
        ),
    )


def _snapshot(model: ClassifierModel):
    return (model.w1.copy(), model.b1.copy(), model.w2.copy(), model.b2.copy())


def accuracy(model: ClassifierModel, examples) -> float:
    """Fraction of examples whose argmax probability matches the label."""
    x, y = _as_matrix(list(examples), "evaluation")
    h = np.maximum(x @ model.w1.T + model.b1, 0.0)
    z = h @ model.w2.T + model.b2
    return float(np.mean(z.argmax(axis=1) == y))


_MODEL_HEADER_RE = re.compile(r"^# patchfuse-model v1 in=(\d+)$")
_META_RE = re.compile(
    r"^meta seed=(-?\d+) epochs=(\d+) val_loss=([-+0-9.eE]+)$"
)


def save_model(model: ClassifierModel) -> bytes:
    """Serialize to the versioned text format; 17 significant digits per value."""
    lines = [f"# patchfuse-model v1 in={model.in_dim}"]
    if model.meta is not None:
        lines.append(
            f"meta seed={model.meta.seed} epochs={model.meta.epochs_run} "
            f"val_loss={model.meta.final_val_loss:.16e}"
        )
    for name, arr in (("w1", model.w1), ("b1", model.b1), ("w2", model.w2), ("b2", model.b2)):
        mat = arr if arr.ndim == 2 else arr[None, :]
        dims = f"{arr.shape[0]} {arr.shape[1]}" if arr.ndim == 2 else f"{arr.shape[0]}"
        lines.append(f"{name} {dims}")
        for row in mat:
            lines.append(" ".join(f"{v:.16e}" for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def load_model(data: bytes) -> ClassifierModel:
    """Parse save_model output; load(save(m)) reproduces m bit-for-bit."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"model file is not ASCII: {exc}") from None
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or not (m := _MODEL_HEADER_RE.match(lines[0])):
        raise ModelFormatError(
            "missing or malformed header (expected '# patchfuse-model v1 in=<n>')"
        )
    in_dim = int(m.group(1))
    pos = 1
    meta = None
    if pos < len(lines) and lines[pos].startswith("meta "):
        mm = _META_RE.match(lines[pos])
        if not mm:
            raise ModelFormatError(f"malformed meta line: {lines[pos]!r}")
        meta = TrainingMeta(
            seed=int(mm.group(1)),
            epochs_run=int(mm.group(2)),
            final_val_loss=float(mm.group(3)),
        )
        pos += 1

    arrays = {}
    for name, want_2d in (("w1", True), ("b1", False), ("w2", True), ("b2", False)):
        if pos >= len(lines):
            raise ModelFormatError(f"missing parameter block {name!r}")
        header = lines[pos].split()
        if header[0] != name:
            raise ModelFormatError(f"expected block {name!r}, found {lines[pos]!r}")
        try:
            dims = [int(t) for t in header[1:]]
        except ValueError:
            raise ModelFormatError(f"malformed block header {lines[pos]!r}") from None
        if len(dims) != (2 if want_2d else 1) or any(d < 1 for d in dims):
            raise ModelFormatError(f"malformed block header {lines[pos]!r}")
        pos += 1
        n_rows = dims[0] if want_2d else 1
        n_cols = dims[1] if want_2d else dims[0]
        rows = []
        for _ in range(n_rows):
            if pos >= len(lines):
                raise ModelFormatError(f"truncated block {name!r}")
            tokens = lines[pos].split()
            if len(tokens) != n_cols:
                raise ModelFormatError(
                    f"block {name!r}: expected {n_cols} values per row, found {len(tokens)}"
                )
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise ModelFormatError(f"non-numeric token in block {name!r}") from None
            pos += 1
        arr = np.array(rows, dtype=np.float64)
        arrays[name] = arr if want_2d else arr[0]
    if pos != len(lines):
        raise ModelFormatError(f"trailing content after parameter blocks (line {pos + 1})")

    if arrays["w1"].shape[1] != in_dim:
        raise ModelFormatError(
            f"header says in={in_dim} but w1 has {arrays['w1'].shape[1]} columns"
        )
    if arrays["w2"].shape[1] != arrays["w1"].shape[0]:
        raise ModelFormatError("w2 columns do not match hidden dimension")
    try:
        return ClassifierModel(meta=meta, **arrays)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
