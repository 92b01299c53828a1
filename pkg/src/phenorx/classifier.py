"""Residual convolutional multitask classifier over encoded prescriptions.

One shared convolutional trunk reads the 840-entry prescription vector and
seven softmax heads predict the phenotype fields (primary/secondary/tertiary
condition, sex, age, month, year).  A 1-nearest-neighbour and a
majority-class baseline are included for reference comparisons.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus.labels import HEAD_NAMES, LabelSpace
from .nn import (
    Adam,
    Parameter,
    Tensor,
    clip_global_norm,
    conv1d,
    cross_entropy,
    dense,
    global_avg_pool,
    load_checkpoint,
    max_pool1d,
    no_grad,
    relu,
    save_checkpoint,
    softmax,
    xavier_uniform,
    zero_grad,
)

__all__ = [
    "TRAIN_FRACTION",
    "ClassifierError",
    "ClassifierConfig",
    "MultitaskPrediction",
    "EpochStats",
    "EvalReport",
    "Classifier",
    "build",
    "parameter_count",
    "split_train_test",
    "compute_loss",
    "train",
    "predict",
    "evaluate",
    "confusion_matrix",
    "knn_predict",
    "knn_baseline",
    "majority_baseline",
    "save",
    "load",
    "write_evaluation_csv",
    "write_confusion_csv",
]

# Share of the corpus assigned to training by split_train_test.
TRAIN_FRACTION = 42.0 / 42.958

_CHECKPOINT_KIND = "classifier/1"


class ClassifierError(ValueError):
    """Invalid classifier configuration, input, or label."""


@dataclass(frozen=True)
class ClassifierConfig:
    """Architecture and training hyperparameters.

    The first layer runs parallel filter groups over the shared input; their
    outputs are concatenated channel-wise before the second convolution.
    Each residual block is conv-relu-conv plus an identity shortcut followed
    by relu, with /2 max pooling between consecutive blocks.
    """

    head_sizes: tuple[int, ...]
    filter_groups: tuple[int, ...] = (2, 3, 8)
    second_filters: int = 14
    residual_blocks: int = 2
    first_kernel: int = 9
    second_kernel: int = 5
    residual_kernel: int = 3
    trunk_width: int = 128
    input_length: int = 840
    head_weights: tuple[float, ...] = (1.0,) * 7
    learning_rate: float = 1e-3
    lr_halflife: int = 0  # halve the learning rate every this many epochs (0 = constant)
    batch_size: int = 256
    clip_norm: float = 5.0
    calibrate_init: bool = True

    @classmethod
    def desk(cls, label_space: LabelSpace, **overrides) -> "ClassifierConfig":
        """Head sizes derived from a generated corpus's label space."""
        return cls(head_sizes=label_space.head_sizes, **overrides)

    @classmethod
    def paper(cls, **overrides) -> "ClassifierConfig":
        """Full-scale preset with the published head sizes."""
        return cls(head_sizes=(909, 909, 909, 2, 105, 12, 10), **overrides)

    def validate(self) -> "ClassifierConfig":
        if len(self.head_sizes) != len(HEAD_NAMES):
            raise ClassifierError(
                f"expected {len(HEAD_NAMES)} heads, got {len(self.head_sizes)}"
            )
        if len(self.head_weights) != len(self.head_sizes):
            raise ClassifierError(
                f"head_weights length {len(self.head_weights)} != "
                f"head count {len(self.head_sizes)}"
            )
        if any(h < 2 for h in self.head_sizes):
            raise ClassifierError(f"every head needs >= 2 classes: {self.head_sizes}")
        if any(w < 0 for w in self.head_weights):
            raise ClassifierError(f"head weights must be >= 0: {self.head_weights}")
        if not self.filter_groups or any(g < 1 for g in self.filter_groups):
            raise ClassifierError(f"invalid filter groups: {self.filter_groups}")
        if self.residual_blocks < 1:
            raise ClassifierError("need at least one residual block")
        if min(self.second_filters, self.trunk_width, self.input_length) < 1:
            raise ClassifierError("layer widths must be positive")
        for k in (self.first_kernel, self.second_kernel, self.residual_kernel):
            if k < 1 or k % 2 == 0:
                raise ClassifierError(f"kernel sizes must be odd and positive: {k}")
        if self.batch_size < 1:
            raise ClassifierError("batch_size must be positive")
        return self


@dataclass(frozen=True)
class MultitaskPrediction:
    """One probability vector per head; each sums to 1 within 1e-6."""

    heads: tuple[np.ndarray, ...]

    def argmax(self) -> tuple[int, ...]:
        """Most probable class per head (ties resolve to the lowest index)."""
        return tuple(int(np.argmax(h)) for h in self.heads)


@dataclass(frozen=True)
class EpochStats:
    """Loss and test-set accuracy recorded after one training epoch."""

    epoch: int
    train_loss: float
    test_loss: float
    head_accuracy: tuple[float, ...]


@dataclass(frozen=True)
class EvalReport:
    """Per-head accuracy and confusion counts over one evaluation set."""

    accuracy: tuple[float, ...]
    confusion: tuple[np.ndarray, ...]
    n_examples: int


class Classifier:
    """The trunk-plus-heads network; parameters are named float32 tensors."""

    def __init__(self, config: ClassifierConfig, params: dict[str, Parameter]):
        self.config = config
        self.params = params

    def parameters(self) -> list[Parameter]:
        return list(self.params.values())

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.parameters())

    def _forward(
        self, x: Tensor, taps: dict[str, np.ndarray] | None = None
    ) -> list[Tensor]:
        """Batched forward pass: x (batch, 1, length) -> per-head probabilities.

        When `taps` is given, each stacked layer's pre-activation is stored
        under its parameter stem (for variance calibration).
        """
        cfg = self.config
        p = self.params

        def tap(name: str, t: Tensor) -> Tensor:
            if taps is not None:
                taps[name] = t.data
            return t

        groups = [
            relu(tap(f"group{i}", conv1d(x, p[f"group{i}.w"], p[f"group{i}.b"])))
            for i in range(len(cfg.filter_groups))
        ]
        h = groups[0] if len(groups) == 1 else Tensor.concat(groups, axis=1)
        h = relu(tap("conv2", conv1d(h, p["conv2.w"], p["conv2.b"])))
        for b in range(cfg.residual_blocks):
            if b > 0:
                h = max_pool1d(h, 2)
            inner = relu(tap(f"res{b}a", conv1d(h, p[f"res{b}a.w"], p[f"res{b}a.b"])))
            inner = tap(f"res{b}b", conv1d(inner, p[f"res{b}b.w"], p[f"res{b}b.b"]))
            h = relu(inner + h)
        trunk = relu(tap("trunk", dense(global_avg_pool(h), p["trunk.w"], p["trunk.b"])))
        return [
            softmax(dense(trunk, p[f"head{i}.w"], p[f"head{i}.b"]))
            for i in range(len(cfg.head_sizes))
        ]

    def calibrate(self, vectors: np.ndarray) -> None:
        """Rescale stacked layers so pre-activations have unit variance.

        Sequential one-shot variance calibration (LSUV-style) on a sample
        batch: sparse inputs leave averaged pooled features orders of
        magnitude below Xavier's unit-variance assumption, which stalls
        optimization. Head weights are left untouched so a fresh model's
        per-head loss stays at ln(head size).
        """
        x = np.asarray(vectors, dtype=np.float32)
        if x.ndim != 2 or x.shape[1] != self.config.input_length:
            raise ClassifierError(
                f"expected vectors of shape (n, {self.config.input_length}), got {x.shape}"
            )
        xt = Tensor(x.reshape(x.shape[0], 1, -1))
        stems = [f"group{i}" for i in range(len(self.config.filter_groups))]
        stems += ["conv2"]
        for b in range(self.config.residual_blocks):
            stems += [f"res{b}a", f"res{b}b"]
        stems += ["trunk"]
        for _ in range(2):
            for stem in stems:
                taps: dict[str, np.ndarray] = {}
                with no_grad():
                    self._forward(xt, taps=taps)
                std = float(np.std(taps[stem]))
                if 0.0 < std and abs(std - 1.0) > 1e-3:
                    self.params[f"{stem}.w"].data /= np.float32(std)

    def forward(self, vector: np.ndarray) -> MultitaskPrediction:
        """Classify a single encoded prescription vector."""
        v = np.asarray(vector, dtype=np.float32)
        if v.shape != (self.config.input_length,):
            raise ClassifierError(
                f"expected input of length {self.config.input_length}, "
                f"got shape {v.shape}"
            )
        with no_grad():
            probs = self._forward(Tensor(v.reshape(1, 1, -1)))
        return MultitaskPrediction(tuple(p.data[0].copy() for p in probs))


def parameter_count(config: ClassifierConfig) -> int:
    """Closed-form parameter total for a config (weights plus biases)."""
    cfg = config.validate()
    total = sum(g * cfg.first_kernel + g for g in cfg.filter_groups)
    concat = sum(cfg.filter_groups)
    total += cfg.second_filters * concat * cfg.second_kernel + cfg.second_filters
    per_conv = (
        cfg.second_filters * cfg.second_filters * cfg.residual_kernel
        + cfg.second_filters
    )
    total += cfg.residual_blocks * 2 * per_conv
    total += cfg.second_filters * cfg.trunk_width + cfg.trunk_width
    total += sum(cfg.trunk_width * h + h for h in cfg.head_sizes)
    return total


def build(config: ClassifierConfig, seed: int = 0) -> Classifier:
    """Initialize a classifier with seeded Xavier-uniform weights."""
    cfg = config.validate()
    rng = np.random.default_rng(seed)
    params: dict[str, Parameter] = {}

    def add_conv(name: str, out_ch: int, in_ch: int, kernel: int) -> None:
        fan = in_ch * kernel
        params[f"{name}.w"] = Parameter(
            xavier_uniform(rng, (out_ch, in_ch, kernel), fan_in=fan, fan_out=out_ch * kernel)
        )
        params[f"{name}.b"] = Parameter(np.zeros(out_ch, dtype=np.float32))

    def add_dense(name: str, n_in: int, n_out: int) -> None:
        params[f"{name}.w"] = Parameter(xavier_uniform(rng, (n_in, n_out)))
        params[f"{name}.b"] = Parameter(np.zeros(n_out, dtype=np.float32))

    for i, g in enumerate(cfg.filter_groups):
        add_conv(f"group{i}", g, 1, cfg.first_kernel)
    add_conv("conv2", cfg.second_filters, sum(cfg.filter_groups), cfg.second_kernel)
    for b in range(cfg.residual_blocks):
        add_conv(f"res{b}a", cfg.second_filters, cfg.second_filters, cfg.residual_kernel)
        add_conv(f"res{b}b", cfg.second_filters, cfg.second_filters, cfg.residual_kernel)
    add_dense("trunk", cfg.second_filters, cfg.trunk_width)
    for i, h in enumerate(cfg.head_sizes):
        add_dense(f"head{i}", cfg.trunk_width, h)
    return Classifier(cfg, params)


def split_train_test(n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Shuffle n indices and split them TRAIN_FRACTION / remainder."""
    if n < 2:
        raise ClassifierError(f"need at least 2 examples to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(n - 1, max(1, int(round(n * TRAIN_FRACTION))))
    return perm[:n_train], perm[n_train:]


def _check_inputs(
    model: Classifier, vectors: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    cfg = model.config
    x = np.asarray(vectors, dtype=np.float32)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != cfg.input_length:
        raise ClassifierError(
            f"expected vectors of shape (n, {cfg.input_length}), got {x.shape}"
        )
    if y.shape != (x.shape[0], len(cfg.head_sizes)):
        raise ClassifierError(
            f"expected labels of shape ({x.shape[0]}, {len(cfg.head_sizes)}), "
            f"got {y.shape}"
        )
    for h, size in enumerate(cfg.head_sizes):
        lo, hi = int(y[:, h].min()), int(y[:, h].max())
        if lo < 0 or hi >= size:
            raise ClassifierError(
                f"head {HEAD_NAMES[h]!r} labels span [{lo}, {hi}] "
                f"outside range [0, {size})"
            )
    return x, y


def _batch_loss(model: Classifier, x: np.ndarray, y: np.ndarray) -> Tensor:
    probs = model._forward(Tensor(x.reshape(x.shape[0], 1, -1)))
    total: Tensor | None = None
    for h, w in enumerate(model.config.head_weights):
        if w == 0:
            continue
        term = cross_entropy(probs[h], y[:, h]) * w
        total = term if total is None else total + term
    if total is None:
        raise ClassifierError("all head weights are zero; nothing to optimize")
    return total


def compute_loss(model: Classifier, vectors: np.ndarray, labels: np.ndarray) -> float:
    """Mean multitask loss (weighted sum of per-head cross-entropies)."""
    x, y = _check_inputs(model, vectors, labels)
    if x.shape[0] == 0:
        raise ClassifierError("cannot compute loss on an empty set")
    total = 0.0
    with no_grad():
        for start in range(0, x.shape[0], 1024):
            stop = min(start + 1024, x.shape[0])
            total += _batch_loss(model, x[start:stop], y[start:stop]).item() * (stop - start)
    return total / x.shape[0]


def train(
    model: Classifier,
    vectors: np.ndarray,
    labels: np.ndarray,
    epochs: int,
    seed: int = 0,
) -> tuple[Classifier, list[EpochStats]]:
    """Optimize the multitask loss; returns the model and per-epoch stats.

    The corpus is split internally with split_train_test(seed); each epoch
    records mean training loss plus test loss and per-head test accuracy.
    Zero epochs leaves the model untouched and returns an empty curve.
    """
    x, y = _check_inputs(model, vectors, labels)
    if epochs < 0:
        raise ClassifierError(f"epochs must be >= 0, got {epochs}")
    if epochs == 0:
        return model, []
    train_idx, test_idx = split_train_test(x.shape[0], seed)
    x_train, y_train = x[train_idx], y[train_idx]
    x_test, y_test = x[test_idx], y[test_idx]

    cfg = model.config
    if cfg.calibrate_init:
        model.calibrate(x_train[: min(256, x_train.shape[0])])
    params = model.parameters()
    opt = Adam(params, lr=cfg.learning_rate)
    rng = np.random.default_rng(seed)
    curve: list[EpochStats] = []
    for epoch in range(1, epochs + 1):
        if cfg.lr_halflife > 0:
            opt.lr = cfg.learning_rate * 0.5 ** ((epoch - 1) // cfg.lr_halflife)
        order = rng.permutation(x_train.shape[0])
        running, seen = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            zero_grad(params)
            loss = _batch_loss(model, x_train[batch], y_train[batch])
            loss.backward()
            clip_global_norm(params, cfg.clip_norm)
            opt.step()
            running += loss.item() * batch.size
            seen += batch.size
        report = evaluate(model, x_test, y_test)
        curve.append(
            EpochStats(
                epoch=epoch,
                train_loss=running / seen,
                test_loss=compute_loss(model, x_test, y_test),
                head_accuracy=report.accuracy,
            )
        )
    return model, curve


def predict(model: Classifier, vectors: np.ndarray) -> np.ndarray:
    """Argmax class per head for each row; shape (n, n_heads)."""
    x = np.asarray(vectors, dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != model.config.input_length:
        raise ClassifierError(
            f"expected vectors of shape (n, {model.config.input_length}), got {x.shape}"
        )
    out = np.zeros((x.shape[0], len(model.config.head_sizes)), dtype=np.int64)
    with no_grad():
        for start in range(0, x.shape[0], 1024):
            stop = min(start + 1024, x.shape[0])
            probs = model._forward(Tensor(x[start:stop].reshape(stop - start, 1, -1)))
            for h, p in enumerate(probs):
                out[start:stop, h] = np.argmax(p.data, axis=1)
    return out


def confusion_matrix(true: np.ndarray, pred: np.ndarray, n_classes: int) -> np.ndarray:
    """Counts C[t][p] of true class t predicted as p."""
    t = np.asarray(true, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ClassifierError(f"label shape mismatch: {t.shape} vs {p.shape}")
    out = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(out, (t, p), 1)
    return out


def evaluate(model: Classifier, vectors: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Per-head accuracy and confusion matrices on a held-out set."""
    x, y = _check_inputs(model, vectors, labels)
    if x.shape[0] == 0:
        raise ClassifierError("cannot evaluate on an empty test set")
    pred = predict(model, x)
    confusions = tuple(
        confusion_matrix(y[:, h], pred[:, h], size)
        for h, size in enumerate(model.config.head_sizes)
    )
    accuracy = tuple(float(np.trace(c)) / x.shape[0] for c in confusions)
    return EvalReport(accuracy=accuracy, confusion=confusions, n_examples=x.shape[0])


def knn_predict(
    train_vectors: np.ndarray,
    train_labels: np.ndarray,
    test_vectors: np.ndarray,
    k: int = 1,
) -> np.ndarray:
    """k-nearest-neighbour labels under Euclidean distance.

    Distance ties resolve to the lowest train index; for k > 1, vote ties
    resolve to the class appearing earliest among the tied neighbours.
    """
    xtr = np.asarray(train_vectors, dtype=np.float64)
    ytr = np.asarray(train_labels, dtype=np.int64)
    xte = np.asarray(test_vectors, dtype=np.float64)
    if xtr.shape[0] == 0:
        raise ClassifierError("knn needs a non-empty train set")
    if xtr.shape[0] != ytr.shape[0]:
        raise ClassifierError(
            f"train labels ({ytr.shape[0]}) do not match vectors ({xtr.shape[0]})"
        )
    if k < 1 or k > xtr.shape[0]:
        raise ClassifierError(f"k must be in [1, {xtr.shape[0]}], got {k}")
    out = np.zeros(xte.shape[0], dtype=np.int64)
    sq_train = np.einsum("ij,ij->i", xtr, xtr)
    for start in range(0, xte.shape[0], 256):
        stop = min(start + 256, xte.shape[0])
        chunk = xte[start:stop]
        d2 = sq_train[None, :] - 2.0 * (chunk @ xtr.T)
        d2 += np.einsum("ij,ij->i", chunk, chunk)[:, None]
        if k == 1:
            out[start:stop] = ytr[np.argmin(d2, axis=1)]
        else:
            # stable sort keeps lowest-index neighbours first among ties
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            for i, row in enumerate(order):
                votes = ytr[row]
                counts = np.bincount(votes)
                best = counts.max()
                winners = {c for c in np.flatnonzero(counts == best)}
                out[start + i] = next(int(v) for v in votes if int(v) in winners)
    return out


def knn_baseline(
    train_vectors: np.ndarray,
    train_labels: np.ndarray,
    test_vectors: np.ndarray,
    test_labels: np.ndarray,
    k: int = 1,
) -> float:
    """Accuracy of the kNN predictor on one label head."""
    yte = np.asarray(test_labels, dtype=np.int64)
    if yte.shape[0] == 0:
        raise ClassifierError("cannot score an empty test set")
    pred = knn_predict(train_vectors, train_labels, test_vectors, k)
    return float(np.mean(pred == yte))


def majority_baseline(train_labels: np.ndarray, test_labels: np.ndarray) -> float:
    """Accuracy of always predicting the most frequent training class."""
    ytr = np.asarray(train_labels, dtype=np.int64)
    yte = np.asarray(test_labels, dtype=np.int64)
    if ytr.shape[0] == 0 or yte.shape[0] == 0:
        raise ClassifierError("majority baseline needs non-empty train and test sets")
    majority = int(np.argmax(np.bincount(ytr)))
    return float(np.mean(yte == majority))


def save(model: Classifier, stem: str | Path) -> Path:
    """Write the model to <stem>.json + <stem>.bin; returns the JSON path."""
    meta = {
        "kind": _CHECKPOINT_KIND,
        "config": dataclasses.asdict(model.config),
    }
    arrays = {name: p.data for name, p in model.params.items()}
    return save_checkpoint(stem, arrays, meta)


def load(stem: str | Path) -> Classifier:
    """Restore a model saved by save(); forward passes are bit-identical."""
    arrays, meta = load_checkpoint(stem)
    if meta.get("kind") != _CHECKPOINT_KIND:
        raise ClassifierError(f"not a classifier checkpoint: kind={meta.get('kind')!r}")
    raw = dict(meta["config"])
    for key in ("head_sizes", "filter_groups", "head_weights"):
        raw[key] = tuple(raw[key])
    model = build(ClassifierConfig(**raw))
    expected = set(model.params)
    if set(arrays) != expected:
        raise ClassifierError(
            f"checkpoint parameters {sorted(arrays)} do not match "
            f"architecture {sorted(expected)}"
        )
    for name, param in model.params.items():
        if arrays[name].shape != param.data.shape:
            raise ClassifierError(
                f"shape mismatch for {name}: checkpoint {arrays[name].shape} "
                f"vs architecture {param.data.shape}"
            )
        param.data = arrays[name].astype(np.float32)
    return model


def write_evaluation_csv(path: str | Path, report: EvalReport) -> Path:
    """One row per head: head name and accuracy."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["head", "accuracy", "n_examples"])
        for name, acc in zip(HEAD_NAMES, report.accuracy):
            writer.writerow([name, f"{acc:.6f}", report.n_examples])
    return path


def write_confusion_csv(
    path: str | Path, matrix: np.ndarray, class_names: Sequence[str]
) -> Path:
    """Confusion counts with true classes as rows, predicted as columns."""
    matrix = np.asarray(matrix)
    if matrix.shape != (len(class_names), len(class_names)):
        raise ClassifierError(
            f"confusion shape {matrix.shape} does not match "
            f"{len(class_names)} class names"
        )
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\predicted", *class_names])
        for name, row in zip(class_names, matrix):
            writer.writerow([name, *row.tolist()])
    return path
