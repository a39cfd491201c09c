"""The fast classifier: hashed n-gram embeddings feeding a tiny MLP.

A sentence embeds as the mean of the embedding-table rows addressed by
its gram buckets; one hidden layer of 64 with ReLU feeds four sigmoid
outputs, one per language in the fixed order (da, nb, nn, sv). A
language is predicted when its probability reaches the decision
threshold; when every output stays below it, the sentence falls back
to `other`.

Training is plain minibatch gradient descent (momentum on the dense
head only) on the mean binary cross-entropy of the four outputs.
Weights are stored as float32; training and loss accumulation run in
float64 so the analytic gradients verify against finite differences.
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Dataset, LabelSet, Language
from .features import HIDDEN_SIZE, N_OUTPUTS, FeaturizerConfig, featurize

logger = logging.getLogger(__name__)

OUTPUT_ORDER: tuple[Language, ...] = (Language.DA, Language.NB, Language.NN, Language.SV)
_OUTPUT_INDEX = {lang: i for i, lang in enumerate(OUTPUT_ORDER)}

MODEL_MAGIC = b"SLFX"
MODEL_VERSION = 1


class ModelFormatError(RuntimeError):
    """A model file is malformed, truncated, or from another version."""


class TrainingError(RuntimeError):
    """Training hit a non-recoverable numeric condition."""


@dataclass
class FastModel:
    """Immutable trained classifier; safe to share across threads."""

    featurizer: FeaturizerConfig
    embeddings: np.ndarray  # (bucket_count, embed_dim) float32
    w1: np.ndarray  # (64, embed_dim)
    b1: np.ndarray  # (64,)
    w2: np.ndarray  # (4, 64)
    b2: np.ndarray  # (4,)
    threshold: float = 0.5

    def __post_init__(self) -> None:
        dim = self.featurizer.embed_dim
        expected = {
            "embeddings": (self.featurizer.bucket_count, dim),
            "w1": (HIDDEN_SIZE, dim),
            "b1": (HIDDEN_SIZE,),
            "w2": (N_OUTPUTS, HIDDEN_SIZE),
            "b2": (N_OUTPUTS,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0,1), got {self.threshold}")

    def head_parameter_count(self) -> int:
        """Dense-head parameters; the embedding table is not counted."""
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size


def head_parameter_count(cfg: FeaturizerConfig) -> int:
    """Head size implied by a featurizer config, without building a model."""
    dim = cfg.embed_dim
    return HIDDEN_SIZE * dim + HIDDEN_SIZE + N_OUTPUTS * HIDDEN_SIZE + N_OUTPUTS


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _embed_one(table: np.ndarray, ids: np.ndarray) -> np.ndarray:
    if ids.size == 0:
        return np.zeros(table.shape[1], dtype=np.float64)
    return table[ids].mean(axis=0, dtype=np.float64)


def forward(model: FastModel, text: str) -> np.ndarray:
    """Probabilities for (da, nb, nn, sv); empty text uses the zero embedding."""
    ids = featurize(text, model.featurizer)
    e = _embed_one(model.embeddings, ids)
    h = np.maximum(model.w1 @ e + model.b1, 0.0)
    p = _sigmoid(model.w2 @ h + model.b2)
    # Keep the contract of strictly open (0,1) even where float64
    # sigmoid saturates.
    return np.clip(p, 1e-15, 1.0 - 1e-15)


def predict(model: FastModel, text: str) -> LabelSet:
    """Languages whose probability reaches the threshold; `other` if none do."""
    p = forward(model, text)
    chosen = [OUTPUT_ORDER[i] for i in range(N_OUTPUTS) if p[i] >= model.threshold]
    if not chosen:
        return LabelSet.of(Language.OTHER)
    return LabelSet(frozenset(chosen))


def predict_top1(model: FastModel, text: str) -> Language:
    """Single-label reduction: the most probable language, or `other`
    when everything is below the threshold."""
    p = forward(model, text)
    if float(p.max()) >= model.threshold:
        return OUTPUT_ORDER[int(p.argmax())]
    return Language.OTHER


def targets_for(labels: LabelSet) -> np.ndarray:
    """0/1 target vector; `other` maps to all zeros."""
    y = np.zeros(N_OUTPUTS, dtype=np.float64)
    for lang in labels:
        if lang != Language.OTHER:
            y[_OUTPUT_INDEX[lang]] = 1.0
    return y


# ----------------------------------------------------------------------
# Training internals (float64 throughout)


@dataclass
class _Params:
    emb: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def copy(self) -> "_Params":
        return _Params(*(a.copy() for a in (self.emb, self.w1, self.b1, self.w2, self.b2)))


def _init_params(fcfg: FeaturizerConfig, rng: np.random.Generator) -> _Params:
    dim = fcfg.embed_dim
    return _Params(
        emb=rng.uniform(-1.0 / dim, 1.0 / dim, size=(fcfg.bucket_count, dim)),
        w1=rng.uniform(-1.0, 1.0, size=(HIDDEN_SIZE, dim)) / np.sqrt(dim),
        b1=np.zeros(HIDDEN_SIZE),
        w2=rng.uniform(-1.0, 1.0, size=(N_OUTPUTS, HIDDEN_SIZE)) / np.sqrt(HIDDEN_SIZE),
        b2=np.zeros(N_OUTPUTS),
    )


def _batch_embed(table: np.ndarray, feats: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([_embed_one(table, ids) for ids in feats])


def _bce_from_logits(z: np.ndarray, y: np.ndarray) -> float:
    # Stable elementwise form of -[y log p + (1-y) log(1-p)].
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(losses.mean())


def _loss(params: _Params, feats: Sequence[np.ndarray], y: np.ndarray) -> float:
    e = _batch_embed(params.emb, feats)
    h = np.maximum(e @ params.w1.T + params.b1, 0.0)
    z2 = h @ params.w2.T + params.b2
    return _bce_from_logits(z2, y)


def _backprop(params: _Params, feats: Sequence[np.ndarray], y: np.ndarray):
    """Loss plus gradients; the embedding gradient comes back per-sample
    as dE rows (the sparse form trainers apply directly)."""
    e = _batch_embed(params.emb, feats)
    z1 = e @ params.w1.T + params.b1
    h = np.maximum(z1, 0.0)
    z2 = h @ params.w2.T + params.b2
    loss = _bce_from_logits(z2, y)

    dz2 = (_sigmoid(z2) - y) / z2.size
    gw2 = dz2.T @ h
    gb2 = dz2.sum(axis=0)
    dh = dz2 @ params.w2
    dz1 = dh * (z1 > 0)
    gw1 = dz1.T @ e
    gb1 = dz1.sum(axis=0)
    de = dz1 @ params.w1
    return loss, gw1, gb1, gw2, gb2, de


def _dense_embedding_grad(
    shape: tuple[int, int], feats: Sequence[np.ndarray], de: np.ndarray
) -> np.ndarray:
    g = np.zeros(shape)
    for i, ids in enumerate(feats):
        if ids.size:
            np.add.at(g, ids, de[i] / ids.size)
    return g


def loss_and_grads(params: _Params, feats: Sequence[np.ndarray], y: np.ndarray):
    """Mean BCE and dense gradients for every parameter array."""
    loss, gw1, gb1, gw2, gb2, de = _backprop(params, feats, y)
    gemb = _dense_embedding_grad(params.emb.shape, feats, de)
    return loss, _Params(gemb, gw1, gb1, gw2, gb2)


SELECTION_METRICS = ("exact_match", "loss")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.5
    momentum: float = 0.9
    seed: int = 42
    eval_interval: int = 200
    patience: int = 20
    selection_metric: str = "exact_match"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1 or self.eval_interval < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size, eval_interval and patience must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.selection_metric not in SELECTION_METRICS:
            raise ValueError(f"selection_metric must be one of {SELECTION_METRICS}")


@dataclass
class EvalPoint:
    step: int
    epoch: int
    train_loss: float
    metric: float


@dataclass
class TrainResult:
    model: FastModel
    history: list[EvalPoint]
    initial_loss: float
    epoch_losses: list[float]
    best_step: int
    best_metric: float


def _predicted_sets(probs: np.ndarray, threshold: float) -> list[LabelSet]:
    sets = []
    accept = probs >= threshold
    for row in accept:
        langs = [OUTPUT_ORDER[i] for i in range(N_OUTPUTS) if row[i]]
        sets.append(LabelSet(frozenset(langs)) if langs else LabelSet.of(Language.OTHER))
    return sets


def _validation_metric(
    params: _Params,
    feats: Sequence[np.ndarray],
    y: np.ndarray,
    gold: Sequence[LabelSet],
    which: str,
    threshold: float,
) -> float:
    if which == "loss":
        return -_loss(params, feats, y)
    e = _batch_embed(params.emb, feats)
    h = np.maximum(e @ params.w1.T + params.b1, 0.0)
    probs = _sigmoid(h @ params.w2.T + params.b2)
    predicted = _predicted_sets(probs, threshold)
    hits = sum(1 for p, g in zip(predicted, gold) if p == g)
    return hits / len(gold)


def _to_model(params: _Params, fcfg: FeaturizerConfig, threshold: float) -> FastModel:
    return FastModel(
        featurizer=fcfg,
        embeddings=params.emb.astype(np.float32),
        w1=params.w1.astype(np.float32),
        b1=params.b1.astype(np.float32),
        w2=params.w2.astype(np.float32),
        b2=params.b2.astype(np.float32),
        threshold=threshold,
    )


def train(
    train_set: Dataset,
    valid_set: Dataset,
    fcfg: FeaturizerConfig,
    tcfg: TrainConfig,
    threshold: float = 0.5,
) -> TrainResult:
    """Train a FastModel; deterministic given the config seed.

    Every ``eval_interval`` optimizer steps the selection metric is
    computed on ``valid_set`` and the best-scoring checkpoint is kept;
    training stops early after ``patience`` evaluations without
    improvement. Texts are featurized as-is: normalize beforehand if
    the pipeline calls for it.
    """
    if len(train_set) == 0:
        raise TrainingError("training set is empty")

    feats = [featurize(item.text, fcfg) for item in train_set]
    y = np.stack([targets_for(item.labels) for item in train_set])
    vfeats = [featurize(item.text, fcfg) for item in valid_set]
    vy = np.stack([targets_for(item.labels) for item in valid_set]) if len(valid_set) else np.zeros((0, N_OUTPUTS))
    vgold = [item.labels for item in valid_set]

    rng = np.random.default_rng(tcfg.seed)
    params = _init_params(fcfg, rng)
    velocity = [np.zeros_like(a) for a in (params.w1, params.b1, params.w2, params.b2)]

    n = len(train_set)
    initial_loss = _loss(params, feats, y)
    logger.info("training on %d items (%d validation), initial loss %.4f", n, len(valid_set), initial_loss)

    history: list[EvalPoint] = []
    best_params = params.copy()
    best_metric = -np.inf
    best_step = 0
    evals_without_improvement = 0
    step = 0
    loss_since_eval: list[float] = []
    epoch_losses: list[float] = []
    stop = False

    def run_eval(epoch: int) -> None:
        nonlocal best_metric, best_step, best_params, evals_without_improvement
        if not len(valid_set):
            return
        metric = _validation_metric(params, vfeats, vy, vgold, tcfg.selection_metric, threshold)
        train_loss = float(np.mean(loss_since_eval)) if loss_since_eval else initial_loss
        loss_since_eval.clear()
        history.append(EvalPoint(step=step, epoch=epoch, train_loss=train_loss, metric=metric))
        if metric > best_metric:
            best_metric = metric
            best_step = step
            best_params = params.copy()
            evals_without_improvement = 0
        else:
            evals_without_improvement += 1

    for epoch in range(tcfg.epochs):
        order = rng.permutation(n)
        epoch_loss: list[float] = []
        for start in range(0, n, tcfg.batch_size):
            batch = order[start : start + tcfg.batch_size]
            bfeats = [feats[i] for i in batch]
            by = y[batch]
            loss, gw1, gb1, gw2, gb2, de = _backprop(params, bfeats, by)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at step {step} (epoch {epoch}); "
                    "lower the learning rate or check the data"
                )
            epoch_loss.append(loss)
            loss_since_eval.append(loss)

            lr = tcfg.learning_rate
            grads = (gw1, gb1, gw2, gb2)
            arrays = (params.w1, params.b1, params.w2, params.b2)
            for v, g, a in zip(velocity, grads, arrays):
                v *= tcfg.momentum
                v -= lr * g
                a += v
            # Sparse embedding update: only touched rows move (plain SGD,
            # no momentum, which keeps the update cost proportional to
            # the batch's gram count).
            lengths = [ids.size for ids in bfeats]
            nonempty = [ids for ids in bfeats if ids.size]
            if nonempty:
                scaled = np.repeat(
                    de / np.maximum(np.array(lengths), 1)[:, None],
                    lengths,
                    axis=0,
                )
                np.add.at(params.emb, np.concatenate(nonempty), -lr * scaled)

            step += 1
            if step % tcfg.eval_interval == 0:
                run_eval(epoch)
                if evals_without_improvement >= tcfg.patience:
                    logger.info("early stop at step %d (no improvement in %d evals)", step, tcfg.patience)
                    stop = True
                    break
        epoch_losses.append(float(np.mean(epoch_loss)) if epoch_loss else float("nan"))
        if stop:
            break

    if loss_since_eval or not history:
        run_eval(epoch)
    if not len(valid_set):
        best_params, best_metric, best_step = params, float("nan"), step

    model = _to_model(best_params, fcfg, threshold)
    return TrainResult(
        model=model,
        history=history,
        initial_loss=initial_loss,
        epoch_losses=epoch_losses,
        best_step=best_step,
        best_metric=best_metric,
    )


# ----------------------------------------------------------------------
# Gradient verification


def gradient_check(
    fcfg: FeaturizerConfig,
    batch: Sequence,
    seed: int = 0,
    step: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Only small models are accepted (bucket_count <= 64, embed_dim <= 8)
    so the sweep stays exact and fast. Parameters are redrawn until no
    hidden pre-activation sits within 8*step of the ReLU kink, which
    keeps the finite differences valid. The relative error is measured
    per parameter block, normalized by the block's largest gradient
    magnitude.
    """
    if fcfg.bucket_count > 64 or fcfg.embed_dim > 8:
        raise ValueError("gradient_check needs a small model (bucket_count <= 64, embed_dim <= 8)")
    texts = [item.text for item in batch]
    labels = [item.labels for item in batch]
    feats = [featurize(t, fcfg) for t in texts]
    y = np.stack([targets_for(l) for l in labels])

    rng = np.random.default_rng(seed)
    margin = 8.0 * step
    for _ in range(1000):
        params = _Params(
            emb=rng.uniform(-1, 1, size=(fcfg.bucket_count, fcfg.embed_dim)),
            w1=rng.uniform(-1, 1, size=(HIDDEN_SIZE, fcfg.embed_dim)),
            b1=rng.uniform(-1, 1, size=HIDDEN_SIZE),
            w2=rng.uniform(-1, 1, size=(N_OUTPUTS, HIDDEN_SIZE)),
            b2=rng.uniform(-1, 1, size=N_OUTPUTS),
        )
        e = _batch_embed(params.emb, feats)
        z1 = e @ params.w1.T + params.b1
        if np.abs(z1).min() > margin:
            break
    else:  # pragma: no cover - would need absurdly unlucky sampling
        raise RuntimeError("could not sample parameters clear of the ReLU kink")

    _, analytic = loss_and_grads(params, feats, y)
    nonempty = [ids for ids in feats if ids.size]
    touched = np.unique(np.concatenate(nonempty)) if nonempty else np.array([], dtype=np.int64)

    worst = 0.0
    for name in ("emb", "w1", "b1", "w2", "b2"):
        arr = getattr(params, name)
        ana = getattr(analytic, name)
        if name == "emb":
            indices = [(int(r), c) for r in touched for c in range(arr.shape[1])]
        else:
            indices = list(np.ndindex(arr.shape))
        num = np.zeros(len(indices))
        for k, idx in enumerate(indices):
            original = arr[idx]
            arr[idx] = original + step
            up = _loss(params, feats, y)
            arr[idx] = original - step
            down = _loss(params, feats, y)
            arr[idx] = original
            num[k] = (up - down) / (2.0 * step)
        ana_flat = np.array([ana[idx] for idx in indices])
        denom = max(np.abs(ana_flat).max(initial=0.0), np.abs(num).max(initial=0.0), 1e-8)
        worst = max(worst, float(np.abs(ana_flat - num).max(initial=0.0) / denom))
    return worst


# ----------------------------------------------------------------------
# Persistence


def save_model(model: FastModel, path: Path | str) -> None:
    """Write the binary model format (magic, version, JSON header,
    float32 arrays, trailing CRC32)."""
    header = {
        "featurizer": {
            "min_n": model.featurizer.min_n,
            "max_n": model.featurizer.max_n,
            "bucket_count": model.featurizer.bucket_count,
            "include_word_unigrams": model.featurizer.include_word_unigrams,
            "embed_dim": model.featurizer.embed_dim,
        },
        "hidden_size": HIDDEN_SIZE,
        "threshold": model.threshold,
        "label_order": [lang.value for lang in OUTPUT_ORDER],
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    buf = bytearray()
    buf += MODEL_MAGIC
    buf += struct.pack("<H", MODEL_VERSION)
    buf += struct.pack("<I", len(header_bytes))
    buf += header_bytes
    for arr in (model.embeddings, model.w1, model.b1, model.w2, model.b2):
        buf += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


def load_model(path: Path | str) -> FastModel:
    """Read a model file; forward outputs are bit-identical to the saved model."""
    data = Path(path).read_bytes()
    if len(data) < 4 + 2 + 4 + 4:
        raise ModelFormatError(f"{path}: file too short to be a model ({len(data)} bytes)")

    magic = data[:4]
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic: expected {MODEL_MAGIC!r}, found {magic!r}")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported version: expected {MODEL_VERSION}, found {version}"
        )

    body, tail = data[:-4], data[-4:]
    (stored_crc,) = struct.unpack("<I", tail)
    actual_crc = zlib.crc32(body) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ModelFormatError(
            f"{path}: checksum mismatch: file says {stored_crc:#010x}, "
            f"content hashes to {actual_crc:#010x}"
        )

    (header_len,) = struct.unpack_from("<I", data, 6)
    header_start = 10
    header_end = header_start + header_len
    try:
        header = json.loads(data[header_start:header_end].decode("utf-8"))
        fcfg = FeaturizerConfig(**header["featurizer"])
        threshold = header["threshold"]
        label_order = header["label_order"]
        hidden = header["hidden_size"]
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"{path}: bad header: {e}") from None
    if hidden != HIDDEN_SIZE:
        raise ModelFormatError(f"{path}: unsupported hidden size {hidden} (expected {HIDDEN_SIZE})")
    if label_order != [lang.value for lang in OUTPUT_ORDER]:
        raise ModelFormatError(f"{path}: unexpected label order {label_order}")

    dim = fcfg.embed_dim
    shapes = [
        (fcfg.bucket_count, dim),
        (HIDDEN_SIZE, dim),
        (HIDDEN_SIZE,),
        (N_OUTPUTS, HIDDEN_SIZE),
        (N_OUTPUTS,),
    ]
    expected_bytes = sum(4 * int(np.prod(s)) for s in shapes)
    if len(body) - header_end != expected_bytes:
        raise ModelFormatError(
            f"{path}: array section is {len(body) - header_end} bytes, expected {expected_bytes}"
        )
    arrays = []
    offset = header_end
    for shape in shapes:
        count = int(np.prod(shape))
        arrays.append(
            np.frombuffer(body, dtype="<f4", count=count, offset=offset).reshape(shape).copy()
        )
        offset += 4 * count
    emb, w1, b1, w2, b2 = arrays
    return FastModel(fcfg, emb, w1, b1, w2, b2, threshold=threshold)
