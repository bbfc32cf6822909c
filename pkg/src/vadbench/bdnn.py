"""Boosted DNN reference classifier, implemented from scratch on numpy.

Each training example is a dense context window of 29 frames (9 past, 19
future) of 39-dim features, flattened to 1131 inputs. The network (two ReLU
hidden layers of 512, then 29 sigmoid outputs) predicts the speech label of
every frame in the window; at inference all predictions aimed at a frame are
averaged, so interior frames pool 29 boosted estimates. Training minimizes L1
loss with plain SGD.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class ContextSpec:
    """Asymmetric dense context window: `left` past and `right` future frames."""

    left: int = 9
    right: int = 19

    @property
    def width(self) -> int:
        return self.left + self.right + 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 512
    max_epochs: int = 50
    seed: int = 0


def expand_context_indices(num_frames: int, ctx: ContextSpec) -> np.ndarray:
    """(T, width) frame indices per window, edges replicated by clamping."""
    offsets = np.arange(-ctx.left, ctx.right + 1)
    idx = np.arange(num_frames)[:, None] + offsets[None, :]
    return np.clip(idx, 0, max(num_frames - 1, 0))


def expand_context(features: np.ndarray, ctx: ContextSpec) -> np.ndarray:
    """Flattened context windows: (T, d) features -> (T, width * d)."""
    idx = expand_context_indices(features.shape[0], ctx)
    return features[idx].reshape(features.shape[0], -1)


def window_targets(labels: np.ndarray, ctx: ContextSpec) -> np.ndarray:
    """(T, width) binary targets: the labels of each window's frames."""
    labels = np.asarray(labels)
    idx = expand_context_indices(labels.shape[0], ctx)
    return labels[idx]


class BdnnModel:
    """Fully connected ReLU network with a sigmoid multi-output head."""

    def __init__(self, feat_dim: int, ctx: ContextSpec | None = None,
                 hidden: Sequence[int] = (512, 512), seed: int = 0,
                 dtype=np.float32):
        self.feat_dim = int(feat_dim)
        self.ctx = ctx or ContextSpec()
        self.hidden = tuple(int(h) for h in hidden)
        self.dtype = np.dtype(dtype)
        dims = [self.feat_dim * self.ctx.width, *self.hidden, self.ctx.width]
        self.dims = dims
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))  # Glorot uniform
            self.weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)).astype(self.dtype))
            self.biases.append(np.zeros(fan_out, dtype=self.dtype))

    def astype(self, dtype) -> "BdnnModel":
        clone = BdnnModel.__new__(BdnnModel)
        clone.feat_dim = self.feat_dim
        clone.ctx = self.ctx
        clone.hidden = self.hidden
        clone.dtype = np.dtype(dtype)
        clone.dims = list(self.dims)
        clone.weights = [w.astype(dtype) for w in self.weights]
        clone.biases = [b.astype(dtype) for b in self.biases]
        return clone

    def forward(self, x: np.ndarray, keep_cache: bool = False):
        """Window posteriors (N, width); optionally the layer cache for backprop."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        activations = [x]
        pre = []
        a = x
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            pre.append(z)
            a = np.maximum(z, 0.0)
            activations.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        posterior = expit(logits)
        if keep_cache:
            return posterior, (activations, pre)
        return posterior

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """Mean L1 loss over all output nodes, with full-parameter gradients.

        d|p - y|/dp is sign(p - y) with subgradient 0 at zero residual.
        """
        y = np.ascontiguousarray(y, dtype=self.dtype)
        posterior, (activations, pre) = self.forward(x, keep_cache=True)
        residual = posterior - y
        loss = float(np.mean(np.abs(residual)))
        upstream = np.sign(residual) / self.dtype.type(residual.size)
        delta = upstream * posterior * (1.0 - posterior)  # through the sigmoid
        grads_w: list[np.ndarray] = [None] * len(self.weights)
        grads_b: list[np.ndarray] = [None] * len(self.weights)
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = delta @ self.weights[layer].T
                delta = delta * (pre[layer - 1] > 0)
        return loss, grads_w, grads_b

    def sgd_step(self, grads_w, grads_b, learning_rate: float) -> None:
        lr = self.dtype.type(learning_rate)
        for w, b, gw, gb in zip(self.weights, self.biases, grads_w, grads_b):
            w -= lr * gw
            b -= lr * gb


def predict_frames(model: BdnnModel, features: np.ndarray) -> np.ndarray:
    """Boosted per-frame posteriors for one utterance.

    Output node s of the window at position t predicts frame t - left + s;
    every in-range prediction aimed at a frame is averaged. Interior frames
    collect exactly `width` predictions, frames near the edges fewer.
    """
    T = features.shape[0]
    if T == 0:
        return np.zeros(0, dtype=np.float64)
    windows = expand_context(np.asarray(features, dtype=model.dtype), model.ctx)
    posterior = np.asarray(model.forward(windows), dtype=np.float64)
    ctx = model.ctx
    acc = np.zeros(T)
    count = np.zeros(T)
    positions = np.arange(T)
    for slot in range(ctx.width):
        target = positions - ctx.left + slot
        valid = (target >= 0) & (target < T)
        acc[target[valid]] += posterior[valid, slot]
        count[target[valid]] += 1.0
    return acc / count


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class EpochStats:
    epoch: int
    train_loss: float


def train(model: BdnnModel,
          data: Sequence[tuple[np.ndarray, np.ndarray]],
          config: TrainConfig,
          on_epoch: Callable[[BdnnModel, EpochStats], bool] | None = None
          ) -> list[EpochStats]:
    """SGD over all context windows of a corpus of (features, labels) pairs.

    Windows never cross utterance boundaries. The shuffle RNG is seeded from
    the config, so training is reproducible. `on_epoch` may return True to
    stop early. Returns per-epoch stats.
    """
    feats_list = []
    labels_list = []
    index_blocks = []
    base = 0
    for feats, labels in data:
        feats = np.ascontiguousarray(feats, dtype=model.dtype)
        labels = np.asarray(labels)
        if feats.shape[0] != labels.shape[0]:
            raise ValueError("features and labels disagree on frame count")
        if feats.shape[0] == 0:
            continue
        feats_list.append(feats)
        labels_list.append(labels.astype(model.dtype))
        index_blocks.append(base + expand_context_indices(feats.shape[0], model.ctx))
        base += feats.shape[0]
    if not feats_list:
        raise ValueError("no training frames")
    all_feats = np.vstack(feats_list)
    all_labels = np.concatenate(labels_list)
    all_indices = np.vstack(index_blocks)
    num_rows = all_indices.shape[0]

    rng = np.random.default_rng(config.seed)
    history: list[EpochStats] = []
    for epoch in range(config.max_epochs):
        order = rng.permutation(num_rows)
        total = 0.0
        batches = 0
        for start in range(0, num_rows, config.batch_size):
            rows = order[start:start + config.batch_size]
            idx = all_indices[rows]
            x = all_feats[idx].reshape(len(rows), -1)
            y = all_labels[idx]
            loss, grads_w, grads_b = model.loss_and_grads(x, y)
            model.sgd_step(grads_w, grads_b, config.learning_rate)
            total += loss
            batches += 1
        stats = EpochStats(epoch=epoch, train_loss=total / max(batches, 1))
        history.append(stats)
        if on_epoch is not None and on_epoch(model, stats):
            break
    return history


def gradient_check(model: BdnnModel, x: np.ndarray, y: np.ndarray,
                   epsilon: float = 1e-6, probes_per_matrix: int = 4,
                   seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs on a float64 clone of the model; float32 arithmetic cannot support
    the difference quotient at this epsilon.
    """
    probe = model.astype(np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _, grads_w, grads_b = probe.loss_and_grads(x, y)
    rng = np.random.default_rng(seed)
    worst = 0.0

    def loss_only() -> float:
        posterior = probe.forward(x)
        return float(np.mean(np.abs(posterior - y)))

    for params, grads in ((probe.weights, grads_w), (probe.biases, grads_b)):
        for matrix, grad in zip(params, grads):
            flat = matrix.reshape(-1)
            for _ in range(probes_per_matrix):
                j = int(rng.integers(flat.size))
                saved = flat[j]
                flat[j] = saved + epsilon
                up = loss_only()
                flat[j] = saved - epsilon
                down = loss_only()
                flat[j] = saved
                numeric = (up - down) / (2.0 * epsilon)
                analytic = float(grad.reshape(-1)[j])
                scale = max(abs(numeric), abs(analytic), 1e-8)
                worst = max(worst, abs(numeric - analytic) / scale)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints and score files
# ---------------------------------------------------------------------------

_MAGIC = b"BDN1"


def save_checkpoint(path: str | Path, model: BdnnModel, meta: dict | None = None) -> None:
    """Binary parameter dump plus a JSON metadata sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<BHBBB", 1, model.feat_dim, model.ctx.left,
                                 model.ctx.right, len(model.weights)))
        for w, b in zip(model.weights, model.biases):
            handle.write(struct.pack("<II", *w.shape))
            handle.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            handle.write(np.ascontiguousarray(b, dtype="<f4").tobytes())
    sidecar = {
        "feat_dim": model.feat_dim,
        "context_left": model.ctx.left,
        "context_right": model.ctx.right,
        "hidden": list(model.hidden),
        "dims": list(model.dims),
    }
    sidecar.update(meta or {})
    with open(str(path) + ".meta.json", "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, sort_keys=True, indent=2)
        handle.write("\n")


def load_checkpoint(path: str | Path) -> tuple[BdnnModel, dict]:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError("not a model checkpoint (bad magic)")
    version, feat_dim, left, right, n_layers = struct.unpack_from("<BHBBB", raw, 4)
    if version != 1:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos = 4 + struct.calcsize("<BHBBB")
    weights = []
    biases = []
    for _ in range(n_layers):
        rows, cols = struct.unpack_from("<II", raw, pos)
        pos += 8
        w = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=pos).reshape(rows, cols)
        pos += rows * cols * 4
        b = np.frombuffer(raw, dtype="<f4", count=cols, offset=pos)
        pos += cols * 4
        weights.append(w.copy())
        biases.append(b.copy())

    ctx = ContextSpec(left=left, right=right)
    hidden = tuple(w.shape[1] for w in weights[:-1])
    model = BdnnModel.__new__(BdnnModel)
    model.feat_dim = feat_dim
    model.ctx = ctx
    model.hidden = hidden
    model.dtype = np.dtype(np.float32)
    model.dims = [feat_dim * ctx.width, *hidden, ctx.width]
    model.weights = weights
    model.biases = biases

    meta_path = Path(str(path) + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return model, meta


def write_scores(path: str | Path, items: Iterable[tuple[str, np.ndarray]]) -> None:
    """Score file: one utterance per line, `<id> <space-separated posteriors>`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for utterance_id, scores in items:
            values = " ".join(f"{v:.6f}" for v in np.asarray(scores).ravel())
            handle.write(f"{utterance_id} {values}\n")


def read_scores(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            utterance_id, _, rest = line.partition(" ")
            out[utterance_id] = np.asarray([float(v) for v in rest.split()], dtype=np.float64)
    return out
