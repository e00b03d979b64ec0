"""
Demodulators: minimum-distance decisions and a small learned classifier.

The learned demodulator is a 2 -> H -> M tanh network trained with
softmax cross-entropy on noisy copies of the constellation points. Input
is the (I, Q) pair of one received sample.

Weight file layout (little-endian)::

    offset  size  content
    0       8     magic b"AJDEMOD\\0"
    8       4     uint32 format version (1)
    12      4     uint32 length L of the metadata JSON
    16      L     UTF-8 JSON: {"input": 2, "hidden": H, "output": M,
                               "activation": "tanh", "epochs": ..., ...}
    16+L    ...   float64 arrays, row-major, in order
                  W1 (2 x H), b1 (H), W2 (H x M), b2 (M)
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm, qmc

from advjam.channel import NoiseSpec
from advjam.constellation import ConstellationSpec, nearest_point

MAGIC = b"AJDEMOD\0"
FORMAT_VERSION = 1

DEFAULT_PER_CLASS = 1024
# training SNR per order; puts the decision bisectors about 1.4 noise
# standard deviations from each point
DEFAULT_TRAIN_SNR_DB = {4: 3.0, 16: 10.0}


class TrainingError(RuntimeError):
    pass


def iq_features(x) -> np.ndarray:
    """Complex samples -> (n, 2) float array of (I, Q)."""
    xa = np.atleast_1d(np.asarray(x, dtype=complex))
    return np.stack([xa.real, xa.imag], axis=-1)


@dataclass
class Dataset:
    inputs: np.ndarray  # complex
    targets: np.ndarray  # int
    snr_db: float
    seed: int

    def __len__(self):
        return len(self.targets)


def _gaussian_noise(rng: np.random.Generator, n: int, sigma: float, sampling: str) -> np.ndarray:
    if sampling == "mc":
        z = rng.standard_normal((n, 2))
    elif sampling == "qmc":
        # scrambled Sobol through the normal inverse CDF: same law, far lower
        # sample variance near the decision boundaries
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            u = qmc.Sobol(2, scramble=True, seed=rng).random(n)
        z = norm.ppf(u)
    else:
        raise ValueError(f"unknown noise sampling {sampling!r}")
    return sigma * (z[:, 0] + 1j * z[:, 1])


def generate_dataset(spec: ConstellationSpec, per_class: int, snr_db: float, seed: int = 0,
                     sampling: str = "qmc") -> Dataset:
    """``per_class`` noisy copies of every constellation point, shuffled by ``seed``."""
    if per_class < 1:
        raise ValueError(f"per_class must be >= 1, got {per_class}")
    sigma = NoiseSpec.from_snr_db(snr_db).sigma
    rng = np.random.default_rng(seed)
    targets = np.repeat(np.arange(spec.order), per_class)
    if sigma == 0:
        noise = np.zeros(targets.size, dtype=complex)
    else:
        noise = np.concatenate([_gaussian_noise(rng, per_class, sigma, sampling)
                                for _ in range(spec.order)])
    perm = rng.permutation(targets.size)
    inputs = spec.points[targets] + noise
    return Dataset(inputs=inputs[perm], targets=targets[perm], snr_db=float(snr_db), seed=seed)


@dataclass
class TrainConfig:
    hidden: int = 32
    epochs: int = 600
    lr: float = 0.02
    seed: int = 0
    # Adam moment decay rates
    beta1: float = 0.9
    beta2: float = 0.999


@dataclass(eq=False)
class DemodModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    activation: str = "tanh"
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.W2.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    def params(self) -> list[np.ndarray]:
        return [self.W1, self.b1, self.W2, self.b2]

    def forward(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = np.tanh(X @ self.W1 + self.b1)
        return h, h @ self.W2 + self.b2

    def scores(self, x) -> np.ndarray:
        return self.forward(iq_features(x))[1]

    def predict(self, x):
        """Argmax symbol index; scalar in, int out."""
        idx = np.argmax(self.scores(x), axis=-1)
        if np.ndim(x) == 0:
            return int(idx[0])
        return idx

    def loss_and_input_grad(self, x, target) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample cross-entropy at ``target`` and its gradient w.r.t. (I, Q)."""
        X = iq_features(x)
        t = np.broadcast_to(np.asarray(target), (X.shape[0],))
        h, s = self.forward(X)
        rows = np.arange(X.shape[0])
        d = s - s[rows, t][:, None]
        m = np.maximum(d.max(axis=1), 0.0)
        rest = np.exp(d - m[:, None])
        rest[rows, t] = 0.0
        rest = rest.sum(axis=1)
        # log1p branch keeps tiny losses accurate when the target already dominates
        loss = np.where(m > 0, m + np.log(np.exp(-m) + rest), np.log1p(rest))
        ds = np.exp(d - loss[:, None])
        ds[rows, t] -= 1.0
        dz = (ds @ self.W2.T) * (1.0 - h**2)
        return loss, dz @ self.W1.T

    def margin_and_input_grad(self, x, label) -> tuple[np.ndarray, np.ndarray]:
        """Best competing logit minus the logit of ``label``, and its input gradient.

        Positive margin means the sample is no longer classified as ``label``.
        Ties among competitors resolve to the lowest index.
        """
        X = iq_features(x)
        t = np.broadcast_to(np.asarray(label), (X.shape[0],))
        h, s = self.forward(X)
        rows = np.arange(X.shape[0])
        others = s.copy()
        others[rows, t] = -np.inf
        j = np.argmax(others, axis=1)
        margin = s[rows, j] - s[rows, t]
        dW = self.W2[:, j].T - self.W2[:, t].T
        return margin, (dW * (1.0 - h**2)) @ self.W1.T

    def input_gradient(self, x, target):
        _, g = self.loss_and_input_grad(x, target)
        gc = g[:, 0] + 1j * g[:, 1]
        if np.ndim(x) == 0:
            return complex(gc[0])
        return gc

    def save(self, path) -> None:
        meta = dict(self.meta, input=2, hidden=self.hidden, output=self.order,
                    activation=self.activation)
        blob = json.dumps(meta, sort_keys=True).encode("utf-8")
        arrays = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in self.params())
        try:
            with open(path, "wb") as fh:
                fh.write(MAGIC + struct.pack("<II", FORMAT_VERSION, len(blob)) + blob + arrays)
        except OSError as exc:
            raise OSError(f"cannot write model file {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "DemodModel":
        try:
            data = Path(path).read_bytes()
        except OSError as exc:
            raise OSError(f"cannot read model file {path}: {exc}") from exc
        if data[:8] != MAGIC:
            raise ValueError(f"{path} is not a demodulator weight file")
        version, n = struct.unpack("<II", data[8:16])
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported weight file version {version}")
        meta = json.loads(data[16:16 + n].decode("utf-8"))
        d_in, H, M = meta.pop("input"), meta.pop("hidden"), meta.pop("output")
        activation = meta.pop("activation")
        flat = np.frombuffer(data, dtype="<f8", offset=16 + n)
        shapes = [(d_in, H), (H,), (H, M), (M,)]
        sizes = [int(np.prod(s)) for s in shapes]
        if flat.size != sum(sizes):
            raise ValueError(f"{path}: truncated weight payload")
        parts = np.split(flat.astype(np.float64), np.cumsum(sizes)[:-1])
        W1, b1, W2, b2 = (p.reshape(s) for p, s in zip(parts, shapes))
        return cls(W1, b1, W2, b2, activation=activation, meta=meta)


def predict(model: DemodModel, x):
    return model.predict(x)


def input_gradient(model: DemodModel, x, target):
    """Gradient of the cross-entropy at ``target`` w.r.t. the input, as I + jQ."""
    return model.input_gradient(x, target)


def min_distance_demod(x, spec: ConstellationSpec):
    return nearest_point(x, spec)


def init_model(order: int, hidden: int, seed: int) -> DemodModel:
    rng = np.random.default_rng(seed)
    W1 = rng.uniform(-0.5, 0.5, (2, hidden)) / np.sqrt(2)
    W2 = rng.uniform(-0.5, 0.5, (hidden, order)) / np.sqrt(hidden)
    return DemodModel(W1, np.zeros(hidden), W2, np.zeros(order))


def _loss_and_param_grads(model: DemodModel, X, y):
    n = len(y)
    h, s = model.forward(X)
    s = s - s.max(axis=1, keepdims=True)
    logz = np.log(np.exp(s).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(logz - s[rows, y]))
    ds = np.exp(s - logz[:, None])
    ds[rows, y] -= 1.0
    ds /= n
    dz = (ds @ model.W2.T) * (1.0 - h**2)
    return loss, [X.T @ dz, dz.sum(axis=0), h.T @ ds, ds.sum(axis=0)]


def train(dataset: Dataset, config: TrainConfig | None = None, order: int | None = None) -> DemodModel:
    """Full-batch Adam on softmax cross-entropy. Deterministic given ``config.seed``."""
    cfg = config or TrainConfig()
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    M = order or int(dataset.targets.max()) + 1
    counts = np.bincount(dataset.targets, minlength=M)
    if counts.min() != counts.max():
        raise ValueError("training set is not class-balanced")

    X = iq_features(dataset.inputs)
    y = np.asarray(dataset.targets)
    model = init_model(M, cfg.hidden, cfg.seed)
    params = model.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    loss = np.nan
    # overflow is reported as TrainingError below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.epochs + 1):
            loss, grads = _loss_and_param_grads(model, X, y)
            if not np.isfinite(loss):
                raise TrainingError(f"training diverged at epoch {t} (loss={loss})")
            c1, c2 = 1 - cfg.beta1**t, 1 - cfg.beta2**t
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= cfg.beta1
                mi += (1 - cfg.beta1) * g
                vi *= cfg.beta2
                vi += (1 - cfg.beta2) * g * g
                p -= cfg.lr * (mi / c1) / (np.sqrt(vi / c2) + 1e-8)
                if not np.all(np.isfinite(p)):
                    raise TrainingError(f"training diverged at epoch {t} (non-finite weights)")
    model.meta = {
        "epochs": cfg.epochs, "lr": cfg.lr, "seed": cfg.seed,
        "train_snr_db": dataset.snr_db, "final_loss": loss, "order": M,
    }
    return model


def train_demodulator(spec: ConstellationSpec, seed: int = 0, per_class: int = DEFAULT_PER_CLASS,
                      snr_db: float | None = None, config: TrainConfig | None = None) -> DemodModel:
    """Dataset generation plus training with the package defaults."""
    if snr_db is None:
        snr_db = DEFAULT_TRAIN_SNR_DB[spec.order]
    cfg = config or TrainConfig(seed=seed)
    ds = generate_dataset(spec, per_class, snr_db, seed)
    return train(ds, cfg, order=spec.order)
