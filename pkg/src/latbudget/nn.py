"""Single-hidden-layer network for compositional prediction, trained by backprop.

The forward pass is ``out = act2(act1(X @ w1 + b1) @ w2 + b2)`` where ``w1``
(I x L) plays the role of an unconstrained mixing matrix and ``w2``
(L x J) that of unconstrained transposed budgets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from latbudget import kernels

ACTIVATIONS = {"linear": kernels.LINEAR, "relu": kernels.RELU, "softmax": kernels.SOFTMAX}
LOSSES = {"mse": kernels.MSE, "cross-entropy": kernels.CROSS_ENTROPY}
INIT_STD = 0.05
LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class Network:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    act1: str = "linear"
    act2: str = "linear"
    input_labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        I, L = np.shape(self.w1)
        if np.shape(self.w2)[0] != L or np.shape(self.b1) != (L,) \
                or np.shape(self.b2) != (np.shape(self.w2)[1],):
            raise ValueError("inconsistent network shapes")
        _check_acts(self.act1, self.act2)
        if self.input_labels and len(self.input_labels) != I:
            raise ValueError("input label count does not match w1")
        if self.output_labels and len(self.output_labels) != self.J:
            raise ValueError("output label count does not match w2")

    @property
    def I(self) -> int:
        return self.w1.shape[0]

    @property
    def L(self) -> int:
        return self.w1.shape[1]

    @property
    def J(self) -> int:
        return self.w2.shape[1]

    def params(self):
        return self.w1, self.b1, self.w2, self.b2


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    lr: float = 0.01
    val_fraction: float = 0.2
    loss: str = "mse"
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("validation fraction must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unknown loss {self.loss!r}; choose from {sorted(LOSSES)}")


@dataclass(frozen=True)
class TrainTrace:
    train_loss: np.ndarray
    val_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_acts(act1, act2):
    if act1 not in ("linear", "relu"):
        raise ValueError(f"hidden activation must be 'linear' or 'relu', got {act1!r}")
    if act2 not in ACTIVATIONS:
        raise ValueError(f"output activation must be one of {sorted(ACTIVATIONS)}, got {act2!r}")


def init_network(I, L, J, act1="linear", act2="linear", seed=0,
                 input_labels=(), output_labels=()) -> Network:
    """Weights ~ Normal(0, 0.05) drawn under ``seed``; biases start at zero."""
    if min(I, L, J) < 1:
        raise ValueError("layer sizes must be positive")
    _check_acts(act1, act2)
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, INIT_STD, size=(I, L))
    w2 = rng.normal(0.0, INIT_STD, size=(L, J))
    return Network(w1, np.zeros(L), w2, np.zeros(J), act1, act2,
                   tuple(input_labels), tuple(output_labels), seed)


def activate(z, kind: str):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "softmax":
        e = np.exp(z - z.max(axis=1, keepdims=True))
        return e / e.sum(axis=1, keepdims=True)
    return z


def forward(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != net.I:
        raise ValueError(f"input has shape {X.shape}, network expects {net.I} columns")
    h = activate(X @ net.w1 + net.b1, net.act1)
    return activate(h @ net.w2 + net.b2, net.act2)


def loss(tag: str, Y, Yhat) -> float:
    """``mse``: mean over all N*J cells. ``cross-entropy``: mean over rows of -sum y log yhat."""
    Y = np.asarray(Y, dtype=float)
    Yhat = np.asarray(Yhat, dtype=float)
    if Y.shape != Yhat.shape:
        raise ValueError(f"shape mismatch {Y.shape} vs {Yhat.shape}")
    if tag == "mse":
        return float(np.mean((Y - Yhat) ** 2))
    if tag == "cross-entropy":
        return float(-np.sum(Y * np.log(np.maximum(Yhat, LOG_FLOOR))) / Y.shape[0])
    raise ValueError(f"unknown loss {tag!r}")


def gradients(net: Network, X, Y, loss_tag="mse"):
    """Analytic gradients of the mean loss on (X, Y), as ``(w1, b1, w2, b2)``."""
    return kernels.batch_gradients(np.ascontiguousarray(X, dtype=float),
                                   np.ascontiguousarray(Y, dtype=float),
                                   *net.params(), ACTIVATIONS[net.act1],
                                   ACTIVATIONS[net.act2], LOSSES[loss_tag])


def validation_split(N: int, val_fraction: float, rng):
    """Seeded shuffle; the last ``floor(N * val_fraction)`` positions are held out."""
    perm = rng.permutation(N)
    n_val = int(np.floor(N * val_fraction + 1e-9))
    if val_fraction > 0 and n_val == 0:
        raise ValueError(f"validation fraction {val_fraction} leaves no validation rows for N={N}")
    if n_val >= N:
        raise ValueError("validation split leaves no training rows")
    return perm[:N - n_val], perm[N - n_val:]


def train(net: Network, X, Y, cfg: TrainConfig = TrainConfig()):
    """Mini-batch gradient descent, ``w <- w - lr * dLoss/dw``.

    The training rows are reshuffled every epoch from the same seeded
    generator that drew the validation split, so a (network, data, config)
    triple always yields the same result. Losses in the trace are measured
    on the full training and validation partitions at the end of each epoch.
    """
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    if X.shape[0] != Y.shape[0] or X.shape[1] != net.I or Y.shape[1] != net.J:
        raise ValueError("data shapes do not match the network")
    rng = np.random.default_rng(cfg.seed)
    tr, va = validation_split(X.shape[0], cfg.val_fraction, rng)
    w1, b1, w2, b2 = (np.array(p, dtype=float, order="C") for p in net.params())
    a1, a2, lt = ACTIVATIONS[net.act1], ACTIVATIONS[net.act2], LOSSES[cfg.loss]
    train_loss = np.empty(cfg.epochs)
    val_loss = np.full(cfg.epochs, np.nan)
    for e in range(cfg.epochs):
        order = tr[rng.permutation(len(tr))]
        kernels.sgd_epoch(X[order], Y[order], w1, b1, w2, b2, a1, a2, lt,
                          float(cfg.lr), int(cfg.batch_size))
        snap = replace(net, w1=w1.copy(), b1=b1.copy(), w2=w2.copy(), b2=b2.copy())
        train_loss[e] = loss(cfg.loss, Y[tr], forward(snap, X[tr]))
        if len(va):
            val_loss[e] = loss(cfg.loss, Y[va], forward(snap, X[va]))
    return snap, TrainTrace(train_loss, val_loss)


def nn_predict(net: Network, X):
    scores = forward(net, X)
    return scores, np.argmax(scores, axis=1)
