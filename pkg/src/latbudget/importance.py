"""Connection Weight importance of explanatory levels for each response level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from latbudget.nn import Network, TrainConfig, init_network, train


@dataclass(frozen=True)
class ImportanceTable:
    """J x I signed importances; rows are response levels, columns explanatory levels."""

    values: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        if self.values.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("importance values do not match labels")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("importance values must be finite")


def connection_weights(net: Network) -> ImportanceTable:
    """``Imp[j, i] = sum_l w1[i, l] * w2[l, j]``; biases and activations play no part."""
    rows = net.output_labels or tuple(str(j + 1) for j in range(net.J))
    cols = net.input_labels or tuple(str(i + 1) for i in range(net.I))
    return ImportanceTable((net.w1 @ net.w2).T, tuple(rows), tuple(cols))


def importance_plot_data(t: ImportanceTable, response_level: str):
    """Bars for one response level: ``[(explanatory_level, importance), ...]``."""
    try:
        j = t.row_labels.index(response_level)
    except ValueError:
        raise ValueError(f"unknown response level {response_level!r}") from None
    return [(lab, float(v)) for lab, v in zip(t.col_labels, t.values[j])]


def seed_sweep(X, Y, hidden, act1, act2, cfg: TrainConfig, seeds,
               input_labels=(), output_labels=()):
    """Retrain under several seeds; returns ``(tables, mean, std)``.

    For inspecting how much the importance table moves between runs; no
    stability threshold is implied.
    """
    tables = []
    for s in seeds:
        net = init_network(X.shape[1], hidden, Y.shape[1], act1, act2, s,
                           input_labels, output_labels)
        net, _ = train(net, X, Y, TrainConfig(cfg.epochs, cfg.lr, cfg.val_fraction,
                                              cfg.loss, cfg.batch_size, s))
        tables.append(connection_weights(net))
    stack = np.stack([t.values for t in tables])
    return tables, stack.mean(axis=0), stack.std(axis=0)
