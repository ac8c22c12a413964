"""Grid search over network hyperparameters, selected on final validation loss."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from latbudget.files import parse_keyvalues, split_list
from latbudget.nn import TrainConfig, init_network, train


@dataclass(frozen=True)
class GridSpec:
    hidden: tuple[int, ...] = (8,)
    act1: tuple[str, ...] = ("linear",)
    act2: tuple[str, ...] = ("linear",)
    lr: tuple[float, ...] = (0.01,)
    epochs: tuple[int, ...] = (10,)
    loss: tuple[str, ...] = ("mse",)
    batch_size: tuple[int, ...] = (32,)
    val_fraction: float = 0.2
    base_seed: int = 1

    def __post_init__(self):
        for f in GRID_AXES:
            if len(getattr(self, f)) == 0:
                raise ValueError(f"grid axis {f!r} is empty")
        if not 0 < self.val_fraction < 1:
            raise ValueError("grid search needs a validation fraction in (0, 1)")

    def points(self):
        """Cartesian product in axis order; the last axis varies fastest."""
        for values in itertools.product(*(getattr(self, f) for f in GRID_AXES)):
            yield dict(zip(GRID_AXES, values))

    def __len__(self):
        return math.prod(len(getattr(self, f)) for f in GRID_AXES)


GRID_AXES = ("hidden", "act1", "act2", "lr", "epochs", "loss", "batch_size")
_CASTS = {"hidden": int, "act1": str, "act2": str, "lr": float, "epochs": int,
          "loss": str, "batch_size": int}


@dataclass(frozen=True)
class TrialResult:
    index: int
    config: dict
    seed: int
    val_loss: float = math.nan
    train_loss: float = math.nan
    failed: bool = False
    error: str = ""


def parse_grid(text: str) -> GridSpec:
    """Read ``key = v1, v2, ...`` lines into a :class:`GridSpec`."""
    kv = parse_keyvalues(text)
    known = {f.name for f in fields(GridSpec)}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown grid keys: {sorted(unknown)}")
    args = {}
    for key, raw in kv.items():
        if key in _CASTS:
            args[key] = tuple(_CASTS[key](v) for v in split_list(raw))
        elif key == "val_fraction":
            args[key] = float(raw)
        elif key == "base_seed":
            args[key] = int(raw)
    return GridSpec(**args)


def _run_trial(X, Y, spec: GridSpec, index: int, point: dict) -> TrialResult:
    seed = spec.base_seed + index
    try:
        net = init_network(X.shape[1], point["hidden"], Y.shape[1],
                           point["act1"], point["act2"], seed)
        cfg = TrainConfig(point["epochs"], point["lr"], spec.val_fraction,
                          point["loss"], point["batch_size"], seed)
        _, trace = train(net, X, Y, cfg)
    except (ValueError, FloatingPointError) as exc:
        return TrialResult(index, point, seed, failed=True, error=str(exc))
    val, tr = float(trace.val_loss[-1]), float(trace.train_loss[-1])
    if not (np.isfinite(val) and np.isfinite(tr)):
        return TrialResult(index, point, seed, val, tr, failed=True, error="non-finite loss")
    return TrialResult(index, point, seed, val, tr)


def grid_search(X, Y, spec: GridSpec, workers: int = 1):
    """Train one network per grid point; returns ``(best, trials)``.

    Trial ``i`` is seeded with ``base_seed + i``. The best trial has the
    lowest final validation loss, earliest index on ties. Results are
    ordered by index whatever ``workers`` is.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    points = list(spec.points())
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trials = list(pool.map(lambda ip: _run_trial(X, Y, spec, *ip), enumerate(points)))
    else:
        trials = [_run_trial(X, Y, spec, i, p) for i, p in enumerate(points)]
    ok = [t for t in trials if not t.failed]
    if not ok:
        detail = "; ".join(f"trial {t.index}: {t.error}" for t in trials)
        raise RuntimeError(f"all {len(trials)} grid trials failed ({detail})")
    best = min(ok, key=lambda t: (t.val_loss, t.index))
    return best, trials


def trial_train_config(trial: TrialResult, spec: GridSpec) -> dict:
    """Flat key/value view of a trial, suitable for a reusable config file."""
    cfg = dict(trial.config)
    cfg.update(val_fraction=spec.val_fraction, seed=trial.seed,
               selected_by="final validation loss", val_loss=repr(trial.val_loss))
    return cfg
