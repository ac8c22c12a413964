"""Latent budget model: maximum-likelihood fit by EM, expected budgets, prediction."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from latbudget import kernels
from latbudget.data import CompositionMatrix, ContingencyTable


@dataclass(frozen=True)
class FitConfig:
    K: int
    max_iter: int = 10000
    tol: float = 1e-9
    restarts: int = 10
    seed: int = 0
    workers: int = 1

    def validate(self, I: int, J: int):
        if not 1 <= self.K <= min(I, J):
            raise ValueError(f"K={self.K} outside 1..min(I, J)={min(I, J)}")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restart count must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class LbaModel:
    """Fitted latent budget model.

    ``A`` is I x K (rows on the simplex), ``B`` is J x K (columns on the
    simplex). ``loglik_trace[t]`` is the log-likelihood after ``t`` EM
    updates of the winning restart; ``violation_trace`` the matching worst
    simplex-constraint breach.
    """

    A: np.ndarray
    B: np.ndarray
    loglik_trace: np.ndarray
    converged: bool
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    seed: int = 0
    restart: int = 0
    violation_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def K(self) -> int:
        return self.A.shape[1]

    @property
    def loglik(self) -> float:
        return float(self.loglik_trace[-1])


def _restart(counts, K, max_iter, tol, seed_seq):
    rng = np.random.default_rng(seed_seq)
    I, J = counts.shape
    A0 = rng.dirichlet(np.ones(K), size=I)
    B0 = rng.dirichlet(np.ones(J), size=K).T
    return kernels.em_fit(counts, A0, B0, max_iter, tol)


def fit_lba(ct: ContingencyTable, cfg: FitConfig) -> LbaModel:
    """Best of ``cfg.restarts`` EM runs from Dirichlet(1) starting points.

    Ties on the final log-likelihood go to the lowest restart index, so the
    result does not depend on ``cfg.workers``.
    """
    counts = np.asarray(ct.counts, dtype=np.float64)
    I, J = counts.shape
    cfg.validate(I, J)
    for lab, t in zip(ct.row_labels, counts.sum(axis=1)):
        if t <= 0:
            raise ValueError(f"row {lab!r} has zero total")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    args = [(counts, cfg.K, cfg.max_iter, cfg.tol, s) for s in seeds]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            runs = list(pool.map(lambda a: _restart(*a), args))
    else:
        runs = [_restart(*a) for a in args]
    best = max(range(len(runs)), key=lambda r: (runs[r][2][-1], -r))
    A, B, ll, viol, conv = runs[best]
    return LbaModel(A, B, ll, bool(conv), tuple(ct.row_labels), tuple(ct.col_labels),
                    seed=cfg.seed, restart=best, violation_trace=viol)


def expected_budgets(m: LbaModel) -> CompositionMatrix:
    pi = m.A @ m.B.T
    return CompositionMatrix(np.clip(pi, 0.0, 1.0), m.row_labels, m.col_labels)


def budget_proportions(m: LbaModel, ct: ContingencyTable) -> np.ndarray:
    """Row-mass weighted column means of the mixing parameters."""
    if tuple(ct.row_labels) != tuple(m.row_labels) or tuple(ct.col_labels) != tuple(m.col_labels):
        raise ValueError("contingency table labels do not match the model")
    mass = ct.row_totals / ct.row_totals.sum()
    return mass @ m.A


def loglik(m: LbaModel, ct: ContingencyTable) -> float:
    pi = m.A @ m.B.T
    n = np.asarray(ct.counts, dtype=float)
    return float(np.sum(n * np.log(np.maximum(pi, 1e-12))))


def argmax_labels(scores: np.ndarray) -> np.ndarray:
    # np.argmax already returns the first maximum
    return np.argmax(scores, axis=1)


def lba_predict(m: LbaModel, X: np.ndarray):
    """Scores are the mean expected budget over each record's active levels.

    With one explanatory variable this is exactly the row of ``X A B^T``;
    with several, the stacked product is divided by the number of active
    levels so each score row stays on the simplex.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.A.shape[0]:
        raise ValueError(f"design matrix has {X.shape[-1]} columns, model expects {m.A.shape[0]}")
    active = X.sum(axis=1, keepdims=True)
    if np.any(active <= 0):
        raise ValueError("a record has no active explanatory level")
    scores = (X @ m.A @ m.B.T) / active
    return scores, argmax_labels(scores)
