"""Categorical records, contingency tables, compositions and design matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CategoricalDataset:
    """Individual-level records over categorical variables.

    ``records`` holds ``(explanatory_labels, response_label)`` pairs where
    ``explanatory_labels`` has one label per entry of ``variables``.
    Catalogs keep first-appearance order and are reused by every derived
    matrix, so the same dataset always produces the same axes.
    """

    variables: tuple[str, ...]
    response: str
    records: tuple[tuple[tuple[str, ...], str], ...]
    catalogs: tuple[tuple[str, ...], ...]
    response_levels: tuple[str, ...]

    def __post_init__(self):
        if len(self.catalogs) != len(self.variables):
            raise ValueError("one level catalog is required per explanatory variable")
        for name, cat in zip(self.variables, self.catalogs):
            if len(set(cat)) != len(cat):
                raise ValueError(f"duplicate levels in catalog of {name!r}")
        if len(set(self.response_levels)) != len(self.response_levels):
            raise ValueError(f"duplicate levels in catalog of {self.response!r}")
        known = [set(c) for c in self.catalogs]
        resp = set(self.response_levels)
        for n, (xs, y) in enumerate(self.records):
            if len(xs) != len(self.variables):
                raise ValueError(f"record {n} has {len(xs)} explanatory labels, "
                                 f"expected {len(self.variables)}")
            for name, lab, cat in zip(self.variables, xs, known):
                if lab not in cat:
                    raise ValueError(f"record {n}: level {lab!r} not in catalog of {name!r}")
            if y not in resp:
                raise ValueError(f"record {n}: level {y!r} not in catalog of {self.response!r}")

    def __len__(self):
        return len(self.records)

    @property
    def row_labels(self) -> list[str]:
        """Explanatory level names, stacked by variable (``"V1-0"`` style)."""
        return [f"{v}-{lev}" for v, cat in zip(self.variables, self.catalogs) for lev in cat]

    @property
    def n_levels(self) -> int:
        return sum(len(c) for c in self.catalogs)

    def subset(self, indices: Sequence[int]) -> "CategoricalDataset":
        """Records at ``indices``, keeping this dataset's catalogs."""
        return CategoricalDataset(self.variables, self.response,
                                  tuple(self.records[i] for i in indices),
                                  self.catalogs, self.response_levels)

    def conform(self, reference: "CategoricalDataset") -> "CategoricalDataset":
        """Re-express records against the catalogs of ``reference``.

        Raises ``ValueError`` on unseen levels; there is no implicit
        "other" level.
        """
        if tuple(self.variables) != tuple(reference.variables):
            raise ValueError(f"variables {self.variables} do not match "
                             f"model variables {reference.variables}")
        return CategoricalDataset(reference.variables, reference.response, self.records,
                                  reference.catalogs, reference.response_levels)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("counts shape does not match labels")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if c.sum() <= 0:
            raise ValueError("contingency table is empty")

    @property
    def row_totals(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float).sum(axis=1)

    @property
    def column_marginals(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=float)
        return c.sum(axis=0) / c.sum()


@dataclass(frozen=True)
class CompositionMatrix:
    profiles: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        p = np.asarray(self.profiles, dtype=float)
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("profile entries must lie in [0, 1]")
        if not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("profile rows must sum to 1")


@dataclass(frozen=True)
class DesignMatrices:
    X: np.ndarray
    Y: np.ndarray
    x_labels: tuple[str, ...]
    y_labels: tuple[str, ...]


def _read_csv_rows(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        return list(csv.reader(fh))


def load_records(path, response: str) -> CategoricalDataset:
    """Read a record-per-row CSV; every non-response column is explanatory."""
    rows = _read_csv_rows(path)
    if not rows:
        raise ValueError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise ValueError(f"{path}: response variable {response!r} not in header {header}")
    r_col = header.index(response)
    x_cols = [i for i in range(len(header)) if i != r_col]
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header) or any(not c.strip() for c in row):
            raise ValueError(f"{path}: row {lineno} has a missing field")
        row = [c.strip() for c in row]
        records.append((tuple(row[i] for i in x_cols), row[r_col]))
    return from_records([header[i] for i in x_cols], response, records)


def from_records(variables, response, records) -> CategoricalDataset:
    """Build a dataset, collecting catalogs in first-appearance order."""
    variables = tuple(variables)
    cats: list[dict[str, None]] = [dict() for _ in variables]
    resp: dict[str, None] = {}
    recs = []
    for xs, y in records:
        xs = tuple(str(x) for x in xs)
        for c, lab in zip(cats, xs):
            c.setdefault(lab)
        resp.setdefault(str(y))
        recs.append((xs, str(y)))
    return CategoricalDataset(variables, response, tuple(recs),
                              tuple(tuple(c) for c in cats), tuple(resp))


def load_counts(path) -> ContingencyTable:
    """Read a pre-tabulated matrix CSV (row labels in column 0, column labels in row 0)."""
    rows = [r for r in _read_csv_rows(path) if r]
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    cols = tuple(c.strip() for c in rows[0][1:])
    labels, counts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(cols) + 1:
            raise ValueError(f"{path}: row {lineno} has {len(row) - 1} cells, expected {len(cols)}")
        labels.append(row[0].strip())
        try:
            counts.append([float(c) for c in row[1:]])
        except ValueError as exc:
            raise ValueError(f"{path}: row {lineno}: {exc}") from None
    return ContingencyTable(np.array(counts), tuple(labels), cols)


def contingency_table(ds: CategoricalDataset) -> ContingencyTable:
    if len(ds) == 0:
        raise ValueError("dataset has no records")
    offsets = np.cumsum([0] + [len(c) for c in ds.catalogs])
    index = [{lab: off + k for k, lab in enumerate(cat)}
             for off, cat in zip(offsets, ds.catalogs)]
    resp = {lab: j for j, lab in enumerate(ds.response_levels)}
    counts = np.zeros((ds.n_levels, len(ds.response_levels)), dtype=np.int64)
    for xs, y in ds.records:
        j = resp[y]
        for idx, lab in zip(index, xs):
            counts[idx[lab], j] += 1
    return ContingencyTable(counts, tuple(ds.row_labels), ds.response_levels)


def row_profiles(ct: ContingencyTable) -> CompositionMatrix:
    counts = np.asarray(ct.counts, dtype=float)
    totals = counts.sum(axis=1)
    for lab, t in zip(ct.row_labels, totals):
        if t <= 0:
            raise ValueError(f"row {lab!r} has zero total; its profile is undefined")
    return CompositionMatrix(counts / totals[:, None], ct.row_labels, ct.col_labels)


def dummy_code(ds: CategoricalDataset) -> DesignMatrices:
    """One-hot blocks per explanatory variable (catalog order) plus one-hot response."""
    if len(ds) == 0:
        raise ValueError("dataset has no records")
    offsets = np.cumsum([0] + [len(c) for c in ds.catalogs])
    index = [{lab: off + k for k, lab in enumerate(cat)}
             for off, cat in zip(offsets, ds.catalogs)]
    resp = {lab: j for j, lab in enumerate(ds.response_levels)}
    X = np.zeros((len(ds), ds.n_levels))
    Y = np.zeros((len(ds), len(ds.response_levels)))
    for n, (xs, y) in enumerate(ds.records):
        for idx, lab in zip(index, xs):
            X[n, idx[lab]] = 1.0
        Y[n, resp[y]] = 1.0
    return DesignMatrices(X, Y, tuple(ds.row_labels), ds.response_levels)


def split(ds: CategoricalDataset, fractions=(0.8, 0.2), seed: int = 0):
    """Seeded shuffle, then ``floor(N * train)`` records to train and the rest to test."""
    train, test = fractions
    for f in fractions:
        if not 0 < f < 1:
            raise ValueError(f"split fraction {f} outside (0, 1)")
    if abs(train + test - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    perm = np.random.default_rng(seed).permutation(len(ds))
    n_train = int(np.floor(len(ds) * train + 1e-9))
    return ds.subset(perm[:n_train].tolist()), ds.subset(perm[n_train:].tolist())


def encode_records(path, reference: CategoricalDataset):
    """Design matrix for a record CSV against ``reference``'s catalogs.

    Returns ``(X, actual)`` where ``actual`` holds response labels, or is
    ``None`` when the file has no response column. Unseen levels are an
    error.
    """
    rows = _read_csv_rows(path)
    if not rows:
        raise ValueError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    missing = [v for v in reference.variables if v not in header]
    if missing:
        raise ValueError(f"{path}: columns {missing} required by the model are absent")
    cols = [header.index(v) for v in reference.variables]
    r_col = header.index(reference.response) if reference.response in header else None
    offsets = np.cumsum([0] + [len(c) for c in reference.catalogs])
    index = [{lab: off + k for k, lab in enumerate(cat)}
             for off, cat in zip(offsets, reference.catalogs)]
    known_resp = set(reference.response_levels)
    X, actual = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header) or any(not row[c].strip() for c in cols):
            raise ValueError(f"{path}: row {lineno} has a missing field")
        x = np.zeros(reference.n_levels)
        for var, c, idx in zip(reference.variables, cols, index):
            lab = row[c].strip()
            if lab not in idx:
                raise ValueError(f"{path}: row {lineno}: unseen level {lab!r} of {var!r}")
            x[idx[lab]] = 1.0
        X.append(x)
        if r_col is not None:
            y = row[r_col].strip()
            if y not in known_resp:
                raise ValueError(f"{path}: row {lineno}: unseen response level {y!r}")
            actual.append(y)
    X = np.array(X).reshape(len(X), reference.n_levels)
    return X, (actual if r_col is not None else None)


def sample_records(profiles, masses, n: int, seed: int, row_levels, col_levels,
                   variable="P", response="Y") -> CategoricalDataset:
    """Draw ``n`` records: an explanatory level by ``masses``, then a response from its profile row."""
    profiles = np.asarray(profiles, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if np.any(profiles < 0) or np.any(np.abs(profiles.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("profile rows must be non-negative and sum to 1")
    if len(masses) != len(profiles) or np.any(masses < 0) or masses.sum() <= 0:
        raise ValueError("need one non-negative mass per profile row")
    rng = np.random.default_rng(seed)
    which = rng.choice(len(profiles), size=n, p=masses / masses.sum())
    u = rng.random(n)
    cdf = np.cumsum(profiles, axis=1)
    cdf[:, -1] = 1.0
    resp = [min(int(np.searchsorted(cdf[r], x, side="right")), len(col_levels) - 1)
            for r, x in zip(which, u)]
    return from_records([variable], response,
                        [((row_levels[r],), col_levels[j]) for r, j in zip(which, resp)])


def write_records(ds: CategoricalDataset, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.variables, ds.response])
        for xs, y in ds.records:
            w.writerow([*xs, y])
    return Path(path)
