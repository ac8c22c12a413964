"""The worked tables shipped with the package, and records that reproduce them."""

from __future__ import annotations

from importlib import resources

import numpy as np

from latbudget.data import ContingencyTable, from_records, load_counts


def fixture_path(name: str):
    return resources.files("latbudget") / "fixtures" / name


def table(name: str) -> ContingencyTable:
    """``"table1"``, ``"table3"`` or ``"table7"`` as a labelled table."""
    with resources.as_file(fixture_path(f"{name}.csv")) as p:
        return load_counts(p)


def table4():
    """Reference LBA estimates (Table 4) for the six-level example: ``(A, B)``."""
    out = []
    for name in ("table4_mixing.csv", "table4_budgets.csv"):
        with resources.as_file(fixture_path(name)) as p:
            out.append(np.loadtxt(p, delimiter=",", skiprows=1, usecols=(1, 2, 3)))
    return tuple(out)


def records_from_counts(ct: ContingencyTable, variable="P", response="Y"):
    """One record per count of a single-variable table, cells in row-major order."""
    recs = []
    counts = np.asarray(ct.counts).astype(int)
    for i, lab in enumerate(ct.row_labels):
        for j, resp in enumerate(ct.col_labels):
            recs += [((lab,), resp)] * counts[i, j]
    return from_records([variable], response, recs)


def records_from_stacked(ct: ContingencyTable, response="Class"):
    """Records whose stacked table equals ``ct`` (row labels ``Var-level``).

    Within each response class every variable's levels are laid out in
    table order, so each block reproduces its counts; the joint pattern
    across variables is one arbitrary arrangement with those marginals.
    """
    counts = np.asarray(ct.counts).astype(int)
    blocks: dict[str, list[tuple[str, int]]] = {}
    for r, lab in enumerate(ct.row_labels):
        var, level = lab.rsplit("-", 1)
        blocks.setdefault(var, []).append((level, r))
    variables = list(blocks)
    per_class = [counts[[r for _, r in blocks[v]]].sum(axis=0) for v in variables]
    for v, tot in zip(variables, per_class):
        if not np.array_equal(tot, per_class[0]):
            raise ValueError(f"block {v!r} has different class totals")
    recs = []
    for j, resp in enumerate(ct.col_labels):
        columns = []
        for v in variables:
            col = []
            for level, r in blocks[v]:
                col += [level] * counts[r, j]
            columns.append(col)
        recs += [(tuple(c[n] for c in columns), resp) for n in range(per_class[0][j])]
    return from_records(variables, response, recs)
