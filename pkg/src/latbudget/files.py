"""On-disk formats: labelled CSV matrices, key = value metadata, model directories."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from latbudget.data import CategoricalDataset
from latbudget.lba import LbaModel
from latbudget.nn import Network, TrainConfig


def fmt(x, precise=False) -> str:
    """Six significant digits (or shortest round-trip form); integers stay integral."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "NA"
    out = repr(x) if precise else f"{x:.6g}"
    return "0" if out in ("-0", "-0.0") else out


def write_matrix(path, values, row_labels, col_labels, corner="", precise=False):
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([corner, *col_labels])
    for lab, row in zip(row_labels, values):
        w.writerow([lab, *(fmt(v, precise) for v in row)])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return Path(path)


def read_matrix(path):
    """Inverse of :func:`write_matrix`: ``(values, row_labels, col_labels)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    cols = tuple(rows[0][1:])
    labels = tuple(r[0] for r in rows[1:])
    values = np.array([[float("nan") if c == "NA" else float(c) for c in r[1:]]
                       for r in rows[1:]], dtype=float).reshape(len(labels), len(cols))
    return values, labels, cols


def write_rows(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return Path(path)


def parse_keyvalues(text: str) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def format_keyvalues(d: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in d.items())


def split_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _dataset_meta(ds: CategoricalDataset) -> dict:
    meta = {"variables": ",".join(ds.variables), "response": ds.response,
            "response_levels": ",".join(ds.response_levels)}
    for v, cat in zip(ds.variables, ds.catalogs):
        meta[f"catalog.{v}"] = ",".join(cat)
    return meta


def dataset_from_meta(meta: dict) -> CategoricalDataset:
    """An empty dataset carrying the catalogs stored with a model."""
    variables = tuple(split_list(meta["variables"]))
    return CategoricalDataset(variables, meta["response"], (),
                              tuple(tuple(split_list(meta[f"catalog.{v}"])) for v in variables),
                              tuple(split_list(meta["response_levels"])))


def save_lba(model: LbaModel, out_dir, ds: CategoricalDataset | None = None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ks = [f"k{k + 1}" for k in range(model.K)]
    paths = [write_matrix(out / "A.csv", model.A, model.row_labels, ks, precise=True),
             write_matrix(out / "B.csv", model.B, model.col_labels, ks, precise=True)]
    meta = {"kind": "lba", "K": model.K, "loglik": repr(model.loglik),
            "converged": str(model.converged).lower(), "seed": model.seed,
            "restart": model.restart, "iterations": len(model.loglik_trace) - 1}
    if ds is not None:
        meta.update(_dataset_meta(ds))
    (out / "model.txt").write_text(format_keyvalues(meta), encoding="utf-8")
    return paths + [out / "model.txt"]


def save_network(net: Network, out_dir, cfg: TrainConfig | None = None,
                 ds: CategoricalDataset | None = None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hidden = [f"h{l + 1}" for l in range(net.L)]
    paths = [write_matrix(out / "w1.csv", net.w1, net.input_labels, hidden, precise=True),
             write_matrix(out / "w2.csv", net.w2, hidden, net.output_labels, precise=True),
             write_matrix(out / "b1.csv", net.b1, hidden, ["bias"], precise=True),
             write_matrix(out / "b2.csv", net.b2, net.output_labels, ["bias"], precise=True)]
    meta = {"kind": "nn", "hidden": net.L, "act1": net.act1, "act2": net.act2,
            "seed": net.seed if net.seed is not None else ""}
    if cfg is not None:
        meta.update({"epochs": cfg.epochs, "lr": repr(cfg.lr), "val_fraction": repr(cfg.val_fraction),
                     "loss": cfg.loss, "batch_size": cfg.batch_size, "train_seed": cfg.seed})
    if ds is not None:
        meta.update(_dataset_meta(ds))
    (out / "model.txt").write_text(format_keyvalues(meta), encoding="utf-8")
    return paths + [out / "model.txt"]


def read_meta(model_dir) -> dict:
    path = Path(model_dir) / "model.txt"
    if not path.is_file():
        raise FileNotFoundError(f"{model_dir}: no model.txt")
    return parse_keyvalues(path.read_text(encoding="utf-8"))


def load_model(model_dir):
    """``(model, meta)`` for an LBA or network directory written above.

    Parameter CSVs are written at round-trip precision, so a loaded model
    predicts exactly as the one that was saved.
    """
    d = Path(model_dir)
    meta = read_meta(d)
    if meta.get("kind") == "lba":
        A, rows, _ = read_matrix(d / "A.csv")
        B, cols, _ = read_matrix(d / "B.csv")
        return LbaModel(A, B, np.array([float(meta["loglik"])]),
                        meta.get("converged") == "true", rows, cols,
                        seed=int(meta.get("seed", 0))), meta
    if meta.get("kind") == "nn":
        w1, ins, _ = read_matrix(d / "w1.csv")
        w2, _, outs = read_matrix(d / "w2.csv")
        b1, _, _ = read_matrix(d / "b1.csv")
        b2, _, _ = read_matrix(d / "b2.csv")
        seed = int(meta["seed"]) if meta.get("seed") else None
        return Network(w1, b1[:, 0], w2, b2[:, 0], meta["act1"], meta["act2"],
                       ins, outs, seed), meta
    raise ValueError(f"{model_dir}: unknown model kind {meta.get('kind')!r}")
