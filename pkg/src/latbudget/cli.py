"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every run writes
``manifest.json`` into ``--out-dir``, also when it fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from latbudget import __version__, kernels
from latbudget import plots
from latbudget.cluster import attribute_explanatory, biplot, kmeans
from latbudget.data import (contingency_table, dummy_code, encode_records, load_counts,
                            load_records, sample_records, write_records)
from latbudget.files import (dataset_from_meta, format_keyvalues, load_model, parse_keyvalues,
                             read_matrix, save_lba, save_network, write_matrix, write_rows)
from latbudget.importance import ImportanceTable, connection_weights, seed_sweep
from latbudget.lba import FitConfig, budget_proportions, expected_budgets, fit_lba, lba_predict
from latbudget.metrics import confusion, metrics
from latbudget.nn import TrainConfig, init_network, nn_predict, train
from latbudget.tuning import grid_search, parse_grid, trial_train_config

log = logging.getLogger("latbudget")

NN_DEFAULTS = {"act1": "linear", "act2": "linear", "loss": "mse", "epochs": 10,
               "lr": 0.01, "val_fraction": 0.2, "batch_size": 32}


class UsageError(Exception):
    """Bad command-line input detected after parsing; exits with status 2."""


class Run:
    """Collects outputs and timing for the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out_dir)
        self.outputs: list[str] = []
        self.inputs: list[str] = []
        self.t0 = time.perf_counter()

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def emit(self, *paths):
        for p in paths:
            rel = str(Path(p).relative_to(self.out)) if Path(p).is_relative_to(self.out) else str(p)
            if rel not in self.outputs:
                self.outputs.append(rel)

    def write_text(self, name, text):
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        self.emit(p)
        return p

    def manifest(self, error=None):
        opts = {k: v for k, v in vars(self.args).items() if k not in ("func", "subparsers")}
        data = {
            "subcommand": self.args.command,
            "options": opts,
            "inputs": self.inputs,
            "outputs": sorted(self.outputs),
            "seed": self.args.seed,
            "version": __version__,
            "backend": kernels.BACKEND,
            "status": "error" if error else "ok",
            "error": error,
            "timings": {"wall_seconds": round(time.perf_counter() - self.t0, 6)},
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(data, indent=2, default=str) + "\n",
                                                encoding="utf-8")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _load_table(run, args):
    if args.counts:
        run.inputs.append(args.counts)
        return load_counts(args.counts), None
    if not args.records or not args.response:
        raise UsageError("give --counts, or --records with --response")
    run.inputs.append(args.records)
    ds = load_records(args.records, args.response)
    return contingency_table(ds), ds


# subcommands -------------------------------------------------------------

def cmd_generate(run, args):
    if bool(args.profiles) == bool(args.counts):
        raise UsageError("give exactly one of --profiles or --counts")
    src = args.profiles or args.counts
    run.inputs.append(src)
    values, rows, cols = read_matrix(src)
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise ValueError(f"{src}: entries must be finite and non-negative")
    if args.counts:
        totals = values.sum(axis=1)
        if np.any(totals <= 0):
            raise ValueError(f"{src}: every row needs a positive total")
        profiles = values / totals[:, None]
        masses = totals
    else:
        bad = np.flatnonzero(np.abs(values.sum(axis=1) - 1.0) > 1e-6)
        if len(bad):
            raise ValueError(f"{src}: row {rows[bad[0]]!r} does not sum to 1")
        profiles = values / values.sum(axis=1, keepdims=True)
        masses = np.ones(len(rows))
    if args.masses:
        masses = np.array([float(m) for m in args.masses.split(",")])
        if len(masses) != len(rows) or np.any(masses < 0) or masses.sum() <= 0:
            raise ValueError("--masses needs one non-negative weight per profile row")
    ds = sample_records(profiles, masses, args.n, args.seed, rows, cols,
                        args.explanatory_name, args.response_name)
    path = write_records(ds, run.path(args.output))
    run.emit(path)
    log.info("wrote %d records to %s", args.n, run.path(args.output))


def cmd_fit_lba(run, args):
    ct, ds = _load_table(run, args)
    I, J = ct.counts.shape
    if args.k > min(I, J):
        raise UsageError(f"--k {args.k} exceeds min(I, J) = {min(I, J)}")
    cfg = FitConfig(args.k, max_iter=args.max_iter, tol=args.tol, restarts=args.restarts,
                    seed=args.seed, workers=args.workers)
    model = fit_lba(ct, cfg)
    run.emit(*save_lba(model, run.out, ds))
    pi = expected_budgets(model)
    run.emit(write_matrix(run.path("expected_budgets.csv"), pi.profiles, pi.row_labels, pi.col_labels))
    props = budget_proportions(model, ct)
    ks = [f"k{k + 1}" for k in range(model.K)]
    run.emit(write_rows(run.path("budget_proportions.csv"), ["budget", "proportion"], zip(ks, props)))
    run.emit(write_matrix(run.path("column_marginals.csv"), ct.column_marginals, ct.col_labels,
                          ["p_plus_j"]))
    run.emit(write_rows(run.path("loglik_trace.csv"), ["iteration", "loglik"],
                        ((t, repr(float(v))) for t, v in enumerate(model.loglik_trace))))
    if not model.converged:
        log.warning("EM did not converge within %d iterations; best-so-far returned", args.max_iter)
    log.info("K=%d loglik=%.6f proportions=%s", model.K, model.loglik, np.round(props, 3))


def _nn_settings(args):
    base = dict(NN_DEFAULTS)
    hidden = None
    if args.config:
        kv = parse_keyvalues(Path(args.config).read_text(encoding="utf-8"))
        casts = {"act1": str, "act2": str, "loss": str, "epochs": int, "lr": float,
                 "val_fraction": float, "batch_size": int}
        for k, cast in casts.items():
            if k in kv:
                base[k] = cast(kv[k])
        if "hidden" in kv:
            hidden = int(kv["hidden"])
    for k in NN_DEFAULTS:
        v = getattr(args, k)
        if v is not None:
            base[k] = v
    if args.hidden is not None:
        hidden = args.hidden
    if hidden is None:
        raise UsageError("--hidden is required (or a --config that sets hidden)")
    return hidden, base


def cmd_fit_nn(run, args):
    hidden, s = _nn_settings(args)
    if args.config:
        run.inputs.append(args.config)
    run.inputs.append(args.records)
    ds = load_records(args.records, args.response)
    dm = dummy_code(ds)
    cfg = TrainConfig(s["epochs"], s["lr"], s["val_fraction"], s["loss"], s["batch_size"], args.seed)
    net = init_network(dm.X.shape[1], hidden, dm.Y.shape[1], s["act1"], s["act2"], args.seed,
                       dm.x_labels, dm.y_labels)
    net, trace = train(net, dm.X, dm.Y, cfg)
    run.emit(*save_network(net, run.out, cfg, ds))
    run.emit(write_rows(run.path("trace.csv"), ["epoch", "train_loss", "val_loss"],
                        zip(range(1, cfg.epochs + 1), trace.train_loss, trace.val_loss)))
    if args.sweep:
        seeds = [args.seed + k for k in range(args.sweep)]
        _, mean, sd = seed_sweep(dm.X, dm.Y, hidden, s["act1"], s["act2"], cfg, seeds,
                                 dm.x_labels, dm.y_labels)
        rows = [(dm.y_labels[j], dm.x_labels[i], mean[j, i], sd[j, i])
                for j in range(mean.shape[0]) for i in range(mean.shape[1])]
        run.emit(write_rows(run.path("importance_sweep.csv"),
                            ["response", "explanatory", "mean", "sd"], rows))
    log.info("final train loss %.6f, validation loss %.6f", trace.train_loss[-1], trace.val_loss[-1])


def cmd_tune(run, args):
    run.inputs += [args.records, args.grid]
    text = Path(args.grid).read_text(encoding="utf-8")
    spec = parse_grid(text)
    if "base_seed" not in parse_keyvalues(text):
        spec = type(spec)(**{**spec.__dict__, "base_seed": args.seed})
    ds = load_records(args.records, args.response)
    dm = dummy_code(ds)
    best, trials = grid_search(dm.X, dm.Y, spec, workers=args.workers)
    header = ["trial", "seed", "hidden", "act1", "act2", "lr", "epochs", "loss", "batch_size",
              "val_loss", "train_loss", "failed", "error"]
    rows = [(str(t.index), str(t.seed), *(str(t.config[k]) for k in header[2:9]),
             t.val_loss, t.train_loss, str(t.failed).lower(), t.error) for t in trials]
    run.emit(write_rows(run.path("trials.csv"), header, rows))
    run.write_text("best_config.txt", format_keyvalues(trial_train_config(best, spec)))
    log.info("best trial %d: %s (validation loss %.6f)", best.index, best.config, best.val_loss)


def _predict(run, args):
    model, meta = load_model(args.model)
    run.inputs += [args.model, args.records]
    ref = dataset_from_meta(meta)
    X, actual = encode_records(args.records, ref)
    if meta["kind"] == "lba":
        scores, idx = lba_predict(model, X)
        labels = model.col_labels
    else:
        scores, idx = nn_predict(model, X)
        labels = model.output_labels
    if tuple(labels) != tuple(ref.response_levels):
        raise ValueError("model response labels disagree with its stored catalog")
    predicted = [labels[i] for i in idx]
    ids = [str(n + 1) for n in range(len(predicted))]
    run.emit(write_matrix(run.path("scores.csv"), scores, ids, labels, corner="record"))
    if actual is None:
        run.emit(write_rows(run.path("labels.csv"), ["record", "predicted"], zip(ids, predicted)))
    else:
        run.emit(write_rows(run.path("labels.csv"), ["record", "predicted", "actual"],
                            zip(ids, predicted, actual)))
    return labels, scores, predicted, actual


def cmd_predict(run, args):
    _predict(run, args)


def cmd_evaluate(run, args):
    labels, scores, predicted, actual = _predict(run, args)
    if actual is None:
        raise ValueError(f"{args.records}: response column needed for evaluation")
    cm = confusion(actual, predicted, labels)
    onehot = np.zeros_like(scores)
    pos = {lab: j for j, lab in enumerate(labels)}
    for n, a in enumerate(actual):
        onehot[n, pos[a]] = 1.0
    report = metrics(cm, scores, onehot)
    run.emit(write_matrix(run.path("confusion.csv"), cm.counts, labels, labels,
                          corner="actual/predicted"))
    run.write_text("confusion.svg", plots.confusion_heatmap(cm.counts, labels))
    run.write_text("metrics.json", report.to_json())
    run.write_text("metrics.txt", report.to_text(Path(args.model).name or "model"))
    if not args.quiet:
        print(report.to_text(Path(args.model).name or "model"), end="")


def _importance_from(args, run):
    if args.importance:
        run.inputs.append(args.importance)
        values, rows, cols = read_matrix(args.importance)
        return ImportanceTable(values, rows, cols)
    if not args.model:
        raise UsageError("give --model (a network directory) or --importance")
    model, meta = load_model(args.model)
    run.inputs.append(args.model)
    if meta["kind"] != "nn":
        raise UsageError(f"{args.model} holds an LBA model; importance needs a network")
    return connection_weights(model)


def cmd_importance(run, args):
    t = _importance_from(args, run)
    run.emit(write_matrix(run.path("importance.csv"), t.values, t.row_labels, t.col_labels))
    rows = [(r, c, t.values[j, i]) for j, r in enumerate(t.row_labels)
            for i, c in enumerate(t.col_labels)]
    run.emit(write_rows(run.path("importance_bars.csv"), ["response", "explanatory", "importance"], rows))
    run.write_text("importance.svg", plots.importance_facets(t.values, t.row_labels, t.col_labels))


def cmd_cluster(run, args):
    t = _importance_from(args, run)
    if args.k > len(t.row_labels):
        raise UsageError(f"--k {args.k} exceeds the {len(t.row_labels)} response levels")
    res = kmeans(t, args.k, seed=args.seed, max_iter=args.max_iter, n_init=args.n_init)
    attr = attribute_explanatory(res)
    bp = biplot(t)
    run.emit(write_rows(run.path("clusters.csv"), ["response", "cluster"],
                        zip(t.row_labels, (str(k) for k in res.assignments))))
    run.emit(write_rows(run.path("attribution.csv"), ["explanatory", "cluster"],
                        zip(t.col_labels, (str(k) for k in attr))))
    run.emit(write_matrix(run.path("centroids.csv"), res.centroids,
                          [str(k + 1) for k in range(res.K)], t.col_labels, corner="cluster"))
    rows = [("response", lab, x, y) for lab, (x, y) in zip(t.row_labels, bp.row_points)]
    rows += [("explanatory", lab, x, y) for lab, (x, y) in zip(t.col_labels, bp.col_points)]
    run.emit(write_rows(run.path("biplot.csv"), ["kind", "label", "dim1", "dim2"], rows))
    run.emit(write_rows(run.path("biplot_variance.csv"), ["dimension", "explained"],
                        [("1", bp.explained[0]), ("2", bp.explained[1])]))
    run.write_text("biplot.svg", plots.biplot_svg(bp, res.assignments, attr,
                                                  title=f"Biplot, K = {args.k} clusters"))
    log.info("within-cluster SS %.6g after %d iterations", res.wcss, res.iterations)


# parser ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 1)")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory (default .)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="latbudget", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--quiet", action="store_true", default=False)
    sub = p.add_subparsers(dest="command", required=True)
    p.set_defaults(subparsers=sub.choices)

    g = sub.add_parser("generate", parents=[common], help="sample records from row profiles")
    g.add_argument("--profiles", help="matrix CSV of row-stochastic profiles")
    g.add_argument("--counts", help="matrix CSV of counts; profiles and masses taken from it")
    g.add_argument("--masses", help="comma-separated row masses (default equal, or count totals)")
    g.add_argument("--n", type=_nonneg_int, required=True)
    g.add_argument("--explanatory-name", default="P")
    g.add_argument("--response-name", default="Y")
    g.add_argument("--output", default="records.csv")
    g.set_defaults(func=cmd_generate)

    def table_inputs(sp):
        sp.add_argument("--records", help="record-per-row CSV")
        sp.add_argument("--response", help="response column of --records")
        sp.add_argument("--counts", help="pre-tabulated matrix CSV")

    f = sub.add_parser("fit-lba", parents=[common], help="fit a latent budget model by EM")
    table_inputs(f)
    f.add_argument("--k", type=_positive_int, required=True)
    f.add_argument("--restarts", type=_positive_int, default=10)
    f.add_argument("--max-iter", type=_positive_int, default=10000)
    f.add_argument("--tol", type=float, default=1e-9)
    f.add_argument("--workers", type=_positive_int, default=1)
    f.set_defaults(func=cmd_fit_lba)

    n = sub.add_parser("fit-nn", parents=[common], help="train the network")
    n.add_argument("--records", required=True)
    n.add_argument("--response", required=True)
    n.add_argument("--config", help="key = value training config (e.g. from tune)")
    n.add_argument("--hidden", type=_positive_int)
    n.add_argument("--act1", choices=["linear", "relu"])
    n.add_argument("--act2", choices=["linear", "relu", "softmax"])
    n.add_argument("--loss", choices=["mse", "cross-entropy"])
    n.add_argument("--epochs", type=_positive_int)
    n.add_argument("--lr", type=float)
    n.add_argument("--val-fraction", dest="val_fraction", type=float)
    n.add_argument("--batch-size", dest="batch_size", type=_positive_int)
    n.add_argument("--sweep", type=_nonneg_int, default=0,
                   help="also retrain under this many seeds and report importance spread")
    n.set_defaults(func=cmd_fit_nn)

    t = sub.add_parser("tune", parents=[common], help="grid search over network settings")
    t.add_argument("--records", required=True)
    t.add_argument("--response", required=True)
    t.add_argument("--grid", required=True, help="key = v1, v2, ... grid file")
    t.add_argument("--workers", type=_positive_int, default=1)
    t.set_defaults(func=cmd_tune)

    for name, func, text in (("predict", cmd_predict, "predict with a saved model"),
                             ("evaluate", cmd_evaluate, "predict and score against the response")):
        e = sub.add_parser(name, parents=[common], help=text)
        e.add_argument("--model", required=True, help="model directory (fit-lba or fit-nn output)")
        e.add_argument("--records", required=True)
        e.set_defaults(func=func)

    i = sub.add_parser("importance", parents=[common], help="connection weight importance")
    i.add_argument("--model")
    i.add_argument("--importance", help=argparse.SUPPRESS)
    i.set_defaults(func=cmd_importance)

    c = sub.add_parser("cluster", parents=[common], help="k-means on importance rows and biplot")
    c.add_argument("--model", help="network directory")
    c.add_argument("--importance", help="importance CSV instead of a network")
    c.add_argument("--k", type=_positive_int, required=True)
    c.add_argument("--n-init", type=_positive_int, default=1)
    c.add_argument("--max-iter", type=_positive_int, default=100)
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    run = Run(args)
    try:
        args.func(run, args)
    except UsageError as exc:
        run.manifest(error=str(exc))
        args.subparsers[args.command].print_usage(sys.stderr)
        print(f"latbudget {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, RuntimeError, KeyError, OSError) as exc:
        run.manifest(error=f"{type(exc).__name__}: {exc}")
        print(f"latbudget {args.command}: error: {exc}", file=sys.stderr)
        return 1
    run.manifest()
    return 0


if __name__ == "__main__":
    sys.exit(main())
