import json

import numpy as np
import pytest

from latbudget.cli import NN_DEFAULTS, build_parser, main
from latbudget.data import contingency_table, load_records, row_profiles, write_records
from latbudget.files import read_matrix
from latbudget.fixtures import fixture_path, records_from_stacked, table
from pipeline import example1, run


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    return example1(tmp_path_factory.mktemp("ex1"))


class TestExitCodes:
    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_k_zero_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as e:
            main(["fit-lba", "--counts", str(fixture_path("table3.csv")), "--k", "0",
                  "--out-dir", str(tmp_path)])
        assert e.value.code == 2

    def test_k_above_min_dimension(self, tmp_path, capsys):
        code = main(["fit-lba", "--counts", str(fixture_path("table3.csv")), "--k", "5",
                     "--out-dir", str(tmp_path)])
        assert code == 2
        assert "usage: latbudget fit-lba" in capsys.readouterr().err
        assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "error"

    def test_missing_input_is_runtime_error(self, tmp_path):
        code = main(["fit-lba", "--records", str(tmp_path / "nope.csv"), "--response", "Y",
                     "--k", "2", "--out-dir", str(tmp_path)])
        assert code == 1

    def test_generate_needs_one_source(self, tmp_path):
        assert main(["generate", "--n", "5", "--out-dir", str(tmp_path)]) == 2

    def test_non_stochastic_profiles(self, tmp_path):
        bad = tmp_path / "p.csv"
        bad.write_text(",a,b\nr,0.5,0.6\n")
        assert main(["generate", "--profiles", str(bad), "--n", "5", "--out-dir", str(tmp_path)]) == 1


class TestDefaults:
    def test_global_flags(self):
        args = build_parser().parse_args(["fit-lba", "--counts", "x", "--k", "2"])
        assert (args.seed, args.out_dir, args.quiet) == (1, ".", False)

    def test_flags_after_subcommand(self):
        args = build_parser().parse_args(["cluster", "--k", "2", "--seed", "9", "--quiet"])
        assert args.seed == 9 and args.quiet

    def test_network_defaults(self):
        assert NN_DEFAULTS == {"act1": "linear", "act2": "linear", "loss": "mse", "epochs": 10,
                               "lr": 0.01, "val_fraction": 0.2, "batch_size": 32}


class TestGenerate:
    def test_table1_recovered(self, tmp_path):
        run("generate", "--profiles", fixture_path("table1.csv"), "--n", 6000, "--seed", 7,
            "--out-dir", tmp_path, "--quiet")
        ct = contingency_table(load_records(tmp_path / "records.csv", "Y"))
        t1 = table("table1")
        rows = [ct.row_labels.index(f"P-{r}") for r in t1.row_labels]
        cols = [ct.col_labels.index(c) for c in t1.col_labels]
        prof = row_profiles(ct).profiles[np.ix_(rows, cols)]
        assert np.abs(prof - t1.counts).max() <= 0.03

    def test_zero_records(self, tmp_path):
        run("generate", "--profiles", fixture_path("table1.csv"), "--n", 0, "--out-dir", tmp_path)
        assert (tmp_path / "records.csv").read_text() == "P,Y\n"

    def test_same_seed_same_bytes(self, tmp_path):
        for d in ("a", "b"):
            run("generate", "--counts", fixture_path("table3.csv"), "--n", 300, "--seed", 3,
                "--out-dir", tmp_path / d)
        assert (tmp_path / "a/records.csv").read_bytes() == (tmp_path / "b/records.csv").read_bytes()


class TestFitLba:
    def test_k1_pooled(self, tmp_path):
        run("fit-lba", "--counts", fixture_path("table3.csv"), "--k", 1, "--out-dir", tmp_path)
        B, _, _ = read_matrix(tmp_path / "B.csv")
        c = table("table3").counts
        np.testing.assert_allclose(B[:, 0], c.sum(axis=0) / c.sum(), atol=1e-12)

    def test_outputs(self, pipeline_dir):
        names = {p.name for p in (pipeline_dir / "lba").iterdir()}
        assert {"A.csv", "B.csv", "model.txt", "expected_budgets.csv", "budget_proportions.csv",
                "column_marginals.csv", "loglik_trace.csv", "manifest.json"} <= names


class TestPipeline:
    def test_manifest(self, pipeline_dir):
        m = json.loads((pipeline_dir / "nn" / "manifest.json").read_text())
        assert m["status"] == "ok" and m["seed"] == 1 and "w1.csv" in m["outputs"]

    def test_metrics_written(self, pipeline_dir):
        for name in ("lba", "nn"):
            d = json.loads((pipeline_dir / f"eval_{name}" / "metrics.json").read_text())
            assert 0 <= d["accuracy"] <= 1

    def test_three_clusters(self, pipeline_dir):
        rows = (pipeline_dir / "cluster" / "clusters.csv").read_text().splitlines()[1:]
        assert {r.split(",")[1] for r in rows} == {"1", "2", "3"}
        assert (pipeline_dir / "cluster" / "biplot.svg").read_text().count('class="response"') == 4

    def test_perfect_oracle_scores_one(self, tmp_path):
        # a fully deterministic table makes the fitted LBA an exact oracle
        counts = tmp_path / "c.csv"
        counts.write_text(",a,b\nx,1,0\ny,0,1\n")
        run("generate", "--counts", counts, "--n", 50, "--seed", 1, "--out-dir", tmp_path)
        run("fit-lba", "--records", tmp_path / "records.csv", "--response", "Y", "--k", 2,
            "--out-dir", tmp_path / "m")
        run("evaluate", "--model", tmp_path / "m", "--records", tmp_path / "records.csv",
            "--out-dir", tmp_path / "e", "--quiet")
        d = json.loads((tmp_path / "e" / "metrics.json").read_text())
        assert d["accuracy"] == 1.0 and d["precision"] == 1.0

    def test_predict_without_response(self, pipeline_dir, tmp_path):
        rec = tmp_path / "r.csv"
        rec.write_text("P\n1\n6\n")
        run("predict", "--model", pipeline_dir / "lba", "--records", rec, "--out-dir", tmp_path)
        assert (tmp_path / "labels.csv").read_text().splitlines()[0] == "record,predicted"

    def test_tune_then_fit(self, pipeline_dir, tmp_path):
        grid = tmp_path / "grid.txt"
        grid.write_text("hidden = 2, 4\nact2 = softmax\nloss = cross-entropy\nepochs = 3\n")
        train = pipeline_dir / "data" / "train.csv"
        run("tune", "--records", train, "--response", "Y", "--grid", grid, "--out-dir", tmp_path / "t")
        assert len((tmp_path / "t" / "trials.csv").read_text().splitlines()) == 3
        run("fit-nn", "--records", train, "--response", "Y", "--config",
            tmp_path / "t" / "best_config.txt", "--out-dir", tmp_path / "n", "--sweep", 2)
        assert (tmp_path / "n" / "importance_sweep.csv").is_file()

    def test_cluster_k_above_levels(self, pipeline_dir, tmp_path):
        code = main(["cluster", "--model", str(pipeline_dir / "nn"), "--k", "5",
                     "--out-dir", str(tmp_path)])
        assert code == 2


@pytest.mark.slow
def test_example2_eight_clusters(tmp_path):
    rec = write_records(records_from_stacked(table("table7")), tmp_path / "ex2.csv")
    run("fit-nn", "--records", rec, "--response", "Class", "--hidden", 8, "--act1", "relu",
        "--act2", "softmax", "--loss", "cross-entropy", "--epochs", 50, "--out-dir", tmp_path / "nn")
    run("cluster", "--model", tmp_path / "nn", "--k", 8, "--out-dir", tmp_path / "c")
    rows = (tmp_path / "c" / "clusters.csv").read_text().splitlines()[1:]
    assert len(rows) == 10
    assert {r.split(",")[1] for r in rows} == {str(k) for k in range(1, 9)}
