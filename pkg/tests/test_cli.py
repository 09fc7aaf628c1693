import functools
import json
import subprocess
import sys

import numpy as np
import pytest

from hyperproto import cli
from hyperproto.gradcheck import run_all
from hyperproto.learner import LinearLearner, load_model, save_model
from hyperproto.loss import pebu_grad_y
from hyperproto.prototypes import load_prototypes


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def blobs(tmp_path):
    train, test = tmp_path / "train.csv", tmp_path / "test.csv"
    assert run("blobs", "--k", 3, "--n", 2, "--per-class", 60, "--seed", 1,
               "--test-fraction", 0.3, "--out", train, "--test-out", test) == 0
    protos = tmp_path / "protos.csv"
    assert run("place", "--method", "uniform-circle", "--k", 3, "--out", protos) == 0
    return train, test, protos


class TestPlace:
    def test_uniform_four(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        assert run("place", "--method", "uniform-circle", "--k", 4, "--out", out) == 0
        np.testing.assert_allclose(load_prototypes(out).directions, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
        assert "max_pairwise_cosine" in capsys.readouterr().out

    def test_separated_reports_simplex(self, capsys):
        assert run("place", "--method", "separated", "--k", 5, "--d", 4, "--seed", 7) == 0
        value = float(capsys.readouterr().out.split("max_pairwise_cosine=")[1])
        assert value == pytest.approx(-0.25, abs=1e-2)

    def test_uniform_wrong_dimension_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run("place", "--method", "uniform-circle", "--k", 4, "--d", 3)
        assert exc.value.code == 2

    def test_project(self, tmp_path):
        points, out = tmp_path / "pts.csv", tmp_path / "p.csv"
        points.write_text("0,3.2,0,1\n1,0.1,1,0\n")
        assert run("place", "--method", "project", "--input", points, "--out", out) == 0
        np.testing.assert_array_equal(load_prototypes(out).directions, [[0, 1], [1, 0]])

    def test_project_rejects_origin(self, tmp_path, capsys):
        points = tmp_path / "pts.csv"
        points.write_text("0,0,0,1\n1,0.1,1,0\n")
        assert run("place", "--method", "project", "--input", points) == 1
        assert "radius 0" in capsys.readouterr().err

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run("place", "--method", "separated", "--k", 4, "--d", 3, "--seed", 2, "--out", path)
        assert a.read_bytes() == b.read_bytes()


class TestTrainEvalPredict:
    def test_end_to_end(self, tmp_path, blobs, capsys):
        train, test, protos = blobs
        model, report = tmp_path / "m.txt", tmp_path / "r.csv"
        assert run("train", "--data", train, "--prototypes", protos, "--model", model, "--out", report,
                   "--epochs", 200, "--lr", 0.05, "--batch", 32) == 0
        final_acc = float(report.read_text().splitlines()[-1].split(",")[2])
        assert final_acc >= 0.95
        capsys.readouterr()
        assert run("eval", "--data", train, "--prototypes", protos, "--model", model) == 0
        accuracy = float(capsys.readouterr().out.split()[0].split("=")[1])
        assert accuracy == final_acc
        assert run("eval", "--data", test, "--prototypes", protos, "--model", model) == 0
        assert float(capsys.readouterr().out.split()[0].split("=")[1]) >= 0.95

    def test_reruns_are_byte_identical(self, tmp_path, blobs):
        train, _, protos = blobs
        outputs = []
        for tag in "ab":
            model, report = tmp_path / f"m{tag}.txt", tmp_path / f"r{tag}.csv"
            run("train", "--data", train, "--prototypes", protos, "--model", model, "--out", report,
                "--epochs", 5, "--seed", 3)
            outputs.append((model.read_bytes(), report.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_zero_learning_rate_constant_report(self, tmp_path, blobs):
        train, _, protos = blobs
        report = tmp_path / "r.csv"
        run("train", "--data", train, "--prototypes", protos, "--out", report, "--epochs", 4, "--lr", 0)
        losses = {line.split(",")[1] for line in report.read_text().splitlines()[1:]}
        assert len(losses) == 1

    def test_mlp(self, tmp_path, blobs):
        train, _, protos = blobs
        model = tmp_path / "m.txt"
        assert run("train", "--data", train, "--prototypes", protos, "--model", model,
                   "--epochs", 3, "--hidden", "5,4", "--out", tmp_path / "r.csv") == 0
        assert load_model(model).layer_sizes == [2, 5, 4, 2]

    def test_too_few_prototypes(self, tmp_path, blobs, capsys):
        train, _, _ = blobs
        protos = tmp_path / "p2.csv"
        run("place", "--method", "uniform-circle", "--k", 2, "--out", protos)
        assert run("train", "--data", train, "--prototypes", protos, "--epochs", 1) == 1
        assert "no prototype" in capsys.readouterr().err

    def test_dimension_mismatch_names_all(self, tmp_path, blobs, capsys):
        train, _, protos = blobs
        assert run("train", "--data", train, "--prototypes", protos, "--d", 3, "--epochs", 1) == 1
        err = capsys.readouterr().err
        assert "n=2" in err and "d=3" in err and "d=2" in err

    def test_divergence_leaves_no_model(self, tmp_path, capsys):
        data, protos, model = tmp_path / "d.csv", tmp_path / "p.csv", tmp_path / "m.txt"
        data.write_text("1e200,1e200,0\n-1e200,1e200,1\n")
        run("place", "--method", "uniform-circle", "--k", 2, "--out", protos)
        with np.errstate(over="ignore", invalid="ignore"):
            code = run("train", "--data", data, "--prototypes", protos, "--model", model, "--lr", 1e200, "--epochs", 3)
        assert code == cli.EXIT_DIVERGED
        assert "epoch" in capsys.readouterr().err
        assert not model.exists()
        assert not list(tmp_path.glob(".model-*"))

    def test_predict_rows(self, tmp_path):
        protos, model, data, out = (tmp_path / n for n in ("p.csv", "m.txt", "d.csv", "o.csv"))
        run("place", "--method", "uniform-circle", "--k", 3, "--out", protos)
        save_model(LinearLearner([np.eye(2)], [np.zeros(2)]), model)
        direction = load_prototypes(protos).directions[2]
        data.write_text(f"0,0\n{3 * direction[0]:.17g},{3 * direction[1]:.17g}\n")
        assert run("predict", "--data", data, "--prototypes", protos, "--model", model,
                   "--unlabeled", "--out", out) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "0,0"
        label, radius = rows[1].split(",")
        assert label == "2" and float(radius) == pytest.approx(3.0, abs=1e-15)

    def test_incompatible_model(self, tmp_path, blobs, capsys):
        train, _, protos = blobs
        model = tmp_path / "m.txt"
        save_model(LinearLearner.initialize(5, 2), model)
        assert run("eval", "--data", train, "--prototypes", protos, "--model", model) == 1
        assert "n=5" in capsys.readouterr().err
        assert run("eval", "--data", train, "--prototypes", protos, "--model", tmp_path / "none") == 1

    def test_config_file(self, tmp_path, blobs):
        train, _, protos = blobs
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"data": str(train), "prototypes": str(protos), "epochs": 2, "lr": 0.0}))
        report = tmp_path / "r.csv"
        assert run("train", "--config", config, "--out", report) == 0
        assert len(report.read_text().splitlines()) == 3
        # Explicit flags override the file.
        assert run("train", "--config", config, "--epochs", 4, "--out", report) == 0
        assert len(report.read_text().splitlines()) == 5

    def test_config_unknown_key(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"colour": "blue"}))
        with pytest.raises(SystemExit):
            run("gradcheck", "--config", config)


class TestGradcheck:
    def test_default_passes(self, capsys):
        assert run("gradcheck") == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("pebu_grad_y") and all(line.endswith("PASS") for line in lines)

    def test_same_seed_same_text(self, capsys):
        run("gradcheck", "--seed", 5, "--count", 10)
        first = capsys.readouterr().out
        run("gradcheck", "--seed", 5, "--count", 10)
        assert capsys.readouterr().out == first

    def test_wrong_sign_fails(self, monkeypatch, capsys):
        monkeypatch.setattr(cli, "run_all", functools.partial(run_all, grad_y=lambda y, p: -pebu_grad_y(y, p)))
        assert run("gradcheck", "--count", 10) == cli.EXIT_FAILURE
        assert "FAIL" in capsys.readouterr().out


class TestLossSurface:
    def test_rows(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("losssurface", "--resolution", 10, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x,y,loss,d_r"
        assert "0.5,0,-0.81093021621632" in out.read_text()

    def test_wrong_dimension(self):
        with pytest.raises(SystemExit) as exc:
            run("losssurface", "--d", 3)
        assert exc.value.code == 2


def test_blobs_requires_out():
    with pytest.raises(SystemExit):
        run("blobs", "--k", 3, "--n", 2)


def test_module_entry_point(tmp_path):
    out = tmp_path / "p.csv"
    proc = subprocess.run([sys.executable, "-m", "hyperproto", "place", "--k", "3", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().count("\n") == 3
