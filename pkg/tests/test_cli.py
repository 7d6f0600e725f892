import csv
import io
import subprocess
import sys

import pytest

from locfuse.cli import main
from locfuse.config import load_scenario
from locfuse.csvio import dumps_samples, load_dataset_csv
from locfuse.model import Position, zone_of
from locfuse.propagation import reference_scenario

ITERS = ["--iterations", "2"]


@pytest.fixture
def ref_cfg(tmp_path):
    path = tmp_path / "ref.cfg"
    assert main(["scenario", "--reference", "--out", str(path)]) == 0
    return path


@pytest.fixture
def small_exp(tmp_path):
    path = tmp_path / "e.cfg"
    path.write_text("[experiment]\nmaster_seed = 5\n\n[forest.classify]\nn_trees = 6\n\n[forest.regress]\nn_trees = 6\n")
    return path


def test_scenario_file_is_the_reference(ref_cfg, capsys):
    assert load_scenario(ref_cfg) == reference_scenario()
    assert main(["scenario", "--validate", str(ref_cfg)]) == 0
    assert capsys.readouterr().out.startswith("ok: 6 access points, 2 zones")


def test_generate_twice_identical(tmp_path, ref_cfg):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["generate", "--scenario", str(ref_cfg), "--n", "250", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(load_dataset_csv(a, reference_scenario().roster)) == 250


def test_seed_env_and_flag_precedence(tmp_path, monkeypatch):
    paths = {name: tmp_path / f"{name}.csv" for name in ("flag7", "env7", "env9_flag7", "default")}
    main(["generate", "--n", "5", "--seed", "7", "--out", str(paths["flag7"])])
    main(["generate", "--n", "5", "--out", str(paths["default"])])
    monkeypatch.setenv("LOCFUSE_SEED", "7")
    main(["generate", "--n", "5", "--out", str(paths["env7"])])
    monkeypatch.setenv("LOCFUSE_SEED", "9")
    main(["generate", "--n", "5", "--seed", "7", "--out", str(paths["env9_flag7"])])
    flag7 = paths["flag7"].read_bytes()
    assert paths["env7"].read_bytes() == flag7
    assert paths["env9_flag7"].read_bytes() == flag7
    assert paths["default"].read_bytes() != flag7


def test_bad_seed_env_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.setenv("LOCFUSE_SEED", "seven")
    assert main(["generate", "--n", "5", "--out", str(tmp_path / "x.csv")]) == 1


def test_train_then_locate(tmp_path, ref_dataset, capsys):
    data = tmp_path / "d.csv"
    data.write_text(dumps_samples(ref_dataset.samples, ref_dataset.roster))
    model = tmp_path / "f.model"
    args = ["train", "--kind", "regress", "--tech", "fusion", "--trees", "20", "--dataset", str(data), "--out", str(model)]
    assert main(args) == 0
    queries = tmp_path / "s.csv"
    queries.write_text(dumps_samples(ref_dataset.samples[:15], ref_dataset.roster))
    capsys.readouterr()
    assert main(["locate", "--model", str(model), "--sample", str(queries)]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["sample_id"] for r in rows] == [s.sample_id for s in ref_dataset.samples[:15]]
    for r in rows:
        assert r["zone"] == zone_of(Position(float(r["x_m"]), float(r["y_m"])), ref_dataset.zones)


def test_train_classifier_then_locate(tmp_path, ref_dataset, capsys):
    data = tmp_path / "d.csv"
    data.write_text(dumps_samples(ref_dataset.samples, ref_dataset.roster))
    model = tmp_path / "c.model"
    assert main(["train", "--kind", "classify", "--tech", "wifi", "--trees", "10", "--dataset", str(data),
                 "--out", str(model)]) == 0
    capsys.readouterr()
    assert main(["locate", "--model", str(model), "--sample", str(data)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "sample_id,zone" and len(out) == 251


def test_eval_report(tmp_path, ref_dataset, small_exp):
    data = tmp_path / "d.csv"
    data.write_text(dumps_samples(ref_dataset.samples, ref_dataset.roster))
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert main(["eval", "--dataset", str(data), "--config", str(small_exp), "--out", str(out), *ITERS]) == 0
    rows = list(csv.DictReader((outs[0] / "summary.csv").open()))
    assert len(rows) == 6
    assert {(r["technology"], r["method"]) for r in rows} == {
        (t, m) for t in ("5g", "wifi", "fusion") for m in ("classify", "regress")
    }
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == ["accuracy.png", "error_cdf.png", "errors_5g.csv", "errors_fusion.csv", "errors_wifi.csv",
                     "summary.csv"]
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_eval_workers_match(tmp_path, ref_dataset, small_exp):
    data = tmp_path / "d.csv"
    data.write_text(dumps_samples(ref_dataset.samples, ref_dataset.roster))
    for workers, out in (("1", "a"), ("2", "b")):
        main(["eval", "--dataset", str(data), "--config", str(small_exp), "--out", str(tmp_path / out),
              "--workers", workers, "--no-figures", *ITERS])
    for name in ("summary.csv", "errors_fusion.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_unknown_subcommand_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand_exits_1():
    assert main([]) == 1


def test_data_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,x_m,y_m,zone,rssi_g1\ns1,1,1,lab1,abc\n")
    assert main(["train", "--kind", "classify", "--dataset", str(bad), "--out", str(tmp_path / "m")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert main(["train", "--kind", "classify", "--dataset", str(tmp_path / "nope.csv"), "--out", "m"]) == 2


def test_invalid_dataset_exits_2(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("sample_id,x_m,y_m,zone,rssi_g1\ns1,1,1,lab2,-60\n")
    assert main(["train", "--kind", "classify", "--dataset", str(bad), "--out", str(tmp_path / "m")]) == 2


def test_console_entry_point(tmp_path):
    out = tmp_path / "d.csv"
    res = subprocess.run([sys.executable, "-m", "locfuse.cli", "generate", "--n", "3", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert out.read_text().count("\n") == 4
