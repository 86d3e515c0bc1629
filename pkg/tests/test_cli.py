import csv
import json
from pathlib import Path

import pytest

from hndaf.cli import main
from hndaf.scenario import RESULT_COLUMNS, ScenarioConfig

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.json"))


def write_cfg(tmp_path, **changes):
    path = tmp_path / "cfg.json"
    data = ScenarioConfig().to_dict()
    data.update(changes)
    path.write_text(json.dumps(data))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_row_and_log(tmp_path, capsys):
    out, log = tmp_path / "r.csv", tmp_path / "r.log"
    code = main(["run", "--config", write_cfg(tmp_path), "--out", str(out), "--log", str(log)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 1 and list(rows[0]) == RESULT_COLUMNS
    assert capsys.readouterr().out.startswith("provision_time_s=")
    assert log.read_text().count("\n") > 10


def test_run_bad_multi_config(tmp_path, capsys):
    code = main(["run", "--config", write_cfg(tmp_path, framework="MULTI", n_nfs=10)])
    assert code == 2
    assert "n_nfs" in capsys.readouterr().err


def test_run_hits_horizon(tmp_path, capsys):
    code = main(["run", "--config", write_cfg(tmp_path, N_T=30, horizon_s=1.0)])
    assert code == 3
    assert "provision_time_s=inf" in capsys.readouterr().out


def test_run_missing_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_run_twice_same_bytes(tmp_path):
    cfg = write_cfg(tmp_path, N_T=20)
    outs = []
    for k in range(2):
        out, log = tmp_path / f"{k}.csv", tmp_path / f"{k}.log"
        main(["run", "--config", cfg, "--seed", "7", "--out", str(out), "--log", str(log)])
        outs.append((out.read_bytes(), log.read_bytes()))
    assert outs[0] == outs[1]


def test_sweep_n_t_counts(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--axis", "N_T", "--values", "10,20,30", "--reps", "20", "--out", str(out), "--jobs", "2"])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 3 * 3 * 20
    means = read_csv(tmp_path / "s.means.csv")
    assert len(means) == 9 and {m["framework"] for m in means} == {"HNDAF", "CONV", "MULTI"}


def test_sweep_capacity_hndaf_only(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["sweep", "--axis", "capacity", "--values", "1e8,4e8", "--reps", "20", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 2 * 20 and {r["framework"] for r in rows} == {"HNDAF"}


@pytest.mark.parametrize("values", ["", "x,y", "1.5"])
def test_sweep_bad_values(tmp_path, values):
    assert main(["sweep", "--axis", "alpha" if values == "1.5" else "N_T", "--values", values, "--out", str(tmp_path / "o.csv")]) == 2


def test_sweep_bad_reps(tmp_path):
    assert main(["sweep", "--axis", "N_T", "--values", "10", "--reps", "0", "--out", str(tmp_path / "o.csv")]) == 2


def test_predict_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["predict", "--n", "200", "--seeds", "3", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 6 and list(rows[0]) == ["feature_set", "seed", "mse", "mae", "rmse"]


def test_usecase_prints_seven_steps(capsys):
    assert main(["usecase"]) == 0
    out = capsys.readouterr().out
    assert [l[:3] for l in out.splitlines() if l.startswith("[")] == [f"[{k}]" for k in range(1, 8)]


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_validate_shipped_configs(path, capsys):
    assert main(["validate", "--config", str(path)]) == 0


@pytest.mark.parametrize(
    "changes, field_name",
    [
        ({"alpha": 2}, "alpha"),
        ({"beta": "x"}, "beta"),
        ({"framework": "FOO"}, "framework"),
        ({"N_T": -1}, "n_total"),
        ({"bogus": 1}, "bogus"),
        ({"links": {"nf_leaf": {"bandwidth_bps": 0}}}, "links.nf_leaf"),
        ({"service_times": {"inference_s": 0}}, "service_times"),
    ],
)
def test_validate_rejects_with_field(tmp_path, capsys, changes, field_name):
    assert main(["validate", "--config", write_cfg(tmp_path, **changes)]) == 2
    assert f"error: {field_name}:" in capsys.readouterr().err


def test_validate_rejects_bad_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    assert main(["validate", "--config", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err
