import csv
import json
import subprocess
import sys

import pytest

from srgmm.cli import main
from srgmm.io import load_instance

pytestmark = pytest.mark.filterwarnings("ignore::UserWarning")


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def cfg(tmp_path):
    return write(tmp_path / "cfg.json", {"model": {"k": 2, "d": 2, "N": 10, "delta": 10},
                                         "adversary": {"kind": "identity"}, "seeds": [7]})


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_generate_reproducible(tmp_path, cfg, capsys):
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")
    out = capsys.readouterr().out
    assert "realized_delta" in out and "w_min 0.5" in out
    assert load_instance(tmp_path / "a" / "instance.srgmm").seed == 7


def test_seed_flag_overrides(tmp_path, cfg):
    main(["generate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "8"])
    assert load_instance(tmp_path / "a" / "instance.srgmm").seed == 8


def test_weights_realized_in_header(tmp_path):
    c = write(tmp_path / "c.json", {"model": {"k": 3, "d": 2, "N": 300, "delta": 10,
                                              "weights": [0.2, 0.3, 0.5]}})
    main(["generate", "--config", c, "--out", str(tmp_path)])
    head = json.loads((tmp_path / "instance.srgmm").read_bytes().split(b"\n", 1)[0])
    assert sum(head["cluster_sizes"]) == 300 and len(head["cluster_sizes"]) == 3


@pytest.mark.parametrize("doc, key", [
    ({"model": {"k": 2, "d": 2, "N": 10, "delta": 10, "colour": 1}}, "colour"),
    ({"model": {"k": 2, "d": 2, "N": 10, "delta": 10}, "extra": 1}, "extra"),
    ({"model": {"k": 2, "d": 2, "N": 10, "delta": 10}, "adversary": {"kind": "core_collapse", "lam": 1}},
     "lam"),
])
def test_unknown_key_exit_2(tmp_path, capsys, doc, key):
    c = write(tmp_path / "bad.json", doc)
    assert main(["generate", "--config", c, "--out", str(tmp_path)]) == 2
    assert key in capsys.readouterr().err


def test_malformed_instance_exit_3(tmp_path):
    bad = tmp_path / "bad.srgmm"
    bad.write_bytes(b"garbage")
    assert main(["cluster", "--instance", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["evaluate", "--instance", str(bad), "--out", str(tmp_path)]) == 3


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["cluster"])
    assert exc.value.code == 2


def test_pipeline_and_determinism(tmp_path, cfg):
    main(["generate", "--config", cfg, "--out", str(tmp_path / "g")])
    inst = str(tmp_path / "g" / "instance.srgmm")
    runs = []
    for r in ("r1", "r2"):
        out = tmp_path / r
        assert main(["cluster", "--instance", inst, "--out", str(out), "--threads", "1"]) == 0
        assert main(["evaluate", "--instance", inst, "--clustering", str(out / "clustering.json"),
                     "--out", str(out)]) == 0
        assert main(["check-conditions", "--instance", inst, "--out", str(out)]) == 0
        runs.append(outputs(out))
    assert runs[0] == runs[1]
    assert set(runs[0]) == {"clustering.json", "trace.jsonl", "eval.json", "conditions.json"}
    ev = json.loads(runs[0]["eval.json"])
    assert ev["total_misclassified"] == 0


def test_k1_cluster_single_center(tmp_path):
    c = write(tmp_path / "c.json", {"model": {"k": 1, "d": 3, "N": 20, "delta": 1}})
    main(["generate", "--config", c, "--out", str(tmp_path)])
    main(["cluster", "--instance", str(tmp_path / "instance.srgmm"), "--out", str(tmp_path)])
    got = json.loads((tmp_path / "clustering.json").read_text())
    assert len(got["centers"]) == 1 and set(got["labels"]) == {0}


def test_evaluate_planted_and_failing_verdict(tmp_path, cfg):
    main(["generate", "--config", cfg, "--out", str(tmp_path)])
    inst = str(tmp_path / "instance.srgmm")
    assert main(["evaluate", "--instance", inst, "--out", str(tmp_path)]) == 0
    wrong = {"centers": [[0, 0], [1, 1]], "labels": [0] * 10}
    cpath = write(tmp_path / "wrong.json", wrong)
    assert main(["evaluate", "--instance", inst, "--clustering", cpath, "--out", str(tmp_path)]) == 1


def test_check_conditions_collapsed_passes(tmp_path):
    c = write(tmp_path / "c.json", {"model": {"k": 2, "d": 3, "N": 200, "delta": 10},
                                    "adversary": {"kind": "uniform_shrink", "dist": "constant", "lam": 0}})
    main(["generate", "--config", c, "--out", str(tmp_path)])
    assert main(["check-conditions", "--instance", str(tmp_path / "instance.srgmm"),
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "conditions.json").read_text())
    assert rep["all_pass"]


def test_lowerbound_command(tmp_path):
    c = write(tmp_path / "lb.json", {"lowerbound": {"d": 1024, "k": 2, "N": 2000, "Delta": 3, "m": 1},
                                     "seeds": [0]})
    runs = []
    for r in ("a", "b"):
        assert main(["lowerbound", "--config", c, "--out", str(tmp_path / r)]) == 0
        runs.append(outputs(tmp_path / r))
    assert runs[0] == runs[1]
    cert = json.loads(runs[0]["certificate.json"])
    assert cert["pass"] and cert["designated"] == 1


def test_experiment_csv(tmp_path):
    c = write(tmp_path / "ex.json", {"model": {"k": 3, "d": 6, "N": 300, "delta": [20, 40]},
                                     "adversary": {"kind": "uniform_shrink", "dist": "uniform"},
                                     "seeds": [1, 2, 3], "seeding": "weak"})
    runs = []
    for r in ("a", "b"):
        assert main(["experiment", "--config", c, "--out", str(tmp_path / r)]) == 0
        runs.append(outputs(tmp_path / r))
    assert runs[0] == runs[1]
    rows = list(csv.DictReader((tmp_path / "a" / "results.csv").open()))
    assert len(rows) == 6
    assert [r["seed"] for r in rows] == ["1", "2", "3"] * 2
    assert all(r["total_misclassified"] == "0" for r in rows)


def test_console_entry_point(tmp_path, cfg):
    proc = subprocess.run([sys.executable, "-m", "srgmm.cli", "generate", "--config", cfg,
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "instance.srgmm").exists()
