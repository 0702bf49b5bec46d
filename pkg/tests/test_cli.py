import hashlib
import json

import pytest

from nonautojulia.cli import main


def _digests(path):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(path.iterdir())}


def test_validate_hdmax_passes(tmp_path):
    assert main(["validate", "--spec", "hdmax", "-K", "50", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert report["passed"] and len(report["levels"]) == 50


def test_validate_boundary_fails(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"spec": {"kind": "explicit", "list": [[4, 0, 3]]}}))
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "k=1: |c_k| > 4 violated" in capsys.readouterr().err


def test_dimension_ratio(tmp_path):
    assert main(["dimension", "--spec", "hdmax", "-K", "10000", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "dimension.json").read_text())["ratio"] > 0.995


def test_meta_sidecar(tmp_path):
    out = tmp_path / "o"
    assert main(["dimension", "--spec", "constant:5:2", "-K", "7", "--threads", "3",
                 "--out", str(out)]) == 0
    meta = json.loads((out / "dimension.meta.json").read_text())
    assert meta["artifact_version"] and meta["horizon"] == 7
    assert meta["overrides"] == {"K": 7}
    assert meta["config"]["spec"]["kind"] == "constant"
    assert "dimension.json" in meta["outputs"] and "dimension_trend.csv" in meta["outputs"]


@pytest.mark.parametrize("command,extra", [
    ("render", ["--set", "resolution=[40,30]", "-K", "2"]),
    ("boxcount", ["-K", "3", "--set", "levels=[1,2,3]"]),
    ("annuli", ["-K", "3", "--level", "1"]),
    ("survival", ["-K", "2"]),
    ("verify", ["-K", "2"]),
])
def test_commands_byte_identical(tmp_path, command, extra):
    runs = []
    for i, threads in enumerate(("1", "2")):
        out = tmp_path / str(i)
        args = [command, "--spec", "constant:5:2", "--out", str(out), "--threads", threads]
        assert main(args + extra) == 0
        runs.append(_digests(out))
    assert runs[0] == runs[1]


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"spec": {"kind": "hdmax"},\n "K": }')
    assert main(["validate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"spec": {"kind": "hdmax"}, "horizn": 3}))
    assert main(["validate", "--config", str(unknown), "--out", str(tmp_path)]) == 1
    assert main(["validate", "--out", str(tmp_path)]) == 1


def test_io_error_exit(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "absent.json")]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["validate", "--spec", "hdmax", "--out", str(blocker / "sub")]) == 2


def test_preconditions_before_dispatch(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["render", "--spec", "constant:5:2", "-K", "1", "--stage", "3",
                 "--out", str(out)]) == 1
    assert "stage" in capsys.readouterr().err
    assert not out.exists()
    assert main(["verify", "--spec", "hdmax", "--epsilon", "2", "--out", str(out)]) == 1
    assert main(["render", "--spec", "constant:4:3", "--out", str(out)]) == 1
    assert main(["boxcount", "--spec", "hdmax", "-K", "2", "--level", "3", "--out", str(out)]) == 1


def test_weak_only_needs_flag(tmp_path):
    cfg = tmp_path / "weak.json"
    cfg.write_text(json.dumps({"spec": {"kind": "explicit", "list": [[5, 0, 1]]}}))
    assert main(["validate", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert main(["validate", "--config", str(cfg), "--allow-weak", "--out", str(tmp_path)]) == 0
    # the annuli leave D(0, 2) for weak-only parameters
    assert main(["annuli", "--config", str(cfg), "--allow-weak", "--out", str(tmp_path)]) == 1
