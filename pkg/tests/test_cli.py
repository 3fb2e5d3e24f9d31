import io
import json
import subprocess
import sys

import pytest

from typlab import cli


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def _header(text):
    first = text.splitlines()[0]
    assert first.startswith("# ")
    return json.loads(first[2:])


def test_precedence_defaults_env_file_flags(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# comment\nring = 1001\nseed = 7  # trailing\n")
    env = {"TYPLAB_SEED": "5"}
    base = cli.parse_config("kacring", {}, {}, env={})
    assert base.params["seed"] == 20240601 and base.params["ring"] == 100_001
    assert cli.parse_config("kacring", {}, {}, env=env).params["seed"] == 5
    file_values = cli.read_config_file(str(cfg_file))
    cfg = cli.parse_config("kacring", file_values, {}, env=env)
    assert cfg.params["seed"] == 7 and cfg.params["ring"] == 1001
    cfg = cli.parse_config("kacring", file_values, {"seed": "9"}, env=env)
    assert cfg.params["seed"] == 9


def test_usage_errors_exit_2(tmp_path):
    assert _run(["frobnicate"])[0] == 2
    code, _, err = _run(["kacring", "--ring", "1000", "--no-timestamp"])
    assert code == 2 and "odd" in err
    bad = tmp_path / "bad.cfg"
    bad.write_text("ring = 1001\nthis line is wrong\n")
    code, _, err = _run(["kacring", "--config", str(bad)])
    assert code == 2 and "bad.cfg:2" in err
    assert _run(["kacring", "--ring", "abc"])[0] == 2
    unknown = tmp_path / "u.cfg"
    unknown.write_text("colour = blue\n")
    assert _run(["kacring", "--config", str(unknown)])[0] == 2


def test_kacring_output_and_determinism():
    argv = ["kacring", "--ring", "10001", "--trials", "10", "--no-timestamp", "--seed", "3"]
    code, out, err = _run(argv + ["--workers", "1"])
    _, out4, _ = _run(argv + ["--workers", "4"])
    assert code == 0 and out == out4
    lines = out.splitlines()
    assert len(lines) == 33
    head = _header(out)
    assert head["command"] == "kacring" and head["seed"] == 3 and "timestamp" not in head
    assert lines[1].startswith("t,m_pred,m_mean")
    assert json.loads(err.strip().splitlines()[-1])["exit"] == 0


def test_timestamp_present_by_default():
    _, out, _ = _run(["coding"])
    assert "timestamp" in _header(out)


def test_randomness_exit_codes():
    assert _run(["randomness", "--n", "4096", "--no-timestamp"])[0] == 0
    code, out, _ = _run(["randomness", "--n", "4096", "--source", "zeros", "--no-timestamp"])
    assert code == 1 and "reject" in out


@pytest.mark.parametrize("command", ["entropy", "ldp", "coding", "dynamics"])
def test_small_commands_succeed(command):
    extra = ["--n", "20000", "--n-max", "8"] if command == "dynamics" else []
    code, out, err = _run([command, "--no-timestamp", *extra])
    assert code == 0, err
    assert _header(out)["command"] == command


def test_json_format():
    code, out, _ = _run(["coding", "--format", "json", "--no-timestamp"])
    assert code == 0 and isinstance(json.loads(out.split("\n", 1)[1]), list)


def test_brownian_small():
    code, out, err = _run(["brownian", "--n", "20000", "--trials", "5", "--h", "0.01",
                           "--min-fraction", "0.6", "--no-timestamp"])
    assert code in (0, 1) and out.splitlines()[1]


def test_output_file(tmp_path):
    target = tmp_path / "k.csv"
    code, out, _ = _run(["kacring", "--ring", "101", "--trials", "3", "--steps", "4", "--out", str(target),
                         "--no-timestamp", "--tol", "1"])
    assert code == 0 and out == "" and len(target.read_text().splitlines()) == 7
    assert _run(["kacring", "--out", str(tmp_path / "missing" / "x.csv")])[0] == 2


def test_suite_subset():
    code, out, _ = _run(["suite", "--quick", "--only", "3,4", "--no-timestamp"])
    assert code in (0, 1)
    assert _run(["suite", "--quick", "--full"])[0] == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "typlab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "typlab 0.1.0" in proc.stdout
