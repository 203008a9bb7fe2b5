import json
import subprocess
import sys
from pathlib import Path

import pytest

BASE_CONFIG = """
[graph]
topology = "complete"
nodes = 12
seed = 3

[adversary]
pacman_nodes = [1]
zeta = 1.0

[cil]
threshold = 3
creation_probability = 1.0
initial_walks = 2
horizon = 400
seed = 17
replications = 2

[output]
directory = "{out}"
"""


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "cilwalk.cli", *args],
        capture_output=True,
        text=True,
    )


def write_config(tmp_path, body=None, **extra):
    text = (body or BASE_CONFIG).format(out=tmp_path / "runs")
    for section, lines in extra.items():
        text += f"\n[{section}]\n" + "\n".join(lines) + "\n"
    p = tmp_path / "exp.toml"
    p.write_text(text)
    return p


def only_run_dir(tmp_path):
    dirs = [d for d in (tmp_path / "runs").iterdir() if d.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def test_simulate_writes_traces_and_summary(tmp_path):
    cfgp = write_config(tmp_path)
    res = run_cli("simulate", "--config", str(cfgp))
    assert res.returncode == 0, res.stderr
    d = only_run_dir(tmp_path)
    assert (d / "trace_0.csv").exists()
    assert (d / "trace_1.csv").exists()
    assert (d / "events_0.jsonl").exists()
    assert (d / "graph.txt").exists()
    summary = json.loads((d / "summary.json").read_text())
    assert summary["replications"] == 2
    assert summary["peak_mean_population"] > 0


def test_simulate_reruns_are_byte_identical(tmp_path):
    cfgp = write_config(tmp_path)
    assert run_cli("simulate", "--config", str(cfgp)).returncode == 0
    assert run_cli("simulate", "--config", str(cfgp)).returncode == 0
    dirs = sorted((tmp_path / "runs").iterdir())
    assert len(dirs) == 2  # second run never overwrites the first
    for name in ("trace_0.csv", "trace_1.csv", "events_0.jsonl", "summary.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_seed_override_changes_traces(tmp_path):
    cfgp = write_config(tmp_path)
    run_cli("simulate", "--config", str(cfgp))
    run_cli("simulate", "--config", str(cfgp), "--seed", "99")
    dirs = sorted((tmp_path / "runs").iterdir())
    assert len(dirs) == 2
    a = (dirs[0] / "trace_0.csv").read_bytes()
    b = (dirs[1] / "trace_0.csv").read_bytes()
    assert a != b


def test_missing_config_exits_1(tmp_path):
    res = run_cli("simulate", "--config", str(tmp_path / "nope.toml"))
    assert res.returncode == 1
    assert "config" in res.stderr.lower()


def test_invalid_config_exits_1(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[graph]\ntopology='complete'\nnodes=12\nbogus_key=1\n[cil]\n")
    res = run_cli("simulate", "--config", str(p))
    assert res.returncode == 1


def test_horizon_zero_gives_header_only(tmp_path):
    body = BASE_CONFIG.replace("horizon = 400", "horizon = 0")
    cfgp = write_config(tmp_path, body)
    res = run_cli("simulate", "--config", str(cfgp))
    assert res.returncode == 0
    d = only_run_dir(tmp_path)
    assert (d / "trace_0.csv").read_text() == "t,z,creations,terminations,iter_t\n"


def test_qsd_command_outputs_expected_fields(tmp_path):
    cfgp = write_config(tmp_path)
    res = run_cli("qsd", "--config", str(cfgp))
    assert res.returncode == 0, res.stderr
    payload = json.loads(res.stdout)
    assert set(payload) >= {"alpha", "gamma_chain", "nu", "tv_to_pi_restricted"}
    assert len(payload["nu"]) == 11
    assert payload["alpha"] == pytest.approx(11 / 12, abs=1e-10)
    d = only_run_dir(tmp_path)
    assert (d / "chain_matrix.txt").exists()


def test_learn_command_writes_losses_and_report(tmp_path):
    cfgp = write_config(
        tmp_path,
        learn=[
            "dimension = 2",
            "data_seed = 4",
            "noise = 0.05",
            'schedule = "diminishing"',
            "gamma0 = 0.2",
            "tau = 20.0",
        ],
    )
    res = run_cli("learn", "--config", str(cfgp))
    assert res.returncode == 0, res.stderr
    d = only_run_dir(tmp_path)
    report = json.loads((d / "optima.json").read_text())
    assert report["lower_bound"] <= report["deviation"] + 1e-12
    assert report["deviation"] <= report["upper_bound"] + 1e-12
    lines = (d / "loss_0.csv").read_text().splitlines()
    assert lines[0] == "t,iter,loss,chain_id"
    assert len(lines) == 401


def test_learn_without_learn_section_exits_1(tmp_path):
    cfgp = write_config(tmp_path)
    res = run_cli("learn", "--config", str(cfgp))
    assert res.returncode == 1


def test_verify_command_pass_and_fail_exit_codes(tmp_path):
    # start far above the fixed point so the running max is set at t=0
    body = BASE_CONFIG.replace("initial_walks = 2", "initial_walks = 40")
    cfgp = write_config(
        tmp_path,
        body,
        verify=['checks = ["boundedness", "drift"]', "min_bin_count = 20"],
    )
    res = run_cli("verify", "--config", str(cfgp))
    assert res.returncode == 0, res.stdout + res.stderr
    assert "PASS boundedness" in res.stdout

    # an unattainably tight renewal tolerance forces a legitimate failure
    cfgp2 = write_config(
        tmp_path,
        verify=['checks = ["iteration_rate"]', "renewal_tolerance = 1e-9"],
    )
    res2 = run_cli("verify", "--config", str(cfgp2))
    assert res2.returncode == 2
    assert "FAIL" in res2.stdout


def test_sweep_expands_points(tmp_path):
    cfgp = write_config(
        tmp_path,
        sweep=['"cil.creation_probability" = [1.0, 0.5]'],
    )
    res = run_cli("sweep", "--config", str(cfgp), "--jobs", "2")
    assert res.returncode == 0, res.stderr
    d = only_run_dir(tmp_path)
    merged = json.loads((d / "summary.json").read_text())
    assert len(merged["points"]) == 2
    assert (d / "points" / "p000" / "trace_0.csv").exists()
    assert (d / "points" / "p001" / "trace_0.csv").exists()


def test_unknown_check_exits_1(tmp_path):
    cfgp = write_config(tmp_path, verify=['checks = ["nonsense"]'])
    res = run_cli("verify", "--config", str(cfgp))
    assert res.returncode == 1
