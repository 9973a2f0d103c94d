import json
import math

import pytest
from click.testing import CliRunner

from retreatwave.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


def test_semiwave_zero_speed(tmp_path, runner):
    out = tmp_path / "sw"
    res = invoke(runner, ["semiwave", "--f", "logistic:r=1", "--d", "1", "--delta", "2",
                          "--c", "0", "--out", str(out)])
    assert res.exit_code == 0, res.output
    payload = json.loads((out / "semiwave.json").read_text())
    assert payload["endpoint_slope"] == pytest.approx(-math.sqrt(5.0 / 3.0), abs=1e-8)
    assert (out / "trajectory.csv").read_text().splitlines()[0] == "q,P"
    assert (out / "profile.csv").read_text().splitlines()[0] == "x,q"


def test_semiwave_auto_speed_obeys_boundary_law(tmp_path, runner):
    out = tmp_path / "sw"
    res = invoke(runner, ["semiwave", "--delta", "2", "--c", "auto", "--out", str(out)])
    assert res.exit_code == 0, res.output
    payload = json.loads((out / "semiwave.json").read_text())
    assert payload["endpoint_slope"] == pytest.approx(2.0 * payload["c"], abs=1e-8)


def test_semiwave_rejects_small_delta(tmp_path, runner):
    res = runner.invoke(main, ["semiwave", "--delta", "0.9", "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "delta must exceed 1" in res.output


def test_semiwave_rejects_malformed_speed(tmp_path, runner):
    res = runner.invoke(main, ["semiwave", "--c", "fast", "--out", str(tmp_path)])
    assert res.exit_code == 1


def test_speed_json_and_determinism(tmp_path, runner):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        res = invoke(runner, ["speed", "--delta", "2", "--audit-grid", "12",
                              "--out", str(out)])
        assert res.exit_code == 0, res.output
    assert (out1 / "speed.json").read_bytes() == (out2 / "speed.json").read_bytes()
    assert (out1 / "audit.csv").read_bytes() == (out2 / "audit.csv").read_bytes()
    payload = json.loads((out1 / "speed.json").read_text())
    assert payload["retreat_speed"] > 0
    assert payload["residual"] <= 1e-10


def test_sweep_monotone_column(tmp_path, runner):
    out = tmp_path / "sweep"
    res = invoke(runner, ["sweep", "--deltas", "1.1,1.5,2", "--out", str(out)])
    assert res.exit_code == 0, res.output
    lines = (out / "sweep.csv").read_text().splitlines()
    speeds = [float(line.split(",")[2]) for line in lines[1:]]
    assert speeds == sorted(speeds)
    assert len(speeds) == 3


def test_sweep_range_spec(tmp_path, runner):
    out = tmp_path / "sweeprange"
    res = invoke(runner, ["sweep", "--deltas", "1.5:2.5:0.5", "--out", str(out)])
    assert res.exit_code == 0, res.output
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4  # header + 1.5, 2.0, 2.5


def test_sweep_rejects_bad_spec(tmp_path, runner):
    res = runner.invoke(main, ["sweep", "--deltas", "2:1:-1", "--out", str(tmp_path)])
    assert res.exit_code == 1


def test_delta_range_parser_counts():
    from retreatwave.cli import _parse_deltas

    values = _parse_deltas("1.1:3:0.1")
    assert len(values) == 20
    assert values[0] == pytest.approx(1.1) and values[-1] == pytest.approx(3.0)
    assert _parse_deltas("1.5,2,2.5") == [1.5, 2.0, 2.5]


def test_simulate_zero_horizon(tmp_path, runner):
    out = tmp_path / "sim"
    res = invoke(runner, ["simulate", "--u0", "constant_delta", "--T", "0",
                          "--N", "200", "--L", "20", "--out", str(out)])
    assert res.exit_code == 0, res.output
    lines = (out / "run.csv").read_text().splitlines()
    assert lines[0] == "t,g,g_prime,sup_profile_error,min_U,max_U"
    assert len(lines) == 2
    assert (out / "final_state.csv").exists()


def test_simulate_custom_table(tmp_path, runner):
    table = tmp_path / "u0.csv"
    table.write_text("y,u\n0,2\n10,1.2\n20,1\n")
    out = tmp_path / "sim"
    res = invoke(runner, ["simulate", "--u0", "custom_table", "--table", str(table),
                          "--T", "0.1", "--N", "200", "--L", "20",
                          "--output-every", "0.05", "--out", str(out)])
    assert res.exit_code == 0, res.output


def test_simulate_unknown_preset(tmp_path, runner):
    res = runner.invoke(main, ["simulate", "--u0", "mystery", "--out", str(tmp_path)])
    assert res.exit_code == 1


def test_simulate_snapshot_times(tmp_path, runner):
    out = tmp_path / "sim"
    res = invoke(runner, ["simulate", "--u0", "constant_delta", "--T", "0.2",
                          "--N", "200", "--L", "20", "--output-every", "0.05",
                          "--snapshot-times", "0.1,0.2", "--out", str(out)])
    assert res.exit_code == 0, res.output
    for name in ("snapshot_t0.1.csv", "snapshot_t0.2.csv"):
        lines = (out / name).read_text().splitlines()
        assert lines[0] == "y,U"
        assert len(lines) == 202


def test_simulate_unstable_dt_exits_numerical(tmp_path, runner):
    # dt far above the advection constraint for the initial front speed
    res = runner.invoke(main, ["simulate", "--u0", "exp_approach", "--T", "1",
                               "--N", "200", "--L", "20", "--dt", "1.0",
                               "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_simulate_verify_roundtrip(tmp_path, runner):
    sim_out = tmp_path / "sim"
    res = invoke(runner, ["simulate", "--u0", "semiwave", "--T", "1", "--N", "400",
                          "--L", "40", "--output-every", "0.25", "--verify",
                          "--speed-rtol", "0.05", "--out", str(sim_out)])
    assert res.exit_code == 0, res.output
    assert (sim_out / "verify.json").exists()

    speed_out = tmp_path / "speed"
    invoke(runner, ["speed", "--delta", "2", "--out", str(speed_out)])
    verify_out = tmp_path / "check"
    res = invoke(runner, ["verify", "--record", str(sim_out / "run.csv"),
                          "--speed", str(speed_out / "speed.json"),
                          "--speed-rtol", "0.05", "--out", str(verify_out)])
    assert res.exit_code == 0, res.output
    payload = json.loads((verify_out / "verify.json").read_text())
    assert payload["final_speed_error"] < 0.05 * payload["c_target"]


def test_verify_exit_code_on_failure(tmp_path, runner):
    sim_out = tmp_path / "sim"
    invoke(runner, ["simulate", "--u0", "semiwave", "--T", "0.5", "--N", "400",
                    "--L", "40", "--output-every", "0.25", "--verify",
                    "--speed-rtol", "0.05", "--out", str(sim_out)])
    speed_out = tmp_path / "speed"
    invoke(runner, ["speed", "--delta", "2", "--out", str(speed_out)])
    res = runner.invoke(main, ["verify", "--record", str(sim_out / "run.csv"),
                               "--speed", str(speed_out / "speed.json"),
                               "--speed-rtol", "1e-6", "--out", str(tmp_path / "v")])
    assert res.exit_code == 3


def test_sequences_subcommand(tmp_path, runner):
    out = tmp_path / "seq"
    res = invoke(runner, ["sequences", "--delta", "2", "--n-max", "5", "--out", str(out)])
    assert res.exit_code == 0, res.output
    payload = json.loads((out / "sequences.json").read_text())
    assert payload["lower_final_c"] < payload["c_star"] < payload["upper_final_c"]
    lines = (out / "sequences_upper.csv").read_text().splitlines()
    assert lines[0] == "n,c,slope_at_zero,sup_gap"
    assert len(lines) == 7  # header + c_0..c_5


def test_config_file_precedence(tmp_path, runner):
    conf = tmp_path / "run.conf"
    conf.write_text("delta = 2.5\nd = 1.0\nreaction = logistic:r=1\n")
    out1 = tmp_path / "fromfile"
    res = invoke(runner, ["speed", "--config", str(conf), "--out", str(out1)])
    assert res.exit_code == 0, res.output
    assert json.loads((out1 / "speed.json").read_text())["delta"] == 2.5
    out2 = tmp_path / "flagwins"
    res = invoke(runner, ["speed", "--config", str(conf), "--delta", "3",
                          "--out", str(out2)])
    assert res.exit_code == 0, res.output
    assert json.loads((out2 / "speed.json").read_text())["delta"] == 3.0


def test_config_rejects_unknown_key(tmp_path, runner):
    conf = tmp_path / "bad.conf"
    conf.write_text("bogus = 1\n")
    res = runner.invoke(main, ["speed", "--config", str(conf), "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "unknown config key" in res.output
