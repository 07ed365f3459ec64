import csv
import filecmp
import json
import os

import pytest

from wristcue.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_REPLAY_MISMATCH,
    EXIT_SEED_COLLISION,
    main,
)


def run_cli(*args):
    return main([str(a) for a in args])


def list_trials(path):
    return sorted(p for p in os.listdir(path) if p.endswith(".jsonl"))


def test_simulate_cue_id_counts(tmp_path):
    out = tmp_path / "cueid"
    assert run_cli("simulate", "cue-id", "--participants", 2, "--seed", 9,
                   "--out", out, "--workers", 1) == EXIT_OK
    assert len(list_trials(out)) == 100
    summary = json.loads((out / "summary.json").read_text())
    confusion = summary["cue_id"]["confusion"]
    for cue, row in confusion.items():
        assert sum(row.values()) == 20  # 10 per cue per participant


def test_simulate_guidance_counts_single_condition(tmp_path):
    out = tmp_path / "gui"
    assert run_cli("simulate", "guidance", "--participants", 1, "--condition", "ar",
                   "--seed", 9, "--out", out, "--workers", 1) == EXIT_OK
    assert len(list_trials(out)) == 18
    summary = json.loads((out / "summary.json").read_text())
    assert summary["guidance"]["ar"]["n_trials"] == 18


def test_seed_collision_detected(tmp_path):
    out = tmp_path / "gui"
    run_cli("simulate", "guidance", "--participants", 1, "--condition", "ar",
            "--seed", 9, "--out", out, "--workers", 1)
    rc = run_cli("simulate", "guidance", "--participants", 1, "--condition", "ar",
                 "--seed", 9, "--out", out, "--workers", 1)
    assert rc == EXIT_SEED_COLLISION
    # Different seed into the same directory is refused as well.
    rc = run_cli("simulate", "guidance", "--participants", 1, "--condition", "ar",
                 "--seed", 10, "--out", out, "--workers", 1)
    assert rc == EXIT_SEED_COLLISION
    # --force allows a rerun.
    rc = run_cli("simulate", "guidance", "--participants", 1, "--condition", "ar",
                 "--seed", 9, "--out", out, "--workers", 1, "--force")
    assert rc == EXIT_OK


def test_cli_determinism_bitwise(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        run_cli("simulate", "guidance", "--participants", 1, "--condition", "multi",
                "--seed", 13, "--out", out, "--workers", 1)
    names = list_trials(a)
    assert names == list_trials(b)
    for name in names + ["summary.json"]:
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_workers_do_not_change_outputs(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_cli("simulate", "guidance", "--participants", 2, "--condition", "haptic",
            "--seed", 4, "--out", a, "--workers", 1)
    run_cli("simulate", "guidance", "--participants", 2, "--condition", "haptic",
            "--seed", 4, "--out", b, "--workers", 2)
    for name in list_trials(a) + ["summary.json"]:
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_replay_command(tmp_path):
    out = tmp_path / "gui"
    run_cli("simulate", "guidance", "--participants", 1, "--condition", "haptic",
            "--seed", 9, "--out", out, "--workers", 1)
    assert run_cli("replay", out) == EXIT_OK
    victim = out / list_trials(out)[0]
    victim.write_bytes(victim.read_bytes().replace(b'"z":200.000', b'"z":200.111', 1))
    assert run_cli("replay", out) == EXIT_REPLAY_MISMATCH


def test_report_guidance_rows(tmp_path):
    out = tmp_path / "gui"
    run_cli("simulate", "guidance", "--participants", 2, "--seed", 9,
            "--out", out, "--workers", 1)
    assert run_cli("report", out) == EXIT_OK
    with open(out / "report" / "guidance_summary.csv") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    assert header == ["condition", "metric", "mean", "sd"]
    assert len(body) == 9  # 3 conditions x {error, time, overshoot}
    assert {r[0] for r in body} == {"ar", "haptic", "multi"}
    assert {r[1] for r in body} == {"error_mm", "time_s", "overshoot_rate"}
    assert (out / "report" / "anova.csv").exists()


def test_report_cue_id(tmp_path):
    out = tmp_path / "cueid"
    run_cli("simulate", "cue-id", "--participants", 1, "--seed", 9,
            "--out", out, "--workers", 1)
    assert run_cli("report", out) == EXIT_OK
    with open(out / "report" / "cue_accuracy.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["cue", "accuracy"]
    assert len(rows) == 7  # 5 cues + overall + header


def test_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"policy": {"axis_threshold_mm": -2}}')
    rc = run_cli("simulate", "guidance", "--participants", 1, "--seed", 1,
                 "--out", tmp_path / "x", "--config", cfg)
    assert rc == EXIT_CONFIG


def test_unknown_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("simulate", "guidance", "--frobnicate")
    assert exc.value.code == 2


def test_device_sink_stream(tmp_path):
    out = tmp_path / "gui"
    sink = tmp_path / "frames.bin"
    run_cli("simulate", "guidance", "--participants", 1, "--condition", "haptic",
            "--seed", 9, "--out", out, "--workers", 1, "--device-sink", sink)
    data = sink.read_bytes()
    assert len(data) % 9 == 0 and len(data) > 0
    from wristcue.actuation import decode_frame

    frames = [decode_frame(data[i:i + 9]) for i in range(0, min(len(data), 9 * 500), 9)]
    assert all(0 <= f.seq <= 255 for f in frames)


def test_calibrate_writes_params(tmp_path):
    out_file = tmp_path / "fit.json"
    rc = run_cli("calibrate", "--seed", 3, "--participants", 2, "--out", out_file)
    assert rc == EXIT_OK
    doc = json.loads(out_file.read_text())
    assert "operator" in doc and "residual" in doc
