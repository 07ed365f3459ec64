"""Command-line entry points.

Subcommands: ``simulate cue-id``, ``simulate guidance``, ``calibrate``,
``replay``, ``report``, ``serve``. Identical flags and seed always produce
bitwise-identical output directories.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .configio import ConfigError, load_session_config
from .harness import Protocol
from .logio import params_to_dict
from .metrics import compute_metrics
from .operator import Condition
from .runner import (
    _cue_id_worker,
    _guidance_worker,
    run_parallel,
    stub_logs,
    trial_filename,
    write_guidance_session,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SEED_COLLISION = 4
EXIT_REPLAY_MISMATCH = 5
EXIT_DATA = 6

DEFAULT_SEED = 9
CONDITION_FLAGS = {"ar": Condition.AR_ONLY, "haptic": Condition.HAPTIC_ONLY,
                   "multi": Condition.MULTIMODAL}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wristcue",
                                     description="Vibrotactile guidance study platform")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulated study")
    sim_sub = sim.add_subparsers(dest="protocol", required=True)

    cue = sim_sub.add_parser("cue-id", help="cue identification sessions")
    cue.add_argument("--participants", type=int, default=21)
    cue.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cue.add_argument("--out", default="out/cue-id")
    cue.add_argument("--config", default=None)
    cue.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    cue.add_argument("--force", action="store_true", help="overwrite an existing run")

    gui = sim_sub.add_parser("guidance", help="guided alignment sessions")
    gui.add_argument("--condition", choices=[*CONDITION_FLAGS, "all"], default="all")
    gui.add_argument("--participants", type=int, default=27)
    gui.add_argument("--seed", type=int, default=DEFAULT_SEED)
    gui.add_argument("--out", default="out/guidance")
    gui.add_argument("--config", default=None)
    gui.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    gui.add_argument("--device-sink", default=None,
                     help="also write delivered frames as 9-byte packets to this file")
    gui.add_argument("--force", action="store_true")

    cal = sub.add_parser("calibrate", help="fit operator parameters to the reported aggregates")
    cal.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cal.add_argument("--participants", type=int, default=27)
    cal.add_argument("--grid", choices=["coarse", "fine"], default="coarse")
    cal.add_argument("--out", default=None, help="write the fitted operator section as JSON")

    rep = sub.add_parser("replay", help="re-execute logs and verify byte identity")
    rep.add_argument("paths", nargs="+")

    rpt = sub.add_parser("report", help="emit CSV tables for a simulation output directory")
    rpt.add_argument("dir")
    rpt.add_argument("--out", default=None, help="target directory (default DIR/report)")

    srv = sub.add_parser("serve", help="start the live session service")
    srv.add_argument("--port", type=int, default=8473)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--out", default="out/interactive")
    srv.add_argument("--config", default=None)
    return parser


def _prepare_out_dir(out_dir: str, manifest: dict, force: bool) -> int | None:
    existing = os.path.join(out_dir, "manifest.json")
    if os.path.exists(existing) and not force:
        try:
            with open(existing) as fh:
                old = json.load(fh)
        except (OSError, json.JSONDecodeError):
            old = {}
        if old.get("seed") == manifest["seed"]:
            print(f"error: {out_dir} already holds a run with seed {manifest['seed']} "
                  f"(use --force to overwrite)", file=sys.stderr)
        else:
            print(f"error: {out_dir} already holds a different run "
                  f"(seed {old.get('seed')}); refusing to mix outputs", file=sys.stderr)
        return EXIT_SEED_COLLISION
    os.makedirs(out_dir, exist_ok=True)
    with open(existing, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return None


def _write_summary(out_dir: str, records: list[tuple[dict, dict]]) -> dict:
    summary = compute_metrics(stub_logs(records)).as_dict()
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def cmd_simulate_cue_id(args) -> int:
    try:
        load_session_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {"version": 1, "protocol": "cue-id", "seed": args.seed,
                "participants": args.participants, "config": args.config}
    rc = _prepare_out_dir(args.out, manifest, args.force)
    if rc is not None:
        return rc
    jobs = [(args.out, args.seed, p, args.config) for p in range(args.participants)]
    results = run_parallel(_cue_id_worker, jobs, args.workers)
    records = [rec for session in results for rec in session]
    summary = _write_summary(args.out, records)
    acc = summary["cue_id"]["overall_accuracy"]
    print(f"wrote {len(records)} cue-id trials for {args.participants} participants "
          f"to {args.out} (overall accuracy {acc:.1%})")
    return EXIT_OK


def cmd_simulate_guidance(args) -> int:
    try:
        session = load_session_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.condition == "all":
        conditions = tuple(Condition)
    else:
        conditions = (CONDITION_FLAGS[args.condition],)
    manifest = {"version": 1, "protocol": "guidance", "seed": args.seed,
                "participants": args.participants,
                "condition": args.condition, "config": args.config}
    rc = _prepare_out_dir(args.out, manifest, args.force)
    if rc is not None:
        return rc

    if args.device_sink:
        # A single byte sink must stay ordered: run in-process.
        records = []
        with open(args.device_sink, "wb") as sink:
            for participant in range(args.participants):
                records.extend(
                    write_guidance_session(args.out, args.seed, participant,
                                           conditions, session, device_sink=sink)
                )
    else:
        condition_values = tuple(c.value for c in conditions)
        jobs = [(args.out, args.seed, p, condition_values, args.config)
                for p in range(args.participants)]
        results = run_parallel(_guidance_worker, jobs, args.workers)
        records = [rec for session_records in results for rec in session_records]
    summary = _write_summary(args.out, records)
    print(f"wrote {len(records)} guidance trials "
          f"({args.participants} participants x {len(conditions)} conditions x 18) to {args.out}")
    for cond_name, stats in sorted(summary["guidance"].items()):
        print(f"  {cond_name:7s} error {stats['error_mean_mm']:.2f} mm  "
              f"time {stats['time_mean_s']:.2f} s  overshoot {stats['overshoot_rate']:.0%}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import calibrate, reported_targets

    if args.grid == "coarse":
        space = {
            "visual_depth_bias_mm": [8.0, 8.65, 9.3],
            "haptic_depth_noise_scale": [2.3, 2.5, 2.7],
            "multimodal_depth_margin_mm": [5.8, 6.3, 6.8],
        }
    else:
        space = {
            "visual_depth_bias_mm": [8.3, 8.5, 8.65, 8.8, 9.0],
            "visual_depth_bias_sd_mm": [1.9, 2.2, 2.5],
            "haptic_depth_noise_scale": [2.4, 2.5, 2.6],
            "haptic_depth_margin_mm": [3.9, 4.15, 4.4],
            "multimodal_depth_margin_mm": [6.0, 6.3, 6.6],
            "multimodal_checking_delay_ms": [250.0, 300.0, 350.0],
        }
    result = calibrate(reported_targets(), space, seed=args.seed,
                       n_participants=args.participants)
    print(f"residual {result.residual:.4f} after {result.evaluations} evaluations")
    for name, value, residual in result.history:
        print(f"  {name} -> {value} (residual {residual:.4f})")
    if args.out:
        doc = {"operator": params_to_dict(result.params),
               "residual": result.residual, "seed": args.seed}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote fitted parameters to {args.out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .replay import replay_paths

    results = replay_paths(args.paths)
    if not results:
        print("error: no logs found", file=sys.stderr)
        return EXIT_DATA
    bad = [r for r in results if not r.ok]
    for r in bad:
        print(f"MISMATCH {r.path}: {r.reason}", file=sys.stderr)
    print(f"replayed {len(results)} log(s): {len(results) - len(bad)} ok, {len(bad)} mismatched")
    return EXIT_OK if not bad else EXIT_REPLAY_MISMATCH


def _load_outcomes(run_dir: str) -> list[tuple[dict, dict]]:
    records = []
    names = sorted(n for n in os.listdir(run_dir) if n.endswith(".jsonl"))
    for name in names:
        path = os.path.join(run_dir, name)
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().split("\n") if ln]
        header = json.loads(lines[0])
        outcome = json.loads(lines[-1])
        if outcome.get("k") != "outcome":
            raise ValueError(f"{path}: missing outcome record")
        outcome.pop("k", None)
        records.append((header["config"], outcome))
    return records


def cmd_report(args) -> int:
    run_dir = args.dir
    if not os.path.isdir(run_dir):
        print(f"error: {run_dir} is not a directory", file=sys.stderr)
        return EXIT_DATA
    try:
        records = _load_outcomes(run_dir)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: unreadable run directory: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not records:
        print("error: no trial logs in directory", file=sys.stderr)
        return EXIT_DATA
    out_dir = args.out or os.path.join(run_dir, "report")
    os.makedirs(out_dir, exist_ok=True)
    summary = compute_metrics(stub_logs(records))
    if summary.protocol is Protocol.GUIDANCE:
        _report_guidance(summary, out_dir)
    else:
        _report_cue_id(summary, out_dir)
    print(f"wrote report tables to {out_dir}")
    return EXIT_OK


def _report_guidance(summary, out_dir: str) -> None:
    with open(os.path.join(out_dir, "guidance_summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["condition", "metric", "mean", "sd"])
        for cond in sorted(summary.guidance, key=lambda c: c.value):
            st = summary.guidance[cond]
            w.writerow([cond.value, "error_mm", f"{st.error_mean_mm:.4f}", f"{st.error_sd_mm:.4f}"])
            w.writerow([cond.value, "time_s", f"{st.time_mean_s:.4f}", f"{st.time_sd_s:.4f}"])
            w.writerow([cond.value, "overshoot_rate", f"{st.overshoot_rate:.4f}", ""])
    with open(os.path.join(out_dir, "anova.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["measure", "F", "df1", "df2", "p"])
        for name, res in (("error_mm", summary.anova_error), ("time_s", summary.anova_time)):
            if res is not None:
                w.writerow([name, f"{res.F:.6f}", res.df1, res.df2, f"{res.p:.6g}"])
    if summary.pairwise_error:
        conds = sorted(summary.guidance, key=lambda c: c.value)
        with open(os.path.join(out_dir, "pairwise_error.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["condition_a", "condition_b", "t", "p_bonferroni"])
            for res in summary.pairwise_error:
                a, b = res.pair
                w.writerow([conds[a].value, conds[b].value, f"{res.t:.6f}", f"{res.p:.6g}"])


def _report_cue_id(summary, out_dir: str) -> None:
    stats = summary.cue_id
    with open(os.path.join(out_dir, "cue_accuracy.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cue", "accuracy"])
        for cue, acc in stats.per_cue_accuracy.items():
            w.writerow([cue, f"{acc:.4f}"])
        w.writerow(["overall", f"{stats.overall_accuracy:.4f}"])
    with open(os.path.join(out_dir, "response_time.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "seconds"])
        w.writerow(["rt_mean", f"{stats.rt_mean_s:.4f}"])
        w.writerow(["rt_sd", f"{stats.rt_sd_s:.4f}"])
    with open(os.path.join(out_dir, "confusion_matrix.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        perceived = list(next(iter(stats.confusion.values())).keys())
        w.writerow(["true\\perceived", *perceived])
        for true, row in stats.confusion.items():
            w.writerow([true, *[row.get(p, 0) for p in perceived]])


def cmd_serve(args) -> int:
    try:
        session = load_session_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    import uvicorn

    from .service import create_app

    app = create_app(out_dir=args.out, session=session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate":
        if args.protocol == "cue-id":
            return cmd_simulate_cue_id(args)
        return cmd_simulate_guidance(args)
    if args.command == "calibrate":
        return cmd_calibrate(args)
    if args.command == "replay":
        return cmd_replay(args)
    if args.command == "report":
        return cmd_report(args)
    if args.command == "serve":
        return cmd_serve(args)
    parser.error(f"unknown command {args.command}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
