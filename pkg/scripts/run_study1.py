#!/usr/bin/env python3
"""Reproduce the cue-identification study end to end and print the figures.

Equivalent to `wristcue simulate cue-id` plus a readable console summary.
"""

import argparse

from wristcue.harness import run_cue_id_study
from wristcue.metrics import compute_metrics


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--participants", type=int, default=21)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    logs = run_cue_id_study(args.participants, root_seed=args.seed)
    stats = compute_metrics(logs).cue_id
    print(f"{args.participants} participants x 50 trials = {stats.n_trials} trials")
    print(f"overall accuracy: {stats.overall_accuracy:.1%}")
    print(f"response time:    {stats.rt_mean_s:.2f} s (SD {stats.rt_sd_s:.2f})")
    print("per-cue accuracy:")
    for cue, acc in stats.per_cue_accuracy.items():
        print(f"  {cue:8s} {acc:.1%}")
    print("confusion matrix (true rows, perceived columns):")
    names = list(stats.confusion)
    print("          " + " ".join(f"{n:>8s}" for n in names))
    for true in names:
        row = stats.confusion[true]
        print(f"  {true:8s}" + " ".join(f"{row[n]:8d}" for n in names))


if __name__ == "__main__":
    main()
