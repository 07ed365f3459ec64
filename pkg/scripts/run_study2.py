#!/usr/bin/env python3
"""Reproduce the guided-alignment study and print per-condition aggregates,
the repeated-measures ANOVA, and the pairwise contrasts."""

import argparse

from wristcue.harness import run_guidance_study
from wristcue.metrics import compute_metrics


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--participants", type=int, default=27)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    logs = run_guidance_study(args.participants, root_seed=args.seed,
                              collect_streams=False)
    summary = compute_metrics(logs)
    print(f"{args.participants} participants x 3 conditions x 18 trials = {len(logs)} trials")
    print(f"{'condition':10s} {'error mm':>12s} {'time s':>12s} {'overshoot':>10s}")
    conditions = sorted(summary.guidance, key=lambda c: c.value)
    for cond in conditions:
        st = summary.guidance[cond]
        print(f"{cond.value:10s} {st.error_mean_mm:6.2f} ({st.error_sd_mm:4.2f}) "
              f"{st.time_mean_s:6.2f} ({st.time_sd_s:4.2f}) {st.overshoot_rate:9.1%}")
    if summary.anova_error:
        a = summary.anova_error
        print(f"error ANOVA: F({a.df1},{a.df2}) = {a.F:.2f}, p = {a.p:.2g}")
    if summary.anova_time:
        a = summary.anova_time
        print(f"time  ANOVA: F({a.df1},{a.df2}) = {a.F:.2f}, p = {a.p:.2g}")
    for res in summary.pairwise_error:
        i, j = res.pair
        print(f"paired t ({conditions[i].value} vs {conditions[j].value}): "
              f"t = {res.t:.2f}, Bonferroni p = {res.p:.2g}")


if __name__ == "__main__":
    main()
