#!/usr/bin/env python3
"""Grid-refit the operator parameters against the reported aggregates.

Thin wrapper over `wristcue calibrate`; prints the residual trajectory and
final parameters. Slow at full participant count: budget a few minutes.
"""

import argparse
import json

from wristcue.calibration import calibrate, reported_targets
from wristcue.logio import params_to_dict


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--participants", type=int, default=27)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    space = {
        "visual_depth_bias_mm": [8.3, 8.65, 9.0],
        "visual_depth_bias_sd_mm": [1.9, 2.2, 2.5],
        "haptic_depth_noise_scale": [2.4, 2.5, 2.6],
        "haptic_depth_margin_mm": [3.9, 4.15, 4.4],
        "multimodal_depth_margin_mm": [6.0, 6.3, 6.6],
    }
    result = calibrate(reported_targets(), space, seed=args.seed,
                       n_participants=args.participants)
    print(f"residual {result.residual:.4f} after {result.evaluations} evaluations")
    for name, value, residual in result.history:
        print(f"  {name:30s} -> {value:<8g} residual {residual:.4f}")
    doc = {"operator": params_to_dict(result.params)}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
