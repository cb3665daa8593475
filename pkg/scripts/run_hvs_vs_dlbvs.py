#!/usr/bin/env python3
"""Run the hybrid controller and the pure learned policy from the same start
q = (10, -8) mm with identical seeds and print the comparison table.  Needs
artifacts/policy.hvsw (see prepare_policy.py)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hvservo.config import load_config
from hvservo.harness import ScenarioConfig, run_comparison
from hvservo.network import load_weights


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", default="artifacts/policy.hvsw")
    parser.add_argument("--config", default=None)
    parser.add_argument("--start", default="10,-8")
    parser.add_argument("--out", default="artifacts/comparison")
    args = parser.parse_args()

    cfg = load_config(args.config)
    start = tuple(float(v) for v in args.start.split(","))
    base = ScenarioConfig(
        controller="hvs",
        robot=cfg.robot,
        camera=cfg.camera,
        scene=cfg.scene,
        ibvs_gains=cfg.ibvs_gains,
        dlbvs_gains=cfg.dlbvs_gains,
        hvs=cfg.hvs,
        model=load_weights(args.weights),
        policy_image_size=cfg.policy_image_size,
    )
    hvs_summary, dlbvs_summary = run_comparison(start, base, out_dir=Path(args.out))

    header = f"{'':14s}{'completed':>10s}{'iter time':>12s}{'convergence':>12s}{'final SAD':>11s}{'std (mm)':>20s}{'TPL (mm)':>20s}"
    print(header)
    for summary in (hvs_summary, dlbvs_summary):
        print(
            f"{summary.controller:14s}"
            f"{'yes' if summary.task_completed else 'no':>10s}"
            f"{summary.mean_iteration_time_s:>11.4f}s"
            f"{str(summary.convergence_iteration):>12s}"
            f"{summary.final_sad:>11.4f}"
            f"{f'[{summary.std_mm[0]:.3f}, {summary.std_mm[1]:.3f}]':>20s}"
            f"{f'[{summary.tpl_mm[0]:.3f}, {summary.tpl_mm[1]:.3f}]':>20s}"
        )
    print(f"run logs and comparison.csv in {args.out}")


if __name__ == "__main__":
    main()
