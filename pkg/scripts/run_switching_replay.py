#!/usr/bin/env python3
"""Replay the scripted-occlusion simulation: start far from the target at
q = (-10, 9) mm, hide the markers during iterations 50-80, 110-140 and
190-230, and log how the hybrid controller trades IBVS against the learned
policy.  Needs artifacts/policy.hvsw (see prepare_policy.py)."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hvservo.config import load_config
from hvservo.harness import ScenarioConfig, occlusion_replay_script, run_scenario, save_frames
from hvservo.metrics import summarize, write_run_csv, write_summary_csv
from hvservo.network import load_weights
from hvservo.plots import emit_plots


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", default="artifacts/policy.hvsw")
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default="artifacts/switching_replay")
    parser.add_argument("--frames", type=int, default=50)
    args = parser.parse_args()

    cfg = load_config(args.config)
    scenario = ScenarioConfig(
        start_q_mm=(-10.0, 9.0),
        controller="hvs",
        script=occlusion_replay_script(cfg.camera),
        robot=cfg.robot,
        camera=cfg.camera,
        scene=cfg.scene,
        ibvs_gains=cfg.ibvs_gains,
        dlbvs_gains=cfg.dlbvs_gains,
        hvs=cfg.hvs,
        model=load_weights(args.weights),
        policy_image_size=cfg.policy_image_size,
        name="switching-replay",
    )
    log, frames = run_scenario(scenario, frame_every=args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_run_csv(log, out / "run.csv")
    write_summary_csv([summarize(log)], out / "summary.csv")
    emit_plots(log, out)
    if frames:
        save_frames(frames, out / "frames")

    modes = log.modes
    spans = []
    current = modes[0]
    start = 1
    for i, mode in enumerate(modes[1:], 2):
        if mode != current:
            spans.append((current, start, i - 1))
            current, start = mode, i
    spans.append((current, start, len(modes)))
    print("mode trace:")
    for mode, lo, hi in spans:
        print(f"  {mode:5s} {lo:3d}-{hi:3d}")
    print(f"final SAD {log.records[-1].sad:.4f}; outputs in {out}")


if __name__ == "__main__":
    main()
