#!/usr/bin/env python3
"""Render the spiral dataset and train the servo policy with the default
recipe, writing artifacts/dataset/ and artifacts/policy.hvsw."""

import argparse
import csv
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from hvservo.config import load_config
from hvservo.dataset import generate_dataset, save_dataset
from hvservo.network import save_weights, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default="artifacts")
    args = parser.parse_args()

    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    ds = generate_dataset(
        cfg.scene,
        cfg.camera,
        cfg.robot,
        amplitude_mm=cfg.spiral_amplitude_mm,
        periods=cfg.spiral_periods,
        count=cfg.dataset_count,
        shadow_fraction=cfg.shadow_fraction,
        occlusion_fraction=cfg.occlusion_fraction,
        seed=cfg.seed,
        image_size=cfg.policy_image_size,
        label_units=cfg.label_units,
    )
    print(f"rendered {len(ds.images)} samples in {time.perf_counter() - t0:.0f}s")
    save_dataset(ds, out / "dataset")

    t0 = time.perf_counter()
    model, curve = train(ds, cfg.train, seed=cfg.seed)
    print(f"trained {cfg.train.epochs} epochs in {time.perf_counter() - t0:.0f}s, "
          f"final MSE {curve[-1]:.3e}")
    save_weights(model, out / "policy.hvsw")
    with open(out / "training_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_mse"])
        for epoch, mse in enumerate(curve, 1):
            writer.writerow([epoch, repr(float(mse))])
    print(f"wrote {out / 'policy.hvsw'}")


if __name__ == "__main__":
    main()
