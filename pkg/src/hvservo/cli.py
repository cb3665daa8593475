"""Command-line surface: dataset generation, training, threshold calibration,
servo runs, the HVS/DLBVS comparison, and run reports."""

import argparse
import csv
import sys
from pathlib import Path

from .config import load_config
from .dataset import generate_dataset, load_dataset, save_dataset
from .harness import ScenarioConfig, run_comparison, run_scenario, save_frames
from .hvs import calibrate_switch_threshold
from .metrics import read_run_csv, summarize, write_run_csv, write_summary_csv
from .network import load_weights, save_weights, train
from .plots import emit_plots


def _parse_start(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("start must be 'q1,q2' in mm")
    return (float(parts[0]), float(parts[1]))


def _scenario_from(cfg, controller, start, model):
    return ScenarioConfig(
        start_q_mm=start,
        controller=controller,
        script=cfg.script,
        seed=cfg.seed,
        robot=cfg.robot,
        camera=cfg.camera,
        scene=cfg.scene,
        ibvs_gains=cfg.ibvs_gains,
        dlbvs_gains=cfg.dlbvs_gains,
        hvs=cfg.hvs,
        model=model,
        policy_image_size=cfg.policy_image_size,
    )


def _print_summary(summary):
    conv = summary.convergence_iteration
    print(
        f"{summary.controller or 'run'}: completed={'yes' if summary.task_completed else 'no'} "
        f"mean_iter={summary.mean_iteration_time_s:.4f}s "
        f"convergence={conv if conv is not None else '-'} "
        f"final_sad={summary.final_sad:.4f} "
        f"std=({summary.std_mm[0]:.4f}, {summary.std_mm[1]:.4f})mm "
        f"tpl=({summary.tpl_mm[0]:.4f}, {summary.tpl_mm[1]:.4f})mm"
    )


def cmd_gen_dataset(args):
    cfg = load_config(args.config)
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
    save_dataset(ds, args.out)
    print(f"wrote {len(ds.images)} samples to {args.out}")


def cmd_train(args):
    cfg = load_config(args.config)
    ds = load_dataset(args.dataset)
    model, curve = train(ds, cfg.train, seed=cfg.seed)
    save_weights(model, args.out)
    log_path = Path(args.out).with_name("training_log.csv")
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_mse"])
        for epoch, mse in enumerate(curve, 1):
            writer.writerow([epoch, repr(float(mse))])
    print(f"trained {cfg.train.epochs} epochs, final MSE {curve[-1]:.6g}; weights -> {args.out}")


def cmd_calibrate(args):
    cfg = load_config(args.config)
    threshold = calibrate_switch_threshold(
        cfg.scene,
        cfg.camera,
        cfg.robot,
        cfg.ibvs_gains,
        cfg=cfg.hvs,
        image_size=cfg.policy_image_size,
    )
    print(f"switch_threshold = {threshold:.6g}")


def cmd_servo(args):
    cfg = load_config(args.config)
    model = None
    if args.controller in ("dlbvs", "hvs"):
        model = load_weights(args.weights or cfg.weights_file)
    scenario = _scenario_from(cfg, args.controller, args.start, model)
    log, frames = run_scenario(scenario, frame_every=args.frames)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_run_csv(log, out / "run.csv")
    summary = summarize(log)
    write_summary_csv([summary], out / "summary.csv")
    emit_plots(log, out)
    if frames:
        save_frames(frames, out / "frames")
    _print_summary(summary)


def cmd_compare(args):
    cfg = load_config(args.config)
    model = load_weights(args.weights or cfg.weights_file)
    base = _scenario_from(cfg, "hvs", args.start, model)
    hvs_summary, dlbvs_summary = run_comparison(args.start, base, out_dir=args.out)
    _print_summary(hvs_summary)
    _print_summary(dlbvs_summary)


def cmd_report(args):
    run_dir = Path(args.run)
    log = read_run_csv(run_dir / "run.csv")
    summary = summarize(log)
    write_summary_csv([summary], run_dir / "summary.csv")
    emit_plots(log, run_dir)
    _print_summary(summary)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hvservo",
        description="Hybrid visual servoing workbench for a tendon-driven continuum robot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="render the spiral training dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train the convolutional policy")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="calibrate the IBVS/DLBVS switch threshold")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("servo", help="run one closed-loop scenario")
    p.add_argument("--controller", choices=("ibvs", "dlbvs", "hvs"), required=True)
    p.add_argument("--start", type=_parse_start, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--frames", type=int, default=0, help="save every k-th camera frame")
    p.set_defaults(func=cmd_servo)

    p = sub.add_parser("compare", help="run HVS and DLBVS from the same start")
    p.add_argument("--start", type=_parse_start, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--weights", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="summarize and plot a persisted run")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # surface startup errors as clean CLI failures
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
