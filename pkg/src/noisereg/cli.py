"""Command-line interface.

Subcommands: train, enhance, eval, predict-mapping, experiment.
Configuration precedence: CLI flags > config file (key=value lines) >
built-in defaults. Exit codes: 0 success, 1 usage error, 2 I/O error,
3 numerical failure.
"""

import argparse
import csv
import datetime
import json
import logging
import sys
import time
from importlib.metadata import version as pkg_version
from pathlib import Path

from . import colors as color_logic
from .data import PALETTE_COLORS
from .enhance import enhance, enhance_dir, load_image, save_image
from .experiments import EXPERIMENT_NAMES, run_experiment
from .metrics import channel_means, color_constancy, grey_distance, psnr, ssim
from .model import CheckpointError, srm_load, srm_save
from .training import TrainConfig, TrainingError, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

VARIANTS = {
    "fc": {"iters": 2000, "sigma": 1.0},
    "es": {"iters": 600, "sigma": 1.0},
    "var3": {"iters": 2000, "sigma": 3.0},
}

DEFAULTS = {
    "mode": "noise",
    "variant": "fc",
    "seed": 0,
    "iters": None,   # resolved from variant when unset
    "sigma": None,
    "lr": 2e-4,
    "width": 9,
    "probe_every": 10,
    "tv_weight": 0.1,
    "no_in": False,
}

log = logging.getLogger("noisereg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_color(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"color must be R,G,B, got {text!r}")
    try:
        color = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad color {text!r}") from exc
    if any(v < 0 or v > 255 for v in color):
        raise argparse.ArgumentTypeError(f"color channels must be 0-255, got {text!r}")
    return color


def _read_config_file(path):
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _resolve(args, file_cfg, key, cast):
    """flag > config file > default"""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_cfg:
        raw = file_cfg[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return DEFAULTS[key]


def _write_manifest(out_dir, command, config, seed, started, outputs):
    try:
        code_version = pkg_version("noisereg")
    except Exception:
        code_version = "unknown"
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "code_version": code_version,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
    return path


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def cmd_train(args):
    file_cfg = _read_config_file(args.config) if args.config else {}
    variant = _resolve(args, file_cfg, "variant", str)
    if variant not in VARIANTS:
        raise UsageError(f"unknown variant {variant!r}")
    preset = VARIANTS[variant]
    mode = _resolve(args, file_cfg, "mode", str).replace("-", "_")
    iters = _resolve(args, file_cfg, "iters", int) or preset["iters"]
    sigma = _resolve(args, file_cfg, "sigma", float) or preset["sigma"]
    seed = _resolve(args, file_cfg, "seed", int)
    width = _resolve(args, file_cfg, "width", int)
    lr = _resolve(args, file_cfg, "lr", float)
    probe_every = _resolve(args, file_cfg, "probe_every", int)
    tv_weight = _resolve(args, file_cfg, "tv_weight", float)
    no_in = args.no_in or (_resolve(args, file_cfg, "no_in", bool) is True)
    color = args.color
    if color is None and "color" in file_cfg:
        try:
            color = _parse_color(file_cfg["color"])
        except argparse.ArgumentTypeError as exc:
            raise UsageError(str(exc)) from exc
    if mode == "pure_color" and color is None:
        raise UsageError("--color is required with --mode pure-color")

    try:
        config = TrainConfig(
            mode=mode,
            color=color,
            iterations=iters,
            learning_rate=lr,
            sigma=sigma,
            seed=seed,
            probe_every=probe_every,
            tv_weight=tv_weight,
            hidden_width=width,
            disable_instance_norm=no_in,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    params, curve_log = train(config)
    ckpt = out_dir / "model.nser"
    curves = out_dir / "curves.csv"
    srm_save(params, ckpt)
    curve_log.to_csv(curves)
    _write_manifest(
        out_dir,
        "train",
        {**config.__dict__, "variant": variant},
        seed,
        started,
        [ckpt, curves],
    )
    print(f"trained {config.mode} model ({config.iterations} iters) -> {ckpt}")
    return EXIT_OK


def cmd_enhance(args):
    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        print(f"error: checkpoint not found: {ckpt}", file=sys.stderr)
        return EXIT_IO
    params = srm_load(ckpt)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    times = []
    for item in args.inputs:
        path = Path(item)
        if path.is_dir():
            report = enhance_dir(params, path, out_dir)
            total += report.count
            times.extend(report.times_ms)
        elif path.is_file():
            img = load_image(path)
            start = time.perf_counter()
            out = enhance(params, img)
            times.append((time.perf_counter() - start) * 1000.0)
            save_image(out, out_dir / path.name)
            total += 1
        else:
            print(f"error: no such input: {path}", file=sys.stderr)
            return EXIT_IO
    print(f"enhanced {total} image(s) -> {out_dir}")
    if args.time and times:
        for t in times:
            print(f"  {t:.2f} ms")
        print(f"mean inference time: {sum(times) / len(times):.2f} ms")
    return EXIT_OK


def cmd_eval(args):
    enh_dir = Path(args.enhanced)
    ref_dir = Path(args.reference)
    if not enh_dir.is_dir() or not ref_dir.is_dir():
        print("error: both --enhanced and --reference must be directories", file=sys.stderr)
        return EXIT_IO
    rows = []
    for path in sorted(enh_dir.iterdir()):
        if path.suffix.lower() not in (".png", ".ppm"):
            continue
        ref_path = ref_dir / path.name
        if not ref_path.exists():
            log.warning("no reference for %s, skipping", path.name)
            continue
        a = load_image(path)
        b = load_image(ref_path)
        r, g, bl = channel_means(a)
        rows.append(
            [path.name, psnr(a, b), ssim(a, b), grey_distance(a), color_constancy(a), r, g, bl]
        )
    writer = csv.writer(sys.stdout if args.out is None else open(args.out, "w", newline=""))
    writer.writerow(
        ["file", "psnr", "ssim", "grey_distance", "color_constancy", "mean_r", "mean_g", "mean_b"]
    )
    for row in rows:
        writer.writerow([row[0]] + [f"{v:.6f}" for v in row[1:]])
    if rows:
        agg = [sum(r[i] for r in rows) / len(rows) for i in range(1, 8)]
        writer.writerow(["mean"] + [f"{v:.6f}" for v in agg])
    return EXIT_OK


def cmd_predict_mapping(args):
    train_color = args.train_color
    names = ["white", "cyan", "purple", "yellow", "red", "green", "blue", "black"]
    try:
        rows = []
        for color, name in zip(PALETTE_COLORS, names):
            predicted = color_logic.predict_mapping(train_color, color)
            rows.append((name, color, predicted))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trends = ["down" if t < 128 else "up" for t in train_color]
    print(f"training color: {train_color}  trends: R:{trends[0]} G:{trends[1]} B:{trends[2]}")
    print(f"{'color':<8}{'RGB':<16}{'satisfied':<11}{'maps to'}")
    for name, color, predicted in rows:
        satisfied = sum(
            (v > 0) if t < 128 else (v < 255) for t, v in zip(train_color, color)
        )
        target = "train" if predicted == tuple(train_color) else "opposite"
        print(f"{name:<8}{str(color):<16}{satisfied:<11}{target} {predicted}")
    return EXIT_OK


def cmd_experiment(args):
    if args.name not in EXPERIMENT_NAMES:
        raise UsageError(f"unknown experiment {args.name!r}, choose from {', '.join(EXPERIMENT_NAMES)}")
    out_dir = Path(args.out)
    started = _now()
    outputs = run_experiment(args.name, out_dir, seed=args.seed, iterations=args.iters)
    _write_manifest(
        out_dir,
        f"experiment {args.name}",
        {"name": args.name, "iterations": args.iters},
        args.seed,
        started,
        outputs,
    )
    print(f"experiment {args.name}: wrote {len(outputs)} file(s) to {out_dir}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="noisereg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a self-regression model")
    p_train.add_argument("--variant", choices=sorted(VARIANTS), default=None,
                         help="fc: 2000 iters sigma 1; es: 600 iters; var3: sigma 3")
    p_train.add_argument("--mode", choices=["noise", "pure-color", "palette"], default=None)
    p_train.add_argument("--color", type=_parse_color, default=None, help="R,G,B for pure-color mode")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--iters", type=int, default=None)
    p_train.add_argument("--sigma", type=float, default=None)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--width", type=int, default=None)
    p_train.add_argument("--probe-every", type=int, default=None, dest="probe_every")
    p_train.add_argument("--tv-weight", type=float, default=None, dest="tv_weight",
                         help="weight of the smoothness term in the loss")
    p_train.add_argument("--no-in", action="store_true", dest="no_in",
                         help="replace instance norm with identity (ablation)")
    p_train.add_argument("--config", default=None, help="key=value config file")
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=cmd_train)

    p_enh = sub.add_parser("enhance", help="enhance images with a trained checkpoint")
    p_enh.add_argument("--checkpoint", required=True)
    p_enh.add_argument("--out", required=True)
    p_enh.add_argument("--time", action="store_true", help="print per-image milliseconds")
    p_enh.add_argument("inputs", nargs="+", help="image files or directories")
    p_enh.set_defaults(func=cmd_enhance)

    p_eval = sub.add_parser("eval", help="compute metrics for enhanced/reference pairs")
    p_eval.add_argument("--enhanced", required=True)
    p_eval.add_argument("--reference", required=True)
    p_eval.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p_eval.set_defaults(func=cmd_eval)

    p_map = sub.add_parser("predict-mapping", help="print the color-trend mapping table")
    p_map.add_argument("--train-color", type=_parse_color, required=True, dest="train_color")
    p_map.set_defaults(func=cmd_predict_mapping)

    p_exp = sub.add_parser("experiment", help="run a scripted diagnostic experiment")
    p_exp.add_argument("name", help=f"one of: {', '.join(EXPERIMENT_NAMES)}")
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--seed", type=int, default=None)
    p_exp.add_argument("--iters", type=int, default=2000)
    p_exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckpointError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
