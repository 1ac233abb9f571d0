"""Command-line surface: data generation, training, evaluation,
gradient verification, parameter counting and the layer-count sweep.

Every command is deterministic given its seed. Exit codes are uniform:
0 success, 1 runtime/numeric failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import data as data_mod
from .model import (
    Model,
    RMNConfig,
    check_gradients,
    init_params,
    load_checkpoint,
    param_count,
    param_count_lstmp,
    randomize_params,
    save_checkpoint,
)
from .numerics import DimensionError, LabelError, NumericError
from .trainer import (
    METRICS_HEADER,
    TrainConfig,
    EpochStats,
    evaluate,
    evaluate_streaming,
    fit,
    format_stats_row,
)


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, missing key, bad value)."""


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_opt_int(text: str):
    return None if text.strip().lower() == "none" else int(text)


# key -> (parser, default); _REQUIRED defaults must come from the file/flags
_REQUIRED = object()

EXPERIMENT_KEYS = {
    "train_archive": (str, _REQUIRED),
    "valid_archive": (str, _REQUIRED),
    "out_dir": (str, _REQUIRED),
    "num_memory_layers": (int, _REQUIRED),
    "wide_dim": (int, 1024),
    "memory_dim": (int, 512),
    "direction": (str, "uni"),
    "shared_weight_form": (str, "diagonal"),
    "residual_interval": (_parse_opt_int, 3),
    "delay_enabled": (_parse_bool, True),
    "splice_left": (int, 0),
    "splice_right": (int, 0),
    "schedule": (str, "ramp_then_halve"),
    "base_lr": (float, 0.2),
    "peak_lr": (float, 1.0),
    "ramp_epochs": (int, 4),
    "halve_factor": (float, 0.5),
    "momentum": (float, 0.9),
    "l2": (float, 1e-5),
    "max_utts_per_batch": (int, 10),
    "truncation_chunk": (_parse_opt_int, 256),
    "max_epochs": (int, 20),
    "seed": (int, 0),
}


def load_experiment_config(path: str, overrides: dict[str, str]) -> dict:
    """Read a `key = value` file, apply command-line overrides, type-check.

    Lines may carry `#` comments; unknown keys are rejected and all
    required keys must be present before any work starts.
    """
    raw: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config {path!r}: {e}") from None
    for line_no, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{line_no}: expected 'key = value', got {text!r}")
        key, _, value = text.partition("=")
        key, value = key.strip(), value.strip()
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        raw[key] = value
    for key, value in overrides.items():
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"unknown override key {key!r}")
        raw[key] = value

    settings = {}
    for key, (parse, default) in EXPERIMENT_KEYS.items():
        if key in raw:
            try:
                settings[key] = parse(raw[key])
            except (ValueError, ConfigError) as e:
                raise ConfigError(f"bad value for {key!r}: {raw[key]!r} ({e})") from None
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            settings[key] = default
    return settings


def _build_model_and_train_config(settings: dict, corpus: data_mod.Corpus):
    span = settings["splice_left"] + 1 + settings["splice_right"]
    model_config = RMNConfig(
        input_dim=corpus.feature_dim * span,
        num_memory_layers=settings["num_memory_layers"],
        num_classes=corpus.num_classes,
        wide_dim=settings["wide_dim"],
        memory_dim=settings["memory_dim"],
        direction=settings["direction"],
        shared_weight_form=settings["shared_weight_form"],
        residual_interval=settings["residual_interval"],
        delay_enabled=settings["delay_enabled"],
        splice_left=settings["splice_left"],
        splice_right=settings["splice_right"],
    )
    train_config = TrainConfig(
        schedule=settings["schedule"],
        base_lr=settings["base_lr"],
        peak_lr=settings["peak_lr"],
        ramp_epochs=settings["ramp_epochs"],
        halve_factor=settings["halve_factor"],
        momentum=settings["momentum"],
        l2=settings["l2"],
        max_utts_per_batch=settings["max_utts_per_batch"],
        truncation_chunk=settings["truncation_chunk"],
        max_epochs=settings["max_epochs"],
        seed=settings["seed"],
    )
    return model_config, train_config


def _collect_overrides(args) -> dict[str, str]:
    return {k: v for k, v in vars(args).items() if k in EXPERIMENT_KEYS and v is not None}


def cmd_gen(args) -> int:
    if args.task == "delayed-recall":
        corpus = data_mod.gen_delayed_recall(args.classes, args.delay, args.frames, args.count, args.seed)
    elif args.task == "future-recall":
        corpus = data_mod.gen_future_recall(args.classes, args.delay, args.frames, args.count, args.seed)
    else:
        corpus = data_mod.gen_parity(args.window, args.frames, args.count, args.seed)
    data_mod.write_archive(corpus, args.out)
    print(f"wrote {len(corpus)} utterances ({corpus.total_frames()} frames, "
          f"{corpus.num_classes} classes) to {args.out}")
    return 0


def _run_training(settings: dict) -> int:
    train_corpus = data_mod.read_archive(settings["train_archive"])
    valid_corpus = data_mod.read_archive(settings["valid_archive"])
    model_config, train_config = _build_model_and_train_config(settings, train_corpus)
    model = Model(model_config, init_params(model_config, train_config.seed))

    out_dir = settings["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")

    def on_epoch(stats: EpochStats, m: Model):
        with open(metrics_path, "a") as fh:
            fh.write(format_stats_row(stats) + "\n")
        save_checkpoint(m, os.path.join(out_dir, f"epoch_{stats.epoch:03d}.ckpt"))
        print(
            f"epoch {stats.epoch}: lr={stats.lr:.6g} train_ce={stats.train_ce:.4f} "
            f"valid_ce={stats.valid_ce:.4f} train_fer={stats.train_fer:.4f} "
            f"valid_fer={stats.valid_fer:.4f}"
        )
        return False

    fit(model, train_corpus, valid_corpus, train_config, on_epoch=on_epoch)
    save_checkpoint(model, os.path.join(out_dir, "final.ckpt"))
    print(f"training done; metrics in {metrics_path}")
    return 0


def cmd_train(args) -> int:
    settings = load_experiment_config(args.config, _collect_overrides(args))
    return _run_training(settings)


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    corpus = data_mod.read_archive(args.corpus)
    span = model.config.splice_left + 1 + model.config.splice_right
    if corpus.feature_dim * span != model.config.input_dim:
        raise ConfigError(
            f"corpus features ({corpus.feature_dim} dims, splice x{span}) do not "
            f"match model input_dim {model.config.input_dim}"
        )
    if args.stream is not None:
        chunk, lookahead = args.stream
        ce, fer = evaluate_streaming(model, corpus, chunk, lookahead)
    else:
        ce, fer = evaluate(model, corpus)
    print(f"ce={ce:.6f} fer={fer:.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    config = RMNConfig(
        input_dim=6,
        num_memory_layers=args.layers,
        num_classes=4,
        wide_dim=8,
        memory_dim=5,
        direction=args.direction,
        shared_weight_form=args.shared_form,
        residual_interval=None if args.no_residual else 2,
        delay_enabled=not args.no_delay,
    )
    rng = np.random.default_rng(args.seed)
    params = init_params(config, args.seed)
    randomize_params(params, args.seed)
    x = rng.uniform(-2.0, 2.0, size=(args.frames, config.input_dim))
    labels = rng.integers(0, config.num_classes, size=args.frames)
    err = check_gradients(params, config, x, labels, corrupt=args.corrupt_gradient)
    print(f"max_rel_error {err:.3e}")
    if err < 1e-4:
        print("gradcheck PASS")
        return 0
    print("gradcheck FAIL")
    return 1


def cmd_params(args) -> int:
    config = RMNConfig(
        input_dim=args.input_dim,
        num_memory_layers=args.layers,
        num_classes=args.classes,
        wide_dim=args.wide_dim,
        memory_dim=args.memory_dim,
        direction=args.direction,
        shared_weight_form=args.shared_form,
    )
    n = param_count(config)
    print(f"params {n}")
    print(f"params_millions {n / 1e6:.1f}")
    if args.compare_lstmp is not None:
        layers, cells, proj, input_dim, classes = args.compare_lstmp
        m = param_count_lstmp(layers, cells, proj, input_dim, classes)
        print(f"lstmp_params {m}")
        print(f"reduction_percent {100.0 * (m - n) / m:.1f}")
    return 0


def cmd_sweep(args) -> int:
    try:
        layer_list = [int(v) for v in args.layers.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad layer list {args.layers!r}") from None
    if not layer_list:
        raise ConfigError("layer list is empty")
    settings = load_experiment_config(args.config, _collect_overrides(args))
    if args.no_delay:
        settings["delay_enabled"] = False

    train_corpus = data_mod.read_archive(settings["train_archive"])
    valid_corpus = data_mod.read_archive(settings["valid_archive"])
    os.makedirs(settings["out_dir"], exist_ok=True)
    sweep_path = os.path.join(settings["out_dir"], "sweep.csv")
    rows = []
    for layers in layer_list:
        per_run = dict(settings)
        per_run["num_memory_layers"] = layers
        model_config, train_config = _build_model_and_train_config(per_run, train_corpus)
        model = Model(model_config, init_params(model_config, train_config.seed))
        stats = fit(model, train_corpus, valid_corpus, train_config)
        best = min(s.valid_fer for s in stats)
        rows.append((layers, best))
        print(f"layers={layers} best_valid_fer={best:.4f}")
    with open(sweep_path, "w") as fh:
        fh.write("layers,best_valid_fer\n")
        for layers, best in rows:
            fh.write(f"{layers},{best!r}\n")
    print(f"sweep results in {sweep_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmnlab",
        description="Residual memory network laboratory: synthetic sequence "
        "tasks, training, evaluation and verification probes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus archive")
    p.add_argument("--task", required=True, choices=["delayed-recall", "future-recall", "parity"])
    p.add_argument("--classes", type=int, default=10, help="number of symbol classes K")
    p.add_argument("--delay", type=int, default=6, help="recall distance in frames")
    p.add_argument("--window", type=int, default=3, help="parity window width")
    p.add_argument("--frames", type=int, default=100, help="frames per utterance")
    p.add_argument("--count", type=int, default=100, help="number of utterances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("out", help="output archive path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model from an experiment config")
    p.add_argument("config", help="key = value experiment file")
    for key in EXPERIMENT_KEYS:
        p.add_argument(f"--{key}", dest=key, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    p.add_argument("checkpoint")
    p.add_argument("corpus")
    p.add_argument(
        "--stream",
        nargs=2,
        type=int,
        metavar=("CHUNK", "LOOKAHEAD"),
        default=None,
        help="bounded-lookahead chunked inference instead of full sequences",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of a tiny random model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--frames", type=int, default=7)
    p.add_argument("--direction", choices=["uni", "bi"], default="uni")
    p.add_argument("--shared-form", choices=["diagonal", "full"], default="diagonal")
    p.add_argument("--no-residual", action="store_true")
    p.add_argument("--no-delay", action="store_true")
    p.add_argument(
        "--corrupt-gradient",
        action="store_true",
        help="testing hook: damage one analytic gradient so the check must fail",
    )
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("params", help="closed-form parameter counts")
    p.add_argument("--input-dim", type=int, required=True)
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--wide-dim", type=int, default=1024)
    p.add_argument("--memory-dim", type=int, default=512)
    p.add_argument("--direction", choices=["uni", "bi"], default="uni")
    p.add_argument("--shared-form", choices=["diagonal", "full"], default="diagonal")
    p.add_argument(
        "--compare-lstmp",
        nargs=5,
        type=int,
        metavar=("LAYERS", "CELLS", "PROJ", "INPUT", "CLASSES"),
        default=None,
        help="also report a stacked projected-LSTM count and the reduction",
    )
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("sweep", help="train one model per layer count")
    p.add_argument("config")
    p.add_argument("--layers", required=True, help="comma-separated layer counts, e.g. 2,4,6,8")
    p.add_argument("--no-delay", action="store_true", help="sweep the delay-disabled baseline")
    for key in EXPERIMENT_KEYS:
        p.add_argument(f"--{key}", dest=key, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 1
    except (ConfigError, data_mod.ParseError, data_mod.FormatError, DimensionError,
            LabelError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
