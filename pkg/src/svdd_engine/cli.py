"""Command-line surface: synth / train / train-fusion / eval / eer / sweep.

Exit codes: 0 success, 2 input or configuration error, 3 runtime or
metric-undefined error. Every command is deterministic under --seed. The
effective configuration is echoed into the output directory so a run can be
reproduced from its artifacts alone.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .dataio import (
    SynthConfig,
    pair,
    read_femb,
    stratified_split,
    synth_generate,
    write_femb,
)
from .errors import (
    ConfigError,
    DataError,
    EngineError,
    FormatError,
    MetricUndefinedError,
)
from .metrics import eer, read_scores, write_scores
from .models import (
    build_cnn,
    build_concat_fusion,
    build_fcn,
    build_fiona,
    load_checkpoint,
    save_checkpoint,
)
from .training import TrainConfig, evaluate, train

VAL_FRACTION = 0.1  # carved from the training set for early stopping

TRAIN_DEFAULTS = {
    "epochs": 50,
    "lr": 1e-3,
    "batch": 32,
    "dropout": 0.3,
    "patience": 5,
    "seed": 0,
    "cka_lambda": 0.1,
    "projection_dim": 120,
}


def _parse_config_file(path: Path) -> dict:
    """Flat TOML-style `key = value` file; #-comments and blank lines allowed."""
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip().strip('"')
        values[key.replace("-", "_")] = raw
    return values


def _resolve_options(args, keys) -> dict:
    """Defaults < config file < explicit flags."""
    file_values = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        file_values = _parse_config_file(path)
    resolved = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
        elif key in file_values:
            caster = type(TRAIN_DEFAULTS[key])
            try:
                resolved[key] = caster(file_values[key])
            except ValueError:
                raise ConfigError(
                    f"config key {key!r}: cannot parse {file_values[key]!r}"
                ) from None
        else:
            resolved[key] = TRAIN_DEFAULTS[key]
    return resolved


def _echo_config(outdir: Path, command: str, options: dict):
    lines = [f'command = "{command}"']
    for key, value in sorted(options.items()):
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value}")
    (outdir / "effective_config.toml").write_text("\n".join(lines) + "\n")


def _require_files(*paths):
    for p in paths:
        if not Path(p).exists():
            raise DataError(f"input file not found: {p}")


def _print_eer(value: float):
    print(f"EER: {100.0 * value:.2f}%")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    dims = _parse_int_pair(args.dims, "--dims")
    train_ss, eval_ss = np.random.SeedSequence(args.seed).spawn(2)
    options = {"n": args.n, "dim_a": dims[0], "dim_b": dims[1],
               "theta": args.theta, "sigma": args.sigma,
               "separation": args.separation, "seed": args.seed}
    for split, ss in (("train", train_ss), ("eval", eval_ss)):
        cfg = SynthConfig(
            n_per_class=args.n, dim_a=dims[0], dim_b=dims[1],
            theta=args.theta, sigma=args.sigma, separation=args.separation,
            seed=int(ss.generate_state(1)[0]),
        )
        paired = synth_generate(cfg)
        write_femb(paired.branch(0), outdir / f"{split}_a.femb")
        write_femb(paired.branch(1), outdir / f"{split}_b.femb")
    _echo_config(outdir, "synth", options)
    print(f"wrote train/eval FEMB pairs to {outdir}")
    return 0


def _train_config(opts, cka_weight: float = 0.0) -> TrainConfig:
    return TrainConfig(
        epochs=opts["epochs"], learning_rate=opts["lr"],
        batch_size=opts["batch"], early_stop_patience=opts["patience"],
        seed=opts["seed"], cka_weight=cka_weight,
    )


def _finish_run(outdir: Path, model, report, eval_set) -> float:
    save_checkpoint(model, outdir / "checkpoint.fmdl")
    (outdir / "report.json").write_text(report.to_json() + "\n")
    scores = evaluate(model, eval_set)
    write_scores(scores, outdir / "scores.txt")
    value = eer(scores)
    _print_eer(value)
    return value


def cmd_train(args) -> int:
    opts = _resolve_options(
        args, ["epochs", "lr", "batch", "dropout", "patience", "seed"])
    _require_files(args.train, args.eval)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    train_full = read_femb(args.train)
    eval_set = read_femb(args.eval)
    train_set, val_set = stratified_split(train_full, VAL_FRACTION, opts["seed"])
    build = build_fcn if args.arch == "fcn" else build_cnn
    model = build(train_full.dim, dropout_rate=opts["dropout"], seed=opts["seed"])
    cfg = _train_config(opts)
    report = train(model, train_set, val_set, cfg)
    _echo_config(outdir, "train",
                 {**opts, "arch": args.arch, "train": str(args.train),
                  "eval": str(args.eval)})
    _finish_run(outdir, model, report, eval_set)
    return 0


def cmd_train_fusion(args) -> int:
    opts = _resolve_options(
        args, ["epochs", "lr", "batch", "dropout", "patience", "seed",
               "cka_lambda", "projection_dim"])
    if args.mode == "concat" and args.cka_lambda is not None:
        print("warning: --lambda is ignored in concat mode", file=sys.stderr)
    _require_files(args.train_a, args.train_b, args.eval_a, args.eval_b)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    train_full = pair(read_femb(args.train_a), read_femb(args.train_b))
    eval_set = pair(read_femb(args.eval_a), read_femb(args.eval_b))
    train_set, val_set = stratified_split(train_full, VAL_FRACTION, opts["seed"])
    da, db = train_full.dims
    if args.mode == "concat":
        model = build_concat_fusion(da, db, dropout_rate=opts["dropout"],
                                    seed=opts["seed"])
        cfg = _train_config(opts)
    else:
        model = build_fiona(da, db, projection_dim=opts["projection_dim"],
                            dropout_rate=opts["dropout"], seed=opts["seed"])
        cfg = _train_config(opts, cka_weight=opts["cka_lambda"])
    report = train(model, train_set, val_set, cfg)
    _echo_config(outdir, "train-fusion",
                 {**opts, "mode": args.mode,
                  "train_a": str(args.train_a), "train_b": str(args.train_b),
                  "eval_a": str(args.eval_a), "eval_b": str(args.eval_b)})
    _finish_run(outdir, model, report, eval_set)
    return 0


def cmd_eval(args) -> int:
    _require_files(args.checkpoint, args.eval_a)
    model = load_checkpoint(args.checkpoint)
    if model.arch in ("concat", "fiona"):
        if not args.eval_b:
            raise DataError(f"{model.arch} checkpoint needs --eval-b")
        _require_files(args.eval_b)
        dataset = pair(read_femb(args.eval_a), read_femb(args.eval_b))
    else:
        dataset = read_femb(args.eval_a)
    scores = evaluate(model, dataset)
    write_scores(scores, args.out)
    _print_eer(eer(scores))
    return 0


def cmd_eer(args) -> int:
    _require_files(args.scores)
    _print_eer(eer(read_scores(args.scores)))
    return 0


def _parse_int_pair(text: str, flag: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{flag} expects two comma-separated integers")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{flag}: cannot parse {text!r}") from None


def _parse_pair_specs(specs) -> list[tuple[str, list[str]]]:
    """Each spec: NAME=train_a:train_b:eval_a:eval_b."""
    pairs = []
    for spec in specs:
        name, sep, rest = spec.partition("=")
        files = rest.split(":")
        if not sep or len(files) != 4:
            raise ConfigError(
                f"pair spec {spec!r} must be NAME=train_a:train_b:eval_a:eval_b"
            )
        pairs.append((name, files))
    return pairs


def _sweep_cell(name: str, files: list[str], mode: str, seed: int,
                cka_lambda: float, epochs: int) -> dict:
    try:
        _require_files(*files)
        train_full = pair(read_femb(files[0]), read_femb(files[1]))
        eval_set = pair(read_femb(files[2]), read_femb(files[3]))
        train_set, val_set = stratified_split(train_full, VAL_FRACTION, seed)
        da, db = train_full.dims
        if mode == "concat":
            model = build_concat_fusion(da, db, seed=seed)
            cfg = TrainConfig(epochs=epochs, seed=seed, cka_weight=0.0)
        else:
            model = build_fiona(da, db, seed=seed)
            cfg = TrainConfig(epochs=epochs, seed=seed, cka_weight=cka_lambda)
        train(model, train_set, val_set, cfg)
        value = eer(evaluate(model, eval_set))
        return {"pair": name, "mode": mode, "seed": seed,
                "eer": f"{100.0 * value:.2f}", "error": ""}
    except (EngineError, OSError) as exc:
        return {"pair": name, "mode": mode, "seed": seed,
                "eer": "failed", "error": str(exc)}


def cmd_sweep(args) -> int:
    pairs = _parse_pair_specs(args.pairs)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in ("concat", "fiona"):
            raise ConfigError(f"unknown sweep mode {mode!r}")
    seeds = [int(s) for s in args.seeds.split(",")]
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    cells = [(name, files, mode, seed, args.cka_lambda, args.epochs)
             for name, files in pairs for mode in modes for seed in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell_star, cells))
    else:
        rows = [_sweep_cell(*cell) for cell in cells]

    csv_path = outdir / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["pair", "mode", "seed", "eer"])
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in ("pair", "mode", "seed", "eer")})

    _write_sweep_markdown(outdir / "sweep.md", pairs, modes, rows)
    failures = sum(1 for r in rows if r["eer"] == "failed")
    for r in rows:
        if r["error"]:
            print(f"failed: {r['pair']}/{r['mode']}/seed{r['seed']}: {r['error']}",
                  file=sys.stderr)
    print(f"sweep: {len(rows) - failures}/{len(rows)} cells succeeded, "
          f"results in {csv_path}")
    if failures == len(rows):
        return 3
    return 0


def _sweep_cell_star(cell):
    return _sweep_cell(*cell)


def _write_sweep_markdown(path: Path, pairs, modes, rows):
    lines = ["| FM combination | " + " | ".join(modes) + " |",
             "|---" * (len(modes) + 1) + "|"]
    for name, _ in pairs:
        cells = []
        for mode in modes:
            values = [float(r["eer"]) for r in rows
                      if r["pair"] == name and r["mode"] == mode
                      and r["eer"] != "failed"]
            cells.append(f"{np.mean(values):.2f}" if values else "failed")
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# argument parsing


def _add_common_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", default="run_out", help="output directory")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svdd",
        description="Singing-voice deepfake detection heads over embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic two-modality dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=500, help="samples per class per split")
    p.add_argument("--dims", default="24,24")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a single-branch FCN or CNN head")
    p.add_argument("--arch", choices=["fcn", "cnn"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--eval", required=True)
    _add_common_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("train-fusion", help="train concat or FIONA fusion")
    p.add_argument("--mode", choices=["concat", "fiona"], required=True)
    p.add_argument("--train-a", required=True)
    p.add_argument("--train-b", required=True)
    p.add_argument("--eval-a", required=True)
    p.add_argument("--eval-b", required=True)
    p.add_argument("--lambda", dest="cka_lambda", type=float, default=None)
    p.add_argument("--projection-dim", type=int, default=None)
    _add_common_train_flags(p)
    p.set_defaults(func=cmd_train_fusion)

    p = sub.add_parser("eval", help="score a dataset with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eval-a", required=True)
    p.add_argument("--eval-b")
    p.add_argument("--out", default="scores.txt")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eer", help="compute EER from a score file")
    p.add_argument("--scores", required=True)
    p.set_defaults(func=cmd_eer)

    p = sub.add_parser("sweep", help="run a pair x mode x seed grid")
    p.add_argument("--pairs", action="append", required=True,
                   help="NAME=train_a:train_b:eval_a:eval_b (repeatable)")
    p.add_argument("--modes", default="concat,fiona")
    p.add_argument("--seeds", default="0")
    p.add_argument("--lambda", dest="cka_lambda", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DataError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MetricUndefinedError as exc:
        print(f"error: EER undefined: {exc}", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
