"""Command-line entry points wiring all modules into reproducible runs.

Commands: synth, preprocess, train, evaluate, gradcheck. Every run takes a
single JSON config (sections: seed, synth, preprocess, model, train) with
``--set key=value`` dotted overrides; all defaults are materialized and the
resolved config is echoed into the run directory before any work happens.
Run directories are named by UTC timestamp plus a config hash.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 data validation
error, 5 numerical failure.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .archive import SegmentDataset, read_archive, write_archive
from .dsp.pipeline import PreprocessConfig, run_pipeline
from .dsp.tgr import FORMAT_NAME as TGR_FORMAT
from .dsp.tgr import read_recording
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    NumericError,
    OptimizerError,
    ParameterError,
    ShapeError,
    SplitError,
    StatsError,
)
from .gradsuite import TOLERANCE, run_suite
from .model import ModelConfig, ablation_config, init_params
from .synth import SynthConfig, generate_dataset
from .train import TrainConfig, compute_metrics, cross_validate, evaluate_split, write_results
from .train.metrics import confusion_matrix

SEED_ENV = "TGAT_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5


# ---------------------------------------------------------------------------
# run configuration


def default_config() -> dict:
    """All sections with every default materialized."""
    synth_section = SynthConfig().to_dict()
    synth_section.pop("seed")           # unified top-level seed
    train_section = TrainConfig().to_dict()
    train_section.pop("seed")
    return {
        "seed": 0,
        "synth": synth_section,
        "preprocess": {
            "notch_freq": 50.0,
            "notch_q": 30.0,
            "band_low": 0.1,
            "band_high": 40.0,
            "bandpass_order": 4,
            "target_rate": 256.0,
            "exclude_channels": [],
            "marker_label_map": {"task_a": 0, "task_b": 1},
            "epoch_start_s": 9.0,
            "epoch_end_s": 15.0,
        },
        "model": ModelConfig().to_dict(),
        "train": train_section,
    }


def _merge_section(base: dict, override: dict, path: str):
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge_section(base[key], value, f"{path}{key}.")
        else:
            base[key] = value


def _parse_set_override(expr: str):
    if "=" not in expr:
        raise ConfigError(f"--set expects key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_run_config(config_path, set_overrides=()) -> dict:
    """Defaults <- config file <- --set overrides <- TGAT_SEED."""
    cfg = default_config()
    if config_path is not None:
        path = Path(config_path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise exc
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        _merge_section(cfg, user, "")
    for expr in set_overrides:
        key, value = _parse_set_override(expr)
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown config key {key!r}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from exc
    return cfg


def build_objects(cfg: dict):
    """Validate the resolved dict by constructing the typed configs."""
    seed = int(cfg["seed"])
    synth_cfg = SynthConfig.from_dict({**cfg["synth"], "seed": seed})
    pre = cfg["preprocess"]
    pre_cfg = PreprocessConfig(
        notch_freq=pre["notch_freq"], notch_q=pre["notch_q"], band_low=pre["band_low"],
        band_high=pre["band_high"], bandpass_order=int(pre["bandpass_order"]),
        target_rate=pre["target_rate"], exclude_channels=list(pre["exclude_channels"]),
        marker_label_map={str(k): int(v) for k, v in pre["marker_label_map"].items()},
        epoch_start_s=pre["epoch_start_s"], epoch_end_s=pre["epoch_end_s"])
    model_cfg = ModelConfig.from_dict(cfg["model"])
    train_cfg = TrainConfig.from_dict({**cfg["train"], "seed": seed})
    return seed, synth_cfg, pre_cfg, model_cfg, train_cfg


def make_run_dir(out_dir, cfg: dict) -> Path:
    """<out>/run_<utc-stamp>_<config-hash>; suffixed if it already exists."""
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode()).hexdigest()[:8]
    stamp = time.strftime("%Y%m%dT%H%M%SZ", time.gmtime())
    base = Path(out_dir) / f"run_{stamp}_{digest}"
    run_dir = base
    n = 1
    while run_dir.exists():
        run_dir = Path(f"{base}-{n}")
        n += 1
    run_dir.mkdir(parents=True)
    (run_dir / "config_resolved.json").write_text(
        json.dumps(cfg, sort_keys=True, indent=1) + "\n")
    return run_dir


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    seed, synth_cfg, _, _, _ = build_objects(cfg)
    run_dir = make_run_dir(args.out, cfg)
    manifest = generate_dataset(synth_cfg, run_dir)
    print(f"run directory: {run_dir}")
    print(f"wrote {synth_cfg.n_subjects} recording(s); manifest: {manifest}")
    return EXIT_OK


def _discover_recordings(in_dir: Path):
    paths = []
    for p in sorted(in_dir.glob("*.json")):
        try:
            head = json.loads(p.read_text())
        except (OSError, json.JSONDecodeError):
            continue
        if isinstance(head, dict) and head.get("format") == TGR_FORMAT:
            paths.append(p)
    return paths


def cmd_preprocess(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    _, _, pre_cfg, _, _ = build_objects(cfg)
    if not pre_cfg.marker_label_map:
        raise ConfigError("preprocess.marker_label_map must not be empty")
    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise FileNotFoundError(f"input directory {in_dir} does not exist")
    recordings = _discover_recordings(in_dir)
    if not recordings:
        raise DataError(f"no TGR recordings found in {in_dir}")
    run_dir = make_run_dir(args.out, cfg)

    segments = []
    channel_labels = None
    n_epochs = n_skipped = 0
    for path in recordings:
        rec = read_recording(path)
        if channel_labels is None:
            channel_labels = rec.channel_labels
        elif rec.channel_labels != channel_labels:
            raise DataError(f"{path}: channel labels differ from first recording")
        segs, pipe_stats = run_pipeline(rec, pre_cfg)
        segments.extend(segs)
        n_epochs += pipe_stats.n_epochs
        n_skipped += pipe_stats.n_skipped
    if not segments:
        raise DataError("preprocessing produced no segments")
    by_label = sorted(pre_cfg.marker_label_map.items(), key=lambda kv: kv[1])
    class_names = [name for name, _ in by_label]
    ds = SegmentDataset.from_segments(segments, channel_labels, class_names)
    write_archive(run_dir, ds)
    print(f"run directory: {run_dir}")
    print(f"recordings: {len(recordings)}  epochs: {n_epochs}  "
          f"skipped: {n_skipped}  segments: {len(segments)}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    if args.ablation:
        arms = {"none": (True, True), "no-tdrop": (True, False),
                "no-tattn": (False, True), "no-both": (False, False)}
        if args.ablation not in arms:
            raise ConfigError(f"unknown ablation arm {args.ablation!r}")
        attn, tdrop = arms[args.ablation]
        cfg["model"]["enable_temporal_attention"] = attn
        cfg["model"]["enable_temporal_dropout"] = tdrop
    seed, _, _, model_cfg, train_cfg = build_objects(cfg)
    ds = read_archive(Path(args.archive))
    if len(ds) == 0:
        raise ConfigError("segment archive contains no segments")
    run_dir = make_run_dir(args.out, cfg)
    results, fold_params, summary = cross_validate(ds, model_cfg, train_cfg,
                                                   threads=args.threads)
    write_results(run_dir, results, fold_params, summary, ds.class_names)
    acc = summary["aggregate"]["accuracy"]
    print(f"run directory: {run_dir}")
    print(f"accuracy: {acc['mean']:.4f} +/- {acc['std']:.4f} over {len(results)} folds")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .model import load_checkpoint

    state, model_cfg, seed, meta = load_checkpoint(Path(args.checkpoint))
    params = init_params(model_cfg, np.random.default_rng(0))
    params.load_state_dict(state)
    ds = read_archive(Path(args.archive))
    if len(ds) == 0:
        raise ConfigError("segment archive contains no segments")
    idx = np.arange(len(ds))
    test_trials = meta.get("test_trial_ids")
    if test_trials and not args.full:
        mask = np.isin(ds.trial_ids, np.asarray(test_trials))
        if not mask.any():
            raise ConfigError(
                "checkpoint's test trials are absent from this archive; use --full")
        idx = np.flatnonzero(mask)
    _, preds, confusion = evaluate_split(params, ds, idx, 0.0)
    metrics = compute_metrics(confusion)
    payload = {"n_segments": int(idx.size), "metrics": metrics.to_dict(), "seed": seed}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.json").write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
    header = ",".join(ds.class_names)
    rows = [",".join(str(int(v)) for v in row) for row in metrics.confusion]
    (out_dir / "confusion.csv").write_text(header + "\n" + "\n".join(rows) + "\n")
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    results = run_suite(inject_fault=args.inject_fault)
    width = max(len(r.name) for r in results)
    worst = max(results, key=lambda r: r.max_error)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {r.max_error:12.3e}  {status}")
    print(f"worst: {worst.name} ({worst.max_error:.3e}, tolerance {TOLERANCE:g})")
    return EXIT_OK if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# argument parsing / dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tgat",
        description="Temporally-augmented graph attention pipeline for EEG segments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", default=None, help="JSON run config (defaults if omitted)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry by dotted path")

    p = sub.add_parser("synth", help="generate a synthetic TGR dataset")
    add_common(p)
    p.add_argument("--out", required=True, help="output directory for the run")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("preprocess", help="raw TGR recordings -> segment archive")
    add_common(p)
    p.add_argument("--in", dest="in_dir", required=True, help="directory of TGR recordings")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("train", help="grouped cross-validated training")
    add_common(p)
    p.add_argument("--archive", required=True, help="segment archive dir or segments.json")
    p.add_argument("--out", required=True)
    p.add_argument("--ablation", default=None,
                   choices=["none", "no-tdrop", "no-tattn", "no-both"],
                   help="temporal-mechanism ablation arm")
    p.add_argument("--threads", type=int, default=1, help="parallel fold workers")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="eval-mode inference from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--full", action="store_true",
                   help="evaluate the whole archive, not the checkpoint's test trials")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference audit of all gradients")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParameterError, SplitError, ShapeError, ContractError,
            StatsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, OptimizerError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
