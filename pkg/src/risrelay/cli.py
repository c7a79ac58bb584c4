"""Command-line driver: validate-channels, train, simulate, report.

Exit codes: 0 success, 1 validation/acceptance failure, 2 usage or config
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .channel_models import CascadeSpec, NakagamiStage, RngStream
from .config import load_config, scenario_configs, training_settings
from .errors import (ConfigError, DivergenceError, MissingModelError, ModelFormatError,
                     ParameterDomainError, UnreachableTargetError, UnsupportedDepthError)
from .neural_net import load_params, save_params
from .scenario import Models
from .simulator import read_csv_curves, run_sweep, snr_at_ber, write_csv
from .validation import validate_channels
from .workflow import detector_key, digest, relay_key, train_detector_for, train_relay_for

log = logging.getLogger("risrelay")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
VALIDATE_STREAM = (3_000_003,)


def git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, name: str, args, cfg: dict, extra: dict) -> Path:
    manifest = {
        "tool": f"risrelay {__version__}",
        "command": args.command,
        "config_path": str(args.config) if args.config else None,
        "config": cfg,
        "seed": args.seed,
        "started": args.started,
        "finished": _now(),
        **extra,
    }
    path = out / f"{name}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_validate_channels(args, cfg) -> int:
    ch = cfg["channels"]
    K = args.K if args.K is not None else ch["K"]
    m = args.m if args.m is not None else ch["m"]
    spec = CascadeSpec.uniform(K, m, ch["omega"])
    sample_spec = None
    if args.inject_omega is not None:
        sample_spec = CascadeSpec(tuple(NakagamiStage(s.m, args.inject_omega) for s in spec.stages))
    try:
        results = validate_channels(spec, RngStream(args.seed, VALIDATE_STREAM), args.samples,
                                    sample_spec)
    except UnsupportedDepthError as exc:
        print(f"FAIL unsupported depth: {exc}", file=sys.stderr)
        return EXIT_FAIL
    lines = [r.line() for r in results]
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "validate_channels.txt").write_text("\n".join(lines) + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing checks: " + "; ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _load_model(path):
    if path is None:
        return None
    return load_params(path)


def _models_for(config, args, cfg, out: Path, cache: dict, auto_train: bool) -> Models:
    relay = cache.get("relay_fixed")
    detector = cache.get("detector_fixed")
    if config.phase_mode == "dnn" and relay is None:
        key = relay_key(config)
        if key not in cache:
            if not auto_train:
                raise MissingModelError(
                    "phase_mode 'dnn' needs --relay-model (or --auto-train)")
            settings = training_settings(cfg, "relay", args.seed)
            cache[key], _ = train_relay_for(config, settings)
            save_params(cache[key], out / "models" / f"{key}.rcnn")
        relay = cache[key]
    if config.detector_mode == "dnn" and detector is None:
        key = detector_key(config)
        if key not in cache:
            if not auto_train:
                raise MissingModelError(
                    "detector_mode 'dnn' needs --detector-model (or --auto-train)")
            settings = training_settings(cfg, "detector", args.seed)
            cache[key], _ = train_detector_for(config, settings, Models(relay=relay))
            save_params(cache[key], out / "models" / f"{key}.rcnn")
        detector = cache[key]
    return Models(relay=relay if config.phase_mode == "dnn" else None,
                  detector=detector if config.detector_mode == "dnn" else None)


def cmd_train(args, cfg) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    configs = scenario_configs(cfg, args.preset, args.seed, args.pipelines)
    overrides = {"samples": args.samples, "steps": args.steps}
    relay_fixed = _load_model(args.relay_model)
    written = {}
    done = set()
    for config in configs:
        if args.target == "relay":
            key = relay_key(config)
            if key in done:
                continue
            settings = training_settings(cfg, "relay", args.seed, **overrides)
            net, hist = train_relay_for(config, settings)
        else:
            key = detector_key(config)
            if key in done:
                continue
            relay = None
            if config.phase_mode == "dnn":
                relay = relay_fixed
                if relay is None:
                    raise MissingModelError("detector data with phase_mode 'dnn' needs --relay-model")
            settings = training_settings(cfg, "detector", args.seed, **overrides)
            net, hist = train_detector_for(config, settings, Models(relay=relay))
        done.add(key)
        path = Path(args.output) if (args.output and len(configs) == 1) else out / f"{key}.rcnn"
        path.parent.mkdir(parents=True, exist_ok=True)
        save_params(net, path)
        written[str(path)] = digest(net)
        val = hist.val_loss[-1] if hist.val_loss else float("nan")
        print(f"{key}: final train loss {hist.train_loss[-1]:.6g}, validation loss {val:.6g} -> {path}")
    _write_manifest(out, f"train_{args.target}", args, cfg, {"models": written})
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    configs = scenario_configs(cfg, args.preset, args.seed, args.pipelines)
    if args.max_trials is not None:
        configs = [c.with_(max_trials=args.max_trials) for c in configs]
    cache = {"relay_fixed": _load_model(args.relay_model),
             "detector_fixed": _load_model(args.detector_model)}
    if args.auto_train:
        (out / "models").mkdir(exist_ok=True)
    records, used = [], []
    for config in configs:
        models = _models_for(config, args, cfg, out, cache, args.auto_train)
        log.info("sweep scenario=%d scheme=%s N=%d K=%d m=%g %s+%s", config.scenario,
                 config.scheme, config.N, config.K, config.m, config.phase_mode,
                 config.detector_mode)
        recs = run_sweep(config, models, args.threads)
        records.extend(recs)
        used.append({"config": config.to_dict(),
                     "relay_model": digest(models.relay) if models.relay else None,
                     "detector_model": digest(models.detector) if models.detector else None})
    name = args.preset or "sweep"
    csv_path = out / f"{name}.csv"
    text = write_csv(records, csv_path)
    _write_manifest(out, name, args, cfg, {
        "results": {"path": str(csv_path), "git_blob_sha1": git_blob_sha1(text.encode())},
        "curves": used,
    })
    print(f"wrote {len(records)} rows to {csv_path}")
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    out = Path(args.out or ".")
    (out / "curves").mkdir(parents=True, exist_ok=True)
    files = [read_csv_curves(p) for p in args.csv]
    pairs = []
    if len(files) == 1:
        curves = files[0]
        pairs = [(a, b) for i, a in enumerate(curves) for b in curves[i + 1:]]
    else:
        base = {c.key: c for c in files[0]}
        for other in files[1:]:
            pairs.extend((base[c.key], c) for c in other if c.key in base)
    for fi, curves in enumerate(files):
        for c in curves:
            with open(out / "curves" / f"f{fi}_{c.label}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["snr_db", "ber"])
                w.writerows([repr(float(s)), repr(float(b))] for s, b in zip(c.snr_db, c.ber))
    unreachable = 0
    rows = []
    for a, b in pairs:
        for t in args.target:
            try:
                gap = snr_at_ber(a.snr_db, a.ber, t) - snr_at_ber(b.snr_db, b.ber, t)
                rows.append([a.label, b.label, repr(t), f"{gap:.4f}", "ok"])
            except UnreachableTargetError:
                unreachable += 1
                rows.append([a.label, b.label, repr(t), "", "unreachable"])
    with open(out / "gaps.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve_a", "curve_b", "target_ber", "gap_db", "status"])
        w.writerows(rows)
    for r in rows:
        print(f"{r[2]:>8}  {r[3] or 'n/a':>9} dB  {r[0]}  vs  {r[1]}")
    if unreachable:
        print(f"{unreachable} gap(s) unreachable: BER target not crossed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", type=Path, help="JSON config file", **(d or {"default": None}))
    parser.add_argument("--seed", type=int, help="master seed (u64)", **(d or {"default": 0}))
    parser.add_argument("--threads", type=int, help="worker threads (env RCS_THREADS)",
                        **(d or {"default": None}))
    parser.add_argument("--out", type=Path, help="output directory", **(d or {"default": None}))


def _pipelines(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risrelay", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-channels", parents=[common], help="moment and pdf checks")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--K", type=int, default=None, help="override cascading degree")
    p.add_argument("--m", type=float, default=None, help="override Nakagami m")
    p.add_argument("--inject-omega", type=float, default=None,
                   help="sample with this omega while checking against the configured one")
    p.set_defaults(func=cmd_validate_channels)

    p = sub.add_parser("train", parents=[common], help="train a relay or detector network")
    p.add_argument("--target", choices=("relay", "detector"), required=True)
    p.add_argument("--preset", default=None)
    p.add_argument("--pipelines", type=_pipelines, default=None,
                   help="comma list of phase:detector pairs")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--relay-model", default=None, help="relay model for DNN-phase detector data")
    p.add_argument("--output", default=None, help="model path (single configuration only)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", parents=[common], help="run BER sweeps")
    p.add_argument("--preset", default=None)
    p.add_argument("--pipelines", type=_pipelines, default=None,
                   help="comma list of phase:detector pairs, e.g. analytic:ml,dnn:dnn")
    p.add_argument("--relay-model", default=None)
    p.add_argument("--detector-model", default=None)
    p.add_argument("--auto-train", action="store_true",
                   help="train missing per-configuration models with the training section")
    p.add_argument("--max-trials", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[common], help="gap table and plot data")
    p.add_argument("csv", nargs="+", type=Path)
    p.add_argument("--target", type=float, action="append", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.started = _now()
    if args.command == "report" and not args.target:
        args.target = [1e-3]
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except (ConfigError, MissingModelError, ParameterDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ModelFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
