"""Batch pipeline entry point: dataset generation, training, readout
evaluation, single-clip prediction, and the HTTP service.

Exit codes: 0 ok, 2 usage error, 3 data error, 4 numeric failure.
Every run writes its fully resolved configuration next to its outputs so
results are reproducible from the artifacts alone.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .autodiff import NonFiniteError
from .engine import EngineConfig, MotionPrompt, default_flow_fn, segment
from .evaluation import (eval_depth, eval_flow, eval_keypoints, eval_seg,
                         write_metrics)
from .export import (flow_field_to_dense, save_depth_png, save_flow_png,
                     save_png, save_segment_png)
from .masking import format_policy, parse_policy
from .model import (CheckpointError, DivergenceError, PredictorConfig,
                    load_predictor, save_checkpoint, train)
from .world import load_clip, load_manifest, make_specs, write_dataset

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class DataError(RuntimeError):
    pass


class UsageError(RuntimeError):
    pass


def _load_config_file(path: "str | None") -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {path}")
    with open(p, "rb") as f:
        return tomllib.load(f)


def _resolve(args, file_cfg: dict, keys: list[str]) -> dict:
    """Flags override config-file values; returns the resolved mapping."""
    out = {}
    for k in keys:
        flag = getattr(args, k, None)
        out[k] = flag if flag is not None else file_cfg.get(k)
    return out


def _write_resolved(out_dir: Path, command: str, resolved: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {"command": command,
           "resolved": {k: v for k, v in sorted(resolved.items())}}
    (out_dir / "run_config.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2, default=str) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    cfg = _load_config_file(args.config)
    r = _resolve(args, cfg, ["difficulty", "n", "seed", "out", "low_contrast"])
    if r["difficulty"] is None or r["n"] is None or r["out"] is None:
        raise UsageError("gen requires --difficulty, --n and --out")
    seed = int(r["seed"] or 0)
    specs = make_specs(int(r["n"]), r["difficulty"], seed,
                       low_contrast=bool(r["low_contrast"]))
    out = Path(r["out"])
    write_dataset(specs, out, r["difficulty"], seed)
    _write_resolved(out, "gen", r)
    print(f"wrote {len(specs)} clips to {out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _load_config_file(args.config)
    r = _resolve(args, cfg, ["policy", "data", "steps", "seed", "out",
                             "lr", "batch", "conditioning"])
    if r["policy"] is None or r["data"] is None or r["out"] is None:
        raise UsageError("train requires --policy, --data and --out")
    policy = parse_policy(r["policy"])
    data_dir = Path(r["data"])
    if not (data_dir / "manifest.json").exists():
        raise DataError(f"no dataset manifest under {data_dir}")
    manifest = load_manifest(data_dir)
    conditioning = r["conditioning"] or "none"
    config = PredictorConfig(conditioning=conditioning)
    clips, conds = [], []
    for i in range(manifest["n_clips"]):
        clip, _ = load_clip(data_dir, i, patch=config.patch)
        clips.append(clip)
        conds.append(tuple(manifest["specs"][i].get("camera_velocity",
                                                    (0.0, 0.0))))
    seed = int(r["seed"] or 0)
    params, curve = train(
        config, policy, clips, steps=int(r["steps"] or 3000), seed=seed,
        conds=conds if conditioning == "head_motion" else None,
        batch_size=int(r["batch"] or 16), lr=float(r["lr"] or 1e-3))
    out = Path(r["out"])
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(params, config, out / "model.cwmc")
    with open(out / "loss.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "loss"])
        w.writerows((i, f"{v:.9g}") for i, v in enumerate(curve))
    r["policy"] = format_policy(policy)
    _write_resolved(out, "train", r)
    print(f"trained {len(curve)} steps, final loss {curve[-1]:.6g}")
    return EXIT_OK


def _engine_config(args, file_cfg: dict) -> EngineConfig:
    over = {}
    for k in ("tau_occ", "tau_dis", "tau_seg", "seed"):
        v = getattr(args, k, None)
        if v is None:
            v = file_cfg.get(k)
        if v is not None:
            over[k] = type(getattr(EngineConfig(), k))(v)
    return EngineConfig(**over)


def _cmd_eval(args) -> int:
    cfg = _load_config_file(args.config)
    r = _resolve(args, cfg, ["task", "ckpt", "data", "out", "n", "seed"])
    if not all(r[k] for k in ("task", "ckpt", "data", "out")):
        raise UsageError("eval requires --task, --ckpt, --data and --out")
    pred = load_predictor(r["ckpt"])
    ecfg = _engine_config(args, cfg)
    n = int(r["n"]) if r["n"] is not None else None
    data = Path(r["data"])
    if not (data / "manifest.json").exists():
        raise DataError(f"no dataset manifest under {data}")
    runner = {"flow": eval_flow, "seg": eval_seg, "depth": eval_depth,
              "keypoints": eval_keypoints}.get(r["task"])
    if runner is None:
        raise UsageError(f"unknown eval task {r['task']!r}")
    metrics = runner(pred, data, n_clips=n, cfg=ecfg)
    out = Path(r["out"])
    out.mkdir(parents=True, exist_ok=True)
    resolved = dict(r, **{k: getattr(ecfg, k)
                          for k in ("tau_occ", "tau_dis", "tau_seg",
                                    "n_samples", "seed")})
    write_metrics(out / "metrics.json", r["task"], metrics, resolved)
    _write_resolved(out, "eval", resolved)
    print(f"{r['task']}: " + ", ".join(
        f"{k}={v:.4g}" for k, v in metrics.items()
        if isinstance(v, float)))
    return EXIT_OK


def _parse_moves(text: "str | None"):
    """"r,c:dr,dc;r,c:dr,dc" -> MotionPrompt moves tuple."""
    moves = []
    if text:
        for part in text.split(";"):
            src, _, d = part.partition(":")
            r, c = (int(v) for v in src.split(","))
            dr, dc = (int(v) for v in d.split(","))
            moves.append(((r, c), (dr, dc)))
    return tuple(moves)


def _parse_stops(text: "str | None"):
    if not text:
        return ()
    return tuple(tuple(int(v) for v in part.split(","))
                 for part in text.split(";"))


def _cmd_predict(args) -> int:
    cfg = _load_config_file(args.config)
    r = _resolve(args, cfg, ["ckpt", "data", "clip", "out", "moves",
                             "stops", "head_motion"])
    if not all(r[k] is not None for k in ("ckpt", "data", "clip", "out")):
        raise UsageError("predict requires --ckpt, --data, --clip and --out")
    pred = load_predictor(r["ckpt"])
    ecfg = _engine_config(args, cfg)
    try:
        clip, gt = load_clip(Path(r["data"]), int(r["clip"]))
    except FileNotFoundError as e:
        raise DataError(f"clip not found: {e}") from e
    moves = _parse_moves(r["moves"])
    stops = _parse_stops(r["stops"])
    hm = None
    if r["head_motion"]:
        hm = tuple(float(v) for v in str(r["head_motion"]).split(","))
    prompt = MotionPrompt(moves=moves, stops=stops, head_motion=hm)
    out = Path(r["out"])
    out.mkdir(parents=True, exist_ok=True)
    if moves:
        res = segment(pred, default_flow_fn(ecfg), clip.frames[0], prompt,
                      ecfg)
        from .engine import counterfactual_predict
        frame = counterfactual_predict(pred, clip.frames[0], prompt)
        dense, valid = flow_field_to_dense(res.flow, frame.shape[:2],
                                           ecfg.seg_stride)
        save_png(frame, out / "prediction.png")
        save_flow_png(out / "flow.png", dense, valid)
        save_segment_png(out / "segment.png", res.mask)
    else:
        from .engine import counterfactual_predict
        frame = counterfactual_predict(pred, clip.frames[0], prompt)
        save_png(frame, out / "prediction.png")
    _write_resolved(out, "predict", r)
    print(f"wrote prediction artifacts to {out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import run_server
    run_server(ckpt=args.ckpt, port=args.port or 8089, data=args.data,
               seed=args.seed or 0)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cwm",
        description="counterfactual world modeling on synthetic video")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file (flags override)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")

    g = sub.add_parser("gen", parents=[common], help="generate a dataset")
    g.add_argument("--difficulty", choices=["single-mover", "multi-mover",
                                            "camera-pan", "attached-pairs"])
    g.add_argument("--n", type=int)
    g.add_argument("--low-contrast", dest="low_contrast",
                   action="store_true", default=None)
    g.set_defaults(fn=_cmd_gen)

    t = sub.add_parser("train", parents=[common], help="train a predictor")
    t.add_argument("--policy")
    t.add_argument("--data")
    t.add_argument("--steps", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch", type=int)
    t.add_argument("--conditioning", choices=["none", "head_motion"])
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("eval", parents=[common],
                       help="evaluate readouts against ground truth")
    e.add_argument("--task", choices=["flow", "seg", "depth", "keypoints"])
    e.add_argument("--ckpt")
    e.add_argument("--data")
    e.add_argument("--n", type=int)
    for k in ("tau_occ", "tau_dis", "tau_seg"):
        e.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float)
    e.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("predict", parents=[common],
                       help="factual/counterfactual prediction of one clip")
    p.add_argument("--ckpt")
    p.add_argument("--data")
    p.add_argument("--clip", type=int)
    p.add_argument("--moves", help='"r,c:dr,dc;..." in patch cells')
    p.add_argument("--stops", help='"r,c;..." in patch cells')
    p.add_argument("--head-motion", dest="head_motion", help='"dy,dx"')
    for k in ("tau_occ", "tau_dis", "tau_seg"):
        p.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float)
    p.set_defaults(fn=_cmd_predict)

    s = sub.add_parser("serve", parents=[common], help="start the HTTP API")
    s.add_argument("--ckpt", required=True)
    s.add_argument("--data")
    s.add_argument("--port", type=int)
    s.set_defaults(fn=_cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0,) else 0
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: usage: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, FileNotFoundError, ValueError) as e:
        print(f"error: data: {e}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, NonFiniteError, FloatingPointError) as e:
        print(f"error: numeric: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
