"""Readout evaluation against renderer ground truth, and the metrics.json
writer (versioned schema, floats at 9 significant digits, byte-stable)."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .engine import (EngineConfig, FlowField, MotionPrompt, default_flow_fn,
                     default_queries, flow_finite, keypoint_error_map,
                     relative_depth, segment, select_move_stop)
from .world import load_clip, load_manifest

METRICS_SCHEMA_VERSION = 1


def n_workers() -> int:
    """Worker cap for parallel per-clip evaluation (CWM_THREADS env var)."""
    try:
        return max(1, int(os.environ.get("CWM_THREADS", "1")))
    except ValueError:
        return 1


def _map_clips(fn, items):
    """Order-preserving map, parallel across clips when allowed."""
    w = n_workers()
    if w == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def _round_sig(x: float, digits: int = 9) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def _round_tree(obj):
    if isinstance(obj, float):
        # NaN/inf are not valid JSON: encode missing values as null
        return _round_sig(obj) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    return obj


def write_metrics(path, task: str, metrics: dict, config: dict) -> None:
    doc = {"schema_version": METRICS_SCHEMA_VERSION, "task": task,
           "metrics": _round_tree(metrics), "config": _round_tree(config)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _clip_cond(pred, spec_dict):
    if pred.config.conditioning == "head_motion":
        return tuple(spec_dict.get("camera_velocity", (0.0, 0.0)))
    return None


def eval_flow(pred, data_dir, n_clips: "int | None" = None,
              cfg: EngineConfig = EngineConfig()) -> dict:
    """Endpoint error at patch queries plus occlusion flag precision/recall."""
    manifest = load_manifest(data_dir)
    n = len(manifest["specs"]) if n_clips is None else n_clips
    queries = default_queries(pred.config, block=cfg.perturb_block)

    def one(i):
        clip, gt = load_clip(data_dir, i)
        cond = _clip_cond(pred, manifest["specs"][i])
        ff = flow_finite(pred, clip, cfg=cfg, cond=cond)
        epes, tp = [], 0
        pred_occ = gt_occ = both = 0
        for qi, (y, x) in enumerate(queries):
            truth_occ = bool(gt.occluded[y, x])
            read_occ = ff.status[qi] == FlowField.OCCLUDED
            pred_occ += read_occ
            gt_occ += truth_occ
            both += read_occ and truth_occ
            if truth_occ or read_occ:
                continue
            epes.append(float(np.linalg.norm(ff.vectors[qi] - gt.flow[y, x])))
        return {
            "epe": float(np.mean(epes)) if epes else float("nan"),
            "pred_occ": pred_occ, "gt_occ": gt_occ, "both_occ": both,
        }

    rows = _map_clips(one, range(n))
    epes = [r["epe"] for r in rows if math.isfinite(r["epe"])]
    pred_occ = sum(r["pred_occ"] for r in rows)
    both = sum(r["both_occ"] for r in rows)
    gt_occ = sum(r["gt_occ"] for r in rows)
    return {
        "n_clips": n,
        "mean_epe": float(np.mean(epes)) if epes else float("nan"),
        "clip_epe": [r["epe"] for r in rows],
        # a clip with no measurable flow at all counts as a miss
        "frac_clips_epe_le_2px": sum(e <= 2.0 for e in epes) / n,
        "occ_precision": both / pred_occ if pred_occ else float("nan"),
        "occ_recall": both / gt_occ if gt_occ else float("nan"),
    }


def _sprite_cell(gt, sprite_id: int, patch: int) -> tuple[int, int]:
    """Patch cell whose pixels are mostly on the sprite (centroid cell)."""
    ys, xs = np.where(gt.segments == sprite_id)
    return int(ys.mean()) // patch, int(xs.mean()) // patch


def _iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 0.0


def eval_seg(pred, data_dir, n_clips: "int | None" = None,
             cfg: EngineConfig = EngineConfig()) -> dict:
    """Single-move segmentation IoU vs the GT sprite segment."""
    manifest = load_manifest(data_dir)
    n = len(manifest["specs"]) if n_clips is None else n_clips
    flow_fn = default_flow_fn(cfg)

    def one(i):
        clip, gt = load_clip(data_dir, i)
        cell = _sprite_cell(gt, 1, pred.config.patch)
        from .engine import _safe_delta
        delta = _safe_delta(cell, pred.config.grid, cfg.move_delta)
        res = segment(pred, flow_fn, clip.frames[0],
                      MotionPrompt(moves=((cell, delta),)), cfg)
        return _iou(res.mask, gt.segments == 1)

    ious = _map_clips(one, range(n))
    return {"n_clips": n, "mean_iou": float(np.mean(ious)), "clip_iou": ious,
            "frac_iou_ge_0.7": float(np.mean([v >= 0.7 for v in ious]))}


def eval_depth(pred, data_dir, n_clips: "int | None" = None,
               rho: tuple[float, float] = (0.0, 1.0),
               cfg: EngineConfig = EngineConfig()) -> dict:
    """Relative depth from a camera-motion counterfactual vs GT depth."""
    manifest = load_manifest(data_dir)
    n = len(manifest["specs"]) if n_clips is None else n_clips

    def one(i):
        clip, gt = load_clip(data_dir, i)
        dm = relative_depth(pred, clip.frames[0], rho, cfg=cfg)
        sprite = (gt.segments == 1) & dm.valid
        bg = (gt.segments == 0) & dm.valid
        ratio = (float(np.median(dm.depth[bg]))
                 / float(np.median(dm.depth[sprite]))
                 if sprite.any() and bg.any() else float("nan"))
        if dm.valid.sum() >= 8:
            rank = float(spearmanr(dm.depth[dm.valid],
                                   1.0 / gt.inv_depth[dm.valid]).statistic)
        else:
            rank = float("nan")
        return ratio, rank, float(dm.valid.mean())

    rows = _map_clips(one, range(n))
    ratios = [r for r, _, _ in rows if math.isfinite(r)]
    ranks = [s for _, s, _ in rows if math.isfinite(s)]
    return {
        "n_clips": n,
        "mean_depth_ratio": float(np.mean(ratios)) if ratios else float("nan"),
        "clip_depth_ratio": [r for r, _, _ in rows],
        "mean_spearman": float(np.mean(ranks)) if ranks else float("nan"),
        "clip_spearman": [s for _, s, _ in rows],
        "mean_valid_fraction": float(np.mean([v for _, _, v in rows])),
    }


def eval_keypoints(pred, data_dir, n_clips: "int | None" = None,
                   cfg: EngineConfig = EngineConfig()) -> dict:
    """Does the top error-reduction token lie on the moving sprite?"""
    manifest = load_manifest(data_dir)
    n = len(manifest["specs"]) if n_clips is None else n_clips
    p = pred.config.patch

    def one(i):
        clip, gt = load_clip(data_dir, i)
        cond = _clip_cond(pred, manifest["specs"][i])
        report = keypoint_error_map(pred, clip, cond=cond)
        r, c = np.unravel_index(int(np.argmax(report.error_map)),
                                report.error_map.shape)
        cell_on_sprite = bool(
            (gt.segments[r * p:(r + 1) * p, c * p:(c + 1) * p] > 0).any())
        return cell_on_sprite

    hits = _map_clips(one, range(n))
    return {"n_clips": n,
            "top_keypoint_on_sprite_rate": float(np.mean(hits)),
            "clip_hit": [bool(h) for h in hits]}
