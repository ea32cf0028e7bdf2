"""Serialize readouts to the dataset ground-truth schema and color PNGs.

Readout results and renderer ground truth share one JSON layout so a
single diff tool compares them; the PNG exporters are for figures and the
interactive UI overlays.
"""

from __future__ import annotations

import numpy as np

from .engine import DenseFlow, DepthMap, FlowField, SegmentResult
from .video import save_png
from .world import _b64_array


def flow_field_to_dense(flow: FlowField, shape: tuple[int, int],
                        stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Expand sparse query flow to per-pixel (flow, valid) maps."""
    H, W = shape
    dense = np.zeros((H, W, 2), np.float32)
    valid = np.zeros((H, W), bool)
    for (y, x), v, s in zip(flow.queries, flow.vectors, flow.status):
        y0 = (int(y) // stride) * stride
        x0 = (int(x) // stride) * stride
        if s == FlowField.VALID:
            dense[y0:y0 + stride, x0:x0 + stride] = v
            valid[y0:y0 + stride, x0:x0 + stride] = True
    return dense, valid


def readout_to_json(flow: np.ndarray, occluded: np.ndarray,
                    disoccluded: np.ndarray, segments: np.ndarray,
                    inv_depth: np.ndarray) -> dict:
    """Same shape as the dataset gt.json payload (schema_version 1)."""
    return {
        "schema_version": 1,
        "flow": _b64_array(flow, "<f4"),
        "occluded": _b64_array(occluded, "u1"),
        "disoccluded": _b64_array(disoccluded, "u1"),
        "segments": _b64_array(segments, "u1"),
        "inv_depth": _b64_array(inv_depth, "<f4"),
    }


def flow_to_rgb(flow: np.ndarray, valid: "np.ndarray | None" = None,
                max_px: "float | None" = None) -> np.ndarray:
    """Angle -> hue (RGB approximation), magnitude -> saturation."""
    dy, dx = flow[..., 0], flow[..., 1]
    mag = np.hypot(dy, dx)
    scale = max_px or max(float(mag.max()), 1e-6)
    m = np.clip(mag / scale, 0, 1)
    ang = np.arctan2(dy, dx)  # [-pi, pi]
    h = (ang + np.pi) / (2 * np.pi) * 6.0
    c = m
    xcomp = c * (1 - np.abs(h % 2 - 1))
    z = np.zeros_like(c)
    idx = (h.astype(int) % 6)[..., None]
    rgb = np.select(
        [idx == 0, idx == 1, idx == 2, idx == 3, idx == 4, idx == 5],
        [np.stack([c, xcomp, z], -1), np.stack([xcomp, c, z], -1),
         np.stack([z, c, xcomp], -1), np.stack([z, xcomp, c], -1),
         np.stack([xcomp, z, c], -1), np.stack([c, z, xcomp], -1)])
    # fade to white as magnitude drops so zero flow reads as blank
    out = np.clip(1.0 - (1.0 - rgb) * m[..., None], 0, 1)
    if valid is not None:
        out[~valid] = 0.25
    return out.astype(np.float32)


def segment_to_rgb(mask: np.ndarray) -> np.ndarray:
    out = np.zeros(mask.shape + (3,), np.float32)
    out[mask] = (0.1, 0.8, 0.2)
    out[~mask] = (0.05, 0.05, 0.05)
    return out


def depth_to_rgb(depth: np.ndarray, valid: np.ndarray) -> np.ndarray:
    out = np.zeros(depth.shape + (3,), np.float32)
    if valid.any():
        d = depth[valid]
        lo, hi = float(d.min()), float(d.max())
        t = (depth - lo) / max(hi - lo, 1e-9)
        # near = warm, far = cold
        out[..., 0] = 1.0 - t
        out[..., 2] = t
        out[~valid] = 0.25
    else:
        out[:] = 0.25
    return np.clip(out, 0, 1).astype(np.float32)


def save_flow_png(path, flow: np.ndarray, valid=None) -> None:
    save_png(flow_to_rgb(flow, valid), path)


def save_segment_png(path, mask: np.ndarray) -> None:
    save_png(segment_to_rgb(mask), path)


def save_depth_png(path, depth_map: DepthMap) -> None:
    save_png(depth_to_rgb(depth_map.depth, depth_map.valid), path)
