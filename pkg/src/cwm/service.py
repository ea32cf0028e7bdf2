"""Local HTTP service exposing the counterfactual engine to the
interactive prompting UI.

The service is a thin adapter over the engine: every payload is
reproducible with a CLI invocation against the same checkpoint, and
identical requests produce byte-identical JSON (the session seed is
fixed at startup and responses carry the resolved thresholds).
"""

from __future__ import annotations

import base64
import hashlib
import io
import json

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .engine import (EngineConfig, FlowField, MotionPrompt,
                     counterfactual_predict, default_flow_fn,
                     greedy_keypoints, relative_depth, segment)
from .export import (depth_to_rgb, flow_field_to_dense, flow_to_rgb,
                     segment_to_rgb)
from .model import load_predictor
from .world import load_clip, load_manifest


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def _png_bytes(rgb: np.ndarray) -> str:
    from PIL import Image
    arr = np.clip(np.asarray(rgb) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _decode_png(b64: str) -> np.ndarray:
    from PIL import Image
    try:
        img = Image.open(io.BytesIO(base64.b64decode(b64))).convert("RGB")
    except Exception as e:
        raise ApiError(400, f"invalid png payload: {e}") from e
    return np.asarray(img, np.float32) / 255.0


def _rle(mask: np.ndarray) -> list[list[int]]:
    """Row-major run-length encoding of True pixels: [[start, length], ...]."""
    flat = np.asarray(mask, bool).ravel()
    if not flat.any():
        return []
    d = np.diff(flat.astype(np.int8))
    starts = np.flatnonzero(d == 1) + 1
    ends = np.flatnonzero(d == -1) + 1
    if flat[0]:
        starts = np.concatenate(([0], starts))
    if flat[-1]:
        ends = np.concatenate((ends, [flat.size]))
    return [[int(s), int(e - s)] for s, e in zip(starts, ends)]


def _canonical_json(payload: dict) -> Response:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return Response(content=body, media_type="application/json")


class ServiceState:
    """One loaded checkpoint plus re-settable frames; weights immutable."""

    def __init__(self, ckpt, data=None, seed: int = 0):
        self.pred = load_predictor(ckpt)
        with open(ckpt, "rb") as f:
            self.checkpoint = hashlib.sha256(f.read()).hexdigest()[:16]
        self.data = data
        self.seed = seed
        self.cfg = EngineConfig(seed=seed)
        self.flow_fn = default_flow_fn(self.cfg)
        self.frames: dict[str, np.ndarray] = {}

    def thresholds(self) -> dict:
        return {"tau_occ": self.cfg.tau_occ, "tau_dis": self.cfg.tau_dis,
                "tau_seg": self.cfg.tau_seg, "session_seed": self.seed}

    def add_frame(self, frame: np.ndarray) -> str:
        config = self.pred.config
        if frame.shape[:2] != (config.frame_size, config.frame_size):
            raise ApiError(409, "frame geometry does not match checkpoint "
                           f"grid ({config.grid}x{config.grid} patches of "
                           f"{config.patch}px)")
        fid = hashlib.sha256(
            np.ascontiguousarray(frame.astype(np.float32)).tobytes()
        ).hexdigest()[:16]
        self.frames[fid] = frame.astype(np.float32)
        return fid

    def get_frame(self, frame_id) -> np.ndarray:
        if not isinstance(frame_id, str) or frame_id not in self.frames:
            raise ApiError(404, f"unknown frame_id {frame_id!r}")
        return self.frames[frame_id]

    def load_dataset_clip(self, index: int):
        if self.data is None:
            raise ApiError(400, "service started without --data; "
                           "dataset clip refs are unavailable")
        try:
            n = load_manifest(self.data)["n_clips"]
        except FileNotFoundError as e:
            raise ApiError(400, f"dataset unreadable: {e}") from e
        if not (0 <= index < n):
            raise ApiError(404, f"unknown clip {index} (dataset has {n})")
        clip, _ = load_clip(self.data, index, patch=self.pred.config.patch)
        return clip


def _parse_prompt(body: dict) -> MotionPrompt:
    try:
        moves = tuple((tuple(m["src"]), (m["dst"][0] - m["src"][0],
                                         m["dst"][1] - m["src"][1]))
                      for m in body.get("moves") or [])
        stops = tuple(tuple(s) for s in body.get("stops") or [])
        hm = body.get("head_motion")
        hm = tuple(float(v) for v in hm) if hm is not None else None
    except (KeyError, TypeError, IndexError) as e:
        raise ApiError(400, f"malformed prompt: {e}") from e
    return MotionPrompt(moves=moves, stops=stops, head_motion=hm)


def create_app(ckpt, data=None, seed: int = 0) -> FastAPI:
    state = ServiceState(ckpt, data=data, seed=seed)
    app = FastAPI(title="cwm", version=__version__)
    app.state.cwm = state
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"https?://(localhost|127\.0\.0\.1)(:\d+)?",
        allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return Response(
            content=json.dumps({"error": exc.message}, sort_keys=True,
                               separators=(",", ":")),
            status_code=exc.status, media_type="application/json")

    def _check_zckpt(body: dict) -> None:
        want = body.get("checkpoint")
        if want is not None and want != state.checkpoint:
            raise ApiError(409, f"checkpoint mismatch: server has "
                           f"{state.checkpoint}, request expects {want}")

    async def _body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception as e:
            raise ApiError(400, f"invalid JSON body: {e}") from e
        if not isinstance(body, dict):
            raise ApiError(400, "JSON body must be an object")
        return body

    @app.get("/api/health")
    async def health():
        return _canonical_json({"version": __version__,
                                "checkpoint": state.checkpoint})

    @app.post("/api/frame")
    async def frame(request: Request):
        body = await _body(request)
        _check_zckpt(body)
        if "png" in body:
            img = _decode_png(body["png"])
        elif "clip" in body:
            try:
                index = int(body["clip"])
            except (TypeError, ValueError) as e:
                raise ApiError(400, f"malformed clip ref: {e}") from e
            img = state.load_dataset_clip(index).frames[0]
        else:
            raise ApiError(400, "frame request needs 'png' or 'clip'")
        fid = state.add_frame(img)
        g = state.pred.config.grid
        return _canonical_json({"frame_id": fid,
                                "grid": {"rows": g, "cols": g},
                                "thresholds": state.thresholds()})

    @app.post("/api/counterfactual")
    async def counterfactual(request: Request):
        body = await _body(request)
        _check_zckpt(body)
        frame0 = state.get_frame(body.get("frame_id"))
        prompt = _parse_prompt(body)
        if not prompt.moves and not prompt.stops:
            raise ApiError(422, "degenerate prompt: no moves and no stops")
        try:
            prompt.validate(state.pred.config.grid)
        except ValueError as e:
            raise ApiError(400, f"malformed prompt: {e}") from e
        try:
            if prompt.moves:
                res = segment(state.pred, state.flow_fn, frame0, prompt,
                              state.cfg)
            else:
                res = None
        except ValueError as e:
            raise ApiError(422, f"degenerate prompt: {e}") from e
        x_hat = counterfactual_predict(state.pred, frame0, prompt)
        out = {"prediction_png": _png_bytes(x_hat),
               "thresholds": state.thresholds(),
               "flow_png": None, "segment_png": None,
               "segment_rle": [], "flow_stats": None}
        if res is not None:
            dense, valid = flow_field_to_dense(res.flow, frame0.shape[:2],
                                               state.cfg.seg_stride)
            mag = np.linalg.norm(res.flow.vectors, axis=1)
            mag = mag[res.flow.status == FlowField.VALID]
            out["flow_png"] = _png_bytes(flow_to_rgb(dense, valid))
            out["segment_png"] = _png_bytes(segment_to_rgb(res.mask))
            out["segment_rle"] = _rle(res.mask)
            out["flow_stats"] = {
                "max_px": float(mag.max()) if mag.size else 0.0,
                "mean_px": float(mag.mean()) if mag.size else 0.0,
                "n_valid": int(mag.size),
                "n_queries": int(len(res.flow.queries))}
        return _canonical_json(out)

    @app.post("/api/keypoints")
    async def keypoints(request: Request):
        body = await _body(request)
        _check_zckpt(body)
        if "clip_id" not in body:
            raise ApiError(400, "keypoints request needs 'clip_id'")
        try:
            index = int(body["clip_id"])
            k = int(body.get("k", 3))
        except (TypeError, ValueError) as e:
            raise ApiError(400, f"malformed request: {e}") from e
        clip = state.load_dataset_clip(index)
        try:
            report = greedy_keypoints(state.pred, clip, k)
        except ValueError as e:
            raise ApiError(422, f"degenerate request: {e}") from e
        return _canonical_json({
            "indices": [[t.row, t.col] for t in report.selected],
            "error_curve": [float(v) for v in report.curve],
            "thresholds": state.thresholds()})

    @app.post("/api/depth")
    async def depth(request: Request):
        body = await _body(request)
        _check_zckpt(body)
        frame0 = state.get_frame(body.get("frame_id"))
        rho = body.get("rho")
        try:
            rho = (float(rho[0]), float(rho[1]))
        except (TypeError, ValueError, IndexError) as e:
            raise ApiError(400, f"malformed rho: {e}") from e
        if rho == (0.0, 0.0):
            raise ApiError(422, "degenerate prompt: rho=0 gives no parallax")
        try:
            dm = relative_depth(state.pred, frame0, rho,
                                flow_fn=state.flow_fn, cfg=state.cfg)
        except ValueError as e:
            raise ApiError(422, f"degenerate request: {e}") from e
        return _canonical_json({
            "depth_png": _png_bytes(depth_to_rgb(dm.depth, dm.valid)),
            "valid_fraction": float(dm.valid.mean()),
            "thresholds": state.thresholds()})

    return app


def run_server(ckpt, port: int = 8089, data=None, seed: int = 0) -> None:
    import uvicorn
    app = create_app(ckpt, data=data, seed=seed)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
