"""Layered 2D sprite renderer with exact ground truth.

Scenes are an orthographic stack: a wrap-around background plus sprites
at strictly positive, pairwise-distinct depths. All per-frame
displacements are integer pixels, so flow, occlusion, segment and
inverse-depth maps are exact by construction. Camera motion is a
parallax shift of round(kappa * rho / depth) pixels per layer, which
makes the inverse-linear depth law hold with zero residual.

All 2-vectors (velocity, camera motion, flow) are (dy, dx) in row/col
order.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .video import VideoClip, load_png, save_png

DIFFICULTIES = ("single-mover", "multi-mover", "camera-pan", "attached-pairs")

GT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SpriteSpec:
    shape: str          # "rect" or "ellipse"
    height: int
    width: int
    y: int              # top-left position in frame0, pixels
    x: int
    vy: int             # own velocity, px/frame
    vx: int
    depth: float
    tex_seed: int


@dataclass(frozen=True)
class SceneSpec:
    sprites: tuple[SpriteSpec, ...]
    bg_seed: int
    bg_depth: float = 2.0
    camera_velocity: tuple[float, float] = (0.0, 0.0)  # rho units/frame
    kappa: float = 8.0  # px * depth per rho unit
    height: int = 64
    width: int = 64
    low_contrast: bool = False
    seed: int = 0

    def __post_init__(self):
        depths = [s.depth for s in self.sprites] + [self.bg_depth]
        if any(d <= 0 for d in depths):
            raise ValueError("depths must be strictly positive")
        if len(set(depths)) != len(depths):
            raise ValueError("depths must be pairwise distinct")


@dataclass
class GroundTruth:
    """Per-pixel oracle maps, all on frame0's lattice unless noted."""

    flow: np.ndarray        # (H, W, 2) float32, (dy, dx) px
    occluded: np.ndarray    # (H, W) bool, frame0 pixels covered in frame1
    disoccluded: np.ndarray  # (H, W) bool, frame1 pixels with no preimage
    segments: np.ndarray    # (H, W) uint8, 0 = background, 1.. = sprite id
    inv_depth: np.ndarray   # (H, W) float32, 1/depth of the visible layer


def block_texture(height: int, width: int, seed: int, block: int = 4,
                  low_contrast: bool = False) -> np.ndarray:
    """Seeded random block texture, quantized to the 8-bit grid so PNG
    round-trips are bit-exact."""
    rng = np.random.Generator(np.random.PCG64(seed))
    bh, bw = -(-height // block), -(-width // block)
    if low_contrast:
        levels = rng.integers(115, 141, size=(bh, bw, 3))
    else:
        levels = rng.integers(26, 230, size=(bh, bw, 3))
    tex = np.repeat(np.repeat(levels, block, axis=0), block, axis=1)
    return (tex[:height, :width].astype(np.float32)) / 255.0


def sprite_mask(spec: SpriteSpec) -> np.ndarray:
    if spec.shape == "rect":
        return np.ones((spec.height, spec.width), dtype=bool)
    if spec.shape == "ellipse":
        yy, xx = np.mgrid[0:spec.height, 0:spec.width]
        cy, cx = (spec.height - 1) / 2.0, (spec.width - 1) / 2.0
        return ((yy - cy) / (spec.height / 2.0)) ** 2 + \
               ((xx - cx) / (spec.width / 2.0)) ** 2 <= 1.0
    raise ValueError(f"unknown sprite shape {spec.shape!r}")


def _layer_shift(kappa: float, rho: tuple[float, float], depth: float,
                 vel: tuple[int, int] = (0, 0)) -> tuple[int, int]:
    dy = int(round(kappa * rho[0] / depth)) + int(vel[0])
    dx = int(round(kappa * rho[1] / depth)) + int(vel[1])
    return dy, dx


def _paint(frame: np.ndarray, owner: np.ndarray, spec: SpriteSpec,
           sprite_id: int, y: int, x: int, tex: np.ndarray,
           mask: np.ndarray) -> None:
    H, W = frame.shape[:2]
    y0, y1 = max(y, 0), min(y + spec.height, H)
    x0, x1 = max(x, 0), min(x + spec.width, W)
    if y0 >= y1 or x0 >= x1:
        return
    sy, sx = y0 - y, x0 - x
    sub = mask[sy:sy + (y1 - y0), sx:sx + (x1 - x0)]
    frame[y0:y1, x0:x1][sub] = tex[sy:sy + (y1 - y0), sx:sx + (x1 - x0)][sub]
    owner[y0:y1, x0:x1][sub] = sprite_id


def render(spec: SceneSpec,
           head_motion: "tuple[float, float] | None" = None,
           delta_ms: float = 150.0,
           patch: int = 8) -> tuple[VideoClip, GroundTruth]:
    """Render a 2-frame clip and its exact ground truth.

    `head_motion` overrides the spec's camera velocity for this render.
    """
    rho = tuple(head_motion) if head_motion is not None else spec.camera_velocity
    H, W = spec.height, spec.width
    bg = block_texture(H, W, spec.bg_seed, low_contrast=spec.low_contrast)
    bg_shift = _layer_shift(spec.kappa, rho, spec.bg_depth)

    sprites = sorted(enumerate(spec.sprites, start=1),
                     key=lambda t: -t[1].depth)  # far to near
    frames, owners = [], []
    for t in range(2):
        frame = np.roll(bg, (t * bg_shift[0], t * bg_shift[1]), axis=(0, 1)).copy()
        owner = np.zeros((H, W), dtype=np.int32)
        for sid, s in sprites:
            dy, dx = _layer_shift(spec.kappa, rho, s.depth, (s.vy, s.vx))
            tex = block_texture(s.height, s.width, s.tex_seed,
                                low_contrast=spec.low_contrast)
            _paint(frame, owner, s, sid, s.y + t * dy, s.x + t * dx, tex,
                   sprite_mask(s))
        frames.append(frame)
        owners.append(owner)

    shifts = {0: bg_shift}
    depths = {0: spec.bg_depth}
    for sid, s in sprites:
        shifts[sid] = _layer_shift(spec.kappa, rho, s.depth, (s.vy, s.vx))
        depths[sid] = s.depth

    owner0, owner1 = owners
    flow = np.zeros((H, W, 2), dtype=np.float32)
    occluded = np.zeros((H, W), dtype=bool)
    visited = np.zeros((H, W), dtype=bool)
    inv_depth = np.zeros((H, W), dtype=np.float32)
    for p_y in range(H):
        for p_x in range(W):
            o = int(owner0[p_y, p_x])
            dy, dx = shifts[o]
            flow[p_y, p_x] = (dy, dx)
            inv_depth[p_y, p_x] = 1.0 / depths[o]
            qy, qx = p_y + dy, p_x + dx
            if o == 0:  # background wraps with the roll
                qy, qx = qy % H, qx % W
            if not (0 <= qy < H and 0 <= qx < W):
                occluded[p_y, p_x] = True
                continue
            if owner1[qy, qx] == o:
                visited[qy, qx] = True
            else:
                occluded[p_y, p_x] = True
    disoccluded = ~visited

    clip = VideoClip(np.stack(frames), delta_ms=delta_ms,
                     patch_h=patch, patch_w=patch)
    gt = GroundTruth(flow=flow, occluded=occluded, disoccluded=disoccluded,
                     segments=owner0.astype(np.uint8), inv_depth=inv_depth)
    return clip, gt


# ---------------------------------------------------------------------------
# dataset generation


def _rand_sprite(rng: np.random.Generator, H: int, W: int, depth: float,
                 vy: int, vx: int, y: "int | None" = None,
                 x: "int | None" = None) -> SpriteSpec:
    h = int(rng.integers(16, 29))
    w = int(rng.integers(16, 29))
    margin = 6
    if y is None:
        y = int(rng.integers(margin, H - h - margin))
    if x is None:
        x = int(rng.integers(margin, W - w - margin))
    shape = "rect" if rng.random() < 0.5 else "ellipse"
    return SpriteSpec(shape, h, w, y, x, vy, vx, depth,
                      tex_seed=int(rng.integers(0, 2 ** 31)))


def _rand_velocity(rng: np.random.Generator, lo: int = 2, hi: int = 10
                   ) -> tuple[int, int]:
    """Integer velocity with at least one component of magnitude >= lo."""
    while True:
        vy = int(rng.integers(-hi, hi + 1))
        vx = int(rng.integers(-hi, hi + 1))
        if max(abs(vy), abs(vx)) >= lo:
            return vy, vx


def make_scene(difficulty: str, seed: int, height: int = 64, width: int = 64,
               low_contrast: bool = False) -> SceneSpec:
    """One seeded scene from the given difficulty distribution."""
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    H, W = height, width
    common = dict(bg_seed=int(rng.integers(0, 2 ** 31)), height=H, width=W,
                  low_contrast=low_contrast, seed=seed)

    if difficulty == "single-mover":
        vy, vx = _rand_velocity(rng)
        sprite = _rand_sprite(rng, H, W, depth=1.0, vy=vy, vx=vx)
        return SceneSpec(sprites=(sprite,), **common)

    if difficulty == "multi-mover":
        vy0, vx0 = _rand_velocity(rng)
        vy1, vx1 = _rand_velocity(rng)
        left = _rand_sprite(rng, H, W, depth=1.0, vy=vy0, vx=vx0)
        left = SpriteSpec(left.shape, left.height, min(left.width, W // 2 - 10),
                          left.y, int(rng.integers(2, 8)), vy0, vx0, 1.0,
                          left.tex_seed)
        right = _rand_sprite(rng, H, W, depth=1.5, vy=vy1, vx=vx1)
        right = SpriteSpec(right.shape, right.height,
                           min(right.width, W // 2 - 10), right.y,
                           int(rng.integers(W // 2 + 2, W // 2 + 8)),
                           vy1, vx1, 1.5, right.tex_seed)
        return SceneSpec(sprites=(left, right), **common)

    if difficulty == "camera-pan":
        # static sprite at depth 1 over background at depth 2; motion is
        # purely parallax, with shifts integer for both layers.
        choices = (-1.0, -0.5, 0.5, 1.0)
        rho = (float(rng.choice(choices)) if rng.random() < 0.7 else 0.0,
               float(rng.choice(choices)))
        if rho == (0.0, 0.0):
            rho = (0.0, float(rng.choice((-1.0, 1.0))))
        sprite = _rand_sprite(rng, H, W, depth=1.0, vy=0, vx=0)
        return SceneSpec(sprites=(sprite,), camera_velocity=rho, **common)

    # attached-pairs: two touching sprites sharing one velocity
    vy, vx = _rand_velocity(rng)
    h0 = int(rng.integers(12, 19))
    w0 = int(rng.integers(16, 25))
    h1 = int(rng.integers(12, 19))
    y = int(rng.integers(8, H - h0 - h1 - 10))
    x = int(rng.integers(8, W - w0 - 10))
    top = SpriteSpec("rect", h0, w0, y, x, vy, vx, 1.0,
                     tex_seed=int(rng.integers(0, 2 ** 31)))
    bottom = SpriteSpec("rect", h1, w0, y + h0, x, vy, vx, 1.2,
                        tex_seed=int(rng.integers(0, 2 ** 31)))
    return SceneSpec(sprites=(top, bottom), **common)


def make_specs(n_clips: int, difficulty: str, seed: int,
               **kwargs) -> list[SceneSpec]:
    if n_clips < 1:
        raise ValueError("n_clips must be >= 1")
    return [make_scene(difficulty, seed * 1_000_003 + i, **kwargs)
            for i in range(n_clips)]


# ---------------------------------------------------------------------------
# dataset IO: clips/NNNN/{frame0.png, frame1.png, gt.json} + manifest.json


def _b64_array(a: np.ndarray, dtype: str) -> dict:
    arr = np.ascontiguousarray(a.astype(dtype))
    return {"shape": list(arr.shape), "dtype": dtype,
            "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def _unb64_array(d: dict) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(d["data"]), dtype=d["dtype"])
    return arr.reshape(d["shape"]).copy()


def gt_to_json(gt: GroundTruth) -> dict:
    return {
        "schema_version": GT_SCHEMA_VERSION,
        "flow": _b64_array(gt.flow, "<f4"),
        "occluded": _b64_array(gt.occluded, "u1"),
        "disoccluded": _b64_array(gt.disoccluded, "u1"),
        "segments": _b64_array(gt.segments, "u1"),
        "inv_depth": _b64_array(gt.inv_depth, "<f4"),
    }


def gt_from_json(d: dict) -> GroundTruth:
    if d.get("schema_version") != GT_SCHEMA_VERSION:
        raise ValueError(f"unsupported gt schema {d.get('schema_version')!r}")
    return GroundTruth(
        flow=_unb64_array(d["flow"]).astype(np.float32),
        occluded=_unb64_array(d["occluded"]).astype(bool),
        disoccluded=_unb64_array(d["disoccluded"]).astype(bool),
        segments=_unb64_array(d["segments"]).astype(np.uint8),
        inv_depth=_unb64_array(d["inv_depth"]).astype(np.float32),
    )


def write_dataset(specs: list[SceneSpec], out_dir, difficulty: str,
                  seed: int) -> Path:
    out = Path(out_dir)
    (out / "clips").mkdir(parents=True, exist_ok=True)
    for i, spec in enumerate(specs):
        clip_dir = out / "clips" / f"{i:04d}"
        clip_dir.mkdir(exist_ok=True)
        clip, gt = render(spec)
        save_png(clip.frames[0], clip_dir / "frame0.png")
        save_png(clip.frames[1], clip_dir / "frame1.png")
        with open(clip_dir / "gt.json", "w") as f:
            json.dump(gt_to_json(gt), f)
    manifest = {
        "seed": seed,
        "difficulty": difficulty,
        "n_clips": len(specs),
        "specs": [asdict(s) for s in specs],
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    return out


def spec_from_dict(d: dict) -> SceneSpec:
    sprites = tuple(SpriteSpec(**s) for s in d["sprites"])
    rest = {k: v for k, v in d.items() if k != "sprites"}
    rest["camera_velocity"] = tuple(rest.get("camera_velocity", (0.0, 0.0)))
    return SceneSpec(sprites=sprites, **rest)


def load_manifest(data_dir) -> dict:
    with open(Path(data_dir) / "manifest.json") as f:
        return json.load(f)


def load_clip(data_dir, index: int, patch: int = 8
              ) -> tuple[VideoClip, GroundTruth]:
    clip_dir = Path(data_dir) / "clips" / f"{index:04d}"
    f0 = load_png(clip_dir / "frame0.png")
    f1 = load_png(clip_dir / "frame1.png")
    with open(clip_dir / "gt.json") as f:
        gt = gt_from_json(json.load(f))
    clip = VideoClip(np.stack([f0, f1]), patch_h=patch, patch_w=patch)
    return clip, gt
