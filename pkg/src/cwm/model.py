"""Masked predictors: a small transformer trained from scratch, plus
analytic stub predictors with closed-form warp fields for engine tests.

The learned predictor is an encoder-decoder over patch tokens: the
encoder sees only visible tokens (optionally one extra token embedding
the camera-motion 2-vector), the decoder fills a full token grid seeded
with a learned mask token. Output pixels are clamped to [0,1].
"""

from __future__ import annotations

import io
import json
import math
import struct
import zlib
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .masking import MaskingPolicy, RngState, sample_mask
from .video import FILL_VALUE, Mask, TokenIndex, VideoClip

CHECKPOINT_MAGIC = b"CWMC"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PredictorConfig:
    frame_size: int = 64
    patch: int = 8
    n_frames: int = 2
    embed_dim: int = 128
    enc_layers: int = 4
    dec_layers: int = 2
    heads: int = 4
    mlp_ratio: float = 4.0
    conditioning: str = "none"  # "none" | "head_motion"
    loss: str = "l2"

    def __post_init__(self):
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")
        if self.frame_size % self.patch:
            raise ValueError("frame_size must be divisible by patch")
        if self.conditioning not in ("none", "head_motion"):
            raise ValueError(f"unknown conditioning {self.conditioning!r}")

    @property
    def grid(self) -> int:
        return self.frame_size // self.patch

    @property
    def tokens_per_frame(self) -> int:
        return self.grid * self.grid

    @property
    def seq_len(self) -> int:
        return self.n_frames * self.tokens_per_frame

    @property
    def patch_dim(self) -> int:
        return self.patch * self.patch * 3

    def fingerprint(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


# ---------------------------------------------------------------------------
# geometry helpers


def clip_tokens(clip: VideoClip) -> np.ndarray:
    """Flatten a clip to (seq_len, patch_dim): position = frame*G + r*gc + c."""
    F, H, W, _ = clip.frames.shape
    ph, pw = clip.patch_h, clip.patch_w
    x = clip.frames.reshape(F, H // ph, ph, W // pw, pw, 3)
    x = x.transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(
        x.reshape(F * (H // ph) * (W // pw), ph * pw * 3), dtype=np.float32)


def tokens_to_frames(tokens: np.ndarray, config: PredictorConfig) -> np.ndarray:
    """(seq_len, patch_dim) -> (n_frames, H, W, 3)."""
    g, p = config.grid, config.patch
    x = tokens.reshape(config.n_frames, g, g, p, p, 3)
    x = x.transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(x.reshape(config.n_frames, g * p, g * p, 3))


def token_position(idx: TokenIndex, grid: int) -> int:
    return idx.frame * grid * grid + idx.row * grid + idx.col


def mask_positions(mask: Mask) -> np.ndarray:
    """Sorted flat positions of a Mask's visible tokens."""
    g = mask.grid_cols
    return np.array(sorted(t.frame * mask.grid_rows * g + t.row * g + t.col
                           for t in mask.visible), dtype=np.int64)


def hidden_positions(vis: np.ndarray, seq_len: int) -> np.ndarray:
    keep = np.ones(seq_len, dtype=bool)
    keep[vis] = False
    return np.nonzero(keep)[0]


# ---------------------------------------------------------------------------
# learned predictor


def init_params(config: PredictorConfig, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    D = config.embed_dim
    pd = config.patch_dim
    hidden = int(D * config.mlp_ratio)

    def tn(*shape):
        return np.clip(rng.normal(0.0, 0.02, shape), -0.04, 0.04
                       ).astype(np.float32)

    p: dict[str, np.ndarray] = {
        "embed.W": tn(pd, D), "embed.b": np.zeros(D, np.float32),
        "pos": tn(config.seq_len, D),
        "mask_token": tn(1, 1, D),
        "final_ln.g": np.ones(D, np.float32),
        "final_ln.b": np.zeros(D, np.float32),
        # zero head + mid-gray bias: the untrained model predicts 0.5
        "head.W": np.zeros((D, pd), np.float32),
        "head.b": np.full(pd, 0.5, np.float32),
    }
    if config.conditioning == "head_motion":
        p["cond.W"] = tn(2, D)
        p["cond.b"] = np.zeros(D, np.float32)
    for stack, n in (("enc", config.enc_layers), ("dec", config.dec_layers)):
        for i in range(n):
            k = f"{stack}{i}."
            p[k + "ln1.g"] = np.ones(D, np.float32)
            p[k + "ln1.b"] = np.zeros(D, np.float32)
            for m in ("q", "k", "v"):
                p[k + m + ".W"] = tn(D, D)
                p[k + m + ".b"] = np.zeros(D, np.float32)
            p[k + "proj.W"] = tn(D, D)
            p[k + "proj.b"] = np.zeros(D, np.float32)
            p[k + "ln2.g"] = np.ones(D, np.float32)
            p[k + "ln2.b"] = np.zeros(D, np.float32)
            p[k + "fc1.W"] = tn(D, hidden)
            p[k + "fc1.b"] = np.zeros(hidden, np.float32)
            p[k + "fc2.W"] = tn(hidden, D)
            p[k + "fc2.b"] = np.zeros(D, np.float32)
    return p


def _linear(x, W, b):
    return ad.add(ad.matmul(x, W), b)


def _block(x, P, prefix: str, heads: int):
    B, S, D = x.shape
    dh = D // heads
    h = ad.layer_norm(x, P[prefix + "ln1.g"], P[prefix + "ln1.b"])

    def split_heads(t):
        return ad.transpose(ad.reshape(t, (B, S, heads, dh)), (0, 2, 1, 3))

    q = split_heads(_linear(h, P[prefix + "q.W"], P[prefix + "q.b"]))
    k = split_heads(_linear(h, P[prefix + "k.W"], P[prefix + "k.b"]))
    v = split_heads(_linear(h, P[prefix + "v.W"], P[prefix + "v.b"]))
    att = ad.scale(ad.matmul(q, ad.transpose(k, (0, 1, 3, 2))),
                   1.0 / math.sqrt(dh))
    a = ad.softmax(att)
    o = ad.reshape(ad.transpose(ad.matmul(a, v), (0, 2, 1, 3)), (B, S, D))
    x = ad.add(x, _linear(o, P[prefix + "proj.W"], P[prefix + "proj.b"]))
    h2 = ad.layer_norm(x, P[prefix + "ln2.g"], P[prefix + "ln2.b"])
    m = _linear(ad.gelu(_linear(h2, P[prefix + "fc1.W"], P[prefix + "fc1.b"])),
                P[prefix + "fc2.W"], P[prefix + "fc2.b"])
    return ad.add(x, m)


def forward(P: dict[str, ad.Tensor], config: PredictorConfig,
            tokens: ad.Tensor, vis_idx: np.ndarray,
            cond: "ad.Tensor | None" = None) -> ad.Tensor:
    """Predicted tokens at every position, clamped to [0,1].

    tokens: (B, seq_len, patch_dim); vis_idx: (B, K) visible positions.
    """
    B, K = vis_idx.shape
    vis = ad.take_tokens(tokens, vis_idx)
    x = ad.add(_linear(vis, P["embed.W"], P["embed.b"]),
               ad.take_rows(P["pos"], vis_idx))
    if config.conditioning == "head_motion":
        if cond is None:
            raise ValueError("head_motion conditioning requires cond input")
        ct = ad.reshape(_linear(cond, P["cond.W"], P["cond.b"]),
                        (B, 1, config.embed_dim))
        x = ad.concat([x, ct], axis=1)
    elif cond is not None:
        raise ValueError("predictor is not conditioned; cond must be None")
    for i in range(config.enc_layers):
        x = _block(x, P, f"enc{i}.", config.heads)
    if config.conditioning == "head_motion":
        x = ad.take_tokens(x, np.tile(np.arange(K), (B, 1)))
    base = ad.add(ad.add(P["mask_token"], ad.reshape(P["pos"],
                                                     (1, config.seq_len,
                                                      config.embed_dim))),
                  ad.tensor(np.zeros((B, 1, 1), np.float32)))
    d = ad.put_tokens(base, vis_idx, x)
    for i in range(config.dec_layers):
        d = _block(d, P, f"dec{i}.", config.heads)
    d = ad.layer_norm(d, P["final_ln.g"], P["final_ln.b"])
    out = _linear(d, P["head.W"], P["head.b"])
    return ad.clamp01(out)


class LearnedPredictor:
    """Transformer predictor; weights immutable after construction."""

    def __init__(self, config: PredictorConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = {k: np.asarray(v, np.float32) for k, v in params.items()}
        for k, v in self.params.items():
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite weights in {k!r}")

    @property
    def differentiable(self) -> bool:
        return True

    def _cond_tensor(self, cond, B):
        if self.config.conditioning != "head_motion":
            if cond is not None:
                raise ValueError("predictor is not head-motion conditioned")
            return None
        if cond is None:
            raise ValueError("missing head-motion conditioning")
        c = np.asarray(cond, np.float32).reshape(-1, 2)
        if c.shape[0] == 1 and B > 1:
            c = np.repeat(c, B, axis=0)
        return ad.tensor(c)

    def predict_full_batch(self, tokens: np.ndarray, vis_idx: np.ndarray,
                           cond=None, keep_visible: bool = True) -> np.ndarray:
        """tokens (B, T, pd) -> predictions (B, T, pd)."""
        P = {k: ad.tensor(v) for k, v in self.params.items()}
        t = ad.tensor(tokens)
        out = forward(P, self.config, t, vis_idx,
                      self._cond_tensor(cond, tokens.shape[0])).data
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            out = out.copy()
            out[rows, vis_idx] = tokens[rows, vis_idx]
        return out

    def jvp_full_batch(self, tokens: np.ndarray, vis_idx: np.ndarray,
                       tangents: np.ndarray, cond=None,
                       keep_visible: bool = True) -> np.ndarray:
        """Directional derivative of the prediction w.r.t. input pixels."""
        P = {k: ad.tensor(v) for k, v in self.params.items()}
        t = ad.tensor(tokens)
        out = forward(P, self.config, t, vis_idx,
                      self._cond_tensor(cond, tokens.shape[0]))
        (tan,) = ad.forward_tangents([out], {id(t): tangents.astype(np.float32)})
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            tan = tan.copy()
            tan[rows, vis_idx] = tangents[rows, vis_idx]
        return tan


# ---------------------------------------------------------------------------
# stub predictors with closed-form Jacobians


def _cell_pos(frame: int, r: int, c: int, grid: int) -> int:
    return frame * grid * grid + r * grid + c


class StubTranslate:
    """Frame1 = frame0 rigidly shifted by whole patch cells; vacated cells
    take the fill value. Ignores revealed frame1 tokens and conditioning."""

    differentiable = True

    def __init__(self, config: PredictorConfig, shift: tuple[int, int]):
        self.config = config
        self.shift = (int(shift[0]), int(shift[1]))

    def warp_field(self) -> dict[tuple[int, int], "tuple[int, int] | None"]:
        """frame0 cell -> frame1 cell (None when shifted out of frame)."""
        g = self.config.grid
        dy, dx = self.shift
        out = {}
        for r in range(g):
            for c in range(g):
                q = (r + dy, c + dx)
                out[(r, c)] = q if 0 <= q[0] < g and 0 <= q[1] < g else None
        return out

    def disoccluded_cells(self) -> set[tuple[int, int]]:
        g = self.config.grid
        dy, dx = self.shift
        return {(r, c) for r in range(g) for c in range(g)
                if not (0 <= r - dy < g and 0 <= c - dx < g)}

    def occluded_cells(self) -> set[tuple[int, int]]:
        return {src for src, dst in self.warp_field().items() if dst is None}

    def _source_map(self) -> tuple[np.ndarray, np.ndarray]:
        """frame1 position -> source frame0 position (-1 = no preimage)."""
        g = self.config.grid
        dy, dx = self.shift
        src = np.full(g * g, -1, dtype=np.int64)
        for r in range(g):
            for c in range(g):
                sr, sc = r - dy, c - dx
                if 0 <= sr < g and 0 <= sc < g:
                    src[r * g + c] = _cell_pos(0, sr, sc, g)
        return src, np.nonzero(src < 0)[0]

    def predict_full_batch(self, tokens, vis_idx, cond=None,
                           keep_visible=True):
        G = self.config.tokens_per_frame
        src, missing = self._source_map()
        out = tokens.copy()
        safe = np.where(src < 0, 0, src)
        out[:, G:2 * G] = tokens[:, safe]
        out[:, G + missing] = FILL_VALUE
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            out[rows, vis_idx] = tokens[rows, vis_idx]
        return out

    def jvp_full_batch(self, tokens, vis_idx, tangents, cond=None,
                       keep_visible=True):
        G = self.config.tokens_per_frame
        src, missing = self._source_map()
        tan = tangents.copy()
        safe = np.where(src < 0, 0, src)
        tan[:, G:2 * G] = tangents[:, safe]
        tan[:, G + missing] = 0.0
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            tan[rows, vis_idx] = tangents[rows, vis_idx]
        return tan


class StubLayeredWarp:
    """Piecewise patch-cell warp with depth-ordered occlusion.

    `segments` assigns each frame0 cell a layer id (0 = background); each
    layer moves rigidly by its shift, nearer layers win collisions.
    """

    differentiable = True

    def __init__(self, config: PredictorConfig, segments: np.ndarray,
                 shifts: dict[int, tuple[int, int]],
                 depths: dict[int, float]):
        g = config.grid
        segments = np.asarray(segments, dtype=np.int64)
        if segments.shape != (g, g):
            raise ValueError(f"segments must be {(g, g)}")
        if sorted(depths) != sorted(shifts):
            raise ValueError("shifts and depths must cover the same layer ids")
        if len(set(depths.values())) != len(depths):
            raise ValueError("layer depths must be pairwise distinct")
        self.config = config
        self.segments = segments
        self.shifts = {int(k): (int(v[0]), int(v[1])) for k, v in shifts.items()}
        self.depths = {int(k): float(v) for k, v in depths.items()}
        self._src, self._owner1 = self._solve()

    def _solve(self) -> tuple[np.ndarray, np.ndarray]:
        g = self.config.grid
        src = np.full((g, g), -1, dtype=np.int64)      # frame1 cell -> frame0 pos
        owner = np.full((g, g), -1, dtype=np.int64)
        depth = np.full((g, g), np.inf)
        for r in range(g):
            for c in range(g):
                lid = int(self.segments[r, c])
                dy, dx = self.shifts[lid]
                qr, qc = r + dy, c + dx
                if not (0 <= qr < g and 0 <= qc < g):
                    continue
                if self.depths[lid] < depth[qr, qc]:
                    depth[qr, qc] = self.depths[lid]
                    owner[qr, qc] = lid
                    src[qr, qc] = _cell_pos(0, r, c, g)
        return src, owner

    def warp_field(self) -> dict[tuple[int, int], "tuple[int, int] | None"]:
        """frame0 cell -> frame1 cell, None when occluded or out of frame."""
        g = self.config.grid
        out = {}
        for r in range(g):
            for c in range(g):
                dy, dx = self.shifts[int(self.segments[r, c])]
                qr, qc = r + dy, c + dx
                visible = (0 <= qr < g and 0 <= qc < g
                           and self._src[qr, qc] == _cell_pos(0, r, c, g))
                out[(r, c)] = (qr, qc) if visible else None
        return out

    def occluded_cells(self) -> set[tuple[int, int]]:
        return {s for s, d in self.warp_field().items() if d is None}

    def disoccluded_cells(self) -> set[tuple[int, int]]:
        g = self.config.grid
        return {(r, c) for r in range(g) for c in range(g)
                if self._src[r, c] < 0}

    def predict_full_batch(self, tokens, vis_idx, cond=None,
                           keep_visible=True):
        G = self.config.tokens_per_frame
        src = self._src.reshape(-1)
        out = tokens.copy()
        safe = np.where(src < 0, 0, src)
        out[:, G:2 * G] = tokens[:, safe]
        out[:, G + np.nonzero(src < 0)[0]] = FILL_VALUE
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            out[rows, vis_idx] = tokens[rows, vis_idx]
        return out

    def jvp_full_batch(self, tokens, vis_idx, tangents, cond=None,
                       keep_visible=True):
        G = self.config.tokens_per_frame
        src = self._src.reshape(-1)
        tan = tangents.copy()
        safe = np.where(src < 0, 0, src)
        tan[:, G:2 * G] = tangents[:, safe]
        tan[:, G + np.nonzero(src < 0)[0]] = 0.0
        if keep_visible:
            rows = np.arange(tokens.shape[0])[:, None]
            tan[rows, vis_idx] = tangents[rows, vis_idx]
        return tan


Predictor = "LearnedPredictor | StubTranslate | StubLayeredWarp"


# ---------------------------------------------------------------------------
# prediction + loss on clips


def predict_clip(pred, clip: VideoClip, mask: Mask, cond=None) -> np.ndarray:
    """Predicted frames for one clip: hidden tokens from the model,
    visible tokens copied from the input."""
    tokens = clip_tokens(clip)[None]
    vis = mask_positions(mask)[None]
    out = pred.predict_full_batch(tokens, vis, cond=cond, keep_visible=True)
    return tokens_to_frames(out[0], pred.config)


def masked_loss(pred, clip: VideoClip, mask: Mask, cond=None) -> float:
    """L2 error of the masked prediction against the true clip, averaged
    over all token pixels (visible tokens contribute zero)."""
    tokens = clip_tokens(clip)[None]
    vis = mask_positions(mask)[None]
    out = pred.predict_full_batch(tokens, vis, cond=cond, keep_visible=True)
    diff = (out[0].astype(np.float64) - tokens[0].astype(np.float64))
    return float((diff * diff).mean())


# ---------------------------------------------------------------------------
# training


class DivergenceError(RuntimeError):
    pass


def _policy_vis_batch(policy: MaskingPolicy, config: PredictorConfig,
                      rng: RngState, batch: int) -> np.ndarray:
    g = config.grid
    out = []
    for _ in range(batch):
        m = sample_mask(policy, config.n_frames, g, g, rng)
        out.append(mask_positions(m))
    return np.stack(out)


def train(config: PredictorConfig, policy: MaskingPolicy,
          clips: "list[VideoClip]", steps: int, seed: int,
          conds: "list | None" = None, batch_size: int = 16,
          lr: float = 3e-4, clip_norm: float = 1.0,
          log_every: int = 0) -> tuple[dict[str, np.ndarray], list[float]]:
    """Adam with cosine decay and global-norm clipping. Reproducible from
    (seed, config, policy, dataset order). Returns (weights, loss curve)."""
    if policy.arity != config.n_frames:
        raise ValueError("policy arity does not match config.n_frames")
    data = np.stack([clip_tokens(c) for c in clips])
    if data.shape[1:] != (config.seq_len, config.patch_dim):
        raise ValueError("dataset clips do not match config geometry")
    cond_arr = None
    if config.conditioning == "head_motion":
        if conds is None:
            raise ValueError("head_motion training needs per-clip conditioning")
        cond_arr = np.asarray(conds, np.float32).reshape(len(clips), 2)

    params = init_params(config, seed)
    names = sorted(params)
    m = {k: np.zeros_like(params[k]) for k in names}
    v = {k: np.zeros_like(params[k]) for k in names}
    b1, b2, eps = 0.9, 0.999, 1e-8
    np_rng = np.random.Generator(np.random.PCG64(seed))
    mask_rng = RngState(seed)
    curve: list[float] = []

    for step in range(steps):
        idx = np_rng.integers(0, len(clips), size=batch_size)
        batch = data[idx]
        vis = _policy_vis_batch(policy, config, mask_rng, batch_size)

        P = {k: ad.tensor(p) for k, p in params.items()}
        tokens = ad.tensor(batch)
        cond_t = None
        if cond_arr is not None:
            cond_t = ad.tensor(cond_arr[idx])
        out = forward(P, config, tokens, vis, cond_t)
        # reconstruct every position: hidden tokens carry the signal,
        # visible ones keep the decoder honest where patches are revealed
        loss = ad.mse(out, tokens)
        lval = float(loss.data)
        if not math.isfinite(lval):
            raise DivergenceError(
                f"loss diverged at step {step} (lr={lr}, batch={batch_size})")
        curve.append(lval)

        grads = ad.backward([loss], [np.float32(1.0)],
                            [P[k] for k in names])
        gnorm = math.sqrt(sum(float((g.astype(np.float64) ** 2).sum())
                              for g in grads))
        scale = min(1.0, clip_norm / (gnorm + 1e-12))
        lr_t = lr * 0.5 * (1.0 + math.cos(math.pi * step / max(steps, 1)))
        t = step + 1
        for k, g in zip(names, grads):
            g = g * scale
            m[k] = b1 * m[k] + (1 - b1) * g
            v[k] = b2 * v[k] + (1 - b2) * (g * g)
            mhat = m[k] / (1 - b1 ** t)
            vhat = v[k] / (1 - b2 ** t)
            params[k] = params[k] - lr_t * mhat / (np.sqrt(vhat) + eps)
        if log_every and step % log_every == 0:
            print(f"step {step}: loss {lval:.6f} lr {lr_t:.2e}", flush=True)
    return params, curve


# ---------------------------------------------------------------------------
# checkpoint IO


def save_checkpoint(params: dict[str, np.ndarray], config: PredictorConfig,
                    path) -> None:
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", CHECKPOINT_VERSION))
    cfg = config.fingerprint().encode("utf-8")
    buf.write(struct.pack("<I", len(cfg)))
    buf.write(cfg)
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<B", arr.ndim))
        for d in arr.shape:
            buf.write(struct.pack("<I", d))
        buf.write(arr.tobytes())
    payload = buf.getvalue()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    with open(path, "wb") as f:
        f.write(payload)
        f.write(struct.pack("<I", crc))


class CheckpointError(ValueError):
    pass


def load_checkpoint(path, expect_config: "PredictorConfig | None" = None
                    ) -> tuple[PredictorConfig, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad magic: not a predictor checkpoint")
    payload, crc_bytes = raw[:-4], raw[-4:]
    if zlib.crc32(payload) & 0xFFFFFFFF != struct.unpack("<I", crc_bytes)[0]:
        raise CheckpointError("CRC mismatch: truncated or corrupt checkpoint")
    off = 4
    (version,) = struct.unpack_from("<I", payload, off)
    off += 4
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (clen,) = struct.unpack_from("<I", payload, off)
    off += 4
    config = PredictorConfig(**json.loads(payload[off:off + clen]))
    off += clen
    if expect_config is not None and config != expect_config:
        raise CheckpointError("config mismatch: checkpoint geometry differs")
    params: dict[str, np.ndarray] = {}
    while off < len(payload):
        (nlen,) = struct.unpack_from("<H", payload, off)
        off += 2
        name = payload[off:off + nlen].decode("utf-8")
        off += nlen
        (rank,) = struct.unpack_from("<B", payload, off)
        off += 1
        dims = struct.unpack_from(f"<{rank}I", payload, off)
        off += 4 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(payload, dtype="<f4", count=n, offset=off)
        off += 4 * n
        params[name] = arr.reshape(dims).copy()
    return config, params


def load_predictor(path, expect_config=None) -> LearnedPredictor:
    config, params = load_checkpoint(path, expect_config)
    return LearnedPredictor(config, params)
