"""Zero-shot readouts by counterfactual prompting of a masked predictor.

Everything here is a pure function of (predictor, inputs, config, seed):
keypoint maps and greedy selection, factual/counterfactual prediction,
optical flow + occlusion via finite appearance perturbations, dense flow
+ disocclusion via directional derivatives, movable-object segmentation
and pairwise motion affinity from motion counterfactuals, and relative
depth from camera-motion counterfactuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .masking import RngState
from .model import (PredictorConfig, clip_tokens, mask_positions,
                    tokens_to_frames)
from .video import FILL_VALUE, Mask, TokenIndex, VideoClip


@dataclass(frozen=True)
class EngineConfig:
    """Thresholds and sampling parameters for all readouts."""

    perturb_block: int = 4        # px, side of the perturbation square
    perturb_contrast: float = 0.25
    tau_occ: float = 0.3          # drop flow samples with |resp|/|delta| below
    tau_dis: float = 0.1          # x per-image max: disocclusion threshold
    tau_seg: float = 0.5          # px, counterfactual flow above => moving
    n_samples: int = 3            # choices of revealed set z
    z_size: int = 1               # revealed frame1 tokens per z sample
    seg_stride: int = 4           # px between segmentation flow queries
    move_delta: tuple[int, int] = (0, 2)   # default single-move shift, cells
    ms_candidates: int = 12       # candidate patches for Move/Stop selection
    ms_overlap_eps: float = 0.05  # stop growing Move/Stop when gap < eps
    seed: int = 0


@dataclass(frozen=True)
class MotionPrompt:
    """Counterfactual frame1: moved patches, pinned patches, camera motion.

    moves: [((row, col), (drow, dcol))] in patch cells; stops: [(row, col)].
    """

    moves: tuple = ()
    stops: tuple = ()
    head_motion: "tuple[float, float] | None" = None

    def validate(self, grid: int) -> None:
        dests, srcs = set(), set()
        for (r, c), (dr, dc) in self.moves:
            if not (0 <= r < grid and 0 <= c < grid):
                raise ValueError(f"move source out of bounds: {(r, c)}")
            qr, qc = r + dr, c + dc
            if not (0 <= qr < grid and 0 <= qc < grid):
                raise ValueError(f"move destination out of bounds: {(qr, qc)}")
            if (qr, qc) in dests:
                raise ValueError(f"move destination collision at {(qr, qc)}")
            dests.add((qr, qc))
            srcs.add((r, c))
        for (r, c) in self.stops:
            if not (0 <= r < grid and 0 <= c < grid):
                raise ValueError(f"stop out of bounds: {(r, c)}")
            if (r, c) in srcs:
                raise ValueError(f"patch {(r, c)} is both moved and stopped")
            if (r, c) in dests:
                raise ValueError(f"stop collides with a move destination")
            dests.add((r, c))


@dataclass
class FlowField:
    """Sparse flow readout at query pixels. status: 0 valid, 1 occluded."""

    queries: np.ndarray            # (N, 2) int, (y, x) frame0 pixels
    vectors: np.ndarray            # (N, 2) float32, (dy, dx) px
    status: np.ndarray             # (N,) uint8
    response_magnitude: np.ndarray  # (N,) float32, |resp|/|delta|

    VALID = 0
    OCCLUDED = 1

    def valid(self) -> np.ndarray:
        return self.status == self.VALID


@dataclass
class DenseFlow:
    """Patch-resolution flow from the Jacobian, plus disocclusion flags."""

    flow: np.ndarray         # (g, g, 2) float32 px, frame1 cells -> source
    disoccluded: np.ndarray  # (g, g) bool
    response: np.ndarray     # (g, g) float32, peak |J| column magnitude


@dataclass
class AffinityMatrix:
    values: np.ndarray       # (P, P) in [-1, 1], symmetric, unit diagonal
    probes: list             # [(y, x)] pixel coordinates


@dataclass
class SegmentResult:
    mask: np.ndarray         # (H, W) bool
    flow: FlowField          # counterfactual flow the mask came from


@dataclass
class DepthMap:
    depth: np.ndarray        # (H, W) float32, relative depth (1/|flow|)
    valid: np.ndarray        # (H, W) bool


@dataclass
class KeypointReport:
    error_map: np.ndarray    # (g, g) normalized error reduction in [0, 1]
    selected: list           # [TokenIndex] in selection order
    curve: list              # error after each selection, curve[0] = baseline


# ---------------------------------------------------------------------------
# masks and token plumbing


def tmp_mask(config: PredictorConfig, frame1_visible: Sequence[TokenIndex] = ()
             ) -> Mask:
    """Frame0 fully visible plus the given frame1 tokens."""
    g = config.grid
    vis = {TokenIndex(0, r, c) for r in range(g) for c in range(g)}
    vis.update(frame1_visible)
    return Mask(frozenset(vis), config.n_frames, g, g)


def _sample_z(config: PredictorConfig, cfg: EngineConfig, rng: RngState
              ) -> list[TokenIndex]:
    g = config.grid
    perm = rng.permutation(g * g)[:cfg.z_size]
    return [TokenIndex(1, i // g, i % g) for i in perm]


def _z_samples(config, cfg, z) -> list[list[TokenIndex]]:
    if z is not None:
        return [list(z)]
    rng = RngState(cfg.seed)
    return [_sample_z(config, cfg, rng) for _ in range(cfg.n_samples)]


def _pair_clip(frame0: np.ndarray, frame1: np.ndarray,
               config: PredictorConfig) -> VideoClip:
    return VideoClip(np.stack([frame0, np.clip(frame1, 0.0, 1.0)]),
                     patch_h=config.patch, patch_w=config.patch)


# ---------------------------------------------------------------------------
# keypoints


def _frame1_losses(pred, clip: VideoClip, base_extra: list[TokenIndex],
                   candidates: list[TokenIndex], cond=None) -> np.ndarray:
    """masked_loss for each candidate added to (frame0 full + base_extra),
    batched into one model call."""
    config = pred.config
    tokens = clip_tokens(clip)
    B = len(candidates)
    vis_rows = []
    for t in candidates:
        masks = tmp_mask(config, base_extra + [t])
        vis_rows.append(mask_positions(masks))
    vis = np.stack(vis_rows)
    batch = np.repeat(tokens[None], B, axis=0)
    out = pred.predict_full_batch(batch, vis, cond=cond, keep_visible=False)
    G = config.tokens_per_frame
    diff = out[:, G:2 * G].astype(np.float64) - tokens[None, G:2 * G]
    return (diff * diff).mean(axis=(1, 2))


def _base_loss(pred, clip, extra: list[TokenIndex], cond=None) -> float:
    config = pred.config
    tokens = clip_tokens(clip)[None]
    vis = mask_positions(tmp_mask(config, extra))[None]
    out = pred.predict_full_batch(tokens, vis, cond=cond, keep_visible=False)
    G = config.tokens_per_frame
    diff = out[0, G:2 * G].astype(np.float64) - tokens[0, G:2 * G]
    return float((diff * diff).mean())


def keypoint_error_map(pred, clip: VideoClip, cond=None) -> KeypointReport:
    """Error reduction from revealing each frame1 token on its own,
    normalized to [0,1] by the largest reduction."""
    config = pred.config
    g = config.grid
    loss0 = _base_loss(pred, clip, [], cond)
    cands = [TokenIndex(1, r, c) for r in range(g) for c in range(g)]
    losses = _frame1_losses(pred, clip, [], cands, cond)
    reduction = np.maximum(loss0 - losses, 0.0).reshape(g, g)
    peak = reduction.max()
    if peak > 0:
        reduction = reduction / peak
    return KeypointReport(error_map=reduction.astype(np.float32),
                          selected=[], curve=[loss0])


def greedy_keypoints(pred, clip: VideoClip, k: int,
                     p0: "Mask | None" = None, cond=None) -> KeypointReport:
    """Greedy keypoint selection: repeatedly add the frame1 token that
    minimizes masked loss. Ties break to the lowest (frame,row,col)."""
    config = pred.config
    g = config.grid
    if p0 is None:
        p0 = tmp_mask(config)
    extra = sorted(t for t in p0.visible if t.frame > 0)
    remaining = [TokenIndex(1, r, c) for r in range(g) for c in range(g)
                 if TokenIndex(1, r, c) not in p0.visible]
    if k < 1 or k > len(remaining):
        raise ValueError(f"k={k} out of range (1..{len(remaining)})")
    selected: list[TokenIndex] = []
    curve = [_base_loss(pred, clip, extra, cond)]
    for _ in range(k):
        losses = _frame1_losses(pred, clip, extra + selected, remaining, cond)
        best = int(np.argmin(losses))  # lexicographic: remaining is sorted
        selected.append(remaining.pop(best))
        curve.append(float(losses[best]))
    report = keypoint_error_map(pred, clip, cond)
    return KeypointReport(error_map=report.error_map, selected=selected,
                          curve=curve)


def brute_force_keypoints(pred, clip: VideoClip, k: int,
                          p0: "Mask | None" = None, cond=None
                          ) -> tuple[list[TokenIndex], float]:
    """Exhaustive argmin over all k-subsets (oracle for small grids).
    Ties break to the lexicographically smallest subset."""
    from itertools import combinations
    config = pred.config
    g = config.grid
    if p0 is None:
        p0 = tmp_mask(config)
    extra = sorted(t for t in p0.visible if t.frame > 0)
    remaining = [TokenIndex(1, r, c) for r in range(g) for c in range(g)
                 if TokenIndex(1, r, c) not in p0.visible]
    best_set, best_loss = None, np.inf
    subsets = list(combinations(remaining, k))
    for chunk_start in range(0, len(subsets), 64):
        chunk = subsets[chunk_start:chunk_start + 64]
        tokens = clip_tokens(clip)
        vis = np.stack([mask_positions(tmp_mask(config, extra + list(s)))
                        for s in chunk])
        batch = np.repeat(tokens[None], len(chunk), axis=0)
        out = pred.predict_full_batch(batch, vis, cond=cond,
                                      keep_visible=False)
        G = config.tokens_per_frame
        diff = out[:, G:2 * G].astype(np.float64) - tokens[None, G:2 * G]
        losses = (diff * diff).mean(axis=(1, 2))
        for s, l in zip(chunk, losses):
            if l < best_loss - 1e-12:
                best_set, best_loss = list(s), float(l)
    return best_set, best_loss


# ---------------------------------------------------------------------------
# appearance perturbations and finite flow


def perturb_frame(frame: np.ndarray, y: int, x: int, block: int,
                  contrast: float) -> np.ndarray:
    """Additive contrast block at (y, x); sign points away from the nearer
    saturation bound so the applied delta never clamps."""
    out = frame.copy()
    H, W, _ = frame.shape
    y1, x1 = min(y + block, H), min(x + block, W)
    patch = out[y:y1, x:x1]
    sign = np.where(patch <= 0.5, 1.0, -1.0)
    out[y:y1, x:x1] = patch + sign * contrast
    return out


def _predict_frames(pred, tokens: np.ndarray, vis: np.ndarray, cond=None
                    ) -> np.ndarray:
    """Batched predict -> (B, n_frames, H, W, 3)."""
    out = pred.predict_full_batch(tokens, vis, cond=cond, keep_visible=True)
    return np.stack([tokens_to_frames(o, pred.config) for o in out])


def default_queries(config: PredictorConfig, stride: "int | None" = None,
                    block: int = 4) -> np.ndarray:
    """Query pixel anchors: one per stride x stride cell, block centered."""
    stride = stride or config.patch
    off = max((stride - block) // 2, 0)
    H = config.frame_size
    pts = [(y + off, x + off)
           for y in range(0, H, stride) for x in range(0, H, stride)]
    return np.array(pts, dtype=np.int64)


def _argmax_lex(resp: np.ndarray, rel_tol: float = 1e-5) -> tuple[int, int]:
    """First (row, col) whose response is within rel_tol of the maximum,
    so float rounding can't break lexicographic tie-breaking."""
    m = float(resp.max())
    idx = int(np.argmax(resp >= m - rel_tol * max(m, 1e-12)))
    return np.unravel_index(idx, resp.shape)


def flow_finite(pred, clip: VideoClip, z=None,
                queries: "np.ndarray | None" = None,
                cfg: EngineConfig = EngineConfig(), cond=None) -> FlowField:
    """Optical flow + occlusion from finite appearance counterfactuals.

    Per query and per revealed set z: compare the clean prediction of
    frame1 against the prediction with a contrast block added to frame0 at
    the query; the response peak gives the displacement. Samples whose
    normalized response falls below tau_occ are dropped; queries with no
    surviving sample are flagged occluded.
    """
    config = pred.config
    if queries is None:
        queries = default_queries(config, block=cfg.perturb_block)
    queries = np.asarray(queries, dtype=np.int64)
    if len(queries) == 0:
        raise ValueError("empty query list")
    tokens = clip_tokens(clip)
    n_q = len(queries)
    disp_sum = np.zeros((n_q, 2), np.float64)
    disp_cnt = np.zeros(n_q, np.int64)
    best_mag = np.zeros(n_q, np.float32)

    for z_tokens in _z_samples(config, cfg, z):
        vis1 = mask_positions(tmp_mask(config, z_tokens))[None]
        clean = _predict_frames(pred, tokens[None], vis1, cond)[0, 1]
        # one batched call for all queries
        batch = []
        deltas = []
        for (y, x) in queries:
            pf = perturb_frame(clip.frames[0], int(y), int(x),
                               cfg.perturb_block, cfg.perturb_contrast)
            pc = VideoClip(np.stack([pf, clip.frames[1]]),
                           patch_h=config.patch, patch_w=config.patch)
            batch.append(clip_tokens(pc))
            deltas.append(np.linalg.norm(pf - clip.frames[0]))
        batch = np.stack(batch)
        vis = np.repeat(vis1, n_q, axis=0)
        preds = _predict_frames(pred, batch, vis, cond)[:, 1]
        resp = np.abs(preds - clean[None]).sum(axis=-1)  # (B, H, W)
        for qi in range(n_q):
            mag = float(np.linalg.norm(
                (preds[qi] - clean).reshape(-1))) / max(deltas[qi], 1e-9)
            best_mag[qi] = max(best_mag[qi], mag)
            if mag < cfg.tau_occ:
                continue
            peak = _argmax_lex(resp[qi])
            disp_sum[qi] += (peak[0] - queries[qi, 0],
                             peak[1] - queries[qi, 1])
            disp_cnt[qi] += 1

    vectors = np.zeros((n_q, 2), np.float32)
    status = np.full(n_q, FlowField.OCCLUDED, np.uint8)
    ok = disp_cnt > 0
    vectors[ok] = (disp_sum[ok] / disp_cnt[ok, None]).astype(np.float32)
    status[ok] = FlowField.VALID
    return FlowField(queries=queries, vectors=vectors, status=status,
                     response_magnitude=best_mag)


def flow_jacobian(pred, clip: VideoClip, z=None,
                  cfg: EngineConfig = EngineConfig(), cond=None) -> DenseFlow:
    """Dense patch-resolution flow from directional derivatives.

    One tangent direction per frame0 patch (all-ones over the patch); the
    resulting input-patch x output-patch response matrix is averaged over
    revealed-set choices, then each frame1 cell points back at its argmax
    source. Cells whose peak response is below tau_dis x the image maximum
    are flagged disoccluded.
    """
    if not getattr(pred, "differentiable", False):
        raise ValueError("flow_jacobian needs a differentiable predictor")
    config = pred.config
    g = config.grid
    G = config.tokens_per_frame
    tokens = clip_tokens(clip)
    M = np.zeros((G, G), np.float64)  # [frame0 patch, frame1 patch]
    samples = _z_samples(config, cfg, z)
    for z_tokens in samples:
        vis1 = mask_positions(tmp_mask(config, z_tokens))
        batch = np.repeat(tokens[None], G, axis=0)
        vis = np.repeat(vis1[None], G, axis=0)
        tangents = np.zeros_like(batch)
        tangents[np.arange(G), np.arange(G)] = 1.0
        tan = pred.jvp_full_batch(batch, vis, tangents, cond=cond,
                                  keep_visible=True)
        M += np.abs(tan[:, G:2 * G]).sum(axis=-1)
    M /= len(samples)

    peak = M.max(axis=0)                      # per frame1 cell
    global_max = float(M.max())
    disoccluded = peak < cfg.tau_dis * max(global_max, 1e-12)
    src = M.argmax(axis=0)                    # lexicographic tie-break
    flow = np.zeros((g, g, 2), np.float32)
    p = config.patch
    for t in range(G):
        tr, tc = divmod(t, g)
        sr, sc = divmod(int(src[t]), g)
        flow[tr, tc] = ((tr - sr) * p, (tc - sc) * p)
    flow[disoccluded.reshape(g, g)] = 0.0
    return DenseFlow(flow=flow, disoccluded=disoccluded.reshape(g, g).copy(),
                     response=peak.reshape(g, g).astype(np.float32))


# ---------------------------------------------------------------------------
# motion counterfactuals


def counterfactual_predict(pred, frame0: np.ndarray, prompt: MotionPrompt,
                           ) -> np.ndarray:
    """Predicted frame1 under the motion prompt: frame0 fully visible,
    frame1 containing only the moved/pinned patches."""
    config = pred.config
    g, p = config.grid, config.patch
    prompt.validate(g)
    frame1 = np.full_like(frame0, FILL_VALUE)
    vis_extra = []
    for (r, c), (dr, dc) in prompt.moves:
        qr, qc = r + dr, c + dc
        frame1[qr * p:(qr + 1) * p, qc * p:(qc + 1) * p] = \
            frame0[r * p:(r + 1) * p, c * p:(c + 1) * p]
        vis_extra.append(TokenIndex(1, qr, qc))
    for (r, c) in prompt.stops:
        frame1[r * p:(r + 1) * p, c * p:(c + 1) * p] = \
            frame0[r * p:(r + 1) * p, c * p:(c + 1) * p]
        vis_extra.append(TokenIndex(1, r, c))
    clip = _pair_clip(frame0, frame1, config)
    cond = _prompt_cond(pred, prompt)
    tokens = clip_tokens(clip)[None]
    vis = mask_positions(tmp_mask(config, vis_extra))[None]
    out = pred.predict_full_batch(tokens, vis, cond=cond, keep_visible=True)
    return tokens_to_frames(out[0], config)[1]


def _prompt_cond(pred, prompt: MotionPrompt):
    if pred.config.conditioning == "head_motion":
        # zero head motion by default: counterfactual motion is object
        # motion, not camera motion
        return prompt.head_motion if prompt.head_motion is not None else (0.0, 0.0)
    return None


FlowFn = Callable[..., FlowField]


def default_flow_fn(cfg: EngineConfig) -> FlowFn:
    def fn(pred, clip, queries=None, cond=None):
        return flow_finite(pred, clip, queries=queries, cfg=cfg, cond=cond)
    return fn


def _flow_mask(flow: FlowField, shape: tuple[int, int], stride: int,
               tau_seg: float) -> np.ndarray:
    """Expand per-query flow magnitudes to a pixel mask."""
    mask = np.zeros(shape, bool)
    mag = np.linalg.norm(flow.vectors, axis=1)
    for (y, x), m, s in zip(flow.queries, mag, flow.status):
        if s == FlowField.VALID and m > tau_seg:
            y0 = (int(y) // stride) * stride
            x0 = (int(x) // stride) * stride
            mask[y0:y0 + stride, x0:x0 + stride] = True
    return mask


def segment(pred, flow_fn: FlowFn, frame0: np.ndarray, prompt: MotionPrompt,
            cfg: EngineConfig = EngineConfig()) -> SegmentResult:
    """Movable-object segment: pixels whose counterfactual flow magnitude
    exceeds tau_seg under the given motion prompt."""
    if not prompt.moves:
        raise ValueError("segmentation prompt needs at least one move")
    if all(d == (0, 0) for _, d in prompt.moves):
        raise ValueError("degenerate prompt: zero displacement")
    config = pred.config
    x_hat = counterfactual_predict(pred, frame0, prompt)
    pair = _pair_clip(frame0, x_hat, config)
    queries = default_queries(config, stride=cfg.seg_stride,
                              block=cfg.perturb_block)
    flow = flow_fn(pred, pair, queries=queries, cond=_prompt_cond(pred, prompt))
    mask = _flow_mask(flow, frame0.shape[:2], cfg.seg_stride, cfg.tau_seg)
    return SegmentResult(mask=mask, flow=flow)


def spelke_affinity(pred, flow_fn: FlowFn, frame0: np.ndarray,
                    probes: Sequence[tuple[int, int]],
                    battery: Sequence[MotionPrompt],
                    cfg: EngineConfig = EngineConfig()) -> AffinityMatrix:
    """Pairwise co-movement: correlate per-probe counterfactual flow
    magnitudes across a battery of motion prompts."""
    if len(probes) < 2:
        raise ValueError("need at least 2 probes")
    if len(battery) < 1:
        raise ValueError("empty counterfactual battery")
    config = pred.config
    queries = np.asarray(probes, dtype=np.int64)
    V = np.zeros((len(probes), len(battery)), np.float64)
    for bi, prompt in enumerate(battery):
        x_hat = counterfactual_predict(pred, frame0, prompt)
        pair = _pair_clip(frame0, x_hat, config)
        flow = flow_fn(pred, pair, queries=queries,
                       cond=_prompt_cond(pred, prompt))
        mag = np.linalg.norm(flow.vectors, axis=1)
        mag[flow.status != FlowField.VALID] = 0.0
        V[:, bi] = mag

    P = len(probes)
    out = np.zeros((P, P), np.float32)
    sd = V.std(axis=1)
    for i in range(P):
        out[i, i] = 1.0
        for j in range(i + 1, P):
            if sd[i] < 1e-12 or sd[j] < 1e-12:
                # zero-variance convention
                a = 1.0 if (sd[i] < 1e-12 and sd[j] < 1e-12
                            and np.allclose(V[i], V[j])) else 0.0
            else:
                a = float(np.corrcoef(V[i], V[j])[0, 1])
            out[i, j] = out[j, i] = np.clip(a, -1.0, 1.0)
    return AffinityMatrix(values=out, probes=list(map(tuple, probes)))


def select_move_stop(pred, flow_fn: FlowFn, frame0: np.ndarray,
                     seed_patch: tuple[int, int], budget: int,
                     cfg: EngineConfig = EngineConfig()) -> MotionPrompt:
    """Grow Move/Stop sets greedily by counterfactual-mask overlap with the
    seed patch's single-move segment."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    config = pred.config
    g = config.grid
    delta = _safe_delta(seed_patch, g, cfg.move_delta)
    base = segment(pred, flow_fn, frame0,
                   MotionPrompt(moves=(((seed_patch), delta),)), cfg)
    if budget == 1:
        return MotionPrompt(moves=((seed_patch, delta),))

    rng = RngState(cfg.seed + 1)
    cells = [(r, c) for r in range(g) for c in range(g)
             if (r, c) != tuple(seed_patch)]
    order = rng.permutation(len(cells))
    cand = [cells[i] for i in order[:cfg.ms_candidates]]
    scored = []
    for cell in cand:
        d = _safe_delta(cell, g, cfg.move_delta)
        m = segment(pred, flow_fn, frame0,
                    MotionPrompt(moves=((cell, d),)), cfg).mask
        inter = np.logical_and(m, base.mask).sum()
        union = np.logical_or(m, base.mask).sum()
        scored.append((cell, inter / union if union else 0.0))
    scored.sort(key=lambda t: (-t[1], t[0]))

    moves = [(tuple(seed_patch), delta)]
    stops: list[tuple[int, int]] = []
    lo, hi = len(scored) - 1, 0
    for _ in range(budget - 1):
        if hi > lo or scored[hi][1] - scored[lo][1] < cfg.ms_overlap_eps:
            break
        moves.append((scored[hi][0], _safe_delta(scored[hi][0], g, delta)))
        stops.append(scored[lo][0])
        hi += 1
        lo -= 1
    # drop colliding move destinations (rare; keep earlier entries)
    seen, clean_moves = set(), []
    taken = set(s for s in stops)
    for (r, c), (dr, dc) in moves:
        dest = (r + dr, c + dc)
        if dest in seen or dest in taken or (r, c) in taken:
            continue
        seen.add(dest)
        clean_moves.append(((r, c), (dr, dc)))
    return MotionPrompt(moves=tuple(clean_moves), stops=tuple(stops))


def _safe_delta(cell: tuple[int, int], grid: int,
                delta: tuple[int, int]) -> tuple[int, int]:
    """Flip the default displacement to stay inside the grid."""
    dr, dc = delta
    r, c = cell
    if not 0 <= r + dr < grid:
        dr = -dr
    if not 0 <= c + dc < grid:
        dc = -dc
    return (dr, dc)


# ---------------------------------------------------------------------------
# relative depth


def relative_depth(pred, frame0: np.ndarray, rho: tuple[float, float],
                   flow_fn: "FlowFn | None" = None,
                   cfg: EngineConfig = EngineConfig()) -> DepthMap:
    """Depth up to scale from a camera-motion counterfactual: predict the
    parallax-shifted frame with no revealed patches, then invert the flow
    magnitude. Valid only where flow is defined and nonzero."""
    config = pred.config
    if config.conditioning != "head_motion":
        raise ValueError("relative depth needs a head-motion predictor")
    if float(np.hypot(*rho)) == 0.0:
        raise ValueError("rho must be nonzero (no parallax at rho=0)")
    if flow_fn is None:
        flow_fn = default_flow_fn(cfg)
    x_rho = counterfactual_predict(
        pred, frame0, MotionPrompt(head_motion=tuple(rho)))
    pair = _pair_clip(frame0, x_rho, config)
    queries = default_queries(config, stride=cfg.seg_stride,
                              block=cfg.perturb_block)
    flow = flow_fn(pred, pair, queries=queries, cond=tuple(rho))
    H, W = frame0.shape[:2]
    depth = np.zeros((H, W), np.float32)
    valid = np.zeros((H, W), bool)
    mag = np.linalg.norm(flow.vectors, axis=1)
    for (y, x), m, s in zip(flow.queries, mag, flow.status):
        if s != FlowField.VALID or m <= 0.0:
            continue
        y0 = (int(y) // cfg.seg_stride) * cfg.seg_stride
        x0 = (int(x) // cfg.seg_stride) * cfg.seg_stride
        depth[y0:y0 + cfg.seg_stride, x0:x0 + cfg.seg_stride] = 1.0 / m
        valid[y0:y0 + cfg.seg_stride, x0:x0 + cfg.seg_stride] = True
    return DepthMap(depth=depth, valid=valid)
