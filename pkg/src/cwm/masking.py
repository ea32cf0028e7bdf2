"""Masking policies and the seeded RNG that makes them reproducible.

Seven policy kinds over 2- or 3-frame clips: uniform per-frame masking,
the temporally-factored policy (frame0 fully visible, frame1 nearly all
hidden), its fractional and forward-backward variants, and 3-frame
extrapolation/interpolation policies plus their 50/50 mixture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .video import Mask, TokenIndex

_MASK64 = (1 << 64) - 1


class RngState:
    """splitmix64 stream; identical seeds give identical masks everywhere."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n

    def bernoulli_half(self) -> bool:
        return bool(self.next_u64() & 1)

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of range(n)."""
        out = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.next_below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


KINDS = ("uniform", "tmp", "fractional", "fb", "ext", "int", "intext")

_ARITY = {"uniform": 2, "tmp": 2, "fractional": 2, "fb": 2,
          "ext": 3, "int": 3, "intext": 3}


@dataclass(frozen=True)
class MaskingPolicy:
    """kind + masked fractions. p applies to the sparse frame, q (fractional
    policy only) to the first frame."""

    kind: str
    p: float
    q: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.q <= 1.0):
            raise ValueError("masked fractions must lie in [0,1]")

    @property
    def arity(self) -> int:
        return _ARITY[self.kind]


def parse_policy(text: str) -> MaskingPolicy:
    """Parse a short policy string, e.g. "tmp:p=0.99" or
    "fractional:q=0.25,p=0.99"."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    kwargs = {}
    if rest:
        for part in rest.split(","):
            k, _, v = part.partition("=")
            kwargs[k.strip()] = float(v)
    try:
        return MaskingPolicy(kind, p=kwargs.get("p", 0.0), q=kwargs.get("q", 0.0))
    except ValueError as e:
        raise ValueError(f"bad policy string {text!r}: {e}") from e


def format_policy(policy: MaskingPolicy) -> str:
    if policy.kind == "fractional":
        return f"fractional:q={policy.q:g},p={policy.p:g}"
    return f"{policy.kind}:p={policy.p:g}"


def visible_count(fraction_masked: float, n_tokens: int) -> int:
    """Visible tokens for a partially masked frame: max(1, round((1-f)N)),
    round-half-up. Guarantees at least one revealed token at small grids."""
    return max(1, math.floor((1.0 - fraction_masked) * n_tokens + 0.5))


def _frame_plan(policy: MaskingPolicy, rng: RngState) -> list[str]:
    """Per-frame visibility: 'full', 'none' is unused, or 'partial:<frac>'."""
    if policy.kind == "uniform":
        return [f"partial:{policy.p}", f"partial:{policy.p}"]
    if policy.kind == "tmp":
        return ["full", f"partial:{policy.p}"]
    if policy.kind == "fractional":
        return [f"partial:{policy.q}", f"partial:{policy.p}"]
    if policy.kind == "fb":
        if rng.bernoulli_half():
            return [f"partial:{policy.p}", "full"]  # backward
        return ["full", f"partial:{policy.p}"]      # forward
    if policy.kind == "ext":
        return ["full", "full", f"partial:{policy.p}"]
    if policy.kind == "int":
        return ["full", f"partial:{policy.p}", "full"]
    if policy.kind == "intext":
        if rng.bernoulli_half():
            return ["full", f"partial:{policy.p}", "full"]
        return ["full", "full", f"partial:{policy.p}"]
    raise AssertionError(policy.kind)


def sample_mask(policy: MaskingPolicy, n_frames: int, grid_rows: int,
                grid_cols: int, rng: RngState) -> Mask:
    """Draw one mask. Partially masked frames reveal a uniform
    without-replacement subset via a seeded permutation."""
    if n_frames != policy.arity:
        raise ValueError(
            f"policy {policy.kind!r} needs {policy.arity} frames, got {n_frames}")
    n = grid_rows * grid_cols
    visible: set[TokenIndex] = set()
    for f, plan in enumerate(_frame_plan(policy, rng)):
        if plan == "full":
            chosen = range(n)
        else:
            frac = float(plan.split(":")[1])
            k = visible_count(frac, n)
            chosen = rng.permutation(n)[:k]
        for i in chosen:
            visible.add(TokenIndex(f, i // grid_cols, i % grid_cols))
    return Mask(frozenset(visible), n_frames, grid_rows, grid_cols)


def orientation(mask: Mask) -> str:
    """Classify a mask by which frames are fully visible."""
    n = mask.grid_rows * mask.grid_cols
    full = [len(mask.frame_visible(f)) == n for f in range(mask.n_frames)]
    if mask.n_frames == 2:
        if full[0] and not full[1]:
            return "forward"
        if full[1] and not full[0]:
            return "backward"
    else:
        if full[0] and full[2] and not full[1]:
            return "interpolate"
        if full[0] and full[1] and not full[2]:
            return "extrapolate"
    raise ValueError("ambiguous mask: no unique fully visible frame pattern")
