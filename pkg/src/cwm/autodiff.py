"""Reverse- and forward-mode automatic differentiation over numpy arrays.

The primitive set is deliberately small: add, mul, matmul, reshape,
transpose, gather/scatter over token axes, layer norm, GELU, softmax,
clamp and mean-squared-error. That closure is enough for a small
transformer plus the derivative readouts built on top of it.

Tensors are immutable after construction. Each op records a VJP rule
(for reverse mode) and a JVP rule (for forward mode), so the same taped
graph serves `gradient` and `directional_derivative`.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erf as _erf  # vectorized C implementation

__all__ = [
    "Tensor",
    "NonFiniteError",
    "tensor",
    "add",
    "sub",
    "mul",
    "scale",
    "matmul",
    "reshape",
    "transpose",
    "take_tokens",
    "take_rows",
    "put_tokens",
    "concat",
    "layer_norm",
    "gelu",
    "softmax",
    "clamp01",
    "mse",
    "evaluate",
    "gradient",
    "directional_derivative",
    "set_finite_checks",
]


class NonFiniteError(ArithmeticError):
    """Raised when an operation produces NaN or Inf and checks are on."""


_CHECK_FINITE = False


def set_finite_checks(enabled: bool) -> bool:
    """Toggle per-op NaN/Inf detection. Returns the previous setting."""
    global _CHECK_FINITE
    prev = _CHECK_FINITE
    _CHECK_FINITE = enabled
    return prev


def _as_f32(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float32)
    return a


class Tensor:
    """A node in the differentiation tape.

    `data` is a float32 ndarray. Leaf tensors have no parents; interior
    tensors carry the VJP/JVP closures of the op that produced them.
    """

    __slots__ = ("data", "parents", "_vjp", "_jvp", "name")

    def __init__(self, data, parents=(), vjp=None, jvp=None, name=None):
        self.data = _as_f32(data)
        self.parents: tuple[Tensor, ...] = tuple(parents)
        self._vjp = vjp
        self._jvp = jvp
        self.name = name
        if _CHECK_FINITE and not np.all(np.isfinite(self.data)):
            raise NonFiniteError(
                f"non-finite values in {'op' if parents else 'leaf'} "
                f"{name or '<unnamed>'}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name!r})"


def tensor(data, name=None) -> Tensor:
    """Wrap an array as a leaf tensor."""
    return Tensor(data, name=name)


def _topo_order(roots: Sequence[Tensor]) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(r, False) for r in roots]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
        else:
            stack.append((node, True))
            for p in node.parents:
                if id(p) not in seen:
                    stack.append((p, False))
    return order


def backward(outputs: Sequence[Tensor], cotangents: Sequence[np.ndarray],
             wrt: Sequence[Tensor]) -> list[np.ndarray]:
    """Vector-Jacobian product: accumulate d<cotangent, output>/d(wrt).

    Gradients are accumulated in float32; reduction ops themselves
    accumulate internally in float64.
    """
    grads: dict[int, np.ndarray] = {}
    for out, ct in zip(outputs, cotangents):
        ct = np.broadcast_to(_as_f32(ct), out.data.shape).astype(np.float32)
        if out.data.shape != ct.shape:
            raise ValueError("cotangent shape mismatch")
        if id(out) in grads:
            grads[id(out)] = grads[id(out)] + ct
        else:
            grads[id(out)] = ct
    order = _topo_order(list(outputs))
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None or node._vjp is None:
            continue
        parent_grads = node._vjp(g)
        for p, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            if id(p) in grads:
                grads[id(p)] = grads[id(p)] + pg
            else:
                grads[id(p)] = pg
    out = []
    for t in wrt:
        g = grads.get(id(t))
        out.append(np.zeros_like(t.data) if g is None else g)
    return out


def forward_tangents(outputs: Sequence[Tensor],
                     tangent_map: dict[int, np.ndarray]) -> list[np.ndarray]:
    """Jacobian-vector product: push tangents (keyed by id(leaf)) forward."""
    order = _topo_order(list(outputs))
    tangents: dict[int, np.ndarray] = {}
    for node in order:
        if id(node) in tangent_map:
            tangents[id(node)] = _as_f32(tangent_map[id(node)])
        elif node.parents and node._jvp is not None:
            pts = [tangents.get(id(p)) for p in node.parents]
            if any(t is not None for t in pts):
                pts = [np.zeros_like(p.data) if t is None else t
                       for p, t in zip(node.parents, pts)]
                tangents[id(node)] = node._jvp(*pts)
    return [tangents.get(id(o), np.zeros_like(o.data)) for o in outputs]


# ---------------------------------------------------------------------------
# primitives


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.astype(np.float32)


def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.data + b.data
    return Tensor(
        out, (a, b),
        vjp=lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
        jvp=lambda ta, tb: ta + tb,
        name="add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.data - b.data
    return Tensor(
        out, (a, b),
        vjp=lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)),
        jvp=lambda ta, tb: ta - tb,
        name="sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data * b.data
    return Tensor(
        out, (a, b),
        vjp=lambda g: (_unbroadcast(g * b.data, a.data.shape),
                       _unbroadcast(g * a.data, b.data.shape)),
        jvp=lambda ta, tb: ta * b.data + a.data * tb,
        name="mul")


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    return Tensor(a.data * s, (a,),
                  vjp=lambda g: (g * s,),
                  jvp=lambda ta: ta * s,
                  name="scale")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return (_unbroadcast(ga, a.data.shape), _unbroadcast(gb, b.data.shape))

    return Tensor(out, (a, b), vjp=vjp,
                  jvp=lambda ta, tb: ta @ b.data + a.data @ tb,
                  name="matmul")


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    return Tensor(a.data.reshape(shape), (a,),
                  vjp=lambda g: (g.reshape(a.data.shape),),
                  jvp=lambda ta: ta.reshape(shape),
                  name="reshape")


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return Tensor(np.transpose(a.data, axes), (a,),
                  vjp=lambda g: (np.transpose(g, inv),),
                  jvp=lambda ta: np.transpose(ta, axes),
                  name="transpose")


def take_tokens(x: Tensor, idx: np.ndarray) -> Tensor:
    """Gather tokens: x[b, idx[b, k], :] -> out[b, k, :]. idx shape (B, K)."""
    idx = np.asarray(idx, dtype=np.int64)
    B = x.data.shape[0]
    rows = np.arange(B)[:, None]
    out = x.data[rows, idx]

    def vjp(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, (rows, idx), g)
        return (gx,)

    return Tensor(out, (x,), vjp=vjp,
                  jvp=lambda tx: tx[rows, idx],
                  name="take_tokens")


def take_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Gather rows of a (N, D) table: out[..., :] = table[idx[...], :]."""
    idx = np.asarray(idx, dtype=np.int64)
    out = table.data[idx]

    def vjp(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return Tensor(out, (table,), vjp=vjp,
                  jvp=lambda tt: tt[idx],
                  name="take_rows")


def put_tokens(base: Tensor, idx: np.ndarray, values: Tensor) -> Tensor:
    """Scatter tokens: out = base with out[b, idx[b, k], :] = values[b, k, :].

    Indices must be unique per batch row (overwrite semantics).
    """
    idx = np.asarray(idx, dtype=np.int64)
    B = base.data.shape[0]
    rows = np.arange(B)[:, None]
    out = base.data.copy()
    out[rows, idx] = values.data

    def vjp(g):
        gb = g.copy()
        gb[rows, idx] = 0.0
        return (gb, g[rows, idx])

    def jvp(tb, tv):
        t = tb.copy()
        t[rows, idx] = tv
        return t

    return Tensor(out, (base, values), vjp=vjp, jvp=jvp, name="put_tokens")


def concat(parts: Iterable[Tensor], axis: int = 1) -> Tensor:
    parts = list(parts)
    sizes = [p.data.shape[axis] for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(
            np.take(g, np.arange(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(parts)))

    return Tensor(out, tuple(parts), vjp=vjp,
                  jvp=lambda *ts: np.concatenate(ts, axis=axis),
                  name="concat")


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Layer normalization over the last axis with learned gain and bias."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xn = xc * inv
    out = xn * gain.data + bias.data
    D = x.data.shape[-1]

    def vjp(g):
        gxn = g * gain.data
        # d/dx of (x - mu) * inv with mu, inv functions of x
        t1 = gxn * inv
        t2 = inv / D * gxn.sum(axis=-1, keepdims=True)
        t3 = xn * inv / D * (gxn * xn).sum(axis=-1, keepdims=True)
        gx = t1 - t2 - t3
        ggain = _unbroadcast(g * xn, gain.data.shape)
        gbias = _unbroadcast(g, bias.data.shape)
        return (gx.astype(np.float32), ggain, gbias)

    def jvp(tx, tgain, tbias):
        txc = tx - tx.mean(axis=-1, keepdims=True)
        tvar = 2.0 * (xc * txc).mean(axis=-1, keepdims=True)
        tinv = -0.5 * inv ** 3 * tvar
        txn = txc * inv + xc * tinv
        return txn * gain.data + xn * tgain + tbias

    return Tensor(out, (x, gain, bias), vjp=vjp, jvp=jvp, name="layer_norm")


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(x: Tensor) -> Tensor:
    """Exact-erf GELU."""
    cdf = 0.5 * (1.0 + _erf(x.data * _INV_SQRT2))
    out = x.data * cdf
    pdf = _INV_SQRT2PI * np.exp(-0.5 * x.data * x.data)
    local = cdf + x.data * pdf  # d gelu / dx

    return Tensor(out, (x,),
                  vjp=lambda g: ((g * local).astype(np.float32),),
                  jvp=lambda tx: (tx * local).astype(np.float32),
                  name="gelu")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return ((s * (g - dot)).astype(np.float32),)

    def jvp(tx):
        dot = (tx * s).sum(axis=axis, keepdims=True)
        return (s * (tx - dot)).astype(np.float32)

    return Tensor(s, (x,), vjp=vjp, jvp=jvp, name="softmax")


def clamp01(x: Tensor) -> Tensor:
    """Clip to [0, 1]; gradient passes through strictly inside the range."""
    out = np.clip(x.data, 0.0, 1.0)
    inside = ((x.data > 0.0) & (x.data < 1.0)).astype(np.float32)
    return Tensor(out, (x,),
                  vjp=lambda g: (g * inside,),
                  jvp=lambda tx: tx * inside,
                  name="clamp01")


def mse(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error, accumulated in float64."""
    if pred.data.shape != target.data.shape:
        raise ValueError(
            f"mse shape mismatch {pred.data.shape} vs {target.data.shape}")
    diff = pred.data.astype(np.float64) - target.data.astype(np.float64)
    n = diff.size
    out = np.float32((diff * diff).sum() / n)
    d32 = diff.astype(np.float32)

    def vjp(g):
        c = 2.0 * float(g) / n
        return ((c * d32), (-c * d32))

    def jvp(tp, tt):
        return np.float32(
            (2.0 / n) * float((d32 * (tp - tt)).astype(np.float64).sum()))

    return Tensor(out, (pred, target), vjp=vjp, jvp=jvp, name="mse")


# ---------------------------------------------------------------------------
# graph-level API
#
# A "graph" is a callable mapping a dict of named leaf Tensors to a single
# Tensor (or dict of Tensors). The tape is built on each call, so graphs
# are pure and re-entrant.

GraphFn = Callable[[dict[str, Tensor]], "Tensor | dict[str, Tensor]"]


def _bind(inputs: dict[str, np.ndarray]) -> dict[str, Tensor]:
    return {k: tensor(v, name=k) for k, v in inputs.items()}


def _run(graph: GraphFn, leaves: dict[str, Tensor]) -> dict[str, Tensor]:
    out = graph(leaves)
    if isinstance(out, Tensor):
        out = {"out": out}
    return out


def evaluate(graph: GraphFn, inputs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Run the graph; returns named output arrays. Pure and deterministic."""
    outs = _run(graph, _bind(inputs))
    res = {}
    for k, t in outs.items():
        if not np.all(np.isfinite(t.data)):
            raise NonFiniteError(f"non-finite output {k!r}")
        res[k] = t.data
    return res


def gradient(graph: GraphFn, inputs: dict[str, np.ndarray],
             output_cotangent: "np.ndarray | dict[str, np.ndarray]",
             wrt: "Sequence[str] | None" = None) -> dict[str, np.ndarray]:
    """Vector-Jacobian product of the graph w.r.t. the named inputs."""
    leaves = _bind(inputs)
    outs = _run(graph, leaves)
    if not isinstance(output_cotangent, dict):
        output_cotangent = {next(iter(outs)): output_cotangent}
    names = list(wrt) if wrt is not None else list(inputs)
    out_list = [outs[k] for k in output_cotangent]
    ct_list = [output_cotangent[k] for k in output_cotangent]
    grads = backward(out_list, ct_list, [leaves[n] for n in names])
    for n, g in zip(names, grads):
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {n!r}")
    return dict(zip(names, grads))


def directional_derivative(graph: GraphFn, inputs: dict[str, np.ndarray],
                           input_tangents: dict[str, np.ndarray]
                           ) -> dict[str, np.ndarray]:
    """Jacobian-vector product of the graph with the given input tangents."""
    leaves = _bind(inputs)
    for name, t in input_tangents.items():
        if np.asarray(t).shape != leaves[name].data.shape:
            raise ValueError(f"tangent shape mismatch for {name!r}")
    outs = _run(graph, leaves)
    tmap = {id(leaves[n]): np.asarray(t, dtype=np.float32)
            for n, t in input_tangents.items()}
    tans = forward_tangents(list(outs.values()), tmap)
    return dict(zip(outs.keys(), tans))
