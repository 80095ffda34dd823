"""Minimal reverse-mode differentiation over numpy arrays.

Purpose-built for this model: values are dense float64 arrays, ragged span and
knowledge structures are handled by fused segment ops, and each LSTM pass over
a sentence is a single graph node with a hand-written backward so graphs stay
small. Gradients accumulate on every node reachable from the backward root.
"""
from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np

# Optional sink for the distance of rectifier inputs to their kink at zero.
# Finite-difference validation uses it to reject probe points where a +-step
# perturbation could flip a rectifier and invalidate the central difference.
_relu_margin_sink: list[float] | None = None


@contextmanager
def relu_margin_recording(sink: list[float]) -> Iterator[list[float]]:
    """Record min |input| of every rectifier evaluated inside the block."""
    global _relu_margin_sink
    previous = _relu_margin_sink
    _relu_margin_sink = sink
    try:
        yield sink
    finally:
        _relu_margin_sink = previous


class Var:
    """One graph node: an array value plus the closure that backpropagates into its parents."""

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(
        self,
        data: np.ndarray,
        parents: tuple["Var", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape


def _acc(var: Var, g: np.ndarray) -> None:
    if var.grad is None:
        var.grad = g
    else:
        var.grad = var.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def backward(root: Var) -> None:
    """Run backpropagation from root; root is treated as a sum over its entries."""
    topo: list[Var] = []
    seen: set[int] = set()
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def const(data: np.ndarray | float) -> Var:
    return Var(np.asarray(data, dtype=np.float64))


def matmul(a: Var, b: Var) -> Var:
    def bw(g: np.ndarray) -> None:
        _acc(a, g @ b.data.T)
        _acc(b, a.data.T @ g)

    return Var(a.data @ b.data, (a, b), bw)


def add(a: Var, b: Var) -> Var:
    def bw(g: np.ndarray) -> None:
        _acc(a, _unbroadcast(g, a.data.shape))
        _acc(b, _unbroadcast(g, b.data.shape))

    return Var(a.data + b.data, (a, b), bw)


def mul(a: Var, b: Var) -> Var:
    def bw(g: np.ndarray) -> None:
        _acc(a, _unbroadcast(g * b.data, a.data.shape))
        _acc(b, _unbroadcast(g * a.data, b.data.shape))

    return Var(a.data * b.data, (a, b), bw)


def scale(a: Var, c: np.ndarray | float) -> Var:
    c = np.asarray(c, dtype=np.float64)

    def bw(g: np.ndarray) -> None:
        _acc(a, _unbroadcast(g * c, a.data.shape))

    return Var(a.data * c, (a,), bw)


def relu(a: Var) -> Var:
    mask = a.data > 0.0
    if _relu_margin_sink is not None and a.data.size:
        _relu_margin_sink.append(float(np.min(np.abs(a.data))))

    def bw(g: np.ndarray) -> None:
        _acc(a, g * mask)

    return Var(a.data * mask, (a,), bw)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def sigmoid(a: Var) -> Var:
    s = _sigmoid(a.data)

    def bw(g: np.ndarray) -> None:
        _acc(a, g * s * (1.0 - s))

    return Var(s, (a,), bw)


def tanh(a: Var) -> Var:
    t = np.tanh(a.data)

    def bw(g: np.ndarray) -> None:
        _acc(a, g * (1.0 - t * t))

    return Var(t, (a,), bw)


def concat_cols(parts: Sequence[Var]) -> Var:
    widths = [p.data.shape[1] for p in parts]
    edges = np.cumsum([0] + widths)

    def bw(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, edges[:-1], edges[1:]):
            _acc(p, g[:, lo:hi])

    return Var(np.concatenate([p.data for p in parts], axis=1), tuple(parts), bw)


def vstack(parts: Sequence[Var]) -> Var:
    heights = [p.data.shape[0] for p in parts]
    edges = np.cumsum([0] + heights)

    def bw(g: np.ndarray) -> None:
        for p, lo, hi in zip(parts, edges[:-1], edges[1:]):
            _acc(p, g[lo:hi])

    return Var(np.concatenate([p.data for p in parts], axis=0), tuple(parts), bw)


def rows(a: Var, start: int, stop: int) -> Var:
    def bw(g: np.ndarray) -> None:
        buf = np.zeros_like(a.data)
        buf[start:stop] = g
        _acc(a, buf)

    return Var(a.data[start:stop].copy(), (a,), bw)


def gather_rows(a: Var, idx: np.ndarray) -> Var:
    idx = np.asarray(idx, dtype=np.intp)

    def bw(g: np.ndarray) -> None:
        buf = np.zeros_like(a.data)
        np.add.at(buf, idx, g)
        _acc(a, buf)

    return Var(a.data[idx], (a,), bw)


def segment_sum(a: Var, seg: np.ndarray, n_segments: int) -> Var:
    seg = np.asarray(seg, dtype=np.intp)
    out = np.zeros((n_segments, a.data.shape[1]))
    np.add.at(out, seg, a.data)

    def bw(g: np.ndarray) -> None:
        _acc(a, g[seg])

    return Var(out, (a,), bw)


def segment_softmax(a: Var, seg: np.ndarray, n_segments: int) -> Var:
    """Column-vector softmax normalized independently within each segment."""
    seg = np.asarray(seg, dtype=np.intp)
    x = a.data[:, 0]
    mx = np.full(n_segments, -np.inf)
    np.maximum.at(mx, seg, x)
    ex = np.exp(x - mx[seg])
    den = np.zeros(n_segments)
    np.add.at(den, seg, ex)
    y = ex / den[seg]

    def bw(g: np.ndarray) -> None:
        gy = g[:, 0]
        t = gy * y
        dot = np.zeros(n_segments)
        np.add.at(dot, seg, t)
        _acc(a, (t - y * dot[seg])[:, None])

    return Var(y[:, None], (a,), bw)


def logsumexp_col(a: Var) -> Var:
    """log(sum(exp(column))) of a non-empty [n, 1] input, returned as [1, 1]."""
    x = a.data[:, 0]
    if x.size == 0:
        raise ValueError("logsumexp over an empty column")
    m = x.max()
    ex = np.exp(x - m)
    z = ex.sum()

    def bw(g: np.ndarray) -> None:
        _acc(a, (ex / z * g[0, 0])[:, None])

    return Var(np.array([[m + np.log(z)]]), (a,), bw)


def pad_concat_rows(
    k: Var,
    src: np.ndarray,
    dest: np.ndarray,
    slot: np.ndarray,
    n_rows: int,
    max_slots: int,
) -> Var:
    """Place k[src[i]] into row dest[i] at column block slot[i]; rest stays zero.

    (dest, slot) pairs must be unique. Used for the fixed-arity knowledge
    concatenation where attention is ablated.
    """
    src = np.asarray(src, dtype=np.intp)
    dest = np.asarray(dest, dtype=np.intp)
    slot = np.asarray(slot, dtype=np.intp)
    d = k.data.shape[1]
    cols = slot[:, None] * d + np.arange(d)[None, :]
    out = np.zeros((n_rows, max_slots * d))
    if len(src):
        out[dest[:, None], cols] = k.data[src]

    def bw(g: np.ndarray) -> None:
        buf = np.zeros_like(k.data)
        if len(src):
            np.add.at(buf, src, g[dest[:, None], cols])
        _acc(k, buf)

    return Var(out, (k,), bw)


def lstm_sequence(x: Var, wx: Var, wh: Var, b: Var, reverse: bool = False) -> Var:
    """Run one LSTM direction over a sentence; state starts at zero.

    Weight columns hold the four gates in (input, forget, cell, output) order.
    The whole pass is one graph node; backward is ordinary truncated-in-nothing
    backpropagation through time over the cached gate activations.
    """
    X = x.data
    T = X.shape[0]
    h = wh.data.shape[0]
    Wx, Wh, B = wx.data, wh.data, b.data
    order = range(T - 1, -1, -1) if reverse else range(T)
    H = np.zeros((T, h))
    gate_i = np.zeros((T, h))
    gate_f = np.zeros((T, h))
    gate_g = np.zeros((T, h))
    gate_o = np.zeros((T, h))
    tanh_c = np.zeros((T, h))
    c_prev = np.zeros((T, h))
    h_prev = np.zeros((T, h))
    hp = np.zeros(h)
    cp = np.zeros(h)
    for t in order:
        z = X[t] @ Wx + hp @ Wh + B
        i = _sigmoid(z[:h])
        f = _sigmoid(z[h : 2 * h])
        g_ = np.tanh(z[2 * h : 3 * h])
        o = _sigmoid(z[3 * h :])
        c = f * cp + i * g_
        tc = np.tanh(c)
        gate_i[t], gate_f[t], gate_g[t], gate_o[t] = i, f, g_, o
        tanh_c[t], c_prev[t], h_prev[t] = tc, cp, hp
        H[t] = o * tc
        hp = H[t]
        cp = c

    def bw(gH: np.ndarray) -> None:
        dX = np.zeros_like(X)
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        dB = np.zeros_like(B)
        dh_next = np.zeros(h)
        dc_next = np.zeros(h)
        for t in reversed(list(order)):
            dh = gH[t] + dh_next
            do = dh * tanh_c[t]
            dzo = do * gate_o[t] * (1.0 - gate_o[t])
            dc = dc_next + dh * gate_o[t] * (1.0 - tanh_c[t] ** 2)
            df = dc * c_prev[t]
            dzf = df * gate_f[t] * (1.0 - gate_f[t])
            di = dc * gate_g[t]
            dzi = di * gate_i[t] * (1.0 - gate_i[t])
            dg = dc * gate_i[t]
            dzg = dg * (1.0 - gate_g[t] ** 2)
            dz = np.concatenate([dzi, dzf, dzg, dzo])
            dX[t] = dz @ Wx.T
            dh_next = dz @ Wh.T
            dc_next = dc * gate_f[t]
            dWx += np.outer(X[t], dz)
            dWh += np.outer(h_prev[t], dz)
            dB += dz
        _acc(x, dX)
        _acc(wx, dWx)
        _acc(wh, dWh)
        _acc(b, dB)

    return Var(H, (x, wx, wh, b), bw)
