"""Distance-biased multi-head attention with analytic gradients.

The bias path embeds each level's clipped distance code into a learnable
table, concatenates the levels, and maps the result through a one-hidden-layer
ReLU MLP to one scalar per head. That scalar is added to the scaled attention
logits before the softmax. A linear (cluster-projected) variant attends from
base nodes to coarse clusters using the node-to-cluster distance tensor.

Everything is plain numpy in float64; backward passes are written by hand and
checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


@dataclass
class BiasParams:
    """Parameters of the distance -> per-head bias function.

    ``embeddings`` has shape (levels, clip + 2, embed_dim); row ``clip + 1``
    of each table is the embedding of the unreachable code. The MLP maps the
    concatenated level embeddings to one scalar per head.
    """

    embeddings: np.ndarray
    w1: np.ndarray  # (levels * embed_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, heads)
    b2: np.ndarray  # (heads,)

    @property
    def levels(self) -> int:
        return self.embeddings.shape[0]

    @property
    def clip(self) -> int:
        return self.embeddings.shape[1] - 2

    @property
    def heads(self) -> int:
        return self.w2.shape[1]


@dataclass
class AttentionParams:
    """Per-head query/key/value projections, each (heads, model_dim, head_dim)."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    @property
    def heads(self) -> int:
        return self.w_q.shape[0]

    @property
    def head_dim(self) -> int:
        return self.w_q.shape[2]


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_bias_params(levels: int, clip: int, embed_dim: int, hidden: int,
                     heads: int, rng: np.random.Generator) -> BiasParams:
    cat = levels * embed_dim
    return BiasParams(
        embeddings=_uniform(rng, (levels, clip + 2, embed_dim), embed_dim),
        w1=_uniform(rng, (cat, hidden), cat),
        b1=np.zeros(hidden),
        w2=_uniform(rng, (hidden, heads), hidden),
        b2=np.zeros(heads),
    )


def init_attention_params(model_dim: int, heads: int, head_dim: int,
                          rng: np.random.Generator) -> AttentionParams:
    shape = (heads, model_dim, head_dim)
    return AttentionParams(
        w_q=_uniform(rng, shape, model_dim),
        w_k=_uniform(rng, shape, model_dim),
        w_v=_uniform(rng, shape, model_dim),
    )


@dataclass
class Gradients:
    """Parameter gradients, shape-congruent with BiasParams + AttentionParams."""

    embeddings: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray


# ---------------------------------------------------------------------------
# Bias function

def bias_matrix(codes: np.ndarray, p: BiasParams):
    """Per-head bias from integer distance codes, shape (rows, cols, heads).

    ``codes`` is a (rows, cols, levels) array of clipped distance codes in
    [0, clip + 1]. Returns (bias, cache) where cache feeds bias_backward.
    """
    codes = np.asarray(codes)
    if codes.ndim != 3 or codes.shape[2] != p.levels:
        raise ValueError(f"expected (rows, cols, {p.levels}) codes, "
                         f"got {codes.shape}")
    if codes.min() < 0 or codes.max() > p.clip + 1:
        raise ValueError(f"distance code outside [0, {p.clip + 1}]")
    rows, cols, levels = codes.shape
    # (rows, cols, levels, embed_dim) -> concat levels
    gathered = p.embeddings[np.arange(levels), codes]
    cat = gathered.reshape(rows, cols, levels * p.embeddings.shape[2])
    pre = cat @ p.w1 + p.b1
    hid = np.maximum(pre, 0.0)
    bias = hid @ p.w2 + p.b2
    cache = {"codes": codes, "cat": cat, "pre": pre, "hid": hid, "params": p}
    return bias, cache


def bias_backward(d_bias: np.ndarray, cache: dict):
    """Gradients of the bias function; returns (d_embeddings, d_w1, d_b1, d_w2, d_b2)."""
    p: BiasParams = cache["params"]
    codes, cat, pre, hid = (cache["codes"], cache["cat"], cache["pre"],
                            cache["hid"])
    rows, cols, levels = codes.shape
    embed_dim = p.embeddings.shape[2]
    d_w2 = np.einsum("ijh,ijo->ho", hid, d_bias)
    d_b2 = d_bias.sum(axis=(0, 1))
    d_hid = d_bias @ p.w2.T
    d_pre = d_hid * (pre > 0)
    d_w1 = np.einsum("ijc,ijh->ch", cat, d_pre)
    d_b1 = d_pre.sum(axis=(0, 1))
    d_cat = d_pre @ p.w1.T
    d_gathered = d_cat.reshape(rows, cols, levels, embed_dim)
    d_emb = np.zeros_like(p.embeddings)
    for k in range(levels):
        np.add.at(d_emb[k], codes[:, :, k].ravel(),
                  d_gathered[:, :, k].reshape(-1, embed_dim))
    return d_emb, d_w1, d_b1, d_w2, d_b2


# ---------------------------------------------------------------------------
# Attention

def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def attention_forward(x: np.ndarray, params: AttentionParams,
                      bias: np.ndarray | None = None,
                      x_ctx: np.ndarray | None = None):
    """Biased (multi-head) attention.

    ``x`` is (n, model_dim). ``x_ctx`` supplies the key/value side; when None
    this is self-attention. ``bias`` is (n, m, heads) or None for no bias.
    Returns (out, cache) with out of shape (n, heads * head_dim).
    """
    if np.isnan(x).any():
        raise ValueError("NaN in input features")
    ctx = x if x_ctx is None else x_ctx
    q = np.einsum("nd,hde->hne", x, params.w_q)
    k = np.einsum("md,hde->hme", ctx, params.w_k)
    v = np.einsum("md,hde->hme", ctx, params.w_v)
    scale = 1.0 / np.sqrt(params.head_dim)
    logits = np.einsum("hne,hme->hnm", q, k) * scale
    if bias is not None:
        if bias.shape != (x.shape[0], ctx.shape[0], params.heads):
            raise ValueError(f"bias shape {bias.shape} incompatible with "
                             f"({x.shape[0]}, {ctx.shape[0]}, {params.heads})")
        logits = logits + bias.transpose(2, 0, 1)
    attn = _softmax_rows(logits)
    out_heads = np.einsum("hnm,hme->hne", attn, v)
    out = out_heads.transpose(1, 0, 2).reshape(x.shape[0], -1)
    cache = {"x": x, "ctx": ctx, "q": q, "k": k, "v": v, "attn": attn,
             "scale": scale, "params": params, "biased": bias is not None}
    return out, cache


def attention_backward(d_out: np.ndarray, cache: dict):
    """Backward pass of attention_forward.

    Returns (d_wq, d_wk, d_wv, d_bias) where d_bias is None when the forward
    pass ran without a bias.
    """
    params: AttentionParams = cache["params"]
    x, ctx, q, k, v, attn, scale = (cache["x"], cache["ctx"], cache["q"],
                                    cache["k"], cache["v"], cache["attn"],
                                    cache["scale"])
    n = x.shape[0]
    d_heads = d_out.reshape(n, params.heads, params.head_dim).transpose(1, 0, 2)
    d_attn = np.einsum("hne,hme->hnm", d_heads, v)
    d_v = np.einsum("hnm,hne->hme", attn, d_heads)
    # softmax backward per row
    inner = (d_attn * attn).sum(axis=-1, keepdims=True)
    d_logits = attn * (d_attn - inner)
    d_q = np.einsum("hnm,hme->hne", d_logits, k) * scale
    d_k = np.einsum("hnm,hne->hme", d_logits, q) * scale
    d_wq = np.einsum("nd,hne->hde", x, d_q)
    d_wk = np.einsum("md,hme->hde", ctx, d_k)
    d_wv = np.einsum("md,hme->hde", ctx, d_v)
    d_bias = d_logits.transpose(1, 2, 0) if cache["biased"] else None
    return d_wq, d_wk, d_wv, d_bias


# ---------------------------------------------------------------------------
# Full layer

class BiasedAttentionLayer:
    """Attention layer with an optional distance-bias path.

    ``codes`` passed to forward is the integer distance tensor; when None the
    layer degenerates to unbiased attention. ``x_ctx`` switches to the linear
    node-to-cluster variant (codes then indexed node x cluster).
    """

    def __init__(self, attn: AttentionParams, bias: BiasParams | None = None):
        self.attn = attn
        self.bias = bias
        self._cache = None

    def forward(self, x: np.ndarray, codes: np.ndarray | None = None,
                x_ctx: np.ndarray | None = None) -> np.ndarray:
        bias_val, bias_cache = None, None
        if codes is not None:
            if self.bias is None:
                raise ValueError("layer has no bias parameters")
            bias_val, bias_cache = bias_matrix(codes, self.bias)
        out, attn_cache = attention_forward(x, self.attn, bias_val, x_ctx)
        self._cache = (attn_cache, bias_cache)
        return out

    def backward(self, d_out: np.ndarray) -> Gradients:
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        attn_cache, bias_cache = self._cache
        d_wq, d_wk, d_wv, d_bias = attention_backward(d_out, attn_cache)
        if bias_cache is not None:
            d_emb, d_w1, d_b1, d_w2, d_b2 = bias_backward(d_bias, bias_cache)
        else:
            z = np.zeros(0)
            d_emb = d_w1 = d_b1 = d_w2 = d_b2 = z
        return Gradients(d_emb, d_w1, d_b1, d_w2, d_b2, d_wq, d_wk, d_wv)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        named = [("w_q", self.attn.w_q), ("w_k", self.attn.w_k),
                 ("w_v", self.attn.w_v)]
        if self.bias is not None:
            named += [(f.name, getattr(self.bias, f.name))
                      for f in fields(self.bias)]
        return named

    def apply_gradients(self, g: Gradients, lr: float) -> None:
        self.attn.w_q -= lr * g.w_q
        self.attn.w_k -= lr * g.w_k
        self.attn.w_v -= lr * g.w_v
        if self.bias is not None:
            self.bias.embeddings -= lr * g.embeddings
            self.bias.w1 -= lr * g.w1
            self.bias.b1 -= lr * g.b1
            self.bias.w2 -= lr * g.w2
            self.bias.b2 -= lr * g.b2
