"""Hand-rolled neural blocks: rainfall self-attention encoder and a per-pixel
velocity network over 3x3 neighborhoods, with exact reverse-mode gradients.

The encoder lifts each of the 24 hourly rainfall values to embed_dim with a
learned value vector plus a positional embedding, runs one single-head
self-attention layer, and mean-pools over the hours. The field network sees,
for every grid cell, the 3x3 neighborhood of every input channel (zero
padding at edges) flattened to 9*C features, and maps it through a small
tanh MLP to a scalar velocity. Weights are shared across cells, so the map
is translation-equivariant and grid-size-agnostic.

Forward passes return (output, cache); backward passes consume the cache
and return exact analytic gradients. Parameter arrays live in ModelParams
and are addressed by canonical names (named_arrays) everywhere: gradients,
optimizer state, checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SERIES_LEN = 24
BASE_CHANNELS = 4  # x_t, t, dem, prior; rainfall embedding channels follow


@dataclass(frozen=True)
class ModelParams:
    enc_val: np.ndarray        # (d,) lift of the hourly scalar
    enc_pos: np.ndarray        # (24, d) positional embedding
    enc_wq: np.ndarray         # (d, d)
    enc_wk: np.ndarray         # (d, d)
    enc_wv: np.ndarray         # (d, d)
    enc_wo: np.ndarray         # (d, d)
    field_weights: tuple       # ((in_i, out_i) arrays,) last out = 1
    field_biases: tuple        # ((out_i,) arrays,)

    @property
    def embed_dim(self) -> int:
        return self.enc_val.shape[0]

    @property
    def channels(self) -> int:
        return BASE_CHANNELS + self.embed_dim

    @property
    def hidden(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.field_weights[:-1])


def init_params(embed_dim: int = 8, hidden: tuple[int, ...] = (32, 32), seed: int = 0) -> ModelParams:
    """Uniform [-0.1, 0.1] initialization, deterministic in the seed."""
    if embed_dim < 1:
        raise ValueError(f"embed_dim must be at least 1, got {embed_dim}")
    if any(w < 1 for w in hidden):
        raise ValueError(f"hidden widths must be positive, got {hidden}")
    rng = np.random.default_rng(seed)
    d = embed_dim

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    enc_val = u(d)
    enc_pos = u(SERIES_LEN, d)
    enc_wq, enc_wk, enc_wv, enc_wo = u(d, d), u(d, d), u(d, d), u(d, d)

    widths = [9 * (BASE_CHANNELS + d), *hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        weights.append(u(fan_in, fan_out))
        biases.append(u(fan_out))
    return ModelParams(enc_val, enc_pos, enc_wq, enc_wk, enc_wv, enc_wo,
                       tuple(weights), tuple(biases))


def named_arrays(params: ModelParams) -> list[tuple[str, np.ndarray]]:
    """Canonical (name, array) listing; fixes ordering for optimizers and checkpoints."""
    pairs = [
        ("enc_val", params.enc_val),
        ("enc_pos", params.enc_pos),
        ("enc_wq", params.enc_wq),
        ("enc_wk", params.enc_wk),
        ("enc_wv", params.enc_wv),
        ("enc_wo", params.enc_wo),
    ]
    for i, (w, b) in enumerate(zip(params.field_weights, params.field_biases)):
        pairs.append((f"field_w{i}", w))
        pairs.append((f"field_b{i}", b))
    return pairs


def params_from_arrays(arrays: dict[str, np.ndarray]) -> ModelParams:
    """Rebuild ModelParams from a name->array mapping (checkpoint load, optimizer step)."""
    n_layers = sum(1 for name in arrays if name.startswith("field_w"))
    if n_layers == 0:
        raise ValueError("no field layers found in arrays")
    weights = tuple(np.asarray(arrays[f"field_w{i}"], dtype=np.float64) for i in range(n_layers))
    biases = tuple(np.asarray(arrays[f"field_b{i}"], dtype=np.float64) for i in range(n_layers))
    enc = {k: np.asarray(arrays[k], dtype=np.float64)
           for k in ("enc_val", "enc_pos", "enc_wq", "enc_wk", "enc_wv", "enc_wo")}
    return ModelParams(enc["enc_val"], enc["enc_pos"], enc["enc_wq"], enc["enc_wk"],
                       enc["enc_wv"], enc["enc_wo"], weights, biases)


def flatten_params(params: ModelParams) -> np.ndarray:
    return np.concatenate([arr.ravel() for _, arr in named_arrays(params)])


def unflatten_params(template: ModelParams, vec: np.ndarray) -> ModelParams:
    arrays = {}
    offset = 0
    for name, arr in named_arrays(template):
        arrays[name] = vec[offset:offset + arr.size].reshape(arr.shape).copy()
        offset += arr.size
    if offset != vec.size:
        raise ValueError(f"parameter vector has {vec.size} entries, expected {offset}")
    return params_from_arrays(arrays)


def params_equal(a: ModelParams, b: ModelParams) -> bool:
    pa, pb = named_arrays(a), named_arrays(b)
    return len(pa) == len(pb) and all(
        na == nb and xa.shape == xb.shape and np.array_equal(xa, xb)
        for (na, xa), (nb, xb) in zip(pa, pb)
    )


# ---------------------------------------------------------------- encoder

def encoder_forward(params: ModelParams, scaled_hourly: np.ndarray) -> tuple[np.ndarray, dict]:
    """Embed a scaled 24-value rainfall series; returns (embedding, cache)."""
    r = np.asarray(scaled_hourly, dtype=np.float64)
    if r.shape != (SERIES_LEN,):
        raise ValueError(f"expected {SERIES_LEN} hourly values, got shape {r.shape}")
    d = params.embed_dim
    X = r[:, None] * params.enc_val[None, :] + params.enc_pos
    Q = X @ params.enc_wq
    K = X @ params.enc_wk
    V = X @ params.enc_wv
    logits = (Q @ K.T) / np.sqrt(d)
    logits = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    A = expl / expl.sum(axis=1, keepdims=True)
    Y = A @ V
    O = Y @ params.enc_wo
    emb = O.mean(axis=0)
    cache = {"r": r, "X": X, "Q": Q, "K": K, "V": V, "A": A, "Y": Y}
    return emb, cache


def encoder_backward(params: ModelParams, cache: dict, d_emb: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt encoder parameters, given dL/d(embedding)."""
    r, X, Q, K, V, A, Y = (cache[k] for k in ("r", "X", "Q", "K", "V", "A", "Y"))
    d = params.embed_dim
    dO = np.tile(d_emb / SERIES_LEN, (SERIES_LEN, 1))          # mean pool
    dWo = Y.T @ dO
    dY = dO @ params.enc_wo.T
    dA = dY @ V.T
    dV = A.T @ dY
    dlogits = (dA - (dA * A).sum(axis=1, keepdims=True)) * A   # softmax rows
    dQKt = dlogits / np.sqrt(d)
    dQ = dQKt @ K
    dK = dQKt.T @ Q
    dWq = X.T @ dQ
    dWk = X.T @ dK
    dWv = X.T @ dV
    dX = dQ @ params.enc_wq.T + dK @ params.enc_wk.T + dV @ params.enc_wv.T
    d_val = r @ dX
    d_pos = dX
    return {"enc_val": d_val, "enc_pos": d_pos, "enc_wq": dWq,
            "enc_wk": dWk, "enc_wv": dWv, "enc_wo": dWo}


def encode_rainfall(params: ModelParams, series, rain_scale: float = 1.0) -> np.ndarray:
    """Embedding for a RainfallSeries or raw (24,) mm array; hourly values are divided by rain_scale."""
    hourly = getattr(series, "hourly", series)
    if rain_scale <= 0:
        raise ValueError(f"rain_scale must be positive, got {rain_scale}")
    emb, _ = encoder_forward(params, np.asarray(hourly, dtype=np.float64) / rain_scale)
    return emb


# ------------------------------------------------------------- field net

_OFFSETS = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1))


def im2col(channels: np.ndarray) -> np.ndarray:
    """(B, C, H, W) -> (B*H*W, 9*C) of 3x3 neighborhoods, zero padded at edges."""
    B, C, H, W = channels.shape
    padded = np.zeros((B, C, H + 2, W + 2), dtype=np.float64)
    padded[:, :, 1:-1, 1:-1] = channels
    cols = np.empty((9, B, C, H, W), dtype=np.float64)
    for k, (dy, dx) in enumerate(_OFFSETS):
        cols[k] = padded[:, :, 1 + dy:1 + dy + H, 1 + dx:1 + dx + W]
    return cols.transpose(1, 3, 4, 0, 2).reshape(B * H * W, 9 * C)


def col2im(d_features: np.ndarray, shape: tuple[int, int, int, int]) -> np.ndarray:
    """Adjoint of im2col: scatter feature gradients back onto the channel grids."""
    B, C, H, W = shape
    cols = d_features.reshape(B, H, W, 9, C).transpose(3, 0, 4, 1, 2)
    dpad = np.zeros((B, C, H + 2, W + 2), dtype=np.float64)
    for k, (dy, dx) in enumerate(_OFFSETS):
        dpad[:, :, 1 + dy:1 + dy + H, 1 + dx:1 + dx + W] += cols[k]
    return dpad[:, :, 1:-1, 1:-1]


def field_forward(params: ModelParams, channels: np.ndarray) -> tuple[np.ndarray, dict]:
    """Velocity map from stacked input channels.

    channels is (C, H, W) or (B, C, H, W) with C = 4 + embed_dim; returns
    (velocity of shape (H, W) or (B, H, W), cache).
    """
    arr = np.asarray(channels, dtype=np.float64)
    batched = arr.ndim == 4
    if not batched:
        arr = arr[None]
    B, C, H, W = arr.shape
    if C != params.channels:
        raise ValueError(f"expected {params.channels} channels, got {C}")
    X = im2col(arr)
    acts = [X]  # inputs to each layer
    n = len(params.field_weights)
    for i, (w, b) in enumerate(zip(params.field_weights, params.field_biases)):
        Z = acts[-1] @ w + b
        acts.append(np.tanh(Z) if i < n - 1 else Z)
    velocity = acts[-1].reshape(B, H, W)
    cache = {"acts": acts, "shape": (B, C, H, W), "batched": batched}
    return (velocity if batched else velocity[0]), cache


def field_backward(params: ModelParams, cache: dict,
                   d_velocity: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Gradients wrt field parameters and input channels, given dL/d(velocity)."""
    B, C, H, W = cache["shape"]
    acts = cache["acts"]
    dv = np.asarray(d_velocity, dtype=np.float64)
    if not cache["batched"]:
        dv = dv[None]
    dZ = dv.reshape(B * H * W, 1)
    grads: dict[str, np.ndarray] = {}
    n = len(params.field_weights)
    for i in range(n - 1, -1, -1):
        grads[f"field_w{i}"] = acts[i].T @ dZ
        grads[f"field_b{i}"] = dZ.sum(axis=0)
        dA = dZ @ params.field_weights[i].T
        if i > 0:
            dZ = dA * (1.0 - acts[i] ** 2)  # tanh'
        else:
            dX = dA
    d_channels = col2im(dX, (B, C, H, W))
    if not cache["batched"]:
        d_channels = d_channels[0]
    return grads, d_channels
