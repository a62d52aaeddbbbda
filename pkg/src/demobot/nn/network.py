"""Dense network engine: stacked LSTM / feedforward bodies with a linear
output layer, hand-derived gradients for whole (masked) sequences.

Conventions:
  * sequences are float64 arrays of shape (T, B, dim), masks (T, B) in {0,1}
  * LSTM gate blocks are fused along the last axis in the order
    [input, forget, output, candidate], each `width` columns wide (the three
    sigmoid gates first, so one expit call covers them)
  * the output layer is fully connected to the concatenation of every LSTM
    layer's hidden vector (feedforward bodies feed it their last layer)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .tensor import init_uniform

BODY_KINDS = ("lstm", "feedforward")
HEAD_KINDS = ("mse", "mdn")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description; enough to rebuild a network from scratch."""

    body: str
    layer_widths: tuple
    head: str
    input_dim: int
    output_dim: int
    mixture_count: int = 0
    unroll_limit: int = 50
    density_norm: str = "full"  # mdn kernel normalizer: "full" (sigma^c) | "scalar" (sigma^1)
    body_activation: str = "tanh"  # hidden activation of feedforward bodies

    def __post_init__(self):
        if self.body not in BODY_KINDS:
            raise ValueError(f"unknown body kind {self.body!r}")
        if self.head not in HEAD_KINDS:
            raise ValueError(f"unknown head kind {self.head!r}")
        if self.body_activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {self.body_activation!r}")
        if self.head == "mdn" and self.mixture_count < 1:
            raise ValueError("mdn head needs mixture_count >= 1")
        if not self.layer_widths:
            raise ValueError("need at least one body layer")
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))

    @property
    def head_width(self) -> int:
        if self.head == "mdn":
            return (self.output_dim + 2) * self.mixture_count
        return self.output_dim

    @property
    def body_output_dim(self) -> int:
        if self.body == "lstm":
            return sum(self.layer_widths)
        return self.layer_widths[-1]


# The four controller variants compared in the study: 3x100 tanh feedforward
# or 3x50 LSTM bodies, under a plain regression head or a 20-kernel mixture head.
CONTROLLER_VARIANTS = {
    "ff-mse": ("feedforward", (100, 100, 100), "mse", 0),
    "lstm-mse": ("lstm", (50, 50, 50), "mse", 0),
    "ff-mdn": ("feedforward", (100, 100, 100), "mdn", 20),
    "lstm-mdn": ("lstm", (50, 50, 50), "mdn", 20),
}


def controller_spec(name: str, input_dim: int = 15, output_dim: int = 8,
                    density_norm: str = "full") -> NetworkSpec:
    """Spec for one of the named controller variants."""
    try:
        body, widths, head, m = CONTROLLER_VARIANTS[name]
    except KeyError:
        raise ValueError(
            f"unknown controller {name!r}; choose from {sorted(CONTROLLER_VARIANTS)}") from None
    return NetworkSpec(body=body, layer_widths=widths, head=head,
                       input_dim=input_dim, output_dim=output_dim,
                       mixture_count=m, density_norm=density_norm)


@dataclass
class LstmLayerParams:
    """One LSTM layer; weight blocks fused over the four gates."""

    input_weights: np.ndarray      # (in_dim, 4*width)
    recurrent_weights: np.ndarray  # (width, 4*width)
    biases: np.ndarray             # (4*width,)

    @property
    def width(self) -> int:
        return self.recurrent_weights.shape[0]

    def __post_init__(self):
        w = self.recurrent_weights.shape[0]
        if self.input_weights.shape[1] != 4 * w or self.biases.shape != (4 * w,):
            raise ValueError("inconsistent LSTM gate tensor shapes")


@dataclass
class FeedforwardLayerParams:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)
    activation: str = "tanh"  # "tanh" | "identity"

    def __post_init__(self):
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError("weight/bias row mismatch")
        if self.activation not in ("tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class LstmState:
    """Per-layer hidden and cell vectors; zero at sequence start."""

    hidden: list = field(default_factory=list)
    cell: list = field(default_factory=list)

    @classmethod
    def zeros(cls, widths, batch: int | None = None) -> "LstmState":
        shape = (lambda w: (batch, w)) if batch is not None else (lambda w: (w,))
        return cls(hidden=[np.zeros(shape(w)) for w in widths],
                   cell=[np.zeros(shape(w)) for w in widths])

    def copy(self) -> "LstmState":
        return LstmState(hidden=[h.copy() for h in self.hidden],
                         cell=[c.copy() for c in self.cell])


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> dict:
    """All trainable tensors, uniform on [-0.08, 0.08], keyed by name."""
    params = {}
    in_dim = spec.input_dim
    for i, width in enumerate(spec.layer_widths):
        if spec.body == "lstm":
            params[f"lstm{i}.wx"] = init_uniform((in_dim, 4 * width), rng)
            params[f"lstm{i}.wh"] = init_uniform((width, 4 * width), rng)
            params[f"lstm{i}.b"] = init_uniform((4 * width,), rng)
        else:
            params[f"ff{i}.w"] = init_uniform((width, in_dim), rng)
            params[f"ff{i}.b"] = init_uniform((width,), rng)
        in_dim = width
    params["head.w"] = init_uniform((spec.head_width, spec.body_output_dim), rng)
    params["head.b"] = init_uniform((spec.head_width,), rng)
    return params


def lstm_layer_views(spec: NetworkSpec, params: dict) -> list:
    return [LstmLayerParams(params[f"lstm{i}.wx"], params[f"lstm{i}.wh"], params[f"lstm{i}.b"])
            for i in range(len(spec.layer_widths))]


def ff_layer_views(spec: NetworkSpec, params: dict) -> list:
    return [FeedforwardLayerParams(params[f"ff{i}.w"], params[f"ff{i}.b"], "tanh")
            for i in range(len(spec.layer_widths))]


def head_view(params: dict) -> FeedforwardLayerParams:
    return FeedforwardLayerParams(params["head.w"], params["head.b"], "identity")


def _lstm_cell(pre: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
               layer: LstmLayerParams):
    """One gate evaluation. `pre` is x @ wx, already computed.

    Returns (h, c, gates) with gates = (i, f, o, g, tanh_c) kept for backprop.
    """
    w = layer.width
    z = pre + h_prev @ layer.recurrent_weights + layer.biases
    sig = expit(z[..., :3 * w])
    i = sig[..., 0 * w:1 * w]
    f = sig[..., 1 * w:2 * w]
    o = sig[..., 2 * w:3 * w]
    g = np.tanh(z[..., 3 * w:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (i, f, o, g, tc)


def lstm_step(x, state: LstmState, layers: list):
    """Advance every layer by one time step.

    Returns (concatenated hidden vector over all layers, next state). `x` may
    be a single vector or a (B, in_dim) batch.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != layers[0].input_weights.shape[0]:
        raise ValueError(
            f"layer 0 expects input width {layers[0].input_weights.shape[0]}, got {x.shape[-1]}")
    nxt = LstmState(hidden=[], cell=[])
    inp = x
    for idx, layer in enumerate(layers):
        if inp.shape[-1] != layer.input_weights.shape[0]:
            raise ValueError(f"dimension mismatch entering LSTM layer {idx}")
        h, c, _ = _lstm_cell(inp @ layer.input_weights, state.hidden[idx],
                             state.cell[idx], layer)
        nxt.hidden.append(h)
        nxt.cell.append(c)
        inp = h
    return np.concatenate(nxt.hidden, axis=-1), nxt


def forward_sequence(spec: NetworkSpec, params: dict, inputs: np.ndarray):
    """Run a whole (T, B, input_dim) sequence through body and output layer.

    Returns (raw outputs (T, B, head_width), cache for backward_sequence).
    Sequences longer than the unroll limit are rejected; the caller windows.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 3 or inputs.shape[2] != spec.input_dim:
        raise ValueError(f"expected (T, B, {spec.input_dim}) inputs, got {inputs.shape}")
    T, B, _ = inputs.shape
    if T > spec.unroll_limit:
        raise ValueError(f"sequence length {T} exceeds unroll limit {spec.unroll_limit}")

    cache = {"inputs": inputs}
    if spec.body == "lstm":
        layers = lstm_layer_views(spec, params)
        layer_caches = []
        feed = inputs
        for layer in layers:
            w = layer.width
            # input contributions for every step at once; the loop only adds
            # the recurrent term and the gate nonlinearities
            pre = (feed.reshape(T * B, -1) @ layer.input_weights).reshape(T, B, 4 * w)
            pre += layer.biases
            sig = np.empty((T, B, 3 * w))
            gg = np.empty((T, B, w))
            h_seq = np.empty((T, B, w))
            c_seq = np.empty((T, B, w))
            tc_seq = np.empty((T, B, w))
            h = np.zeros((B, w))
            c = np.zeros((B, w))
            z = np.empty((B, 4 * w))
            for t in range(T):
                np.dot(h, layer.recurrent_weights, out=z)
                z += pre[t]
                expit(z[:, :3 * w], out=sig[t])
                np.tanh(z[:, 3 * w:], out=gg[t])
                st = sig[t]
                c = st[:, w:2 * w] * c
                c += st[:, :w] * gg[t]
                c_seq[t] = c
                np.tanh(c, out=tc_seq[t])
                np.multiply(st[:, 2 * w:], tc_seq[t], out=h_seq[t])
                h = h_seq[t]
            layer_caches.append({"x": feed, "h": h_seq, "c": c_seq,
                                 "sig": sig, "g": gg, "tc": tc_seq})
            feed = h_seq
        body_out = np.concatenate([lc["h"] for lc in layer_caches], axis=-1)
        cache["layers"] = layer_caches
    else:
        feed = inputs
        layer_caches = []
        for i in range(len(spec.layer_widths)):
            w_mat = params[f"ff{i}.w"]
            z = feed.reshape(T * B, -1) @ w_mat.T + params[f"ff{i}.b"]
            h = (np.tanh(z) if spec.body_activation == "tanh" else z).reshape(T, B, -1)
            layer_caches.append({"x": feed, "h": h})
            feed = h
        body_out = feed
        cache["layers"] = layer_caches

    raw = (body_out.reshape(T * B, -1) @ params["head.w"].T
           + params["head.b"]).reshape(T, B, spec.head_width)
    cache["body_out"] = body_out
    return raw, cache


def backward_sequence(spec: NetworkSpec, params: dict, cache: dict,
                      d_raw: np.ndarray) -> dict:
    """Exact gradients of sum(d_raw * raw) w.r.t. every parameter.

    `d_raw` holds the loss gradient per step and batch element; masked steps
    must carry zeros. Returns a dict keyed like `params`.
    """
    if "body_out" not in cache:
        raise ValueError("missing forward cache")
    d_raw = np.asarray(d_raw, dtype=float)
    body_out = cache["body_out"]
    T, B, _ = body_out.shape
    grads = {}

    flat_draw = d_raw.reshape(T * B, -1)
    grads["head.w"] = flat_draw.T @ body_out.reshape(T * B, -1)
    grads["head.b"] = flat_draw.sum(axis=0)
    d_body = (flat_draw @ params["head.w"]).reshape(T, B, -1)

    if spec.body == "lstm":
        widths = spec.layer_widths
        # Split the head gradient into per-layer segments of the concatenation.
        offsets = np.cumsum((0,) + widths)
        d_from_above = None
        for idx in range(len(widths) - 1, -1, -1):
            layer = LstmLayerParams(params[f"lstm{idx}.wx"], params[f"lstm{idx}.wh"],
                                    params[f"lstm{idx}.b"])
            lc = cache["layers"][idx]
            w = widths[idx]
            dh_seq = d_body[:, :, offsets[idx]:offsets[idx + 1]].copy()
            if d_from_above is not None:
                dh_seq += d_from_above
            dgates = np.empty((T, B, 4 * w))
            dh_carry = np.zeros((B, w))
            dc_carry = np.zeros((B, w))
            zeros_c = np.zeros((B, w))
            wh_t = layer.recurrent_weights.T.copy()
            for t in range(T - 1, -1, -1):
                st = lc["sig"][t]
                i = st[:, :w]; f = st[:, w:2 * w]; o = st[:, 2 * w:]
                g = lc["g"][t]; tc = lc["tc"][t]
                dh = dh_seq[t]
                dh += dh_carry
                dc = dh * o
                dc *= 1.0 - tc * tc
                dc += dc_carry
                c_prev = lc["c"][t - 1] if t > 0 else zeros_c
                blk = dgates[t]
                blk[:, 0 * w:1 * w] = dc * g * i * (1.0 - i)
                blk[:, 1 * w:2 * w] = dc * c_prev * f * (1.0 - f)
                blk[:, 2 * w:3 * w] = dh * tc * o * (1.0 - o)
                blk[:, 3 * w:4 * w] = dc * i * (1.0 - g * g)
                dc_carry = dc * f
                dh_carry = blk @ wh_t
            flat_dg = dgates.reshape(T * B, 4 * w)
            x = lc["x"]
            grads[f"lstm{idx}.wx"] = x.reshape(T * B, -1).T @ flat_dg
            h_prev = np.concatenate([np.zeros((1, B, w)), lc["h"][:-1]], axis=0)
            grads[f"lstm{idx}.wh"] = h_prev.reshape(T * B, w).T @ flat_dg
            grads[f"lstm{idx}.b"] = flat_dg.sum(axis=0)
            d_from_above = (flat_dg @ layer.input_weights.T).reshape(T, B, -1)
    else:
        dh = d_body
        tanh_body = spec.body_activation == "tanh"
        for idx in range(len(spec.layer_widths) - 1, -1, -1):
            lc = cache["layers"][idx]
            h = lc["h"]
            dz = (dh * (1.0 - h * h) if tanh_body else dh).reshape(T * B, -1)
            grads[f"ff{idx}.w"] = dz.T @ lc["x"].reshape(T * B, -1)
            grads[f"ff{idx}.b"] = dz.sum(axis=0)
            dh = (dz @ params[f"ff{idx}.w"]).reshape(T, B, -1)
    return grads


def step_output(spec: NetworkSpec, params: dict, x, state):
    """Single-step inference: raw head output plus updated recurrent state.

    For feedforward bodies `state` is ignored and returned as None.
    """
    x = np.asarray(x, dtype=float)
    if spec.body == "lstm":
        if state is None:
            state = LstmState.zeros(spec.layer_widths,
                                    batch=x.shape[0] if x.ndim == 2 else None)
        body_out, state = lstm_step(x, state, lstm_layer_views(spec, params))
    else:
        h = x
        for i in range(len(spec.layer_widths)):
            h = h @ params[f"ff{i}.w"].T + params[f"ff{i}.b"]
            if spec.body_activation == "tanh":
                h = np.tanh(h)
        body_out, state = h, None
    raw = body_out @ params["head.w"].T + params["head.b"]
    return raw, state
