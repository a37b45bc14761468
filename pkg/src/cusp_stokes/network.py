"""Fully-connected sub-networks with exact input-derivative propagation.

Each sub-network maps an augmented input in R^(d+1) through L sigmoid
hidden layers to a linear output layer without bias. Values, input
gradients and input Hessians are propagated analytically layer by layer
(second-order forward mode), and derivatives of any of these with
respect to the parameters are obtained by reverse sweeps over the stored
forward tape. Everything is vectorized over batches of points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit


class ArchitectureMismatchError(ValueError):
    """Stored parameters do not match the expected layer sizes."""


@dataclass
class SubNetParams:
    """Weights/biases of one sub-network.

    layer_sizes = [n_in, N_1, ..., N_L, n_out]; weights[l] has shape
    (N_l, N_{l-1}) with an extra output matrix at the end; biases cover
    the hidden layers only (the linear output layer has no bias).
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_in(self):
        return self.layer_sizes[0]

    @property
    def n_out(self):
        return self.layer_sizes[-1]

    @property
    def n_hidden_layers(self):
        return len(self.layer_sizes) - 2

    @property
    def size(self):
        return param_count(self.layer_sizes)

    def flatten(self) -> np.ndarray:
        parts = []
        for l in range(self.n_hidden_layers):
            parts.append(self.weights[l].ravel())
            parts.append(self.biases[l])
        parts.append(self.weights[-1].ravel())
        return np.concatenate(parts)

    def copy_with(self, theta: np.ndarray) -> "SubNetParams":
        return unflatten(self.layer_sizes, theta)


def param_count(layer_sizes) -> int:
    """Exact trainable-parameter count for one sub-network."""
    sizes = list(layer_sizes)
    n = 0
    for prev, cur in zip(sizes[:-2], sizes[1:-1]):
        n += (prev + 1) * cur
    n += sizes[-2] * sizes[-1]
    return n


def count_params(pressure_sizes, velocity_sizes) -> int:
    """Total parameter dimension of the pressure + velocity pair."""
    return param_count(pressure_sizes) + param_count(velocity_sizes)


def init_params(layer_sizes, rng: np.random.Generator) -> SubNetParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights and biases."""
    sizes = list(layer_sizes)
    weights, biases = [], []
    for l in range(1, len(sizes)):
        fan_in = sizes[l - 1]
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(sizes[l], sizes[l - 1])))
        if l < len(sizes) - 1:
            biases.append(rng.uniform(-bound, bound, size=sizes[l]))
    return SubNetParams(layer_sizes=sizes, weights=weights, biases=biases)


def unflatten(layer_sizes, theta: np.ndarray) -> SubNetParams:
    sizes = list(layer_sizes)
    expected = param_count(sizes)
    if theta.size != expected:
        raise ArchitectureMismatchError(
            f"{theta.size} parameters for sizes {sizes} (need {expected})")
    weights, biases = [], []
    k = 0
    for prev, cur in zip(sizes[:-2], sizes[1:-1]):
        weights.append(theta[k:k + prev * cur].reshape(cur, prev).copy())
        k += prev * cur
        biases.append(theta[k:k + cur].copy())
        k += cur
    out, last = sizes[-1], sizes[-2]
    weights.append(theta[k:k + last * out].reshape(out, last).copy())
    return SubNetParams(layer_sizes=sizes, weights=weights, biases=biases)


@dataclass(frozen=True)
class Jet2:
    """Value, input gradient and input Hessian of one output at one point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray


def _sigmoid_derivatives(a, order):
    s = expit(a)
    s1 = s * (1.0 - s)
    s2 = s1 * (1.0 - 2.0 * s) if order >= 1 else None
    s3 = s2 * (1.0 - 2.0 * s) - 2.0 * s1 * s1 if order >= 2 else None
    return s, s1, s2, s3


class Tape:
    """Forward pass record needed for parameter reverse sweeps."""

    def __init__(self, params, x, order):
        self.params = params
        self.x = x
        self.order = order
        self.layers = []  # per hidden layer: dict of arrays
        self.value = None
        self.grad = None
        self.hess = None


def forward(params: SubNetParams, x) -> np.ndarray:
    """Network outputs for a batch of inputs (m, n_in) -> (m, n_out)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = x
    for l in range(params.n_hidden_layers):
        v = expit(v @ params.weights[l].T + params.biases[l])
    return v @ params.weights[-1].T


def forward_tape(params: SubNetParams, x, order: int = 2) -> Tape:
    """Propagate (value, gradient, Hessian) jets, keeping the tape.

    order 0 keeps values only, 1 adds input gradients, 2 adds Hessians.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m, n0 = x.shape
    if n0 != params.n_in:
        raise ArchitectureMismatchError(f"input width {n0}, network expects {params.n_in}")
    tape = Tape(params, x, order)
    v = x          # (m, N)
    g = None       # (m, N, n0)
    h = None       # (m, N, n0, n0)
    for l in range(params.n_hidden_layers):
        W, b = params.weights[l], params.biases[l]
        a = v @ W.T + b
        if l == 0:
            ga = np.broadcast_to(W, (m, *W.shape))  # dA/dx = W for the input layer
            ha = None                               # second derivative of affine(x) is 0
        else:
            ga = np.einsum("ij,mjp->mip", W, g, optimize=True) if order >= 1 else None
            ha = np.einsum("ij,mjpq->mipq", W, h, optimize=True) if order >= 2 else None
        s, s1, s2, s3 = _sigmoid_derivatives(a, order)
        rec = {"v_prev": v, "g_prev": g, "h_prev": h,
               "ga": ga, "ha": ha, "s1": s1, "s2": s2, "s3": s3,
               "first": l == 0}
        v = s
        if order >= 1:
            g = s1[:, :, None] * ga
        if order >= 2:
            outer = ga[:, :, :, None] * ga[:, :, None, :]
            h = s2[:, :, None, None] * outer
            if ha is not None:
                h = h + s1[:, :, None, None] * ha
        tape.layers.append(rec)
    Wout = params.weights[-1]
    tape.v_last, tape.g_last, tape.h_last = v, g, h
    tape.value = v @ Wout.T
    if order >= 1:
        tape.grad = np.einsum("kj,mjp->mkp", Wout, g, optimize=True)
    if order >= 2:
        tape.hess = np.einsum("kj,mjpq->mkpq", Wout, h, optimize=True)
    return tape


def forward_jet(params: SubNetParams, x):
    """Exact value, gradient and Hessian w.r.t. the n_in inputs.

    For a single input point returns a list of Jet2, one per output;
    for a batch returns the (value, grad, hess) arrays.
    """
    arr = np.asarray(x, dtype=float)
    tape = forward_tape(params, arr, order=2)
    if arr.ndim == 1:
        return [Jet2(value=float(tape.value[0, k]),
                     grad=tape.grad[0, k].copy(),
                     hess=tape.hess[0, k].copy())
                for k in range(params.n_out)]
    return tape.value, tape.grad, tape.hess


def vjp_params(tape: Tape, bar_value=None, bar_grad=None, bar_hess=None) -> np.ndarray:
    """Parameter gradients of linear functionals of the output jets.

    Cotangents carry one leading row axis Q in front of the point axis:
    bar_value (Q, m, n_out), bar_grad (Q, m, n_out, n0), bar_hess
    (Q, m, n_out, n0, n0). Returns (Q, m, n_params) in
    flattened-parameter order; each (q, point) pair is independent.
    """
    params = tape.params
    m = tape.x.shape[0]
    bv, bg, bh = bar_value, bar_grad, bar_hess
    for c, nd in ((bv, 3), (bg, 4), (bh, 5)):
        if c is not None:
            if c.ndim != nd or c.shape[1] != m:
                raise ValueError("cotangent shape must be (Q, m, ...)")
    q = next(c.shape[0] for c in (bv, bg, bh) if c is not None)

    Wout = params.weights[-1]
    grads = [None] * (params.n_hidden_layers + 1)

    # output layer: out = v_last @ Wout.T (no bias)
    gout = np.zeros((q, m, *Wout.shape))
    if bv is not None:
        gout += bv[:, :, :, None] * tape.v_last[None, :, None, :]
    if bg is not None:
        gout += np.einsum("qmkp,mjp->qmkj", bg, tape.g_last, optimize=True)
    if bh is not None:
        gout += np.einsum("qmkpr,mjpr->qmkj", bh, tape.h_last, optimize=True)
    grads[-1] = gout.reshape(q, m, -1)

    av = np.einsum("kj,qmk->qmj", Wout, bv, optimize=True) if bv is not None else None
    ag = np.einsum("kj,qmkp->qmjp", Wout, bg, optimize=True) if bg is not None else None
    ah = np.einsum("kj,qmkpr->qmjpr", Wout, bh, optimize=True) if bh is not None else None

    for l in range(params.n_hidden_layers - 1, -1, -1):
        rec = tape.layers[l]
        s1, s2, s3 = rec["s1"], rec["s2"], rec["s3"]
        ga, ha = rec["ga"], rec["ha"]
        # adjoint of the pre-activation value
        aa = np.zeros((q, m, s1.shape[1]))
        if av is not None:
            aa += av * s1
        if ag is not None:
            aa += s2 * np.einsum("qmip,mip->qmi", ag, ga, optimize=True)
        if ah is not None:
            aa += s3 * np.einsum("qmipr,mip,mir->qmi", ah, ga, ga, optimize=True)
            if ha is not None:
                aa += s2 * np.einsum("qmipr,mipr->qmi", ah, ha, optimize=True)
        # adjoints of the pre-activation gradient/Hessian
        aga = None
        if ag is not None or ah is not None:
            aga = np.zeros((q, m, *ga.shape[1:]))
            if ag is not None:
                aga += s1[None, :, :, None] * ag
            if ah is not None:
                sym = ah + ah.swapaxes(-1, -2)
                aga += s2[None, :, :, None] * np.einsum("qmipr,mir->qmip", sym, ga, optimize=True)
        aha = s1[None, :, :, None, None] * ah if (ah is not None and ha is not None) else None

        v_prev, g_prev, h_prev = rec["v_prev"], rec["g_prev"], rec["h_prev"]
        gw = aa[:, :, :, None] * v_prev[None, :, None, :]
        if rec["first"]:
            if aga is not None:
                gw = gw + aga  # g_prev is the identity at the input layer
        else:
            if aga is not None:
                gw = gw + np.einsum("qmip,mjp->qmij", aga, g_prev, optimize=True)
            if aha is not None:
                gw = gw + np.einsum("qmipr,mjpr->qmij", aha, h_prev, optimize=True)
        grads[l] = np.concatenate([gw.reshape(q, m, -1), aa], axis=2)

        if l > 0:
            W = params.weights[l]
            av = np.einsum("ij,qmi->qmj", W, aa, optimize=True)
            ag = np.einsum("ij,qmip->qmjp", W, aga, optimize=True) if aga is not None else None
            ah = np.einsum("ij,qmipr->qmjpr", W, aha, optimize=True) if aha is not None else None

    return np.concatenate(grads, axis=2)


def jet_param_jacobian(params: SubNetParams, x, selector) -> np.ndarray:
    """Rows of d(jet entry)/d(theta) for one input point.

    selector is a list of entries: ("value", k), ("grad", k, i) or
    ("hess", k, i, j). Rows come back in selector order, columns in
    flattened-parameter order.
    """
    x = np.asarray(x, dtype=float)
    need_hess = any(e[0] == "hess" for e in selector)
    need_grad = need_hess or any(e[0] == "grad" for e in selector)
    order = 2 if need_hess else (1 if need_grad else 0)
    tape = forward_tape(params, x[None, :], order=order)
    nq = len(selector)
    n0, n_out = params.n_in, params.n_out
    bv = np.zeros((nq, 1, n_out))
    bg = np.zeros((nq, 1, n_out, n0)) if order >= 1 else None
    bh = np.zeros((nq, 1, n_out, n0, n0)) if order >= 2 else None
    for row, entry in enumerate(selector):
        kind = entry[0]
        if kind == "value":
            bv[row, 0, entry[1]] = 1.0
        elif kind == "grad":
            bg[row, 0, entry[1], entry[2]] = 1.0
        elif kind == "hess":
            bh[row, 0, entry[1], entry[2], entry[3]] = 1.0
        else:
            raise ValueError(f"unknown jet entry {entry!r}")
    rows = vjp_params(tape, bar_value=bv, bar_grad=bg, bar_hess=bh)
    return rows[:, 0, :]


@dataclass
class NetPair:
    """The pressure/velocity sub-network pair sharing one flat parameter vector."""

    pressure: SubNetParams
    velocity: SubNetParams

    @property
    def n_params(self):
        return self.pressure.size + self.velocity.size

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.pressure.flatten(), self.velocity.flatten()])

    def copy_with(self, theta: np.ndarray) -> "NetPair":
        np_ = self.pressure.size
        return NetPair(pressure=unflatten(self.pressure.layer_sizes, theta[:np_]),
                       velocity=unflatten(self.velocity.layer_sizes, theta[np_:]))


def architecture_sizes(dim: int, np_width: int, nu_width: int, layers: int = 1):
    """Layer-size lists for the pressure (out=1) and velocity (out=d) nets."""
    if np_width < 1 or nu_width < 1 or layers < 1:
        raise ValueError("widths and depth must be >= 1")
    p = [dim + 1] + [np_width] * layers + [1]
    u = [dim + 1] + [nu_width] * layers + [dim]
    return p, u


def init_net_pair(dim, np_width, nu_width, layers, rng: np.random.Generator) -> NetPair:
    p_sizes, u_sizes = architecture_sizes(dim, np_width, nu_width, layers)
    return NetPair(pressure=init_params(p_sizes, rng), velocity=init_params(u_sizes, rng))


def save_params(path, net: SubNetParams) -> None:
    """JSON with layer sizes, row-major weights and biases."""
    doc = {
        "layer_sizes": net.layer_sizes,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_params(path) -> SubNetParams:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    sizes = [int(s) for s in doc["layer_sizes"]]
    weights, biases = [], []
    shapes = list(zip(sizes[1:], sizes[:-1]))
    if len(doc["weights"]) != len(shapes) or len(doc["biases"]) != len(shapes) - 1:
        raise ArchitectureMismatchError("layer count mismatch in parameter file")
    for (rows, cols), flat in zip(shapes, doc["weights"]):
        arr = np.asarray(flat, dtype=float)
        if arr.size != rows * cols:
            raise ArchitectureMismatchError("weight shape mismatch in parameter file")
        weights.append(arr.reshape(rows, cols))
    for n, flat in zip(sizes[1:-1], doc["biases"]):
        arr = np.asarray(flat, dtype=float)
        if arr.size != n:
            raise ArchitectureMismatchError("bias shape mismatch in parameter file")
        biases.append(arr)
    return SubNetParams(layer_sizes=sizes, weights=weights, biases=biases)


def save_net_pair(path, nets: NetPair) -> None:
    doc = {
        "pressure": {
            "layer_sizes": nets.pressure.layer_sizes,
            "weights": [w.ravel().tolist() for w in nets.pressure.weights],
            "biases": [b.tolist() for b in nets.pressure.biases],
        },
        "velocity": {
            "layer_sizes": nets.velocity.layer_sizes,
            "weights": [w.ravel().tolist() for w in nets.velocity.weights],
            "biases": [b.tolist() for b in nets.velocity.biases],
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f)


def load_net_pair(path) -> NetPair:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)

    def build(sub):
        sizes = [int(s) for s in sub["layer_sizes"]]
        shapes = list(zip(sizes[1:], sizes[:-1]))
        if len(sub["weights"]) != len(shapes) or len(sub["biases"]) != len(shapes) - 1:
            raise ArchitectureMismatchError("layer count mismatch in parameter file")
        ws, bs = [], []
        for (rows, cols), flat in zip(shapes, sub["weights"]):
            arr = np.asarray(flat, dtype=float)
            if arr.size != rows * cols:
                raise ArchitectureMismatchError("weight shape mismatch in parameter file")
            ws.append(arr.reshape(rows, cols))
        for n, flat in zip(sizes[1:-1], sub["biases"]):
            arr = np.asarray(flat, dtype=float)
            if arr.size != n:
                raise ArchitectureMismatchError("bias shape mismatch in parameter file")
            bs.append(arr)
        return SubNetParams(layer_sizes=sizes, weights=ws, biases=bs)

    return NetPair(pressure=build(doc["pressure"]), velocity=build(doc["velocity"]))
