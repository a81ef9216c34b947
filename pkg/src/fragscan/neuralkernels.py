"""Forward-only CARAFE, GhostConv and ECA on ``(C, H, W)`` float arrays.

Convolutions are cross-correlations with zero padding, as in the usual deep
learning frameworks.  Weights are bias-free unless a ``bias`` array is given.
"""
from dataclasses import dataclass

import numpy as np

from . import accel
from .errors import InvalidArgument


@dataclass(frozen=True)
class CarafeConfig:
    sigma: int = 2
    k_up: int = 5
    k_encoder: int = 3
    c_m: int = 64
    normalizer: str = "sigmoid"

    def __post_init__(self):
        if self.sigma < 1:
            raise InvalidArgument("sigma must be >= 1")
        if self.k_up < 1 or self.k_up % 2 == 0:
            raise InvalidArgument("k_up must be a positive odd integer")
        if self.k_encoder < 1 or self.k_encoder % 2 == 0:
            raise InvalidArgument("k_encoder must be a positive odd integer")
        if self.c_m < 1:
            raise InvalidArgument("c_m must be >= 1")
        if self.normalizer not in ("sigmoid", "softmax"):
            raise InvalidArgument("normalizer must be 'sigmoid' or 'softmax'")

    @property
    def r(self):
        return self.k_up // 2


def _tensor(x, name="x"):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 3:
        raise InvalidArgument(f"{name} must be (C, H, W), got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidArgument(f"{name} holds non-finite values")
    return a


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def relu(z):
    return np.maximum(z, 0.0)


# -- convolution primitive -------------------------------------------------------

@accel.njit
def _conv2d_numba(x, w, groups):
    c_in, h, wd = x.shape
    c_out, cpg, kh, kw = w.shape
    ph = kh // 2
    pw = kw // 2
    opg = c_out // groups
    out = np.zeros((c_out, h, wd))
    for o in range(c_out):
        g = o // opg
        for i in range(h):
            for j in range(wd):
                acc = 0.0
                for ci in range(cpg):
                    c = g * cpg + ci
                    for u in range(kh):
                        ii = i + u - ph
                        if ii < 0 or ii >= h:
                            continue
                        for v in range(kw):
                            jj = j + v - pw
                            if 0 <= jj < wd:
                                acc += w[o, ci, u, v] * x[c, ii, jj]
                out[o, i, j] = acc
    return out


def _conv2d_numpy(x, w, groups):
    c_in, h, wd = x.shape
    c_out, cpg, kh, kw = w.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    # (C, H, W, kh, kw) view of every neighbourhood
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(1, 2))
    win = win.reshape(groups, cpg, h, wd, kh, kw)
    wg = w.reshape(groups, c_out // groups, cpg, kh, kw)
    out = np.einsum("gchwuv,gocuv->gohw", win, wg, optimize=True)
    return out.reshape(c_out, h, wd)


def conv2d(x, weight, bias=None, groups=1):
    """Stride-1 'same' convolution; ``weight`` is ``(C_out, C_in/groups, k, k)`` with odd k."""
    x = _tensor(x)
    w = np.asarray(weight, dtype=np.float64)
    if w.ndim != 4 or w.shape[2] % 2 == 0 or w.shape[3] % 2 == 0:
        raise InvalidArgument(f"weight must be (C_out, C_in/groups, k, k) with odd k, got {w.shape}")
    if x.shape[0] % groups or w.shape[0] % groups or w.shape[1] * groups != x.shape[0]:
        raise InvalidArgument(f"weight {w.shape} incompatible with {x.shape[0]} input channels, groups={groups}")
    if accel.enabled():
        out = _conv2d_numba(np.ascontiguousarray(x), np.ascontiguousarray(w), groups)
    else:
        out = _conv2d_numpy(x, w, groups)
    if bias is not None:
        b = np.asarray(bias, dtype=np.float64)
        if b.shape != (w.shape[0],):
            raise InvalidArgument(f"bias must have shape ({w.shape[0]},)")
        out = out + b[:, None, None]
    return out


def _as_conv_weight(w, c_out, c_in, k, name):
    a = np.asarray(w, dtype=np.float64)
    if k == 1 and a.shape == (c_out, c_in):
        a = a[:, :, None, None]
    if a.shape != (c_out, c_in, k, k):
        raise InvalidArgument(f"{name} must have shape {(c_out, c_in, k, k)}, got {a.shape}")
    return a


# -- CARAFE -------------------------------------------------------------------

def carafe_predict_kernels(x, compressor_weights, encoder_weights, cfg=CarafeConfig()):
    """Predict one ``k_up x k_up`` reassembly kernel per output position.

    Returns an array of shape ``(sigma*H, sigma*W, k_up**2)``.  Encoder channel
    ``k * sigma**2 + dy * sigma + dx`` feeds kernel tap ``k`` of output pixel
    ``(sigma*i + dy, sigma*j + dx)`` (pixel-shuffle order); tap ``k`` is the
    offset ``(k // k_up - r, k % k_up - r)``.
    """
    x = _tensor(x)
    c, h, w = x.shape
    s, k2 = cfg.sigma, cfg.k_up ** 2
    wc = _as_conv_weight(compressor_weights, cfg.c_m, c, 1, "compressor_weights")
    we = _as_conv_weight(encoder_weights, s * s * k2, cfg.c_m, cfg.k_encoder, "encoder_weights")
    enc = conv2d(conv2d(x, wc), we)
    kf = enc.reshape(k2, s, s, h, w).transpose(3, 1, 4, 2, 0).reshape(s * h, s * w, k2)
    if cfg.normalizer == "sigmoid":
        return sigmoid(kf)
    kf = kf - kf.max(axis=2, keepdims=True)
    e = np.exp(kf)
    return e / e.sum(axis=2, keepdims=True)


@accel.njit
def _reassemble_numba(x, kf, sigma, k_up):
    c, h, w = x.shape
    oh, ow = kf.shape[0], kf.shape[1]
    r = k_up // 2
    out = np.zeros((c, oh, ow))
    for io in range(oh):
        i = io // sigma
        for jo in range(ow):
            j = jo // sigma
            for n in range(-r, r + 1):
                ii = i + n
                if ii < 0 or ii >= h:
                    continue
                for m in range(-r, r + 1):
                    jj = j + m
                    if jj < 0 or jj >= w:
                        continue
                    wt = kf[io, jo, (n + r) * k_up + (m + r)]
                    for ch in range(c):
                        out[ch, io, jo] += wt * x[ch, ii, jj]
    return out


def _reassemble_numpy(x, kf, sigma, k_up):
    c, h, w = x.shape
    r = k_up // 2
    xp = np.pad(x, ((0, 0), (r, r), (r, r)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k_up, k_up), axis=(1, 2))
    win = win.reshape(c, h, w, k_up * k_up)
    src = np.repeat(np.repeat(win, sigma, axis=1), sigma, axis=2)  # (C, sH, sW, k2)
    return np.einsum("chwk,hwk->chw", src, kf)


def carafe_reassemble(x, kf, cfg=CarafeConfig()):
    """Content-aware reassembly: each output pixel is its kernel applied to the
    ``k_up x k_up`` source neighbourhood of ``(i'//sigma, j'//sigma)``, zero
    outside the source and shared across channels."""
    x = _tensor(x)
    kf = np.asarray(kf, dtype=np.float64)
    c, h, w = x.shape
    s = cfg.sigma
    if kf.shape != (s * h, s * w, cfg.k_up ** 2):
        raise InvalidArgument(f"kernel field shape {kf.shape} != {(s * h, s * w, cfg.k_up ** 2)}")
    if accel.enabled():
        return _reassemble_numba(np.ascontiguousarray(x), np.ascontiguousarray(kf), s, cfg.k_up)
    return _reassemble_numpy(x, kf, s, cfg.k_up)


def carafe(x, compressor_weights, encoder_weights, cfg=CarafeConfig()):
    return carafe_reassemble(x, carafe_predict_kernels(x, compressor_weights, encoder_weights, cfg), cfg)


# -- GhostConv / ECA ------------------------------------------------------------

def ghost_conv(x, primary_weights, cheap_weights, activation=True, primary_bias=None, cheap_bias=None):
    """1x1 primary convolution to ``C_h`` channels, a depthwise 3x3 cheap
    transform of that result, and the two concatenated (``2*C_h`` channels)."""
    x = _tensor(x)
    wp = np.asarray(primary_weights, dtype=np.float64)
    if wp.ndim == 2:
        wp = wp[:, :, None, None]
    if wp.ndim != 4 or wp.shape[1:] != (x.shape[0], 1, 1):
        raise InvalidArgument(f"primary_weights must be (C_h, {x.shape[0]}[, 1, 1]), got {np.shape(primary_weights)}")
    c_h = wp.shape[0]
    wc = np.asarray(cheap_weights, dtype=np.float64)
    if wc.shape == (c_h, 3, 3):
        wc = wc[:, None]
    if wc.shape != (c_h, 1, 3, 3):
        raise InvalidArgument(f"cheap_weights must be ({c_h}, 3, 3), got {np.shape(cheap_weights)}")
    act = relu if activation else (lambda z: z)
    primary = act(conv2d(x, wp, primary_bias))
    cheap = act(conv2d(primary, wc, cheap_bias, groups=c_h))
    return np.concatenate([primary, cheap], axis=0)


def _conv1d_channels(v, kernel):
    k = kernel.size
    p = k // 2
    vp = np.pad(v, p)
    return np.array([vp[i:i + k] @ kernel for i in range(v.size)])


def eca(x, conv1d_weights):
    """Efficient channel attention: scale each channel by
    sigmoid(conv1d(global average pool)) with a zero-padded, bias-free kernel."""
    x = _tensor(x)
    kern = np.asarray(conv1d_weights, dtype=np.float64).ravel()
    if kern.size % 2 == 0:
        raise InvalidArgument("conv1d kernel length must be odd")
    s = sigmoid(_conv1d_channels(x.mean(axis=(1, 2)), kern))
    return x * s[:, None, None]


def ghost_eca(x, primary_weights, cheap_weights, conv1d_weights, activation=True):
    return eca(ghost_conv(x, primary_weights, cheap_weights, activation), conv1d_weights)


# -- parameter counting ------------------------------------------------------------

def count_params(op, c_in=None, c_out=None, *, cfg=CarafeConfig(), eca_k=3, bias=False):
    """Weight count of one operator (bias-free unless ``bias``).

    ``op`` is one of ``"conv3x3"``, ``"ghost"``, ``"eca"``, ``"carafe"``; carafe
    uses ``c_in`` as its channel count and ``cfg`` for the rest.
    """
    if op == "eca":
        return eca_k
    if c_in is None or c_in < 1:
        raise InvalidArgument("c_in must be >= 1")
    if op == "conv3x3":
        if c_out is None or c_out < 1:
            raise InvalidArgument("c_out must be >= 1")
        return 9 * c_in * c_out + (c_out if bias else 0)
    if op == "ghost":
        if c_out is None or c_out < 2 or c_out % 2:
            raise InvalidArgument(f"ghost conv needs an even c_out >= 2, got {c_out}")
        c_h = c_out // 2
        return c_in * c_h + 9 * c_h + (2 * c_h if bias else 0)
    if op == "carafe":
        enc_out = cfg.sigma ** 2 * cfg.k_up ** 2
        n = c_in * cfg.c_m + cfg.k_encoder ** 2 * cfg.c_m * enc_out
        return n + ((cfg.c_m + enc_out) if bias else 0)
    raise InvalidArgument(f"unknown operator {op!r}")


# -- weight files ----------------------------------------------------------------

def save_weights(path, array):
    """Text weight file: a ``# shape:`` header line, then values one per line."""
    a = np.asarray(array, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write("# shape: " + " ".join(str(n) for n in a.shape) + "\n")
        for v in a.ravel():
            fh.write(repr(float(v)) + "\n")


def load_weights(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# shape:"):
            raise InvalidArgument(f"{path}: missing '# shape:' header")
        shape = tuple(int(t) for t in header.split(":", 1)[1].split())
        values = np.array(fh.read().split(), dtype=np.float64)
    if values.size != int(np.prod(shape)):
        raise InvalidArgument(f"{path}: header shape {shape} needs {int(np.prod(shape))} values, found {values.size}")
    return values.reshape(shape)
