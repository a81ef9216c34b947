"""Plain nested-loop reference versions of the neural operators.

Slow on purpose and written without numpy vectorisation so they share no
code path with :mod:`fragscan.neuralkernels`.
"""
import math

import numpy as np

from . import neuralkernels as nk


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def conv2d_loop(x, w, groups=1):
    c_in, h, wd = len(x), len(x[0]), len(x[0][0])
    c_out, cpg, kh, kw = np.shape(w)
    opg = c_out // groups
    out = np.zeros((c_out, h, wd))
    for o in range(c_out):
        g = o // opg
        for i in range(h):
            for j in range(wd):
                acc = 0.0
                for ci in range(cpg):
                    for u in range(kh):
                        for v in range(kw):
                            ii, jj = i + u - kh // 2, j + v - kw // 2
                            if 0 <= ii < h and 0 <= jj < wd:
                                acc += float(w[o][ci][u][v]) * float(x[g * cpg + ci][ii][jj])
                out[o, i, j] = acc
    return out


def carafe_kernels_loop(x, wc, we, cfg):
    c, h, w = np.shape(x)
    s, k_up = cfg.sigma, cfg.k_up
    k2 = k_up * k_up
    comp = conv2d_loop(x, np.reshape(wc, (cfg.c_m, c, 1, 1)))
    enc = conv2d_loop(comp, we)
    kf = np.zeros((s * h, s * w, k2))
    for i in range(h):
        for j in range(w):
            for dy in range(s):
                for dx in range(s):
                    raw = [enc[k * s * s + dy * s + dx, i, j] for k in range(k2)]
                    if cfg.normalizer == "sigmoid":
                        vals = [_sig(z) for z in raw]
                    else:
                        top = max(raw)
                        e = [math.exp(z - top) for z in raw]
                        vals = [v / sum(e) for v in e]
                    for k in range(k2):
                        kf[s * i + dy, s * j + dx, k] = vals[k]
    return kf


def reassemble_loop(x, kf, cfg):
    c, h, w = np.shape(x)
    s, r, k_up = cfg.sigma, cfg.k_up // 2, cfg.k_up
    out = np.zeros((c, s * h, s * w))
    for ch in range(c):
        for io in range(s * h):
            for jo in range(s * w):
                i, j = io // s, jo // s
                acc = 0.0
                for n in range(-r, r + 1):
                    for m in range(-r, r + 1):
                        if 0 <= i + n < h and 0 <= j + m < w:
                            acc += kf[io][jo][(n + r) * k_up + (m + r)] * x[ch][i + n][j + m]
                out[ch, io, jo] = acc
    return out


def ghost_conv_loop(x, wp, wc, activation=True):
    c_h = len(wp)
    prim = conv2d_loop(x, np.reshape(wp, (c_h, len(x), 1, 1)))
    if activation:
        prim = np.where(prim > 0, prim, 0.0)
    cheap = conv2d_loop(prim, np.reshape(wc, (c_h, 1, 3, 3)), groups=c_h)
    if activation:
        cheap = np.where(cheap > 0, cheap, 0.0)
    return np.concatenate([prim, cheap])


def eca_loop(x, kern):
    c, h, w = np.shape(x)
    k = len(kern)
    pooled = [sum(x[ch][i][j] for i in range(h) for j in range(w)) / (h * w) for ch in range(c)]
    out = np.zeros((c, h, w))
    for ch in range(c):
        z = 0.0
        for t in range(k):
            src = ch + t - k // 2
            if 0 <= src < c:
                z += kern[t] * pooled[src]
        a = _sig(z)
        for i in range(h):
            for j in range(w):
                out[ch, i, j] = a * x[ch][i][j]
    return out


def random_case(rng, normalizer="sigmoid"):
    """A random small operator test case: tensor, config and weights."""
    c = int(rng.integers(1, 5))
    h, w = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    cfg = nk.CarafeConfig(sigma=int(rng.integers(1, 4)), k_up=int(rng.choice([1, 3, 5])),
                          k_encoder=int(rng.choice([1, 3])), c_m=int(rng.integers(1, 5)),
                          normalizer=normalizer)
    x = rng.normal(size=(c, h, w))
    wc = rng.normal(size=(cfg.c_m, c))
    we = rng.normal(size=(cfg.sigma ** 2 * cfg.k_up ** 2, cfg.c_m, cfg.k_encoder, cfg.k_encoder))
    c_h = int(rng.integers(1, 4))
    wp = rng.normal(size=(c_h, c))
    wd = rng.normal(size=(c_h, 3, 3))
    k1 = rng.normal(size=3)
    return x, cfg, wc, we, wp, wd, k1


def selftest(n_cases=100, seed=0, tol=1e-6):
    """Compare every operator with its loop oracle; returns ``[(name, max_abs_err, passed)]``."""
    rng = np.random.default_rng(seed)
    worst = {"carafe_predict_kernels": 0.0, "carafe_reassemble": 0.0, "ghost_conv": 0.0,
             "eca": 0.0, "ghost_eca": 0.0}
    for t in range(n_cases):
        x, cfg, wc, we, wp, wd, k1 = random_case(rng, "sigmoid" if t % 2 == 0 else "softmax")
        kf = nk.carafe_predict_kernels(x, wc, we, cfg)
        worst["carafe_predict_kernels"] = max(worst["carafe_predict_kernels"],
                                              float(np.abs(kf - carafe_kernels_loop(x, wc, we, cfg)).max()))
        worst["carafe_reassemble"] = max(worst["carafe_reassemble"],
                                         float(np.abs(nk.carafe_reassemble(x, kf, cfg) - reassemble_loop(x, kf, cfg)).max()))
        g = ghost_conv_loop(x, wp, wd)
        worst["ghost_conv"] = max(worst["ghost_conv"], float(np.abs(nk.ghost_conv(x, wp, wd) - g).max()))
        worst["eca"] = max(worst["eca"], float(np.abs(nk.eca(x, k1) - eca_loop(x, k1)).max()))
        worst["ghost_eca"] = max(worst["ghost_eca"],
                                 float(np.abs(nk.ghost_eca(x, wp, wd, k1) - eca_loop(g, k1)).max()))
    return [(name, err, err <= tol) for name, err in worst.items()]
