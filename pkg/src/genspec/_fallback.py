"""Pure-Python kernels with the same contract as the compiled ``_kernels``.

The floating-point operation order mirrors the Cython source so that both
backends agree bitwise on the same inputs.
"""
import math

import numpy as np


def _dpotential(x, dpoly, gauss):
    acc = 0.0
    for c in reversed(dpoly):
        acc = acc * x + c
    for amp, rate, center in gauss:
        u = x - center
        acc = acc + amp * (-2.0 * rate * u) * math.exp(-rate * u * u)
    return acc


def em_langevin_1d(state, noise, h, inv_gamma, noise_scale, dpoly, g_amp, g_rate,
                   g_center, stride, out):
    x = float(state[0])
    dpoly = [float(c) for c in dpoly]
    gauss = list(zip(g_amp.tolist(), g_rate.tolist(), g_center.tolist()))
    j = 0
    for k, xi in enumerate(noise.tolist()):
        drift = -inv_gamma * _dpotential(x, dpoly, gauss)
        x = x + drift * h + noise_scale * xi
        if not math.isfinite(x):
            state[0] = x
            return k
        if (k + 1) % stride == 0:
            out[j] = x
            j += 1
    state[0] = x
    return -1


def em_linear(state, noise, h, drift, scaled_diffusion, stride, out):
    d = state.shape[0]
    A = drift.tolist()
    S = scaled_diffusion.tolist()
    x = state.tolist()
    row = 0
    for k, xi in enumerate(noise.tolist()):
        nxt = []
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc = acc + A[i][j] * x[j]
            v = x[i] + acc * h
            for j, e in enumerate(xi):
                v = v + S[i][j] * e
            nxt.append(v)
        x = nxt
        if not all(math.isfinite(v) for v in x):
            state[:] = x
            return k
        if (k + 1) % stride == 0:
            out[row, :] = x
            row += 1
    state[:] = x
    return -1


def banded_matmul(offsets, values, X):
    n = X.shape[0]
    out = np.zeros_like(X, dtype=np.float64)
    for o, v in zip(offsets.tolist(), values.tolist()):
        lo = max(0, -o)
        hi = min(n, n - o)
        if hi > lo:
            out[lo:hi] += v * X[lo + o:hi + o]
    return out
