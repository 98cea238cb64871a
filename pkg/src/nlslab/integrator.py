"""Batched adaptive explicit Runge-Kutta integration (Dormand-Prince 8(5,3)).

Every batch member carries its own step size; steps are clipped so that each
member lands exactly on the shared output times.  The Butcher tableau is the
one shipped with ``scipy.integrate.DOP853``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import DOP853

_A = DOP853.A[:12, :12]
_B = DOP853.B
_C = DOP853.C[:12]
_E3 = DOP853.E3
_E5 = DOP853.E5
_EXPONENT = -1.0 / (DOP853.error_estimator_order + 1)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

# f(t, y, idx) -> dy/dt; y has shape (b, n) and idx selects the batch members
Rhs = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class BatchResult:
    t: np.ndarray
    y: np.ndarray  # (batch, len(t), n)
    steps: np.ndarray
    rejected: np.ndarray
    failed: np.ndarray
    t_fail: np.ndarray
    n_out: np.ndarray  # samples written per member


def _stages(f: Rhs, t, y, h, k1, idx):
    """The twelve stages plus the FSAL evaluation at the new point."""
    K = np.empty((13,) + y.shape, dtype=y.dtype)
    K[0] = k1
    hb = h[:, None]
    flat = K.reshape(13, -1)
    for s in range(1, 12):
        dy = (_A[s, :s] @ flat[:s]).reshape(y.shape)
        K[s] = f(t + _C[s] * h, y + hb * dy, idx)
    y_new = y + hb * (_B @ flat[:12]).reshape(y.shape)
    K[12] = f(t + h, y_new, idx)
    return K, y_new


def _error_norm(K, h, scale):
    flat = K.reshape(13, -1)
    err5 = (_E5 @ flat).reshape(K.shape[1:]) / scale
    err3 = (_E3 @ flat).reshape(K.shape[1:]) / scale
    e5 = np.sum(np.abs(err5) ** 2, axis=1)
    e3 = np.sum(np.abs(err3) ** 2, axis=1)
    denom = e5 + 0.01 * e3
    n = K.shape[2]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.abs(h) * e5 / np.sqrt(denom * n)
    out[denom == 0] = 0.0
    return out


def single_step(f: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """One fixed DOP853 step of size h (may be negative) for every member."""
    y = np.atleast_2d(y)
    idx = np.arange(len(y))
    hh = np.full(len(y), float(h))
    k1 = f(np.full(len(y), float(t)), y, idx)
    _, y_new = _stages(f, np.full(len(y), float(t)), y, hh, k1, idx)
    return y_new


def _initial_step(f, t, y, f0, rtol, atol, idx):
    scale = atol + np.abs(y) * rtol
    n = y.shape[1]
    d0 = np.sqrt(np.sum(np.abs(y / scale) ** 2, axis=1) / n)
    d1 = np.sqrt(np.sum(np.abs(f0 / scale) ** 2, axis=1) / n)
    with np.errstate(over="ignore"):
        h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    y1 = y + h0[:, None] * f0
    f1 = f(t + h0, y1, idx)
    d2 = np.sqrt(np.sum(np.abs((f1 - f0) / scale) ** 2, axis=1) / n) / h0
    dm = np.maximum(d1, d2)
    h1 = np.where(dm <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.maximum(dm, 1e-300)) ** (1.0 / 8))
    return np.minimum(100 * h0, h1)


def solve_batch(f: Rhs, y0: np.ndarray, t_out: np.ndarray, rtol: float, atol: float | None = None,
                max_steps: int = 10_000_000, h_max: float = np.inf) -> BatchResult:
    """Integrate every row of y0 from t_out[0] through all output times."""
    atol = rtol if atol is None else atol
    t_out = np.asarray(t_out, dtype=float)
    if np.any(np.diff(t_out) <= 0):
        raise ValueError("output times must be strictly increasing")
    y0 = np.atleast_2d(np.asarray(y0))
    dtype = np.result_type(y0.dtype, np.float64)
    B, n = y0.shape
    K_out = len(t_out)
    Y = np.full((B, K_out, n), np.nan, dtype=dtype)
    Y[:, 0] = y0
    t = np.full(B, t_out[0])
    y = y0.astype(dtype).copy()
    k_next = np.ones(B, dtype=int)
    steps = np.zeros(B, dtype=int)
    rejected = np.zeros(B, dtype=int)
    failed = np.zeros(B, dtype=bool)
    t_fail = np.full(B, np.nan)
    done = k_next >= K_out
    all_idx = np.arange(B)
    if done.all():
        return BatchResult(t_out, Y, steps, rejected, failed, t_fail, np.ones(B, dtype=int))
    k1 = f(t, y, all_idx)
    h = np.minimum(_initial_step(f, t, y, k1, rtol, atol, all_idx), h_max)
    it = 0
    while not done.all():
        it += 1
        if it > max_steps:
            act = ~done
            failed[act] = True
            t_fail[act] = t[act]
            break
        idx = np.nonzero(~done)[0]
        ti, yi, hi = t[idx], y[idx], h[idx]
        target = t_out[k_next[idx]]
        room = target - ti
        clipped = hi >= room
        h_try = np.where(clipped, room, hi)
        tiny = h_try < 10 * np.finfo(float).eps * np.maximum(np.abs(ti), 1.0)
        if np.any(tiny & ~clipped):
            bad = idx[tiny & ~clipped]
            failed[bad] = True
            t_fail[bad] = t[bad]
            done[bad] = True
            continue
        K, y_new = _stages(f, ti, yi, h_try, k1[idx], idx)
        scale = atol + rtol * np.maximum(np.abs(yi), np.abs(y_new))
        err = _error_norm(K, h_try, scale)
        finite = np.all(np.isfinite(y_new), axis=1) & np.isfinite(err)
        err = np.where(finite, err, np.inf)
        acc = err <= 1.0
        with np.errstate(divide="ignore"):
            fac = SAFETY * np.power(np.where(err == 0, 1e-300, err), _EXPONENT)
        fac = np.where(acc, np.minimum(MAX_FACTOR, fac), np.clip(fac, MIN_FACTOR, 1.0))
        fac = np.where(np.isfinite(err), fac, MIN_FACTOR)
        h_new = h_try * fac
        h_new = np.where(acc & clipped, np.maximum(h_new, hi), h_new)
        h[idx] = np.minimum(h_new, h_max)
        rejected[idx[~acc]] += 1
        a = idx[acc]
        if a.size:
            steps[a] += 1
            ai = np.nonzero(acc)[0]
            t[a] = np.where(clipped[ai], target[ai], ti[ai] + h_try[ai])
            y[a] = y_new[ai]
            k1[a] = K[12][ai]
            hit = a[clipped[ai]]
            if hit.size:
                Y[hit, k_next[hit]] = y[hit]
                k_next[hit] += 1
                done[hit] = k_next[hit] >= K_out
    return BatchResult(t_out, Y, steps, rejected, failed, t_fail, k_next)
