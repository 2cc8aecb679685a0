"""Numba kernels for long gap-bit streams."""
import numpy as np
from numba import njit


@njit(cache=True)
def backward_F(bits, lam, seed_value):
    """``s_t = F(b_t b_{t+1} ...)`` for every t by the backward recursion.

    The recursion contracts (each step multiplies the error by λ or 1-λ), so
    the unknown value past the end of the stream only matters for the last
    few hundred positions.
    """
    m = bits.shape[0]
    out = np.empty(m, dtype=np.float64)
    f = seed_value
    for t in range(m - 1, -1, -1):
        if bits[t]:
            f = lam + (1.0 - lam) * f
        else:
            f = lam * f
        out[t] = f
    return out


@njit(cache=True)
def lex_flags(bits, length, thr_bits, thr_tail):
    """Symbolic ``b_t b_{t+1} ... < threshold`` for t < length.

    ``thr_tail`` is 0, 1, or -1 for unknown.  Returns the flags and the first
    position whose comparison needed digits that are not available (-1 if
    none).  Ties count as non-exceedances.
    """
    m = bits.shape[0]
    d = thr_bits.shape[0]
    flags = np.zeros(length, dtype=np.bool_)
    first_bad = -1
    for t in range(length):
        i = 0
        decided = False
        while True:
            if i < d:
                u = thr_bits[i]
            elif thr_tail >= 0:
                u = thr_tail
            else:
                break
            if t + i >= m:
                break
            b = bits[t + i]
            if b != u:
                flags[t] = b < u
                decided = True
                break
            if i >= d and thr_tail == 0:
                # both continue with zeros: a tie, or b later exceeds the threshold
                decided = True
                break
            i += 1
        if not decided and first_bad < 0:
            first_bad = t
    return flags, first_bad


@njit(cache=True)
def run_starts(flags, q):
    """Indices that start a run under runs declustering with run length q."""
    m = flags.shape[0]
    out = np.empty(m, dtype=np.int64)
    k = 0
    last = -q - 1
    for t in range(m):
        if flags[t]:
            if t - last - 1 >= q or k == 0:
                out[k] = t
                k += 1
            last = t
    return out[:k]


@njit(cache=True)
def truncated_lag_products(x, cut, mean, lag_max):
    """``mean_t Y_t Y_{t+j}`` for j = 0..lag_max-1 with ``Y = x 1{x <= cut} - mean``."""
    m = x.shape[0]
    y = np.empty(m, dtype=np.float64)
    for t in range(m):
        y[t] = (x[t] if x[t] <= cut else 0.0) - mean
    out = np.zeros(lag_max, dtype=np.float64)
    for j in range(lag_max):
        acc = 0.0
        for t in range(m - j):
            acc += y[t] * y[t + j]
        out[j] = acc / (m - j)
    return out
