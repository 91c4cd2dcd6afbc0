"""Counter-based random streams for per-path reproducibility.

Philox4x32-10 is keyed by the 64-bit run seed and indexed by a 128-bit
counter made of (block number, path index).  Path ``i`` therefore owns
stream ``(seed, i)`` and its draws do not depend on which worker ran it or
in which order paths were processed.

The helpers operate on two small per-path arrays so they can be called
from inside numba kernels:

``state``  int64[7]: key (two 32-bit halves), path index (two halves),
           next block, buffered draws left, spare
``buf``    float64[3]: two buffered 53-bit integers, spare
"""

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)


@njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten Philox rounds on a 4x32-bit counter with a 2x32-bit key.

    All arguments are uint64 holding 32-bit values; returns four such words.
    """
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    c2 = np.uint64(c2)
    c3 = np.uint64(c3)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@njit(cache=True)
def new_stream(seed, path_index):
    seed = np.uint64(seed)
    path_index = np.uint64(path_index)
    state = np.zeros(7, dtype=np.int64)
    state[0] = np.int64(seed & _MASK32)
    state[1] = np.int64(seed >> _SHIFT32)
    state[2] = np.int64(path_index & _MASK32)
    state[3] = np.int64(path_index >> _SHIFT32)
    return state, np.zeros(3, dtype=np.float64)


@njit(cache=True, inline="always")
def _refill(state, buf):
    block = state[4]
    r0, r1, r2, r3 = philox4x32(
        np.uint64(block & 0xFFFFFFFF), np.uint64(block >> 32),
        np.uint64(state[2]), np.uint64(state[3]),
        np.uint64(state[0]), np.uint64(state[1]),
    )
    state[4] = block + 1
    # two 53-bit integers, stored exactly in float64
    buf[0] = np.float64((r0 >> np.uint64(5)) * np.uint64(67108864) + (r1 >> np.uint64(6)))
    buf[1] = np.float64((r2 >> np.uint64(5)) * np.uint64(67108864) + (r3 >> np.uint64(6)))
    state[5] = 2


@njit(cache=True, inline="always")
def next_bits53(state, buf):
    if state[5] == 0:
        _refill(state, buf)
    state[5] -= 1
    return np.int64(buf[1] if state[5] == 1 else buf[0])


@njit(cache=True, inline="always")
def next_uniform(state, buf):
    """Uniform draw on the open interval (0, 1)."""
    return (next_bits53(state, buf) + 0.5) * 1.1102230246251565e-16


def _ziggurat_tables(layers=128, r=3.442619855899, v=9.91256303526217e-3):
    x = np.zeros(layers + 1)
    f = np.exp(-0.5 * r * r)
    x[0] = v / f
    x[1] = r
    for i in range(2, layers):
        x[i] = np.sqrt(-2.0 * np.log(v / x[i - 1] + f))
        f = np.exp(-0.5 * x[i] * x[i])
    return x, x[1:] / x[:-1]


_ZIG_R = 3.442619855899
_ZIG_X, _ZIG_RATIO = _ziggurat_tables()


@njit(cache=True, inline="always")
def next_normal(state, buf):
    """Standard normal draw (128-layer ziggurat).

    The layer index and the abscissa come from disjoint bits of one 53-bit
    draw.
    """
    while True:
        bits = next_bits53(state, buf)
        i = bits & 127
        u = 2.0 * ((bits >> 7) + 0.5) * 1.4210854715202004e-14 - 1.0
        if abs(u) < _ZIG_RATIO[i]:
            return u * _ZIG_X[i]
        if i == 0:
            while True:
                t = np.log(next_uniform(state, buf)) / _ZIG_R
                y = np.log(next_uniform(state, buf))
                if -2.0 * y >= t * t:
                    break
            return t - _ZIG_R if u < 0 else _ZIG_R - t
        x = u * _ZIG_X[i]
        f0 = np.exp(-0.5 * (_ZIG_X[i] * _ZIG_X[i] - x * x))
        f1 = np.exp(-0.5 * (_ZIG_X[i + 1] * _ZIG_X[i + 1] - x * x))
        if f1 + (f0 - f1) * next_uniform(state, buf) < 1.0:
            return x


@njit(cache=True, inline="always")
def next_exponential(state, buf):
    return -np.log(next_uniform(state, buf))


def stream_sample(seed, path_index, n, kind="normal"):
    """Draw ``n`` variates from stream ``(seed, path_index)`` (testing aid)."""
    return _stream_sample(np.uint64(seed), np.uint64(path_index), n, kind == "normal")


@njit(cache=True)
def _stream_sample(seed, path_index, n, normal):
    state, buf = new_stream(seed, path_index)
    out = np.empty(n)
    for i in range(n):
        out[i] = next_normal(state, buf) if normal else next_uniform(state, buf)
    return out
