"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same
signature. The two must agree bit for bit; ``tests/test_kernels.py``
holds them to it.
"""

import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

_MASK32 = np.uint64(0xFFFFFFFF)
_TWO_M26 = 67108864.0
_TWO_M53 = 1.0 / 9007199254740992.0

# provenance codes, mirrored in the compiled kernel
FULL = 0
BASE_UPSAMPLED = 1
PREV_COPY = 2
FILLER = 3


def philox4x32(counters, key):
    """Philox4x32-10 block function.

    counters: (n, 4) uint32, key: (2,) uint32 -> (n, 4) uint32.
    """
    counters = np.asarray(counters, dtype=np.uint32)
    c = [counters[:, i].astype(np.uint64) for i in range(4)]
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    m0 = np.uint64(PHILOX_M0)
    m1 = np.uint64(PHILOX_M1)
    shift = np.uint64(32)
    for _ in range(PHILOX_ROUNDS):
        p0 = c[0] * m0
        p1 = c[2] * m1
        c = [
            (p1 >> shift) ^ c[1] ^ k0,
            p1 & _MASK32,
            (p0 >> shift) ^ c[3] ^ k1,
            p0 & _MASK32,
        ]
        k0 = np.uint64((int(k0) + PHILOX_W0) & 0xFFFFFFFF)
        k1 = np.uint64((int(k1) + PHILOX_W1) & 0xFFFFFFFF)
    return np.stack(c, axis=1).astype(np.uint32)


def uniform_grid(seed, trials, n, stream):
    """Uniform doubles in [0, 1) for every (trial, index) pair.

    The counter for element (t, i) is (i_lo, i_hi, trials[t], stream) and the
    key is the 64-bit seed, so each value depends only on its own
    coordinates.
    """
    trials = np.asarray(trials, dtype=np.int64)
    idx = np.arange(n, dtype=np.uint64)
    out = np.empty((trials.size, n), dtype=np.float64)
    key = (seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF)
    ctr = np.empty((n, 4), dtype=np.uint32)
    ctr[:, 0] = (idx & _MASK32).astype(np.uint32)
    ctr[:, 1] = (idx >> np.uint64(32)).astype(np.uint32)
    ctr[:, 3] = stream & 0xFFFFFFFF
    for row, t in enumerate(trials):
        ctr[:, 2] = int(t) & 0xFFFFFFFF
        x = philox4x32(ctr, key)
        hi = (x[:, 0] >> 5).astype(np.float64)
        lo = (x[:, 1] >> 6).astype(np.float64)
        out[row] = (hi * _TWO_M26 + lo) * _TWO_M53
    return out


def ssim_map(a, b, win, c1, c2):
    """Per-window SSIM of two uint8 planes, uniform ``win`` x ``win`` windows,
    stride 1. Window sums are exact integers."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = float(win * win)

    def box(x):
        s = np.zeros((x.shape[0] + 1, x.shape[1] + 1), dtype=np.int64)
        np.cumsum(np.cumsum(x, axis=0), axis=1, out=s[1:, 1:])
        return s[win:, win:] - s[:-win, win:] - s[win:, :-win] + s[:-win, :-win]

    sa = box(a)
    sb = box(b)
    saa = box(a * a)
    sbb = box(b * b)
    sab = box(a * b)
    nn = n * n
    mu_a = sa / n
    mu_b = sb / n
    var_a = (win * win * saa - sa * sa) / nn
    var_b = (win * win * sbb - sb * sb) / nn
    cov = (win * win * sab - sa * sb) / nn
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def conceal_sources(base_lost, enh_lost, ratio):
    """Map per-trial frame losses to the source of every output frame.

    base_lost: (T, nb), enh_lost: (T, ne). Returns (src, prov), both (T, ne).
    Source codes: k < ne is enhancement frame k, ne + j is upsampled base
    frame j, ne + nb is the gray filler.
    """
    base_lost = np.asarray(base_lost, dtype=bool)
    enh_lost = np.asarray(enh_lost, dtype=bool)
    n_trials, nb = base_lost.shape
    ne = enh_lost.shape[1]
    src = np.empty((n_trials, ne), dtype=np.int32)
    prov = np.empty((n_trials, ne), dtype=np.uint8)
    filler = ne + nb
    for k in range(ne):
        j = k // ratio
        s = np.where(enh_lost[:, k], ne + j, k)
        p = np.where(enh_lost[:, k], BASE_UPSAMPLED, FULL)
        if k == 0:
            s = np.where(base_lost[:, j], filler, s)
            p = np.where(base_lost[:, j], FILLER, p)
        else:
            s = np.where(base_lost[:, j], src[:, k - 1], s)
            p = np.where(base_lost[:, j], PREV_COPY, p)
        src[:, k] = s
        prov[:, k] = p
    return src, prov
