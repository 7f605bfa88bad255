# cython: language_level=3
"""Compiled versions of the kernels in ``_pykernels``.

Arithmetic is written in the same order as the numpy code so both
backends produce identical doubles.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint32_t, uint64_t, int64_t, int32_t, uint8_t

cnp.import_array()

cdef uint32_t M0 = 0xD2511F53
cdef uint32_t M1 = 0xCD9E8D57
cdef uint32_t W0 = 0x9E3779B9
cdef uint32_t W1 = 0xBB67AE85

cdef enum:
    FULL = 0
    BASE_UPSAMPLED = 1
    PREV_COPY = 2
    FILLER = 3


cdef inline void _philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t x0, x1, x2, x3
    cdef int r
    for r in range(10):
        p0 = <uint64_t>M0 * c[0]
        p1 = <uint64_t>M1 * c[2]
        x0 = <uint32_t>(p1 >> 32) ^ c[1] ^ k0
        x1 = <uint32_t>p1
        x2 = <uint32_t>(p0 >> 32) ^ c[3] ^ k1
        x3 = <uint32_t>p0
        c[0] = x0
        c[1] = x1
        c[2] = x2
        c[3] = x3
        k0 = k0 + W0
        k1 = k1 + W1


def philox4x32(counters, key):
    cdef cnp.ndarray[cnp.uint32_t, ndim=2] ctr = np.ascontiguousarray(counters, dtype=np.uint32)
    cdef cnp.ndarray[cnp.uint32_t, ndim=2] out = np.empty_like(ctr)
    cdef uint32_t k0 = <uint32_t>(int(key[0]) & 0xFFFFFFFF)
    cdef uint32_t k1 = <uint32_t>(int(key[1]) & 0xFFFFFFFF)
    cdef uint32_t c[4]
    cdef Py_ssize_t i, n = ctr.shape[0]
    with nogil:
        for i in range(n):
            c[0] = ctr[i, 0]
            c[1] = ctr[i, 1]
            c[2] = ctr[i, 2]
            c[3] = ctr[i, 3]
            _philox(c, k0, k1)
            out[i, 0] = c[0]
            out[i, 1] = c[1]
            out[i, 2] = c[2]
            out[i, 3] = c[3]
    return out


def uniform_grid(seed, trials, Py_ssize_t n, stream):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] tr = np.ascontiguousarray(trials, dtype=np.int64)
    cdef Py_ssize_t nt = tr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((nt, n), dtype=np.float64)
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t>s
    cdef uint32_t k1 = <uint32_t>(s >> 32)
    cdef uint32_t st = <uint32_t>(int(stream) & 0xFFFFFFFF)
    cdef uint32_t c[4]
    cdef Py_ssize_t t, i
    cdef double hi, lo
    with nogil:
        for t in range(nt):
            for i in range(n):
                c[0] = <uint32_t>(<uint64_t>i)
                c[1] = <uint32_t>((<uint64_t>i) >> 32)
                c[2] = <uint32_t>tr[t]
                c[3] = st
                _philox(c, k0, k1)
                hi = <double>(c[0] >> 5)
                lo = <double>(c[1] >> 6)
                out[t, i] = (hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0)
    return out


def ssim_map(a, b, int win, double c1, double c2):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] x = np.ascontiguousarray(a, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] y = np.ascontiguousarray(b, dtype=np.uint8)
    cdef Py_ssize_t h = x.shape[0], w = x.shape[1]
    cdef Py_ssize_t oh = h - win + 1, ow = w - win + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((oh, ow), dtype=np.float64)
    # integral images with a zero first row/column
    cdef cnp.ndarray[cnp.int64_t, ndim=3] s = np.zeros((5, h + 1, w + 1), dtype=np.int64)
    cdef Py_ssize_t i, j, k
    cdef int64_t xv, yv, sa, sb, saa, sbb, sab, nw
    cdef int64_t v[5]
    cdef double n, nn, mu_a, mu_b, var_a, var_b, cov, num, den
    nw = win * win
    n = <double>nw
    nn = n * n
    with nogil:
        for i in range(h):
            for j in range(w):
                xv = x[i, j]
                yv = y[i, j]
                v[0] = xv
                v[1] = yv
                v[2] = xv * xv
                v[3] = yv * yv
                v[4] = xv * yv
                for k in range(5):
                    s[k, i + 1, j + 1] = v[k] + s[k, i, j + 1] + s[k, i + 1, j] - s[k, i, j]
        for i in range(oh):
            for j in range(ow):
                for k in range(5):
                    v[k] = (s[k, i + win, j + win] - s[k, i, j + win]
                            - s[k, i + win, j] + s[k, i, j])
                sa = v[0]
                sb = v[1]
                saa = v[2]
                sbb = v[3]
                sab = v[4]
                mu_a = sa / n
                mu_b = sb / n
                var_a = <double>(nw * saa - sa * sa) / nn
                var_b = <double>(nw * sbb - sb * sb) / nn
                cov = <double>(nw * sab - sa * sb) / nn
                num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
                den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
                out[i, j] = num / den
    return out


def conceal_sources(base_lost, enh_lost, int ratio):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] bl = np.ascontiguousarray(base_lost, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] el = np.ascontiguousarray(enh_lost, dtype=np.uint8)
    cdef Py_ssize_t nt = bl.shape[0], nb = bl.shape[1], ne = el.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] src = np.empty((nt, ne), dtype=np.int32)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] prov = np.empty((nt, ne), dtype=np.uint8)
    cdef int32_t filler = <int32_t>(ne + nb)
    cdef Py_ssize_t t, k, j
    with nogil:
        for t in range(nt):
            for k in range(ne):
                j = k // ratio
                if bl[t, j]:
                    if k == 0:
                        src[t, k] = filler
                        prov[t, k] = FILLER
                    else:
                        src[t, k] = src[t, k - 1]
                        prov[t, k] = PREV_COPY
                elif el[t, k]:
                    src[t, k] = <int32_t>(ne + j)
                    prov[t, k] = BASE_UPSAMPLED
                else:
                    src[t, k] = <int32_t>k
                    prov[t, k] = FULL
    return src, prov
