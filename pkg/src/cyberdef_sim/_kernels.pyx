# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels. Must stay bit-identical to ``_kernels_py``."""

from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def fnv1a64(const unsigned char[:] data):
    cdef uint64_t h = FNV_OFFSET
    cdef Py_ssize_t i, n = data.shape[0]
    with nogil:
        for i in range(n):
            h = (h ^ data[i]) * FNV_PRIME
    return h


def mix64(uint64_t z):
    return _mix(z)


def uniform(uint64_t seed, uint64_t counter):
    cdef uint64_t z = _mix(seed + (counter + 1) * GOLDEN)
    return (z >> 11) * INV53


def bernoulli_hits(uint64_t seed, uint64_t counter, probs):
    cdef list hits = []
    cdef Py_ssize_t i = 0
    cdef double p
    cdef uint64_t z
    for p in probs:
        z = _mix(seed + (counter + <uint64_t>i + 1) * GOLDEN)
        if (z >> 11) * INV53 < p:
            hits.append(i)
        i += 1
    return hits
