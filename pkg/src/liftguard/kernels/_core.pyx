# cython: boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled rasterization kernels; bit-compatible with _reference.py."""
import numpy as np

cimport numpy as cnp
from cython.operator cimport dereference
from libcpp.unordered_map cimport unordered_map

cnp.import_array()


def zbuffer_min(cnp.int64_t[:] iu, cnp.int64_t[:] iv, double[:] z,
                Py_ssize_t width, Py_ssize_t height):
    buf_arr = np.full((height, width), np.inf)
    cdef double[:, :] buf = buf_arr
    cdef Py_ssize_t i, n = iu.shape[0]
    for i in range(n):
        if z[i] < buf[iv[i], iu[i]]:
            buf[iv[i], iu[i]] = z[i]
    return buf_arr


def voxel_centroids(cnp.int64_t[:] keys, double[:, :] points):
    # Map each key to a slot in first-occurrence order, accumulate in input
    # order so float summation matches the reference implementation.
    cdef Py_ssize_t i, j, n = keys.shape[0]
    cdef unordered_map[cnp.int64_t, cnp.int64_t] slot
    cdef Py_ssize_t nslots = 0
    slots_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[:] slots = slots_arr
    for i in range(n):
        it = slot.find(keys[i])
        if it == slot.end():
            slot[keys[i]] = nslots
            slots[i] = nslots
            nslots += 1
        else:
            slots[i] = dereference(it).second
    sums_arr = np.zeros((nslots, 3))
    counts_arr = np.zeros(nslots)
    cdef double[:, :] sums = sums_arr
    cdef double[:] counts = counts_arr
    for i in range(n):
        j = slots[i]
        sums[j, 0] += points[i, 0]
        sums[j, 1] += points[i, 1]
        sums[j, 2] += points[i, 2]
        counts[j] += 1.0
    return sums_arr / counts_arr[:, None]
