# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: block hard thresholding and matched-filter grid scan."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, sqrt, INFINITY

cnp.import_array()


cdef inline bint _better(double ei, Py_ssize_t i, double ej, Py_ssize_t j) nogil:
    return ei > ej or (ei == ej and i < j)


cdef void _sift_down(double[::1] e, Py_ssize_t[::1] heap, Py_ssize_t size,
                     Py_ssize_t pos) noexcept nogil:
    # min-heap on "better": the root is the worst kept block
    cdef Py_ssize_t child, swap, tmp
    while True:
        child = 2 * pos + 1
        if child >= size:
            return
        swap = pos
        if _better(e[heap[swap]], heap[swap], e[heap[child]], heap[child]):
            swap = child
        if child + 1 < size and _better(e[heap[swap]], heap[swap],
                                        e[heap[child + 1]], heap[child + 1]):
            swap = child + 1
        if swap == pos:
            return
        tmp = heap[pos]
        heap[pos] = heap[swap]
        heap[swap] = tmp
        pos = swap


cdef void _sift_up(double[::1] e, Py_ssize_t[::1] heap, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t parent, tmp
    while pos > 0:
        parent = (pos - 1) // 2
        if _better(e[heap[parent]], heap[parent], e[heap[pos]], heap[pos]):
            tmp = heap[pos]
            heap[pos] = heap[parent]
            heap[parent] = tmp
            pos = parent
        else:
            return


def block_project(v, Py_ssize_t n_keep, Py_ssize_t b):
    cdef double[::1] x = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nb = n // b
    cdef Py_ssize_t i, j, size = 0
    cdef double acc
    if n_keep > nb:
        n_keep = nb
    energy_arr = np.empty(nb, dtype=np.float64)
    heap_arr = np.empty(max(n_keep, 1), dtype=np.intp)
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] energy = energy_arr
    cdef Py_ssize_t[::1] heap = heap_arr
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(nb):
            acc = 0.0
            for j in range(b):
                acc = acc + x[i * b + j] * x[i * b + j]
            energy[i] = acc
        if n_keep > 0:
            for i in range(nb):
                if size < n_keep:
                    heap[size] = i
                    _sift_up(energy, heap, size)
                    size += 1
                elif _better(energy[i], i, energy[heap[0]], heap[0]):
                    heap[0] = i
                    _sift_down(energy, heap, size, 0)
            for i in range(size):
                for j in range(b):
                    out[heap[i] * b + j] = x[heap[i] * b + j]
    kept = np.sort(heap_arr[:size]).astype(np.int64)
    return out_arr, kept


def tone_argmax(U, Dm, freqs, order):
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(Dm, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef cnp.int64_t[::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t q = u.shape[0], k = u.shape[1], G = ordv.shape[0]
    cdef Py_ssize_t l, c, j, cand, best_c
    cdef double om, sv, dot, nrm, score, best
    idx_arr = np.empty(q, dtype=np.int64)
    score_arr = np.empty(q, dtype=np.float64)
    cdef cnp.int64_t[::1] idx = idx_arr
    cdef double[::1] sc = score_arr
    with nogil:
        for l in range(q):
            best = -INFINITY
            best_c = 0
            for c in range(G):
                cand = ordv[c]
                om = w[cand]
                dot = 0.0
                nrm = 0.0
                for j in range(k):
                    sv = sin(om * d[l, j])
                    dot = dot + u[l, j] * sv
                    nrm = nrm + sv * sv
                if nrm > 0.0:
                    score = dot / sqrt(nrm)
                else:
                    score = 0.0
                if score > best:
                    best = score
                    best_c = cand
            idx[l] = best_c
            sc[l] = best
    return idx_arr, score_arr


def tone_scores(U, Dm, freqs):
    cdef double[:, ::1] u = np.ascontiguousarray(U, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(Dm, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef Py_ssize_t q = u.shape[0], k = u.shape[1], G = w.shape[0]
    cdef Py_ssize_t l, c, j
    cdef double sv, dot, nrm
    out_arr = np.zeros((q, G), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for l in range(q):
            for c in range(G):
                dot = 0.0
                nrm = 0.0
                for j in range(k):
                    sv = sin(w[c] * d[l, j])
                    dot = dot + u[l, j] * sv
                    nrm = nrm + sv * sv
                if nrm > 0.0:
                    out[l, c] = dot / sqrt(nrm)
    return out_arr
