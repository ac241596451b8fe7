# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the 128-label state engine.

Signatures mirror :mod:`pingpong._kernels_py` exactly; see there for the
meaning of each argument.
"""

cimport cython
from libc.math cimport sqrt


def apply_coo(const Py_ssize_t[::1] cols, const Py_ssize_t[::1] rows,
              const double complex[::1] data, const signed char[::1] domain,
              const double complex[::1] psi, double complex[::1] out,
              double tol):
    cdef Py_ssize_t i, k, n = psi.shape[0], nnz = data.shape[0]
    cdef double re, im
    for i in range(n):
        if domain[i] != 0:
            re = psi[i].real
            im = psi[i].imag
            if re * re + im * im > tol * tol:
                return i
    for i in range(n):
        out[i] = 0
    for k in range(nnz):
        out[rows[k]] = out[rows[k]] + data[k] * psi[cols[k]]
    return -1


def norm2(const double complex[::1] psi):
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(psi.shape[0]):
        acc += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
    return acc


def class_weights(const double complex[::1] psi, const Py_ssize_t[::1] classes,
                  double[::1] out):
    cdef Py_ssize_t i
    for i in range(out.shape[0]):
        out[i] = 0.0
    for i in range(psi.shape[0]):
        out[classes[i]] += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag


def project(const double complex[::1] psi, const Py_ssize_t[::1] classes,
            Py_ssize_t keep, double weight, double complex[::1] out):
    cdef Py_ssize_t i
    cdef double scale = 1.0 / sqrt(weight)
    for i in range(psi.shape[0]):
        if classes[i] == keep:
            out[i] = psi[i] * scale
        else:
            out[i] = 0
