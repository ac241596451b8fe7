"""Pure-numpy kernels; the fallback when the compiled extension is unavailable.

All index arrays are ``np.intp``, amplitudes ``complex128`` and outputs are
written in place so both backends share one calling convention.
"""

import numpy as np


def apply_coo(cols, rows, data, domain, psi, out, tol):
    """Sparse matvec ``out = G @ psi`` for a gate stored as COO triplets.

    Returns the first basis index carrying amplitude above ``tol`` where
    ``domain`` is nonzero (the gate is undefined there), or -1 on success.
    ``out`` is left untouched on failure.
    """
    bad = np.flatnonzero((domain != 0) & (np.abs(psi) > tol))
    if bad.size:
        return int(bad[0])
    contrib = data * psi[cols]
    n = psi.shape[0]
    out[:] = np.bincount(rows, weights=contrib.real, minlength=n)
    out += 1j * np.bincount(rows, weights=contrib.imag, minlength=n)
    return -1


def norm2(psi):
    return float(np.vdot(psi, psi).real)


def class_weights(psi, classes, out):
    out[:] = np.bincount(classes, weights=np.abs(psi) ** 2, minlength=out.shape[0])


def project(psi, classes, keep, weight, out):
    out[:] = np.where(classes == keep, psi / np.sqrt(weight), 0.0)
