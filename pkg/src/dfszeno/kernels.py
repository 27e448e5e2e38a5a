"""Row sums of the double-time quadrature.

Two algorithms share the ``_pykernel`` contract:

``square_rows``
    direct summation over panel pairs, O(M^2). The compiled extension is used
    when it was built, otherwise the NumPy implementation; set
    ``DFSZENO_BACKEND=python`` to force the fallback.
``spectral_rows``
    the same sums as one causal convolution over panels, evaluated with FFTs
    in O(M log M).
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = {"python": _pykernel.square_rows}
if _ckernel is not None:
    BACKENDS["cython"] = _ckernel.square_rows

_requested = os.environ.get("DFSZENO_BACKEND", "").lower()
if _requested and _requested not in BACKENDS:
    raise ImportError(f"DFSZENO_BACKEND={_requested!r} is not available; have {sorted(BACKENDS)}")
BACKEND = _requested or ("cython" if "cython" in BACKENDS else "python")


def square_rows(v, w, btab, threads: int = 1, backend: str | None = None):
    return BACKENDS[backend or BACKEND](v, w, btab, threads)


def spectral_rows(v, w, btab, threads: int = 1, backend: str | None = None):
    """FFT evaluation of ``square_rows``.

    The node vectors span only ``d`` components, so every row is
    ``2 Re <u_n|C_n> - <u_n|B_0|u_n>`` with ``C_n = sum_{D<=n} B_D u_{n-D}``,
    a causal convolution over the panel index. Rounding error is relative to
    the largest terms rather than to each row. ``threads`` and ``backend`` are
    accepted for signature compatibility and ignored.
    """
    u = np.asarray(v) * np.asarray(w, dtype=float)[None, :, None]
    b = np.asarray(btab, dtype=complex)
    m = u.shape[0]
    if m == 0:
        return np.zeros(0)
    size = 1 << int(2 * m - 1).bit_length()
    fu = np.fft.fft(u, size, axis=0)
    fb = np.fft.fft(b, size, axis=0)
    conv = np.fft.ifft(np.einsum("nab,nbk->nak", fb, fu), axis=0)[:m]
    full = np.einsum("nak,nak->n", u.conj(), conv)
    diag = np.einsum("nak,ab,nbk->n", u.conj(), b[0], u)
    return (2.0 * full - diag).real


ALGORITHMS = {"spectral": spectral_rows, "direct": square_rows}
