"""NumPy implementation of the double-time quadrature row sums.

Contract shared with the compiled kernel:

``square_rows(v, w, btab, threads)`` takes node vectors ``v`` of shape
(M, p, d) (M panels, p nodes per panel, d components), panel weights ``w``
(p,) and the stationary factor table ``btab`` (M, p, p) with
``btab[D, a, b] = B(t[I, a] - t[J, b])`` for ``I - J = D``. It returns, for every
panel ``n``, the real contribution that panel row adds to the square sum::

    R[n] = sum_ab w_a w_b B[0,a,b] <v[n,a]|v[n,b]>
           + 2 Re sum_{J<n} sum_ab w_a w_b B[n-J,a,b] <v[n,a]|v[J,b]>

Rows are independent, so threading never changes the result.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np


def _row(u, btab_t, n):
    p, d = u.shape[1], u.shape[2]
    g = (u[n].conj() @ u[: n + 1].reshape(-1, d).T).reshape(p, n + 1, p)
    per_panel = np.einsum("ajb,ajb->j", btab_t[:, n::-1, :], g)
    return float(per_panel[n].real + 2.0 * per_panel[:n].sum().real)


def square_rows(v, w, btab, threads: int = 1):
    u = np.asarray(v) * np.asarray(w, dtype=float)[None, :, None]
    btab_t = np.ascontiguousarray(np.asarray(btab).transpose(1, 0, 2))
    m = u.shape[0]
    out = np.empty(m)
    if threads <= 1:
        for n in range(m):
            out[n] = _row(u, btab_t, n)
        return out

    def work(rows):
        for n in rows:
            out[n] = _row(u, btab_t, n)

    chunks = [range(i, m, threads) for i in range(threads)]
    with ThreadPoolExecutor(threads) as pool:
        list(pool.map(work, chunks))
    return out
