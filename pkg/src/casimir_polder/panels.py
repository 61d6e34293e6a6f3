"""Gauss-Legendre panels and product-integration weights for ``ln|s - t|``.

``log_weights(t, order)`` returns, for each target ``t`` on the reference
panel's real axis, the weights ``W_j(t) = int_{-1}^{1} ln|s - t| l_j(s) ds``
against the Lagrange basis ``l_j`` on the Gauss nodes.  The Legendre moments
of the logarithm reduce to Legendre functions of the second kind,

    int ln|t - s| P_k(s) ds = 2 (Q_{k+1}(t) - Q_{k-1}(t)) / (2k + 1),

evaluated by forward recurrence on the cut and by Miller's backward
recurrence off it.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss, legvander


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], symmetrised to be exactly mirror-symmetric."""
    s, w = leggauss(order)
    s = 0.5 * (s - s[::-1])
    w = 0.5 * (w + w[::-1])
    s.flags.writeable = False
    w.flags.writeable = False
    return s, w


@lru_cache(maxsize=None)
def _basis_to_legendre(order: int) -> np.ndarray:
    # l_j(s) = sum_k c[k, j] P_k(s), exact for the Gauss nodes
    s, w = gauss_legendre(order)
    pk = legvander(s, order - 1).T  # (k, j)
    k = np.arange(order)[:, None]
    return (2 * k + 1) / 2.0 * w[None, :] * pk


def legendre_q(t, nmax: int) -> np.ndarray:
    """``Q_n(t)`` for n = 0..nmax, shape ``(nmax + 1, len(t))``.

    On the cut ``|t| < 1`` this is the principal-value (Ferrers) function.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((nmax + 1, t.size))
    inside = np.abs(t) < 1.0
    if np.any(t == 1.0) or np.any(t == -1.0):
        raise ValueError("Q_n is singular at t = +-1")
    ti = t[inside]
    if ti.size:
        q0 = 0.5 * np.log((1 + ti) / (1 - ti))
        out[0, inside] = q0
        if nmax >= 1:
            out[1, inside] = ti * q0 - 1.0
        for n in range(1, nmax):
            out[n + 1, inside] = ((2 * n + 1) * ti * out[n, inside] - n * out[n - 1, inside]) / (n + 1)
    to = t[~inside]
    if to.size:
        a = np.abs(to)
        start = nmax + 300
        q_next = np.zeros_like(a)
        q_cur = np.full_like(a, 1e-300)
        stash = np.empty((nmax + 1, a.size))
        for n in range(start, 0, -1):
            q_prev = ((2 * n + 1) * a * q_cur - (n + 1) * q_next) / n
            q_next, q_cur = q_cur, q_prev
            if n - 1 <= nmax:
                stash[n - 1] = q_cur
        scale = 0.5 * np.log((a + 1) / (a - 1)) / stash[0]
        stash *= scale
        # Q_n(-t) = (-1)^(n+1) Q_n(t)
        neg = to < 0
        if np.any(neg):
            sign = np.where(np.arange(nmax + 1) % 2 == 0, -1.0, 1.0)
            stash[:, neg] *= sign[:, None]
        out[:, ~inside] = stash
    return out


def log_weights(t, order: int) -> np.ndarray:
    """``int_{-1}^{1} ln|s - t| l_j(s) ds`` for each target ``t``; shape ``(len(t), order)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    q = legendre_q(t, order)
    moments = np.empty((order, t.size))
    moments[0] = (1 + t) * np.log(np.abs(1 + t)) + (1 - t) * np.log(np.abs(1 - t)) - 2.0
    for k in range(1, order):
        moments[k] = 2.0 / (2 * k + 1) * (q[k + 1] - q[k - 1])
    return moments.T @ _basis_to_legendre(order)
