"""Thick-restart Lanczos for the top eigenpair of a Hermitian PSD operator.

The operator is only touched through ``matvec``. The Krylov basis is kept
orthonormal by classical Gram-Schmidt applied twice against every stored
vector, so the projected matrix is assembled from the actual Gram-Schmidt
coefficients instead of assuming a tridiagonal shape. When the basis is
full the best Ritz vectors are kept and the iteration continues from the
current residual direction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool


def _relative(res: float, theta: float) -> float:
    return res / theta if theta > 0 else res


def lanczos_top(
    matvec: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    tol: float = 1e-9,
    max_iter: int = 5000,
    basis_size: int = 60,
    keep: int = 20,
) -> EigenResult:
    """Largest eigenvalue of a Hermitian positive semidefinite operator.

    Parameters
    ----------
    matvec : callable
        ``x -> A x`` on flat complex vectors.
    v0 : ndarray
        Start vector (need not be normalized).
    tol : float
        Stop once ``||A x - theta x|| / theta <= tol`` holds for the Ritz pair,
        verified by an explicit product.
    max_iter : int
        Budget of operator applications, explicit residual checks included.
    basis_size, keep : int
        Maximal basis length, and the number of Ritz vectors kept at a restart.

    Returns
    -------
    EigenResult
        ``converged`` is false when the budget ran out; ``value`` and
        ``residual`` then describe the best Ritz pair found.
    """
    dim = v0.size
    m = max(2, min(basis_size, dim))
    keep = max(1, min(keep, m - 1))

    V = np.empty((m, dim), dtype=np.complex128)
    H = np.zeros((m, m), dtype=np.complex128)
    v = v0.astype(np.complex128).ravel()
    v = v / np.linalg.norm(v)
    j = 0  # vectors currently in the basis
    iters = 0
    scale = 0.0
    theta, y, res = 0.0, None, np.inf

    while iters < max_iter:
        V[j] = v
        w = matvec(v)
        iters += 1
        scale = max(scale, float(np.linalg.norm(w)))
        Vj = V[: j + 1]
        h = np.dot(Vj, w.conj()).conj()
        w = w - h @ Vj
        h2 = np.dot(Vj, w.conj()).conj()
        w = w - h2 @ Vj
        h = h + h2
        H[: j + 1, j] = h
        H[j, : j + 1] = h.conj()
        H[j, j] = h[j].real
        j += 1
        beta = float(np.linalg.norm(w))

        theta_all, Y = np.linalg.eigh(H[:j, :j])
        theta = max(float(theta_all[-1]), 0.0)
        y = Y[:, -1]
        res = _relative(beta * abs(y[-1]), theta)
        breakdown = beta <= 1e-13 * scale or j == dim

        if (res <= tol or breakdown) and iters < max_iter:
            x = y @ V[:j]
            x /= np.linalg.norm(x)
            ax = matvec(x)
            iters += 1
            theta = max(float(np.vdot(x, ax).real), 0.0)
            res = _relative(float(np.linalg.norm(ax - theta * x)), theta)
            if res <= tol:
                return EigenResult(theta, x, res, iters, True)
            if breakdown:
                # Krylov space exhausted without an accurate pair; start over from x
                v, j = x, 0
                H[:] = 0
                y = None
                continue

        if j == m:
            # thick restart; A x_i = theta_i x_i + c_i f, and the c_i reappear
            # as Gram-Schmidt coefficients once f is expanded
            V[:keep] = Y[:, m - keep:].T @ V[:j]
            H[:] = 0
            H[np.arange(keep), np.arange(keep)] = theta_all[m - keep:]
            y = np.zeros(keep)
            y[-1] = 1.0
            j = keep
        v = w / beta

    x = v if y is None else y @ V[: len(y)]
    x = x / np.linalg.norm(x)
    return EigenResult(theta, x, res, iters, False)
