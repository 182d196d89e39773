"""Minimal tensor norms of ``sum_i a_i (x) conj(b_i)`` without forming the Kronecker matrix.

Under the identification ``xi (x) eta -> xi eta^T`` (row index from the left
factor, row-major ``vec``), the matrix ``sum_i kron(a_i, conj(b_i))`` acts on
``N_a x N_b`` matrices as the bimultiplication map

    Phi(X) = sum_i a_i X b_i^*.

Its operator norm on Hilbert-Schmidt space is the min norm of the tensor.
:func:`min_norm` gets it from the top eigenvalue of ``Phi^* Phi`` by a
restarted Lanczos iteration; :func:`dense_norm_oracle` forms the Kronecker
matrix and takes its largest singular value, for cross-checking.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .ensembles import stream
from .krylov import lanczos_top
from .linalg import ShapeError, UnitaryTuple, as_matrix

__all__ = [
    "BimultiplicationOperator",
    "NormEstimate",
    "SolverParams",
    "apply",
    "apply_adjoint",
    "min_norm",
    "dense_norm_oracle",
    "tracial_witness",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class BimultiplicationOperator:
    """The map ``X -> sum_i left[i] X right[i]^*`` on ``N_a x N_b`` matrices."""

    left: UnitaryTuple
    right: UnitaryTuple

    def __post_init__(self):
        if self.left.n != self.right.n:
            raise ShapeError(
                f"tuple lengths differ: left has {self.left.n}, right has {self.right.n}"
            )
        n, na, nb = self.n, self.left.dim, self.right.dim
        a = self.left.stack()
        b = self.right.stack()
        # stacked factors for two-GEMM application:
        #   Phi(X)   = [a_1 X ... a_n X] @ vstack(b_i^*)
        #   Phi*(Y)  = [a_1^* Y ... a_n^* Y] @ vstack(b_i)
        object.__setattr__(self, "_a", a.reshape(n * na, na))
        object.__setattr__(self, "_ah", a.conj().transpose(0, 2, 1).reshape(n * na, na))
        object.__setattr__(self, "_bh_v", np.ascontiguousarray(b.conj().transpose(0, 2, 1)).reshape(n * nb, nb))
        object.__setattr__(self, "_b_v", np.ascontiguousarray(b).reshape(n * nb, nb))

    @property
    def n(self) -> int:
        return self.left.n

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of the matrices the operator acts on."""
        return self.left.dim, self.right.dim

    @property
    def hs_dim(self) -> int:
        return self.left.dim * self.right.dim

    def _check(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape != self.shape:
            raise ShapeError(f"operand has shape {X.shape}, operator acts on {self.shape}")
        return X

    def _bimul(self, lhs, X, rhs) -> np.ndarray:
        n, (na, nb) = self.n, self.shape
        t = (lhs @ X).reshape(n, na, nb).transpose(1, 0, 2).reshape(na, n * nb)
        return t @ rhs

    def apply(self, X) -> np.ndarray:
        return self._bimul(self._a, self._check(X), self._bh_v)

    def apply_adjoint(self, Y) -> np.ndarray:
        return self._bimul(self._ah, self._check(Y), self._b_v)

    def gram_matvec(self, x: np.ndarray) -> np.ndarray:
        """``vec(Phi^* Phi X)`` for ``x = vec(X)``; no validation, used inside the solver."""
        X = x.reshape(self.shape)
        Y = self._bimul(self._a, X, self._bh_v)
        return self._bimul(self._ah, Y, self._b_v).ravel()

    def kron_matrix(self) -> np.ndarray:
        """The dense ``(N_a N_b) x (N_a N_b)`` matrix ``sum_i kron(a_i, conj(b_i))``."""
        if self.hs_dim > DENSE_LIMIT:
            raise ValueError(
                f"dense realization needs N_a*N_b <= {DENSE_LIMIT}, got {self.hs_dim}"
            )
        return sum(np.kron(a, b.conj()) for a, b in zip(self.left, self.right))


def apply(op: BimultiplicationOperator, X) -> np.ndarray:
    return op.apply(X)


def apply_adjoint(op: BimultiplicationOperator, Y) -> np.ndarray:
    return op.apply_adjoint(Y)


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-9
    max_iter: int = 5000
    n_restarts: int = 3
    seed: int = 0
    basis_size: int = 60
    keep: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1 or self.n_restarts < 1:
            raise ValueError("max_iter and n_restarts must be positive")
        if self.basis_size < 2 or not 1 <= self.keep < self.basis_size:
            raise ValueError("need basis_size >= 2 and 1 <= keep < basis_size")


@dataclass(frozen=True)
class NormEstimate:
    value: float
    residual: float
    iterations: int
    restarts: int
    converged: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "NormEstimate":
        return cls(
            float(d["value"]),
            float(d["residual"]),
            int(d["iterations"]),
            int(d["restarts"]),
            bool(d["converged"]),
        )


def min_norm(op: BimultiplicationOperator, tol=1e-9, max_iter=5000, n_restarts=3,
             seed=0, params: SolverParams | None = None) -> NormEstimate:
    """Operator norm of ``Phi`` (the min norm of ``sum a_i (x) conj(b_i)``).

    Each of the ``n_restarts`` starts runs a Lanczos iteration on ``Phi^* Phi``
    from a random unit vector (stream ``r`` of ``seed``) until the relative
    eigen-residual is at most ``tol`` or ``max_iter`` operator applications
    are spent. The largest eigenvalue over the starts is kept; the estimate
    is flagged unconverged if any start failed to converge.
    """
    if params is None:
        params = SolverParams(tol=tol, max_iter=max_iter, n_restarts=n_restarts, seed=seed)
    best = None
    total = 0
    converged = True
    for r in range(params.n_restarts):
        rng = stream(params.seed, r)
        v0 = rng.standard_normal(op.hs_dim) + 1j * rng.standard_normal(op.hs_dim)
        res = lanczos_top(
            op.gram_matvec, v0, params.tol, params.max_iter, params.basis_size, params.keep
        )
        total += res.iterations
        converged &= res.converged
        if best is None or res.value > best.value:
            best = res
    return NormEstimate(
        float(np.sqrt(best.value)), float(best.residual), total, params.n_restarts, converged
    )


def dense_norm_oracle(op: BimultiplicationOperator) -> float:
    """Largest singular value of the explicitly formed Kronecker matrix."""
    return float(np.linalg.svd(op.kron_matrix(), compute_uv=False)[0])


def tracial_witness(u: UnitaryTuple, v: UnitaryTuple) -> float:
    """``|sum_i tr(u_i v_i^*)| / N``: the tensor evaluated at the unit vector ``I/sqrt(N)``.

    A lower bound for both the min and the max norm of ``sum u_i (x) conj(v_i)``.
    """
    if u.n != v.n or u.dim != v.dim:
        raise ShapeError(f"tuples differ: (n={u.n}, N={u.dim}) vs (n={v.n}, N={v.dim})")
    # tr(u v^*) = sum of entries of u * conj(v)
    s = sum(np.vdot(b, a) for a, b in zip(u, v))
    return float(abs(s) / u.dim)
