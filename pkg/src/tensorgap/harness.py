"""Pair-norm tables over tuple sequences and the direct-sum construction.

Given unitary tuples ``u(1), u(2), ...`` this module computes

* the table of min norms of ``sum_i u_i(m) (x) conj(u_i(m'))`` and its
  supremum over ``m != m'`` (:func:`estimate_cn`);
* for two families of blocks, the min norm of the tensor built from their
  direct sums, which is the largest blockwise pair norm
  (:func:`direct_sum_min_norm`);
* a report putting that norm next to the max-norm value ``n`` that holds
  when both families share a limit distribution, together with the
  measured distance between their moment tables (:func:`ratio_report`).

Pair norms are independent jobs with their own solver seeds, so results do
not depend on ``jobs`` or on completion order.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .ensembles import derive_seed
from .linalg import ShapeError, UnitaryTuple
from .superop import BimultiplicationOperator, NormEstimate, SolverParams, min_norm
from .words import DistributionDistance, distance, mix_tables, moment_table

__all__ = [
    "TupleSequence",
    "BlockTuple",
    "CnEstimate",
    "RatioReport",
    "pair_norms",
    "estimate_cn",
    "build_direct_sum",
    "direct_sum_min_norm",
    "ratio_report",
    "pairs_csv",
    "TIE_TOL",
]

TIE_TOL = 1e-10
_DIAG, _OFF, _BLOCK = 0, 1, 2  # job kinds for seed derivation


@dataclass(frozen=True)
class TupleSequence:
    tuples: tuple
    provenance: tuple = ()

    def __post_init__(self):
        tuples = tuple(self.tuples)
        if not tuples:
            raise ValueError("empty sequence")
        if any(t.n != tuples[0].n for t in tuples):
            raise ShapeError("all tuples in a sequence must share n")
        object.__setattr__(self, "tuples", tuples)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def n(self) -> int:
        return self.tuples[0].n

    def __len__(self):
        return len(self.tuples)

    def __getitem__(self, i):
        return self.tuples[i]


@dataclass(frozen=True)
class BlockTuple:
    """The tuple ``(u_1(a), ..., u_n(a))`` with ``u_i(a)`` the direct sum of the blocks' ``u_i``.

    Only the blocks are stored; :meth:`dense` builds the block-diagonal
    matrices when an explicit realization is needed.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a direct sum needs at least one block")
        if any(b.n != blocks[0].n for b in blocks):
            raise ShapeError("all blocks must share n")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.blocks[0].n

    @property
    def dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def dense(self) -> UnitaryTuple:
        if len(self.blocks) == 1:
            return self.blocks[0]
        offsets = np.cumsum([0] + self.dims)
        mats = []
        for i in range(self.n):
            m = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
            for b, lo, hi in zip(self.blocks, offsets, offsets[1:]):
                m[lo:hi, lo:hi] = b.matrices[i]
            mats.append(m)
        label = "+".join(b.label or "?" for b in self.blocks)
        return UnitaryTuple(tuple(mats), f"direct-sum[{label}]")


def build_direct_sum(blocks: Sequence[UnitaryTuple]) -> BlockTuple:
    return BlockTuple(tuple(blocks))


def _job_params(params: SolverParams, *keys: int) -> SolverParams:
    return replace(params, seed=derive_seed(params.seed, *keys))


def _run(jobs: list, jobs_n: int | None) -> list[NormEstimate]:
    """Run ``(op, params)`` jobs, results in submission order."""
    if jobs_n is None or jobs_n <= 1 or len(jobs) <= 1:
        return [min_norm(op, params=p) for op, p in jobs]
    with ThreadPoolExecutor(max_workers=jobs_n) as pool:
        return list(pool.map(lambda job: min_norm(job[0], params=job[1]), jobs))


def pair_norms(left: Sequence[UnitaryTuple], right: Sequence[UnitaryTuple],
               pairs: Sequence[tuple[int, int]], params: SolverParams, kind: int,
               jobs: int | None = None) -> dict:
    jobs_list = [
        (BimultiplicationOperator(left[m], right[mp]), _job_params(params, kind, m, mp))
        for m, mp in pairs
    ]
    return dict(zip(pairs, _run(jobs_list, jobs)))


def _sup(table: dict) -> tuple[float, tuple | None, int]:
    """Max over converged entries with lexicographic tie-break; also counts unconverged ones."""
    good = {k: e.value for k, e in table.items() if e.converged}
    bad = len(table) - len(good)
    if not good:
        return math.nan, None, bad
    top = max(good.values())
    arg = min(k for k, v in good.items() if v >= top - TIE_TOL)
    return top, arg, bad


@dataclass(frozen=True)
class CnEstimate:
    n: int
    sup_offdiag: float
    pair_norms: dict
    diag_norms: dict
    reference: float
    unconverged: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sup_offdiag": _num(self.sup_offdiag),
            "reference": self.reference,
            "unconverged": self.unconverged,
            "pair_norms": [
                {"m": m, "m_prime": mp, **e.to_dict()} for (m, mp), e in self.pair_norms.items()
            ],
            "diag_norms": [{"m": m, **e.to_dict()} for m, e in self.diag_norms.items()],
        }


def _num(x: float):
    return None if x is None or math.isnan(x) else x


def estimate_cn(seq: TupleSequence | Sequence[UnitaryTuple], params: SolverParams | None = None,
                jobs: int | None = None) -> CnEstimate:
    """Min norms over all ordered pairs ``m != m'`` and the diagonal; the empirical
    constant is the largest converged off-diagonal value."""
    if not isinstance(seq, TupleSequence):
        seq = TupleSequence(tuple(seq))
    if len(seq) < 2:
        raise ValueError("need at least two tuples")
    params = params or SolverParams()
    idx = range(len(seq))
    off = pair_norms(seq, seq, [(m, mp) for m in idx for mp in idx if m != mp], params, _OFF, jobs)
    diag = pair_norms(seq, seq, [(m, m) for m in idx], params, _DIAG, jobs)
    sup, _, bad = _sup(off)
    if bad:
        warnings.warn(f"{bad} pair norm(s) did not converge and were left out of the supremum")
    return CnEstimate(
        seq.n,
        sup,
        off,
        {m: e for (m, _), e in diag.items()},
        2.0 * math.sqrt(seq.n - 1),
        bad + sum(not e.converged for e in diag.values()),
    )


def direct_sum_min_norm(a: BlockTuple, b: BlockTuple, params: SolverParams | None = None,
                        jobs: int | None = None) -> tuple[float, tuple[int, int], dict]:
    """Min norm of ``sum_i u_i(a) (x) conj(u_i(b))`` for direct sums ``a`` and ``b``.

    ``X -> sum_i u_i(a) X u_i(b)^*`` leaves every rectangular block
    ``X[m, m']`` invariant, so the norm is the largest blockwise pair norm.
    Returns the value, the attaining block pair (smallest such pair among
    values within ``TIE_TOL`` of the max) and the full pair table.
    """
    if a.n != b.n:
        raise ShapeError(f"direct sums differ in n: {a.n} vs {b.n}")
    params = params or SolverParams()
    pairs = [(m, mp) for m in range(len(a.blocks)) for mp in range(len(b.blocks))]
    table = pair_norms(a.blocks, b.blocks, pairs, params, _BLOCK, jobs)
    value, arg, bad = _sup(table)
    if arg is None:
        # nothing converged; report the best unconverged estimate
        value = max(e.value for e in table.values())
        arg = min(k for k, e in table.items() if e.value >= value - TIE_TOL)
    elif bad:
        warnings.warn(f"{bad} block pair norm(s) did not converge")
    return value, arg, table


def block_moment_table(t: BlockTuple, degree: int, sample: int | None = None, seed: int = 0):
    """Moment table of the direct sum, from the blocks' tables weighted by size."""
    tables = [moment_table(b, degree, sample, seed) for b in t.blocks]
    return mix_tables(tables, t.dims)


@dataclass(frozen=True)
class RatioReport:
    n: int
    c_emp: float
    ratio_lower_bound: float
    sup_ratio_lower: float
    sup_ratio_upper: float
    distribution_gap: DistributionDistance
    witness_pair: tuple
    pair_norms: dict
    converged: bool

    @property
    def conditional_max_norm(self) -> int:
        """Max norm of the direct-sum tensor, valid only if both families share
        a limit distribution; never computed, hence only ``n``."""
        return self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c_emp": self.c_emp,
            "ratio_lower_bound": self.ratio_lower_bound,
            "sup_ratio_lower": self.sup_ratio_lower,
            "sup_ratio_upper": self.sup_ratio_upper,
            "conditional_max_norm": {
                "value": self.conditional_max_norm,
                "condition": "both families converge to the same distribution",
            },
            "distribution_gap": self.distribution_gap.to_dict(),
            "witness_pair": list(self.witness_pair),
            "converged": self.converged,
            "pair_norms": [
                {"m": m, "m_prime": mp, **e.to_dict()} for (m, mp), e in self.pair_norms.items()
            ],
        }


def ratio_report(a: BlockTuple, b: BlockTuple, degree: int = 4, params: SolverParams | None = None,
                 jobs: int | None = None, sample: int | None = None) -> RatioReport:
    value, arg, table = direct_sum_min_norm(a, b, params, jobs)
    n = a.n
    gap = distance(block_moment_table(a, degree, sample), block_moment_table(b, degree, sample))
    return RatioReport(
        n=n,
        c_emp=value,
        ratio_lower_bound=n / value if value > 0 else math.inf,
        sup_ratio_lower=n / (2.0 * math.sqrt(n - 1)) if n > 1 else math.inf,
        sup_ratio_upper=math.sqrt(n),
        distribution_gap=gap,
        witness_pair=arg,
        pair_norms=table,
        converged=all(e.converged for e in table.values()),
    )


def pairs_csv(table: dict) -> str:
    """CSV with columns ``m,m_prime,value,residual,iterations,converged``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "m_prime", "value", "residual", "iterations", "converged"])
    for (m, mp), e in table.items():
        w.writerow([m, mp, repr(e.value), repr(e.residual), e.iterations, str(e.converged).lower()])
    return buf.getvalue()
