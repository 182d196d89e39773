"""Random and loaded unitary tuples.

Every matrix of a sampled tuple draws from its own random stream. Stream
``i`` of a tuple with seed ``s`` is a Philox (counter-based) generator keyed
by ``SeedSequence(entropy=s, spawn_key=(i,))``, so matrices can be sampled
independently and in any order. Seeds for derived jobs (tuple ``c`` of a
sequence, pair ``(m, m')`` of a norm table) come from :func:`derive_seed`,
which hashes ``(seed, 0x5EED, *keys)`` the same way.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linalg import UnitaryTuple, load_json, load_utpl, ParseError

__all__ = [
    "KINDS",
    "EnsembleSpec",
    "stream",
    "derive_seed",
    "haar_unitary",
    "sample_haar",
    "complement_isometry",
    "permutation_complement_unitary",
    "sample_permutation_complement",
    "load_tuple",
    "sample",
]

KINDS = ("haar", "permutation-complement", "explicit-file")
SEED_MASK = (1 << 64) - 1
_JOB_TAG = 0x5EED


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    dim: int
    seed: int = 0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "explicit-file":
            if not self.path:
                raise ValueError("explicit-file ensembles need a path")
            return
        if self.n < 1 or self.dim < 1:
            raise ValueError("n and dim must be positive")
        if self.kind == "permutation-complement" and self.dim < 2:
            raise ValueError("permutation-complement needs dim >= 2")
        if not 0 <= self.seed <= SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for matrix ``index`` of a tuple seeded with ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit seed for the job identified by ``keys`` under the global ``seed``."""
    # the leading tag keeps these keys apart from the per-matrix streams
    key = (_JOB_TAG,) + tuple(int(k) for k in keys)
    ss = np.random.SeedSequence(entropy=int(seed) & SEED_MASK, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from a phase-corrected QR of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    # plain QR is not Haar; fix the phases of R's diagonal
    return q * (d / np.abs(d))


def sample_haar(n: int, dim: int, seed: int) -> UnitaryTuple:
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be positive")
    mats = tuple(haar_unitary(dim, stream(seed, i)) for i in range(n))
    return UnitaryTuple(mats, f"haar(n={n},dim={dim},seed={seed})")


def complement_isometry(dim: int) -> np.ndarray:
    """Isometry ``V`` from ``C^dim`` onto the complement of the all-ones vector in ``C^(dim+1)``.

    Built from the Householder reflection ``H`` sending ``e_1`` to the
    normalized all-ones vector; ``V`` is ``H`` without its first column.
    """
    m = dim + 1
    f = np.full(m, 1.0 / np.sqrt(m))
    v = -f
    v[0] += 1.0
    h = np.eye(m) - 2.0 * np.outer(v, v) / (v @ v)
    return h[:, 1:]


def permutation_complement_unitary(perm, isometry: np.ndarray | None = None) -> np.ndarray:
    """Restriction ``V^T P V`` of the permutation matrix of ``perm`` (a permutation of ``0..dim``)."""
    perm = np.asarray(perm)
    m = perm.size
    if sorted(perm.tolist()) != list(range(m)):
        raise ValueError("not a permutation")
    if m < 3:
        raise ValueError("permutation must act on at least 3 points")
    v = complement_isometry(m - 1) if isometry is None else isometry
    p = np.zeros((m, m))
    p[perm, np.arange(m)] = 1.0
    return (v.T @ p @ v).astype(np.complex128)


def sample_permutation_complement(n: int, dim: int, seed: int) -> UnitaryTuple:
    if n < 1:
        raise ValueError("n must be positive")
    if dim < 2:
        raise ValueError("permutation-complement needs dim >= 2")
    v = complement_isometry(dim)
    mats = tuple(
        permutation_complement_unitary(stream(seed, i).permutation(dim + 1), v)
        for i in range(n)
    )
    return UnitaryTuple(mats, f"permutation-complement(n={n},dim={dim},seed={seed})")


def load_tuple(path) -> UnitaryTuple:
    """Load a ``.utpl`` or JSON tuple file; unitarity is checked at 1e-8."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == b"UTPL":
        return load_utpl(path)
    if path.suffix.lower() == ".json" or data.lstrip()[:1] == b"{":
        return load_json(path)
    raise ParseError(f"{path}: neither a UTPL nor a JSON tuple file")


def sample(spec: EnsembleSpec) -> UnitaryTuple:
    if spec.kind == "haar":
        return sample_haar(spec.n, spec.dim, spec.seed)
    if spec.kind == "permutation-complement":
        return sample_permutation_complement(spec.n, spec.dim, spec.seed)
    t = load_tuple(spec.path)
    if t.n != spec.n or t.dim != spec.dim:
        raise ValueError(
            f"{spec.path}: file holds n={t.n}, dim={t.dim}, spec asks n={spec.n}, dim={spec.dim}"
        )
    return t
