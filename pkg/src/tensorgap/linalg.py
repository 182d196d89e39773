"""Dense complex matrices, unitary tuples and the tuple file formats.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. A
:class:`UnitaryTuple` holds ``n`` square unitaries of a common size ``N``
and is validated when it is built; it is never repaired.

Two on-disk formats are supported:

``.utpl``
    ``b"UTPL"``, version byte ``0x01``, ``n`` and ``N`` as little-endian
    ``uint32``, then ``n*N*N`` little-endian ``(re, im)`` double pairs,
    matrices in tuple order, entries row-major.
``.json``
    ``{"n": .., "dim": .., "matrices": [[[re, im], ...], ...], "label": ..}``
    where each matrix is a flat row-major list of pairs.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ShapeError",
    "ValidationError",
    "ParseError",
    "UnitaryTuple",
    "as_matrix",
    "multiply",
    "adjoint",
    "conjugate",
    "normalized_trace",
    "unitarity_defect",
    "check_unitary",
    "save_utpl",
    "load_utpl",
    "save_json",
    "load_json",
    "UNITARY_TOL",
]

UNITARY_TOL = 1e-10

UTPL_MAGIC = b"UTPL"
UTPL_VERSION = 1
_HEADER = struct.Struct("<4sBII")


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ValidationError(ValueError):
    """Data is well formed but violates an invariant (e.g. unitarity)."""


class ParseError(ValueError):
    """A tuple file could not be decoded."""


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-d ``complex128`` array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise ShapeError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def multiply(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def conjugate(a) -> np.ndarray:
    return as_matrix(a).conj()


def normalized_trace(a) -> complex:
    """Trace divided by the size, i.e. the tracial state on ``M_N``."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"normalized trace needs a square matrix, got {a.shape}")
    return complex(np.trace(a) / a.shape[0])


def unitarity_defect(u) -> float:
    """Largest entry of ``|u u* - I|``."""
    u = np.asarray(u, dtype=np.complex128)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def check_unitary(t, tol: float = UNITARY_TOL) -> tuple[bool, float]:
    """Check every matrix of ``t`` for unitarity.

    ``t`` may be a :class:`UnitaryTuple` or any sequence of square matrices,
    so that candidate data can be inspected before a tuple is built from it.
    Returns ``(ok, max_defect)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mats = t.matrices if isinstance(t, UnitaryTuple) else [as_matrix(m) for m in t]
    defect = max((unitarity_defect(m) for m in mats), default=0.0)
    return defect <= tol, defect


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=np.complex128, order="C", copy=True)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class UnitaryTuple:
    """An ``n``-tuple of ``N x N`` unitary matrices.

    Construction fails with :class:`ValidationError` if any matrix deviates
    from unitarity by more than ``tol`` (entrywise on ``u u* - I``).
    """

    matrices: tuple[np.ndarray, ...]
    label: str = ""
    tol: float = field(default=UNITARY_TOL, repr=False)

    def __post_init__(self):
        mats = tuple(_frozen(as_matrix(m)) for m in self.matrices)
        if not mats:
            raise ValidationError("a unitary tuple needs at least one matrix")
        dim = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape != (dim, dim):
                raise ShapeError(f"matrix {i} has shape {m.shape}, expected {(dim, dim)}")
        object.__setattr__(self, "matrices", mats)
        ok, defect = check_unitary(mats, self.tol)
        if not ok:
            raise ValidationError(
                f"unitarity defect {defect:.3e} exceeds tolerance {self.tol:.1e}"
            )

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.matrices[i]

    def __iter__(self):
        return iter(self.matrices)

    def stack(self) -> np.ndarray:
        """All matrices as one read-only ``(n, N, N)`` array."""
        s = np.stack(self.matrices)
        s.setflags(write=False)
        return s

    def map(self, f, label: str | None = None) -> "UnitaryTuple":
        """Apply ``f`` to every matrix, keeping the tolerance."""
        return UnitaryTuple(
            tuple(f(m) for m in self.matrices),
            self.label if label is None else label,
            self.tol,
        )

    def equals(self, other: "UnitaryTuple") -> bool:
        """Bit-exact equality of entries."""
        return (
            self.n == other.n
            and self.dim == other.dim
            and all(np.array_equal(a, b) for a, b in zip(self, other))
        )


# ---------------------------------------------------------------------------
# file formats


def utpl_bytes(t: UnitaryTuple) -> bytes:
    body = np.ascontiguousarray(t.stack(), dtype="<c16").tobytes()
    return _HEADER.pack(UTPL_MAGIC, UTPL_VERSION, t.n, t.dim) + body


def save_utpl(t: UnitaryTuple, path) -> Path:
    path = Path(path)
    path.write_bytes(utpl_bytes(t))
    return path


def parse_utpl(data: bytes) -> list[np.ndarray]:
    """Decode ``.utpl`` bytes into a list of matrices (no unitarity check)."""
    if len(data) < _HEADER.size:
        raise ParseError("file too short for a UTPL header")
    magic, version, n, dim = _HEADER.unpack_from(data)
    if magic != UTPL_MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != UTPL_VERSION:
        raise ParseError(f"unsupported UTPL version {version}")
    if n < 1 or dim < 1:
        raise ParseError(f"invalid header n={n}, N={dim}")
    expected = _HEADER.size + 16 * n * dim * dim
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes, got {len(data)}")
    arr = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(n, dim, dim)
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite entries")
    return [np.array(m, dtype=np.complex128) for m in arr]


def load_utpl(path, tol: float = 1e-8) -> UnitaryTuple:
    path = Path(path)
    return UnitaryTuple(tuple(parse_utpl(path.read_bytes())), f"file:{path.name}", tol)


def tuple_to_json(t: UnitaryTuple) -> dict:
    return {
        "n": t.n,
        "dim": t.dim,
        "matrices": [
            [[float(z.real), float(z.imag)] for z in m.ravel()] for m in t.matrices
        ],
        "label": t.label,
    }


def tuple_from_json(obj, tol: float = 1e-8) -> UnitaryTuple:
    try:
        n, dim = int(obj["n"]), int(obj["dim"])
        mats = []
        for flat in obj["matrices"]:
            pairs = np.asarray(flat, dtype=np.float64)
            if pairs.shape != (dim * dim, 2):
                raise ParseError(f"matrix has {pairs.shape} entries, expected {(dim * dim, 2)}")
            mats.append((pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim))
        label = str(obj.get("label", ""))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed tuple JSON: {exc}") from exc
    if len(mats) != n:
        raise ParseError(f"header says n={n} but {len(mats)} matrices present")
    return UnitaryTuple(tuple(mats), label, tol)


def save_json(t: UnitaryTuple, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(tuple_to_json(t)))
    return path


def load_json(path, tol: float = 1e-8) -> UnitaryTuple:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    return tuple_from_json(obj, tol)

