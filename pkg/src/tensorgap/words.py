"""Words in the generators and their adjoints, moments and moment tables.

A word is a sequence of letters ``(i, star)`` with ``i`` a 1-based index and
``star`` true for the adjoint. Evaluated in a unitary tuple ``x`` it gives the
product ``x_{i_1}^{e_1} ... x_{i_k}^{e_k}``; its moment is the normalized
trace of that product. Because the tuples are unitary, only freely reduced
words matter, and tables are keyed on those.

Words print as ``"1 2* 1*"``; the empty word prints as ``""``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .ensembles import stream
from .linalg import UnitaryTuple

__all__ = [
    "Word",
    "MomentTable",
    "DistributionDistance",
    "ConvergenceReport",
    "reduce",
    "evaluate_word",
    "moment",
    "letters",
    "count_reduced",
    "enumerate_reduced",
    "sample_reduced",
    "moment_table",
    "mix_tables",
    "free_haar_table",
    "distance",
    "convergence_report",
    "greedy_select",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 10**6

Letter = tuple[int, bool]


@dataclass(frozen=True, order=False)
class Word:
    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        lets = tuple((int(i), bool(s)) for i, s in self.letters)
        if any(i < 1 for i, _ in lets):
            raise ValueError("letter indices start at 1")
        object.__setattr__(self, "letters", lets)

    @classmethod
    def parse(cls, text: str) -> "Word":
        lets = []
        for tok in text.split():
            star = tok.endswith("*")
            lets.append((int(tok.rstrip("*")), star))
        return cls(tuple(lets))

    def __str__(self):
        return " ".join(f"{i}{'*' if s else ''}" for i, s in self.letters)

    def __len__(self):
        return len(self.letters)

    @property
    def degree(self) -> int:
        return len(self.letters)

    def star(self) -> "Word":
        """The word of the adjoint: letters reversed, exponents flipped."""
        return Word(tuple((i, not s) for i, s in reversed(self.letters)))

    def sort_key(self):
        """Length-lexicographic, with ``(1,1) < (1,*) < (2,1) < ...``."""
        return (len(self.letters), self.letters)

    def is_reduced(self) -> bool:
        return all(
            not (a[0] == b[0] and a[1] != b[1])
            for a, b in zip(self.letters, self.letters[1:])
        )


def _cancels(a: Letter, b: Letter) -> bool:
    return a[0] == b[0] and a[1] != b[1]


def reduce(w: Word) -> Word:
    """Free reduction: delete adjacent ``x x*`` / ``x* x`` pairs until none are left."""
    out: list[Letter] = []
    for letter in w.letters:
        if out and _cancels(out[-1], letter):
            out.pop()
        else:
            out.append(letter)
    return Word(tuple(out))


def _factor(x: UnitaryTuple, letter: Letter) -> np.ndarray:
    i, star = letter
    if i > x.n:
        raise IndexError(f"letter index {i} out of range for an {x.n}-tuple")
    m = x.matrices[i - 1]
    return m.conj().T if star else m


def evaluate_word(x: UnitaryTuple, w: Word) -> np.ndarray:
    out = np.eye(x.dim, dtype=np.complex128)
    for letter in w.letters:
        out = out @ _factor(x, letter)
    return out


def moment(x: UnitaryTuple, w: Word) -> complex:
    if not w.letters:
        return 1.0 + 0.0j
    for letter in w.letters:
        _factor(x, letter)  # index check before any arithmetic
    prefix = evaluate_word(x, Word(w.letters[:-1]))
    # tr(P L) without forming P L
    return complex(np.sum(prefix * _factor(x, w.letters[-1]).T) / x.dim)


def letters(n: int) -> list[Letter]:
    return [(i, s) for i in range(1, n + 1) for s in (False, True)]


def count_reduced(n: int, k: int) -> int:
    """Number of reduced words of length exactly ``k``: ``2n (2n-1)^(k-1)``."""
    if k == 0:
        return 1
    return 2 * n * (2 * n - 1) ** (k - 1)


def enumerate_reduced(n: int, max_degree: int) -> Iterator[Word]:
    """All reduced words of length ``<= max_degree`` in length-lexicographic order."""
    level = [()]
    yield Word()
    alphabet = letters(n)
    for _ in range(max_degree):
        level = [
            w + (a,) for w in level for a in alphabet if not (w and _cancels(w[-1], a))
        ]
        for w in level:
            yield Word(w)


def sample_reduced(n: int, max_degree: int, count: int, seed: int) -> list[Word]:
    """``count`` independent uniform draws from the reduced words of length ``<= max_degree``.

    Duplicates are dropped; the result is sorted length-lexicographically and
    always contains the empty word.
    """
    rng = stream(seed, 0)
    sizes = np.array([count_reduced(n, k) for k in range(max_degree + 1)], dtype=float)
    lengths = rng.choice(max_degree + 1, size=count, p=sizes / sizes.sum())
    alphabet = letters(n)
    found = {Word()}
    for k in lengths:
        w: list[Letter] = []
        for _ in range(k):
            choices = [a for a in alphabet if not (w and _cancels(w[-1], a))]
            w.append(choices[rng.integers(len(choices))])
        found.add(Word(tuple(w)))
    return sorted(found, key=Word.sort_key)


@dataclass(frozen=True)
class MomentTable:
    n: int
    max_degree: int
    dim: int
    entries: dict = field(repr=False)
    sampled: bool = False

    def __getitem__(self, w: Word) -> complex:
        return self.entries[w]

    def __len__(self):
        return len(self.entries)

    def words(self) -> list[Word]:
        return list(self.entries)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "max_degree": self.max_degree,
            "dim": self.dim,
            "sampled": self.sampled,
            "entries": {str(w): [v.real, v.imag] for w, v in self.entries.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d) -> "MomentTable":
        entries = {Word.parse(k): complex(v[0], v[1]) for k, v in d["entries"].items()}
        return cls(int(d["n"]), int(d["max_degree"]), int(d["dim"]), entries, bool(d.get("sampled", False)))


def _check_guard(n: int, max_degree: int):
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    if (2 * n) ** max_degree > ENUMERATION_LIMIT:
        raise ValueError(
            f"(2n)^k = {(2 * n) ** max_degree} exceeds {ENUMERATION_LIMIT}; "
            "enable word sampling"
        )


def moment_table(x: UnitaryTuple, max_degree: int, sample: int | None = None,
                 seed: int = 0) -> MomentTable:
    """Moments of all reduced words of length ``<= max_degree``.

    With ``sample`` set, only a seeded uniform sample of that many reduced
    words is evaluated, which lifts the enumeration guard.
    """
    if sample is None:
        _check_guard(x.n, max_degree)
        wanted = None
    else:
        if max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        wanted = set(sample_reduced(x.n, max_degree, sample, seed))

    entries: dict[Word, complex] = {Word(): 1.0 + 0.0j}
    if max_degree == 0:
        return MomentTable(x.n, max_degree, x.dim, entries, sample is not None)

    factors = {a: _factor(x, a) for a in letters(x.n)}
    # prefix products are only kept for words some wanted word extends
    needed = None if wanted is None else {
        w.letters[:j] for w in wanted for j in range(1, len(w))
    }
    level: dict[tuple, np.ndarray | None] = {(): None}  # None stands for the identity
    for k in range(1, max_degree + 1):
        last = k == max_degree
        nxt: dict[tuple, np.ndarray] = {}
        for w, prod in level.items():
            for a, f in factors.items():
                if w and _cancels(w[-1], a):
                    continue
                word = w + (a,)
                extend = not last and (needed is None or word in needed)
                record = wanted is None or Word(word) in wanted
                if extend:
                    p = f if prod is None else prod @ f
                    nxt[word] = p
                    if record:
                        entries[Word(word)] = complex(np.trace(p) / x.dim)
                elif record:
                    val = np.trace(f) if prod is None else np.sum(prod * f.T)
                    entries[Word(word)] = complex(val / x.dim)
        level = nxt
    entries = dict(sorted(entries.items(), key=lambda kv: kv[0].sort_key()))
    return MomentTable(x.n, max_degree, x.dim, entries, sample is not None)


def mix_tables(tables: Sequence[MomentTable], weights: Sequence[float]) -> MomentTable:
    """Weighted average of tables over the same words.

    With weights proportional to block sizes this is the table of the
    direct sum of the tuples, since the normalized trace of a block-diagonal
    matrix is the size-weighted average of the blockwise traces.
    """
    if not tables:
        raise ValueError("nothing to mix")
    first = tables[0]
    for t in tables[1:]:
        if t.n != first.n or t.max_degree != first.max_degree or t.words() != first.words():
            raise ValueError("tables must share n, degree and words")
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    entries = {
        word: complex(sum(wi * t.entries[word] for wi, t in zip(w, tables)))
        for word in first.entries
    }
    entries[Word()] = 1.0 + 0.0j
    dim = sum(t.dim for t in tables)
    return MomentTable(first.n, first.max_degree, dim, entries, first.sampled)


def free_haar_table(n: int, max_degree: int, words: Iterable[Word] | None = None) -> MomentTable:
    """Limit distribution of independent Haar unitaries: 1 on the empty word, 0 elsewhere."""
    if words is None:
        _check_guard(n, max_degree)
        words = enumerate_reduced(n, max_degree)
    entries = {w: (1.0 + 0.0j if not w.letters else 0.0j) for w in words}
    return MomentTable(n, max_degree, 0, entries)


@dataclass(frozen=True)
class DistributionDistance:
    degree: int
    value: float
    argmax_word: Word

    def to_dict(self) -> dict:
        return {"degree": self.degree, "value": self.value, "argmax_word": str(self.argmax_word)}


def distance(a: MomentTable, b: MomentTable) -> DistributionDistance:
    """Largest moment difference over the words both tables contain.

    Ties go to the first word in ``a``'s order.
    """
    if a.n != b.n or a.max_degree != b.max_degree:
        raise ValueError(
            f"tables differ: (n={a.n}, k={a.max_degree}) vs (n={b.n}, k={b.max_degree})"
        )
    best, arg = -1.0, None
    for w, v in a.entries.items():
        if w in b.entries:
            d = abs(v - b.entries[w])
            if d > best:
                best, arg = d, w
    if arg is None:
        raise ValueError("tables share no words")
    return DistributionDistance(a.max_degree, float(best), arg)


def greedy_select(tables: Sequence[MomentTable], threshold: float) -> list[int]:
    """Indices kept by a left-to-right pass admitting a table only if it is
    within ``threshold`` of every table admitted so far."""
    chosen: list[int] = []
    for i, t in enumerate(tables):
        if all(distance(tables[j], t).value <= threshold for j in chosen):
            chosen.append(i)
    return chosen


@dataclass(frozen=True)
class ConvergenceReport:
    degree: int
    consecutive: list
    to_reference: list
    selected: list
    threshold: float

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "consecutive": [d.to_dict() for d in self.consecutive],
            "to_reference": [d.to_dict() for d in self.to_reference],
            "selected": list(self.selected),
            "threshold": self.threshold,
        }


def convergence_report(sequence: Sequence[UnitaryTuple], max_degree: int,
                       threshold: float = 0.1, sample: int | None = None,
                       seed: int = 0) -> ConvergenceReport:
    """Distances between consecutive tuples and to the free-Haar table, plus a greedy
    subsequence whose pairwise distances stay below ``threshold``."""
    if len(sequence) < 2:
        raise ValueError("need at least two tuples")
    n = sequence[0].n
    if any(t.n != n for t in sequence):
        raise ValueError("all tuples must have the same n")
    tables = [moment_table(t, max_degree, sample, seed) for t in sequence]
    ref = free_haar_table(n, max_degree, tables[0].words())
    return ConvergenceReport(
        max_degree,
        [distance(a, b) for a, b in zip(tables, tables[1:])],
        [distance(t, ref) for t in tables],
        greedy_select(tables, threshold),
        threshold,
    )
