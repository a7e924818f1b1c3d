"""Atoms of the m-uniform filtration, infinite paths and the metric on them."""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Sequence, Tuple

from app.core.exact_linalg import as_vector
from app.core.tensor_space import ModelParams, TensorVW
from app.exceptions import InvalidParameterError


def _check_digits(digits: Sequence[int], m: int) -> None:
    if m < 2:
        raise InvalidParameterError(f"branching factor m must be at least 2, got {m}")
    for d in digits:
        if not 1 <= d <= m:
            raise InvalidParameterError(f"digit {d} outside [1..{m}]")


def atom_index(digits: Sequence[int], m: int) -> int:
    index = 0
    for d in digits:
        index = index * m + (d - 1)
    return index


@dataclass(frozen=True)
class Atom:
    digits: Tuple[int, ...]
    m: int

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        _check_digits(digits, self.m)
        object.__setattr__(self, "digits", digits)

    @classmethod
    def root(cls, m: int) -> "Atom":
        return cls((), m)

    @classmethod
    def from_index(cls, index: int, generation: int, m: int) -> "Atom":
        if not 0 <= index < m ** generation:
            raise InvalidParameterError(f"index {index} outside generation {generation} of the {m}-adic tree")
        digits = []
        for _ in range(generation):
            index, r = divmod(index, m)
            digits.append(r + 1)
        return cls(tuple(reversed(digits)), m)

    @classmethod
    def from_label(cls, label: str, m: int) -> "Atom":
        if not label:
            return cls.root(m)
        parts = label.split(".") if "." in label or m > 9 else list(label)
        return cls(tuple(int(p) for p in parts), m)

    @property
    def generation(self) -> int:
        return len(self.digits)

    @property
    def probability(self) -> Fraction:
        return Fraction(1, self.m ** self.generation)

    @property
    def index(self) -> int:
        return atom_index(self.digits, self.m)

    @property
    def label(self) -> str:
        sep = "." if self.m > 9 else ""
        return sep.join(str(d) for d in self.digits)

    def parent(self) -> "Atom":
        if not self.digits:
            raise InvalidParameterError("the root atom has no parent")
        return Atom(self.digits[:-1], self.m)

    def prefix(self, n: int) -> "Atom":
        return Atom(self.digits[:n], self.m)

    def __str__(self) -> str:
        return self.label or "<root>"


@dataclass(frozen=True)
class TreePath:
    """The infinite digit sequence prefix, repeat, repeat, ..."""

    prefix: Tuple[int, ...]
    repeat: int
    m: int

    def __post_init__(self):
        prefix = tuple(int(d) for d in self.prefix)
        _check_digits(prefix + (self.repeat,), self.m)
        # canonical form: no trailing copies of the repeating digit
        while prefix and prefix[-1] == self.repeat:
            prefix = prefix[:-1]
        object.__setattr__(self, "prefix", prefix)

    @classmethod
    def constant(cls, j: int, m: int) -> "TreePath":
        return cls((), j, m)

    def digit(self, position: int) -> int:
        """Digit at 1-based ``position``."""
        if position < 1:
            raise InvalidParameterError(f"positions start at 1, got {position}")
        return self.prefix[position - 1] if position <= len(self.prefix) else self.repeat

    def truncate(self, n: int) -> Atom:
        return Atom(tuple(self.digit(i) for i in range(1, n + 1)), self.m)


def children(atom: Atom) -> List[Atom]:
    return [Atom(atom.digits + (i,), atom.m) for i in range(1, atom.m + 1)]


def atoms_at_depth(n: int, m: int) -> Iterator[Atom]:
    for digits in itertools.product(range(1, m + 1), repeat=n):
        yield Atom(digits, m)


def dist(p1: TreePath, p2: TreePath) -> Fraction:
    if p1.m != p2.m:
        raise InvalidParameterError(f"paths of different trees (m={p1.m} and m={p2.m})")
    if p1 == p2:
        return Fraction(0)
    # distinct canonical paths differ within the longer prefix or right after it
    common = 0
    for position in range(1, max(len(p1.prefix), len(p2.prefix)) + 2):
        if p1.digit(position) != p2.digit(position):
            break
        common += 1
    return Fraction(1, p1.m ** common)


def j_omega_apply(atom: Atom, x: Any, params: ModelParams) -> Dict[Atom, Any]:
    """Attach coordinate i of x (or row i of a tensor) to child i of ``atom``."""
    if atom.m != params.m:
        raise InvalidParameterError(f"atom of the {atom.m}-adic tree used with m={params.m}")
    if isinstance(x, TensorVW):
        values = list(x.entries)
    else:
        values = list(as_vector(x))
    if len(values) != params.m:
        raise InvalidParameterError(f"{len(values)} values for {params.m} children")
    return dict(zip(children(atom), values))
