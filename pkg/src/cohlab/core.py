"""Truncated grid functions and tuple utilities.

A grid function is a tuple of nonnegative integers, one value per column
``0 .. J-1``.  Every derived object (regions, meets) is a finite set, so all
downstream checks are exact integer computations with no tolerances.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Index = int
TruncFn = tuple[int, ...]
GridPoint = tuple[int, int]
Region = frozenset[GridPoint]
IndexTuple = tuple[Index, ...]


class DomainError(ValueError):
    """Operands live on incompatible or missing domains."""


class PreconditionError(ValueError):
    """A hypothesis of a checked statement fails; the message names it."""


class BudgetExceeded(RuntimeError):
    """An exhaustive search ran past its explicit candidate budget."""


def as_trunc_fn(values: Iterable[int]) -> TruncFn:
    """Validate and normalize a column-value sequence into a grid function."""
    f = tuple(int(v) for v in values)
    if not f:
        raise DomainError("a grid function needs at least one column")
    if any(v < 0 for v in f):
        raise DomainError(f"grid function values must be nonnegative, got {f}")
    return f


def meet(fs: Sequence[TruncFn]) -> TruncFn:
    """Columnwise minimum of a nonempty list of grid functions."""
    if not fs:
        raise DomainError("meet of an empty list")
    width = len(fs[0])
    if any(len(f) != width for f in fs):
        raise DomainError("meet requires a common column bound")
    return tuple(min(f[j] for f in fs) for j in range(width))


def join(fs: Sequence[TruncFn]) -> TruncFn:
    """Columnwise maximum of a nonempty list of grid functions."""
    if not fs:
        raise DomainError("join of an empty list")
    width = len(fs[0])
    if any(len(f) != width for f in fs):
        raise DomainError("join requires a common column bound")
    return tuple(max(f[j] for f in fs) for j in range(width))


def region(f: TruncFn) -> Region:
    """The points at or below the graph of ``f``: all (j, k) with k <= f(j).

    The row bound is inclusive, so every column contributes at least the
    point (j, 0).
    """
    return frozenset((j, k) for j, v in enumerate(f) for k in range(v + 1))


def leq(f: TruncFn, g: TruncFn) -> bool:
    """Pointwise order: f(j) <= g(j) for every column j."""
    if len(f) != len(g):
        raise DomainError("leq requires a common column bound")
    return all(a <= b for a, b in zip(f, g))


def remove_entry(t: IndexTuple, i: int) -> IndexTuple:
    """Drop the i-th entry of a tuple."""
    if not 0 <= i < len(t):
        raise DomainError(f"position {i} out of range for tuple of length {len(t)}")
    return t[:i] + t[i + 1 :]


def sort_with_sign(t: IndexTuple) -> tuple[IndexTuple, int]:
    """Sort a tuple and report the parity of the sorting permutation.

    Returns (sorted tuple, sign) where sign is +1 or -1 for an even or odd
    permutation, and 0 when the tuple repeats an entry.  The 0 convention
    matches alternation over the integers: any alternating value attached to
    a tuple with a repeat must vanish (2x = 0 forces x = 0).
    """
    n = len(t)
    if len(set(t)) < n:
        return tuple(sorted(t)), 0
    inversions = sum(1 for i in range(n) for j in range(i + 1, n) if t[i] > t[j])
    return tuple(sorted(t)), (-1 if inversions % 2 else 1)
