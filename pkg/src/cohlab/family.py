"""Alternating families of integer-valued functions on truncated grids.

A family of arity n stores one finitely supported function per strictly
increasing n-tuple of indices; evaluation at arbitrary tuples is
sign-extended, and tuples with a repeated entry evaluate to zero.  All
"equal mod finite" relations from the infinite theory are replaced by
"equal above a column threshold", checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Mapping, Union

from .core import (
    DomainError,
    GridPoint,
    Index,
    IndexTuple,
    Region,
    TruncFn,
    meet,
    region,
    remove_entry,
    sort_with_sign,
)


@dataclass
class SparseZFn:
    """An integer-valued function on an explicit finite domain.

    Absent entries are zero; entries outside the domain are errors, never
    implicit zeros.
    """

    domain: Region
    entries: dict[GridPoint, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.domain = frozenset(self.domain)
        self.entries = {p: int(v) for p, v in self.entries.items() if v != 0}
        bad = set(self.entries) - self.domain
        if bad:
            raise DomainError(f"entries outside the domain: {sorted(bad)}")

    @classmethod
    def zero(cls, domain: Region) -> "SparseZFn":
        return cls(frozenset(domain), {})

    def value(self, point: GridPoint) -> int:
        if point not in self.domain:
            raise DomainError(f"point {point} outside the domain")
        return self.entries.get(point, 0)

    @property
    def support(self) -> list[tuple[GridPoint, int]]:
        return sorted(self.entries.items())

    def restrict(self, sub: Region) -> "SparseZFn":
        sub = frozenset(sub)
        if not sub <= self.domain:
            raise DomainError("restriction target is not a subset of the domain")
        return SparseZFn(sub, {p: v for p, v in self.entries.items() if p in sub})

    def scale(self, c: int) -> "SparseZFn":
        return SparseZFn(self.domain, {p: c * v for p, v in self.entries.items()})

    def __neg__(self) -> "SparseZFn":
        return self.scale(-1)

    def __add__(self, other: "SparseZFn") -> "SparseZFn":
        dom = self.domain & other.domain
        vals: dict[GridPoint, int] = {}
        for p in dom:
            v = self.entries.get(p, 0) + other.entries.get(p, 0)
            if v:
                vals[p] = v
        return SparseZFn(dom, vals)

    def __sub__(self, other: "SparseZFn") -> "SparseZFn":
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.entries

    def is_zero_above(self, ell: int) -> bool:
        return all(j <= ell for (j, _k) in self.entries)

    def max_nonzero_column(self) -> int:
        """Largest column carrying a nonzero value, or -1 when identically zero."""
        return max((j for (j, _k) in self.entries), default=-1)

    def zero_below(self, ell: int) -> "SparseZFn":
        return SparseZFn(self.domain, {p: v for p, v in self.entries.items() if p[0] > ell})

    def zero_above(self, ell: int) -> "SparseZFn":
        return SparseZFn(self.domain, {p: v for p, v in self.entries.items() if p[0] <= ell})


def eq_above(phi: SparseZFn, psi: SparseZFn, ell: int) -> bool:
    """Agreement of two functions at every shared point in columns > ell."""
    dom = phi.domain & psi.domain
    return all(
        phi.entries.get(p, 0) == psi.entries.get(p, 0)
        for p in dom
        if p[0] > ell
    )


Witness = Union["Family", SparseZFn]


@dataclass
class Family:
    """An alternating arity-n family over a finite index set.

    ``table`` is keyed by strictly increasing n-tuples and must cover all of
    them; each stored function lives on the region of the columnwise minimum
    of the tuple's grid functions, further capped by ``cap`` when present
    (families "below g" carry cap = g).
    """

    arity: int
    index_map: dict[Index, TruncFn]
    table: dict[IndexTuple, SparseZFn]
    cap: TruncFn | None = None

    def __post_init__(self) -> None:
        if self.arity < 1:
            raise DomainError("family arity must be at least 1")
        if not self.index_map:
            raise DomainError("family needs a nonempty index set")
        widths = {len(f) for f in self.index_map.values()}
        if self.cap is not None:
            widths.add(len(self.cap))
        if len(widths) != 1:
            raise DomainError("all grid functions must share one column bound")
        expected = set(self.increasing_tuples(self.arity))
        if set(self.table) != expected:
            missing = expected - set(self.table)
            extra = set(self.table) - expected
            raise DomainError(
                f"table must cover exactly the increasing {self.arity}-tuples"
                f" (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        for t, fn in self.table.items():
            if fn.domain != self.tuple_region(t):
                raise DomainError(f"stored function at {t} has the wrong domain")

    @property
    def columns(self) -> int:
        return len(next(iter(self.index_map.values())))

    @property
    def indices(self) -> list[Index]:
        return sorted(self.index_map)

    def increasing_tuples(self, length: int) -> Iterator[IndexTuple]:
        return combinations(sorted(self.index_map), length)

    def tuple_region(self, t: IndexTuple) -> Region:
        fs = [self.index_map[i] for i in t]
        if self.cap is not None:
            fs.append(self.cap)
        return region(meet(fs))

    def functions(self, t: IndexTuple) -> list[TruncFn]:
        return [self.index_map[i] for i in t]


def make_family(
    arity: int,
    index_map: Mapping[Index, TruncFn],
    values: Mapping[IndexTuple, Mapping[GridPoint, int]] | None = None,
    cap: TruncFn | None = None,
    fill: Callable[[IndexTuple, Region], Mapping[GridPoint, int]] | None = None,
) -> Family:
    """Build a family from per-tuple value maps, zero-filling absent tuples."""
    index_map = dict(index_map)
    values = dict(values or {})
    table: dict[IndexTuple, SparseZFn] = {}
    ids = sorted(index_map)
    for t in combinations(ids, arity):
        fs = [index_map[i] for i in t]
        if cap is not None:
            fs.append(cap)
        dom = region(meet(fs))
        vals = values.get(t)
        if vals is None and fill is not None:
            vals = fill(t, dom)
        table[t] = SparseZFn(dom, dict(vals or {}))
    return Family(arity, index_map, table, cap)


def evaluate(fam: Family, t: IndexTuple) -> SparseZFn:
    """Sign-extended lookup; tuples with a repeated entry evaluate to zero."""
    if len(t) != fam.arity:
        raise DomainError(f"expected a tuple of length {fam.arity}, got {t}")
    unknown = [i for i in t if i not in fam.index_map]
    if unknown:
        raise DomainError(f"unknown indices {unknown}")
    canon, sign = sort_with_sign(t)
    if sign == 0:
        return SparseZFn.zero(fam.tuple_region(t))
    stored = fam.table[canon]
    return stored if sign == 1 else -stored


def boundary(fam: Family, t: IndexTuple) -> SparseZFn:
    """Alternating sum over entry removals, restricted to the meet-region of t."""
    if len(t) != fam.arity + 1:
        raise DomainError(f"expected a tuple of length {fam.arity + 1}, got {t}")
    dom = fam.tuple_region(t)
    acc = SparseZFn.zero(dom)
    for i in range(len(t)):
        term = evaluate(fam, remove_entry(t, i))
        acc = acc + (term if i % 2 == 0 else -term)
    # Each term's domain contains dom, so the running intersection stays dom.
    return acc


def is_coherent(fam: Family, ell: int) -> bool:
    """All boundary sums vanish at every grid point in columns > ell.

    ``ell = -1`` demands exact vanishing on every column.
    """
    return all(
        boundary(fam, t).is_zero_above(ell)
        for t in fam.increasing_tuples(fam.arity + 1)
    )


def is_trivialization_type1(fam: Family, witness: Witness, ell: int) -> bool:
    """Lower-arity witness check: its boundary reproduces the family above ell.

    For arity 1 the witness is a single function whose domain covers every
    member's domain; for arity n > 1 it is an alternating family of arity
    n - 1 over the same index set.
    """
    if fam.arity == 1:
        if not isinstance(witness, SparseZFn):
            raise DomainError("arity-1 families take a single function as witness")
        for t in fam.increasing_tuples(1):
            dom = fam.tuple_region(t)
            if not dom <= witness.domain:
                raise DomainError("witness domain does not cover the family member at " f"{t}")
            if not eq_above(witness.restrict(dom), fam.table[t], ell):
                return False
        return True
    if not isinstance(witness, Family) or witness.arity != fam.arity - 1:
        raise DomainError(f"witness must be a family of arity {fam.arity - 1}")
    if sorted(witness.index_map) != sorted(fam.index_map):
        raise DomainError("witness must live over the same index set")
    return all(
        eq_above(boundary(witness, t), fam.table[t], ell)
        for t in fam.increasing_tuples(fam.arity)
    )


def is_trivialization_type2(fam: Family, psi: Family, ell: int) -> bool:
    """Same-arity witness check: boundary sums agree pointwise above ell."""
    if psi.arity != fam.arity:
        raise DomainError(f"witness must have arity {fam.arity}")
    return all(
        eq_above(boundary(fam, t), boundary(psi, t), ell)
        for t in fam.increasing_tuples(fam.arity + 1)
    )


def zero_below(fam: Family, ell: int) -> Family:
    """Zero out all values in columns <= ell, keeping domains intact."""
    table = {t: fn.zero_below(ell) for t, fn in fam.table.items()}
    return Family(fam.arity, dict(fam.index_map), table, fam.cap)


def restrict(fam: Family, subset: Iterable[Index]) -> Family:
    """Restrict the family to tuples drawn from a subset of the index set."""
    keep = sorted(set(subset))
    if any(i not in fam.index_map for i in keep):
        raise DomainError("subset contains unknown indices")
    if len(keep) < fam.arity:
        raise DomainError(f"subset must contain at least {fam.arity} indices")
    index_map = {i: fam.index_map[i] for i in keep}
    table = {t: fam.table[t] for t in combinations(keep, fam.arity)}
    return Family(fam.arity, index_map, table, fam.cap)


def coboundary(witness: Witness, index_map: Mapping[Index, TruncFn], cap: TruncFn | None = None) -> Family:
    """The family whose members are the witness's boundary sums.

    A single function yields the arity-1 family of its restrictions; a family
    of arity n yields the arity-(n + 1) family of its boundaries.  The result
    always passes is_trivialization_type1 against the witness at any
    threshold, exactly.
    """
    index_map = dict(index_map)
    if isinstance(witness, SparseZFn):
        def fill_restrict(t: IndexTuple, dom: Region) -> dict[GridPoint, int]:
            if not dom <= witness.domain:
                raise DomainError(f"witness domain does not cover the region at {t}")
            return {p: v for p, v in witness.entries.items() if p in dom}

        return make_family(1, index_map, fill=fill_restrict, cap=cap)

    arity = witness.arity + 1

    def fill_boundary(t: IndexTuple, dom: Region) -> dict[GridPoint, int]:
        return {p: v for p, v in boundary(witness, t).entries.items() if p in dom}

    return make_family(arity, index_map, fill=fill_boundary, cap=cap)
