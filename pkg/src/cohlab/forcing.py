"""Finite partial conditions on an (index, column) grid and their combinatorics.

A condition maps finitely many (index, column) cells to nonnegative values.
Two conditions are compatible exactly when they agree on shared cells, in
which case their union is a common extension.  Instance sampling lives here
too: deterministic pseudo-random grid functions with optional planted
families that are coherent above a requested column.
"""

from __future__ import annotations

import random
from itertools import combinations
from typing import Mapping, Optional

from .core import DomainError, Index, PreconditionError, TruncFn, join, region
from .delta import OrdSet, aligned, verify_uniform
from .family import Family, SparseZFn, Witness, coboundary, make_family

Cell = tuple[Index, int]
Condition = dict[Cell, int]
CollapsedCondition = dict[tuple[int, int], int]


def as_condition(cells: Mapping[Cell, int]) -> Condition:
    out: Condition = {}
    for (idx, col), val in cells.items():
        idx, col, val = int(idx), int(col), int(val)
        if idx < 0 or col < 0 or val < 0:
            raise DomainError(f"negative cell data: ({idx}, {col}) -> {val}")
        out[(idx, col)] = val
    return out


def support(p: Mapping[Cell, int]) -> OrdSet:
    """Indices that own at least one cell, in increasing order."""
    return tuple(sorted({idx for idx, _col in p}))


def collapse(p: Mapping[Cell, int]) -> CollapsedCondition:
    """Renumber the support onto 0, 1, ... preserving order, keeping columns."""
    pos = {idx: i for i, idx in enumerate(support(p))}
    return {(pos[idx], col): val for (idx, col), val in p.items()}


def compatible(p: Mapping[Cell, int], q: Mapping[Cell, int]) -> bool:
    """Whether the union of the two conditions is still a function."""
    if len(p) > len(q):
        p, q = q, p
    return all(q.get(cell, val) == val for cell, val in p.items())


def merge(p: Mapping[Cell, int], q: Mapping[Cell, int]) -> Condition:
    if not compatible(p, q):
        raise DomainError("conditions disagree on a shared cell")
    out = dict(p)
    out.update(q)
    return out


def common(p: Mapping[Cell, int], q: Mapping[Cell, int]) -> Condition:
    """Cells on which both conditions are defined and agree."""
    return {cell: val for cell, val in p.items() if q.get(cell) == val}


def check_compatibility_lemma(
    conditions: Mapping[OrdSet, Mapping[Cell, int]],
) -> bool:
    """Exhaustive compatibility of all aligned pairs of a uniform family.

    Preconditions (a single shared collapse and a uniform delta system of
    supports) are verified first and raise PreconditionError naming the
    failing clause.  Once they hold, a False return would exhibit a pair
    violating the statement, i.e. a bug certificate.
    """
    if not conditions:
        raise PreconditionError("empty family of conditions")
    keys = sorted(conditions)
    collapsed = [collapse(conditions[b]) for b in keys]
    if any(c != collapsed[0] for c in collapsed[1:]):
        raise PreconditionError("constant collapse clause fails")
    supports = {b: support(conditions[b]) for b in keys}
    if verify_uniform(supports) is None:
        raise PreconditionError("uniform delta-system clause fails on the supports")
    for a, b in combinations(keys, 2):
        if aligned(a, b) is None:
            continue
        if not compatible(conditions[a], conditions[b]):
            return False
    return True


def i_possible(c: OrdSet, i: int, alpha: int) -> bool:
    """Whether alpha can replace c(i) without moving the other elements."""
    if not 0 <= i < len(c):
        raise DomainError(f"position {i} out of range")
    if i > 0 and alpha <= c[i - 1]:
        return False
    if i < len(c) - 1 and alpha >= c[i + 1]:
        return False
    return True


def replace_index(c: OrdSet, i: int, alpha: int) -> OrdSet:
    """Replace the i-th element by alpha, keeping all relative positions."""
    if not i_possible(c, i, alpha):
        raise DomainError(f"{alpha} is not {i}-possible for {c}")
    return c[:i] + (alpha,) + c[i + 1 :]


def sample_instance(
    seed: int,
    num_indices: int,
    columns: int,
    max_value: int,
    plant_arity: int | None = None,
    plant_ell: int = 0,
    entry_bound: int = 2,
) -> tuple[dict[Index, TruncFn], Optional[Family]]:
    """Deterministic pseudo-random grid functions, optionally with a planted
    family.

    The planted family is a boundary-sum family of a random lower-arity
    witness plus noise confined to columns <= plant_ell, so it is coherent
    above plant_ell by construction and admits a lower-arity witness there.
    """
    if num_indices < 1 or columns < 1 or max_value < 0:
        raise DomainError("instance shape parameters must be positive")
    rng = random.Random(seed)
    index_map: dict[Index, TruncFn] = {
        i: tuple(rng.randint(0, max_value) for _ in range(columns))
        for i in range(num_indices)
    }
    if plant_arity is None:
        return index_map, None
    if not 1 <= plant_arity <= num_indices:
        raise DomainError("plant arity must fit inside the index set")
    fam = plant_family(rng, index_map, plant_arity, plant_ell, entry_bound)
    return index_map, fam


def plant_family(
    rng: random.Random,
    index_map: Mapping[Index, TruncFn],
    arity: int,
    ell: int,
    entry_bound: int = 2,
) -> Family:
    """Coherent-above-ell family: a random witness's boundary plus low noise."""
    witness = random_witness(rng, index_map, arity - 1, entry_bound)
    fam = coboundary(witness, index_map)
    noisy = {
        t: _with_low_noise(rng, fn, ell, entry_bound)
        for t, fn in fam.table.items()
    }
    return make_family(arity, dict(index_map), noisy)


def random_witness(
    rng: random.Random,
    index_map: Mapping[Index, TruncFn],
    arity: int,
    entry_bound: int = 2,
) -> Witness:
    """Random single function (arity 0) or alternating family (arity >= 1)."""
    index_map = dict(index_map)
    if arity == 0:
        dom = region(join(list(index_map.values())))
        return SparseZFn(dom, {p: rng.randint(-entry_bound, entry_bound) for p in sorted(dom)})

    def fill(_t, dom):
        return {p: rng.randint(-entry_bound, entry_bound) for p in sorted(dom)}

    return make_family(arity, index_map, fill=fill)


def _with_low_noise(rng: random.Random, fn: SparseZFn, ell: int, bound: int) -> dict:
    vals = dict(fn.entries)
    for p in sorted(fn.domain):
        if p[0] <= ell:
            vals[p] = vals.get(p, 0) + rng.randint(-bound, bound)
    return {p: v for p, v in vals.items() if v}
