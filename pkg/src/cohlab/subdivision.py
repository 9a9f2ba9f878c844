"""Symbolic barycentric-subdivision expressions over alternating families.

Chains of nested index sets growing one element at a time play the role of
simplices of the subdivision; to each nonempty set a barycenter index is
assigned, monotone under strict inclusion.  Formal integer combinations of
boundary-sum terms are expanded recursively: the witness expression of a set
feeds the residual expression of its supersets, and under a pointwise
constant-value hypothesis on the "long" chains the residual evaluates to
zero, which is exactly the identity a same-arity witness family must satisfy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Optional, Union

from .core import (
    BudgetExceeded,
    DomainError,
    GridPoint,
    Index,
    IndexTuple,
    PreconditionError,
    Region,
    join,
    meet,
    region,
    remove_entry,
)
from .delta import OrdSet, as_ordset
from .family import Family, SparseZFn, boundary, evaluate, make_family


@dataclass(frozen=True)
class SubsetFinalSegment:
    """An inclusion chain a_1 < ... < a_m growing by one element per step.

    The last link is the ambient set; the chain is "long" when it starts at
    a singleton (and then necessarily exhausts every size).
    """

    chain: tuple[OrdSet, ...]

    def __post_init__(self) -> None:
        if not self.chain:
            raise DomainError("a segment needs at least one link")
        for prev, nxt in zip(self.chain, self.chain[1:]):
            if len(nxt) != len(prev) + 1 or not set(prev) <= set(nxt):
                raise DomainError("chain must grow by exactly one element per step")

    @property
    def top(self) -> OrdSet:
        return self.chain[-1]

    @property
    def is_long(self) -> bool:
        return len(self.chain[0]) == 1


def segments(b: Iterable[int]) -> list[SubsetFinalSegment]:
    """All subset-final segments of a nonempty set, longest chains last."""
    top = as_ordset(sorted(b))
    if not top:
        raise DomainError("segments of the empty set are undefined")
    out: list[SubsetFinalSegment] = []
    for m in range(1, len(top) + 1):
        for removals in permutations(top, m - 1):
            chain = [top]
            current = set(top)
            for r in removals:
                current = current - {r}
                chain.append(as_ordset(sorted(current)))
            out.append(SubsetFinalSegment(tuple(reversed(chain))))
    return out


@dataclass
class BarycenterAssignment:
    """A barycenter index for each nonempty set: singletons map to their own
    element, and strict inclusion strictly raises the assigned index."""

    mapping: dict[frozenset[int], Index]

    def __post_init__(self) -> None:
        self.mapping = {frozenset(a): int(e) for a, e in self.mapping.items()}
        for a, e in self.mapping.items():
            if not a:
                raise DomainError("the empty set has no barycenter")
            if len(a) == 1 and e != next(iter(a)):
                raise DomainError(f"singleton {set(a)} must map to its own element")
            if len(a) >= 2 and e <= max(a):
                raise DomainError(f"barycenter of {sorted(a)} must exceed its maximum")
        for a, ea in self.mapping.items():
            for b, eb in self.mapping.items():
                if a < b and not ea < eb:
                    raise DomainError(
                        f"monotonicity fails: {sorted(a)} < {sorted(b)} but {ea} >= {eb}"
                    )

    def of(self, a: Iterable[int]) -> Index:
        key = frozenset(a)
        if len(key) == 1:
            return next(iter(key))
        try:
            return self.mapping[key]
        except KeyError:
            raise DomainError(f"no barycenter assigned to {sorted(key)}") from None


def segment_indices(seg: SubsetFinalSegment, bary: BarycenterAssignment) -> OrdSet:
    """Vertex set attached to a segment: the chain's barycenters, plus the
    starting set itself when the segment is short."""
    eps = [bary.of(a) for a in seg.chain]
    if seg.is_long:
        return as_ordset(sorted(eps))
    return as_ordset(sorted(set(seg.chain[0]) | set(eps)))


@dataclass
class SymbolicCombo:
    """Integer combination of boundary-sum terms, keyed by index tuples.

    Zero coefficients are pruned eagerly so structural comparisons are
    canonical.
    """

    terms: dict[IndexTuple, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.terms = {tuple(t): int(c) for t, c in self.terms.items() if c != 0}

    @classmethod
    def zero(cls) -> "SymbolicCombo":
        return cls({})

    @classmethod
    def term(cls, t: IndexTuple, coeff: int = 1) -> "SymbolicCombo":
        return cls({tuple(t): coeff})

    def scale(self, c: int) -> "SymbolicCombo":
        return SymbolicCombo({t: c * v for t, v in self.terms.items()})

    def __neg__(self) -> "SymbolicCombo":
        return self.scale(-1)

    def __add__(self, other: "SymbolicCombo") -> "SymbolicCombo":
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0) + c
        return SymbolicCombo(out)

    def __sub__(self, other: "SymbolicCombo") -> "SymbolicCombo":
        return self + (-other)

    def appended(self, index: Index) -> "SymbolicCombo":
        """Append one index to every term's tuple."""
        return SymbolicCombo({t + (index,): c for t, c in self.terms.items()})


def witness_combo(a: Iterable[int], bary: BarycenterAssignment) -> SymbolicCombo:
    """Candidate-witness expression of a set of size >= 2.

    Size two is a single term, the set with its barycenter appended; larger
    sizes append the barycenter to the residual expression of the set, with
    an alternating sign.
    """
    a = as_ordset(sorted(a))
    if len(a) < 2:
        raise DomainError("witness expressions start at sets of size 2")
    if len(a) == 2:
        return SymbolicCombo.term(a + (bary.of(a),))
    sign = 1 if len(a) % 2 == 0 else -1
    return residual_combo(a, bary).scale(sign).appended(bary.of(a))


def residual_combo(b: Iterable[int], bary: BarycenterAssignment) -> SymbolicCombo:
    """Gap between a set's own term and the boundary of its witness terms.

    Evaluating this combination at a grid point measures the failure of the
    candidate witnesses on the facets to reproduce the family's boundary sum.
    """
    b = as_ordset(sorted(b))
    if len(b) < 3:
        raise DomainError("residual expressions start at sets of size 3")
    acc = SymbolicCombo.term(b)
    for i in range(len(b)):
        part = witness_combo(remove_entry(b, i), bary)
        acc = acc - (part if i % 2 == 0 else -part)
    return acc


def evaluate_combo(combo: SymbolicCombo, fam: Family) -> SparseZFn:
    """Sum of boundary sums over the terms, on the intersection of their
    regions; the empty combination is zero on the whole covered grid."""
    for t in combo.terms:
        if len(t) != fam.arity + 1:
            raise DomainError(
                f"term {t} has length {len(t)}, expected {fam.arity + 1}"
            )
    if not combo.terms:
        dom = region(join(list(fam.index_map.values())))
        if fam.cap is not None:
            dom &= region(fam.cap)
        return SparseZFn.zero(dom)
    parts = [(boundary(fam, t), c) for t, c in sorted(combo.terms.items())]
    dom = parts[0][0].domain
    for fn, _c in parts[1:]:
        dom &= fn.domain
    acc = SparseZFn.zero(dom)
    for fn, c in parts:
        acc = acc + fn.restrict(dom).scale(c)
    return acc


def evaluate_combo_at(combo: SymbolicCombo, fam: Family, point: GridPoint) -> int:
    """Pointwise value of the combination; the point must lie in every
    implicated region."""
    total = 0
    for t, c in combo.terms.items():
        if len(t) != fam.arity + 1:
            raise DomainError(f"term {t} has the wrong length")
        for i in range(len(t)):
            fn = evaluate(fam, remove_entry(t, i))
            if point not in fn.domain:
                raise DomainError(f"point {point} outside the region of {remove_entry(t, i)}")
            v = fn.entries.get(point, 0)
            if i % 2:
                v = -v
            total += c * v
    return total


def combo_matches_segment_shape(
    combo: SymbolicCombo,
    base_sets: Iterable[OrdSet],
    bary: BarycenterAssignment,
    lead: OrdSet | None = None,
) -> bool:
    """Every term must be the vertex tuple of a short segment of one of the
    base sets; an optional lead term must appear with coefficient one."""
    allowed = set()
    for base in base_sets:
        for seg in segments(base):
            if not seg.is_long:
                allowed.add(segment_indices(seg, bary))
    for t, c in combo.terms.items():
        if lead is not None and t == lead:
            if c != 1:
                return False
            continue
        if t not in allowed:
            return False
    if lead is not None and combo.terms.get(lead, 0) != 1:
        return False
    return True


def check_segment_shape(n: int, b: Iterable[int], bary: BarycenterAssignment) -> bool:
    """Structural form of the expansions at b: the residual is the b-term
    plus short-segment terms of its facets, and the witness expression of b
    consists of short-segment terms of b itself."""
    b = as_ordset(sorted(b))
    if len(b) != n + 1:
        raise DomainError(f"expected a set of size {n + 1}")
    if len(b) >= 2:
        wit = witness_combo(b, bary)
        if not combo_matches_segment_shape(wit, [b], bary):
            return False
    if len(b) >= 3:
        res = residual_combo(b, bary)
        facets = [remove_entry(b, i) for i in range(len(b))]
        if not combo_matches_segment_shape(res, facets, bary, lead=b):
            return False
    return True


def plant_cancellation_instance(
    seed: int,
    n: int,
    w: int,
    columns: int = 2,
    rows: int = 2,
) -> tuple[Family, BarycenterAssignment, OrdSet, GridPoint]:
    """Deterministic instance satisfying both cancellation hypotheses.

    Ground set b = {0..n}; every nonempty subset of size >= 2 gets a fresh
    barycenter index, blocked by size so monotonicity is structural.  All
    grid functions are the full constant grid, so the membership hypothesis
    holds everywhere.  The family is a random witness's boundary plus a
    bump of height w at the designated point, placed on the tuples of
    chain-barycenters so that every long segment's value there is exactly w
    and every other point sees the constant value zero.
    """
    import random as _random

    if n < 2:
        raise DomainError("cancellation instances need arity at least 2")
    rng = _random.Random(seed)
    ground = tuple(range(n + 1))
    mapping: dict[frozenset[int], Index] = {}
    next_id = n + 1
    for size in range(2, n + 2):
        for a in combinations(ground, size):
            mapping[frozenset(a)] = next_id
            next_id += 1
    bary = BarycenterAssignment(dict(mapping))
    full = tuple(rows - 1 for _ in range(columns))
    index_map = {i: full for i in range(next_id)}
    point = (columns - 1, 0)

    witness = make_family(
        n - 1,
        index_map,
        fill=lambda _t, dom: {p: rng.randint(-2, 2) for p in sorted(dom)},
    )
    values = {
        t: dict(boundary(witness, t).entries)
        for t in combinations(range(next_id), n)
    }
    if w != 0:
        # One bump per chain of barycenters; the ground vertex of a long
        # segment never appears in these tuples, so exactly the leading
        # removal survives and every long segment evaluates to w.
        tops = frozenset(ground)
        for chain_tail in _chains_above(tops):
            t = tuple(sorted(bary.of(a) for a in chain_tail))
            vals = values[t]
            vals[point] = vals.get(point, 0) + w
    return make_family(n, index_map, values), bary, ground, point


def _chains_above(top: frozenset[int]) -> list[tuple[frozenset[int], ...]]:
    """All inclusion chains a_2 < ... < a_(m) = top with |a_2| = 2."""
    out: list[tuple[frozenset[int], ...]] = []

    def descend(chain: tuple[frozenset[int], ...]) -> None:
        head = chain[0]
        if len(head) == 2:
            out.append(chain)
            return
        for x in sorted(head):
            descend((head - {x},) + chain)

    descend((top,))
    return out


@dataclass
class PointwiseBarycenters:
    """Barycenter indices chosen separately at every grid point.

    ``cells`` maps (set, point) to an index; ``threshold`` is the column
    below which candidate witnesses are simply zero; ``pools`` are the
    disjoint increasing index blocks feeding sets of each size.
    """

    cells: dict[tuple[frozenset[int], GridPoint], Index]
    threshold: int
    pools: tuple[OrdSet, ...] = ()

    def __post_init__(self) -> None:
        self.cells = {(frozenset(a), tuple(p)): int(e) for (a, p), e in self.cells.items()}

    def at(self, point: GridPoint) -> BarycenterAssignment:
        mapping = {a: e for (a, p), e in self.cells.items() if p == point and len(a) >= 2}
        return BarycenterAssignment(mapping)


def check_cancellation(
    b: Iterable[int],
    bary: Union[BarycenterAssignment, PointwiseBarycenters],
    fam: Family,
    w: int,
    point: GridPoint,
) -> bool:
    """Residual value at one grid point, under the two hypotheses.

    Hypotheses, verified before anything is computed: every long segment's
    vertex tuple evaluates to the single integer w at the point, and the
    point lies inside the region of every involved barycenter's grid
    function.  Under them the residual must vanish; returning False would be
    a bug certificate, not an expected outcome.
    """
    b = as_ordset(sorted(b))
    if isinstance(bary, PointwiseBarycenters):
        bary = bary.at(point)
    for size in range(1, len(b) + 1):
        for a in combinations(b, size):
            eps = bary.of(a)
            if eps not in fam.index_map:
                raise PreconditionError(f"barycenter {eps} of {a} is not an instance index")
            if point not in region(fam.index_map[eps]):
                raise PreconditionError(
                    f"membership hypothesis fails: {point} outside the region of index {eps}"
                )
    for seg in segments(b):
        if not seg.is_long:
            continue
        val = evaluate_combo_at(SymbolicCombo.term(segment_indices(seg, bary)), fam, point)
        if val != w:
            raise PreconditionError(
                f"long-segment hypothesis fails at {seg.chain}: value {val} != {w}"
            )
    return evaluate_combo_at(residual_combo(b, bary), fam, point) == 0


def build_candidate(
    fam: Family,
    cells: PointwiseBarycenters,
    subset: Iterable[Index],
) -> Family:
    """Same-arity candidate witness over a subset of the index set.

    Values are zero at and below the threshold column; above it each member
    takes the pointwise value of its witness expression, built with the
    barycenters assigned at that point.  Arity one degenerates to the zero
    family.
    """
    subset = sorted(set(subset))
    index_map = {i: fam.index_map[i] for i in subset}
    n = fam.arity

    def fill(t: IndexTuple, dom: Region) -> dict[GridPoint, int]:
        if n == 1:
            return {}
        vals: dict[GridPoint, int] = {}
        for x in sorted(dom):
            if x[0] <= cells.threshold:
                continue
            combo = witness_combo(t, cells.at(x))
            v = evaluate_combo_at(combo, fam, x)
            if v:
                vals[x] = v
        return vals

    return make_family(n, index_map, fill=fill)


def search_pointwise_barycenters(
    fam: Family,
    subset: Iterable[Index],
    pools: Iterable[Iterable[Index]],
    threshold: int,
    budget: int = 100_000,
) -> Optional[PointwiseBarycenters]:
    """Backtracking search for per-point barycenters satisfying every
    cancellation hypothesis.

    Pools must be disjoint increasing blocks with the ground subset inside
    the first one; candidate indices for a set of size s come from pool
    s - 1 and must contain the point in their region.  Points are
    independent, so the search runs point by point; exhausting a point's
    candidates returns None, while running past the budget raises.
    """
    subset = as_ordset(sorted(set(subset)))
    pools = tuple(as_ordset(sorted(p)) for p in pools)
    n = fam.arity
    if len(pools) != n + 1:
        raise DomainError(f"need {n + 1} pools for arity {n}")
    for a, b in zip(pools, pools[1:]):
        if a and b and max(a) >= min(b):
            raise DomainError("pools must be increasing disjoint blocks")
    if not set(subset) <= set(pools[0]):
        raise DomainError("the ground subset must lie in the first pool")
    for pool in pools:
        if any(i not in fam.index_map for i in pool):
            raise DomainError("pools contain unknown indices")
    if n == 1:
        return PointwiseBarycenters({}, threshold, pools)

    needed_sets = [
        as_ordset(c)
        for size in range(2, n + 2)
        for c in combinations(subset, size)
    ]
    tops = [c for c in combinations(subset, n + 1)]
    grid = sorted(region(join([fam.index_map[i] for i in subset])))
    cells: dict[tuple[frozenset[int], GridPoint], Index] = {}
    spent = 0

    for x in grid:
        if x[0] <= threshold:
            continue
        local = [a for a in needed_sets if x in region(meet([fam.index_map[i] for i in a]))]
        if not local:
            continue
        candidates = {
            a: [e for e in pools[len(a) - 1] if x in region(fam.index_map[e])]
            for a in local
        }
        if any(not c for c in candidates.values()):
            return None
        assignment: dict[frozenset[int], Index] = {}

        def consistent_here() -> bool:
            bary = BarycenterAssignment(dict(assignment))
            for top in tops:
                if x not in region(meet([fam.index_map[i] for i in top])):
                    continue
                vals = set()
                for seg in segments(top):
                    if seg.is_long:
                        vals.add(
                            evaluate_combo_at(
                                SymbolicCombo.term(segment_indices(seg, bary)), fam, x
                            )
                        )
                if len(vals) > 1:
                    return False
            return True

        def dfs(pos: int) -> bool:
            nonlocal spent
            if pos == len(local):
                spent += 1
                if spent > budget:
                    raise BudgetExceeded(f"tried {spent - 1} full assignments")
                return consistent_here()
            a = local[pos]
            for e in candidates[a]:
                assignment[frozenset(a)] = e
                if dfs(pos + 1):
                    return True
                del assignment[frozenset(a)]
            return False

        if not dfs(0):
            return None
        for a, e in assignment.items():
            cells[(a, x)] = e

    return PointwiseBarycenters(cells, threshold, pools)
