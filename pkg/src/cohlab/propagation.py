"""Staged propagation of a witness from a subset to the whole index set.

Given an arity-n family over X with a lower-arity witness over a subset A,
each stage k attaches to every increasing k-tuple of X a derived family over
A, capped below the tuple's meet; an injected solver produces witnesses for
those, and the final stage assembles a witness for the whole family.  The
solver is a callback so the pipeline works against any oracle honoring the
contract; the built-in one routes through the zero-extension trick and the
integer solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

from .core import (
    DomainError,
    Index,
    IndexTuple,
    PreconditionError,
    TruncFn,
    join,
    meet,
    region,
    remove_entry,
)
from .family import (
    Family,
    SparseZFn,
    Witness,
    evaluate,
    is_coherent,
    is_trivialization_type1,
    make_family,
    restrict,
)
from .cochain import solve_typeI

LowerSolver = Callable[[Family], Optional[tuple[Witness, int]]]


def cap(fam: Family, g: TruncFn) -> Family:
    """Cap every member's domain by the region of g."""
    if len(g) != fam.columns:
        raise DomainError("cap must share the family's column bound")
    if fam.cap is not None:
        g = meet([fam.cap, g])
    values = {}
    for t, fn in fam.table.items():
        dom = region(meet([fam.index_map[i] for i in t] + [g]))
        values[t] = {p: v for p, v in fn.entries.items() if p in dom}
    return make_family(fam.arity, dict(fam.index_map), values, cap=g)


def extend_by_zero(fam: Family) -> Family:
    """Remove the cap, filling the uncovered part of each domain with zeros."""
    if fam.cap is None:
        return fam
    values = {t: dict(fn.entries) for t, fn in fam.table.items()}
    return make_family(fam.arity, dict(fam.index_map), values)


def cap_witness(witness: Witness, index_map: dict[Index, TruncFn], g: TruncFn) -> Witness:
    """Restrict a full-grid witness below g, as the zero-extension argument
    prescribes."""
    if isinstance(witness, SparseZFn):
        dom = region(meet([join(list(index_map.values())), g]))
        return witness.restrict(dom)
    values = {}
    for t, fn in witness.table.items():
        dom = region(meet([witness.index_map[i] for i in t] + [g]))
        values[t] = {p: v for p, v in fn.entries.items() if p in dom}
    return make_family(witness.arity, dict(witness.index_map), values, cap=g)


def solve_below(bfam: Family) -> Optional[tuple[Witness, int]]:
    """Built-in lower solver: zero-extend, sweep thresholds, cap the witness.

    Returns the witness together with the smallest threshold at which it
    works, or None when no threshold up to the column bound is feasible.
    """
    ext = extend_by_zero(bfam)
    for ell in range(0, bfam.columns + 1):
        w = solve_typeI(ext, ell)
        if w is not None:
            if bfam.cap is not None:
                w = cap_witness(w, dict(bfam.index_map), bfam.cap)
            return w, ell
    return None


@dataclass
class Ladder:
    """Stage-k data: one witness per increasing (k-1)-tuple of the full set."""

    stage: int
    data: dict[IndexTuple, Witness] = field(default_factory=dict)


def sigma_step(
    fam: Family,
    ladder: Ladder,
    fvec: IndexTuple,
    avec: IndexTuple,
) -> SparseZFn:
    """One derived value: the family member at (avec, fvec) corrected by the
    alternating sum of the stage's witnesses over removals from fvec.

    Both tuples must be strictly increasing; the sign in front of the
    correction alternates with the stage.
    """
    n = fam.arity
    k = len(fvec)
    if ladder.stage != k:
        raise DomainError(f"ladder stage {ladder.stage} does not match a {k}-tuple")
    if len(avec) != n - k:
        raise DomainError(f"expected {n - k} subset indices, got {len(avec)}")
    acc = evaluate(fam, avec + fvec)
    outer = 1 if (n - k + 1) % 2 == 0 else -1
    for i in range(k):
        g = remove_entry(fvec, i)
        if g not in ladder.data:
            raise DomainError(f"ladder is missing the witness at {g}")
        tau = ladder.data[g]
        term = tau if isinstance(tau, SparseZFn) else evaluate(tau, avec)
        sign = outer * (1 if i % 2 == 0 else -1)
        # Addition intersects domains; the first summand's region is the
        # smallest one, so the result stays on the full meet-region.
        acc = acc + term.scale(sign)
    return acc


def stage_family(fam: Family, ladder: Ladder, fvec: IndexTuple, subset: tuple[Index, ...]) -> Family:
    """The derived family over the subset attached to one tuple, capped below
    the tuple's meet."""
    n = fam.arity
    k = len(fvec)
    if not 1 <= k < n:
        raise DomainError("stage tuples have length between 1 and arity - 1")
    g = meet([fam.index_map[i] for i in fvec])
    index_map = {i: fam.index_map[i] for i in subset}
    values = {
        avec: dict(sigma_step(fam, ladder, fvec, avec).entries)
        for avec in combinations(sorted(subset), n - k)
    }
    return make_family(n - k, index_map, values, cap=g)


def verify_sigma_coherent(
    fam: Family,
    ladder: Ladder,
    fvec: IndexTuple,
    subset: tuple[Index, ...],
    ell: int,
) -> bool:
    """Coherence above ell of the derived family at one tuple; vacuous when
    the derived arity would be zero."""
    if fam.arity - len(fvec) == 0:
        return True
    return is_coherent(stage_family(fam, ladder, fvec, subset), ell)


@dataclass
class PropagationOutcome:
    """Result of a propagation run.

    ``witness`` is None when some stage's solve failed or the assembled
    witness did not verify; ``failure`` then names the stage and tuple.
    ``threshold`` is the maximum of the input threshold and every stage
    solver's reported threshold.
    """

    witness: Optional[Witness]
    threshold: int
    failure: Optional[tuple] = None
    stage_checks: list[tuple[int, IndexTuple, bool]] = field(default_factory=list)
    ladders: dict[int, Ladder] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.witness is not None


def propagate(
    fam: Family,
    subset,
    t1: Witness,
    ell: int,
    lower_solver: LowerSolver | None = None,
    check_stages: bool = True,
) -> PropagationOutcome:
    """Extend a subset witness to the whole family, stage by stage.

    Preconditions: arity at least 2 and ``t1`` witnesses the restriction to
    the subset above ``ell``.  Every derived family is handed to the solver;
    a None from it aborts with the failing (stage, tuple).  The assembled
    final witness is returned only after passing the full checker at the
    accumulated threshold.
    """
    n = fam.arity
    if n < 2:
        raise DomainError("propagation needs arity at least 2")
    subset = tuple(sorted(set(subset)))
    if not is_trivialization_type1(restrict(fam, subset), t1, ell):
        raise PreconditionError("t1 does not witness the restricted family at ell")
    solver = lower_solver if lower_solver is not None else solve_below
    ladder = Ladder(1, {(): t1})
    outcome = PropagationOutcome(None, ell, ladders={1: ladder})
    ids = sorted(fam.index_map)
    for k in range(1, n):
        nxt = Ladder(k + 1, {})
        for fvec in combinations(ids, k):
            derived = stage_family(fam, ladder, fvec, subset)
            if check_stages:
                outcome.stage_checks.append(
                    (k, fvec, is_coherent(derived, outcome.threshold))
                )
            solved = solver(derived)
            if solved is None:
                outcome.failure = (k, fvec)
                return outcome
            witness, wl = solved
            nxt.data[fvec] = witness
            outcome.threshold = max(outcome.threshold, wl)
        ladder = nxt
        outcome.ladders[k + 1] = ladder
    final_values = {}
    for fvec in combinations(ids, n - 1):
        fn = ladder.data[fvec]
        if not isinstance(fn, SparseZFn):
            raise AssertionError("final stage entries must be single functions")
        final_values[fvec] = dict(fn.entries)
    witness = make_family(n - 1, dict(fam.index_map), final_values)
    if not is_trivialization_type1(fam, witness, outcome.threshold):
        outcome.failure = (n, None)
        return outcome
    outcome.witness = witness
    return outcome
