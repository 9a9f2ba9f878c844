"""Aligned ordinal sets, uniform multi-dimensional delta systems, and search.

Ground sets are finite strictly increasing integer tuples standing in for
ordinals.  A uniform n-dimensional system assigns a set u_b to every
n-subset b of the ground set so that a single order type and a single
root-per-alignment-pattern govern every aligned pair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Hashable, Mapping, Optional

from .core import BudgetExceeded, DomainError

OrdSet = tuple[int, ...]

Pattern = frozenset[int]


def as_ordset(xs) -> OrdSet:
    t = tuple(int(x) for x in xs)
    if any(a >= b for a, b in zip(t, t[1:])):
        raise DomainError(f"not strictly increasing: {t}")
    return t


def positions(a: OrdSet, pattern) -> OrdSet:
    """The subset of ``a`` occupying the given positions."""
    return tuple(a[i] for i in sorted(pattern))


def aligned(a: OrdSet, b: OrdSet) -> Optional[Pattern]:
    """Agreement pattern of two sets, or None when they are not aligned.

    Aligned means equal order type with every common element at the same
    position in both; the returned pattern is the set of those positions.
    """
    if len(a) != len(b):
        return None
    pos_a = {x: i for i, x in enumerate(a)}
    common = set(a) & set(b)
    pos_b = {x: i for i, x in enumerate(b)}
    if any(pos_a[x] != pos_b[x] for x in common):
        return None
    return frozenset(pos_a[x] for x in common)


@dataclass
class UniformDeltaSystem:
    """A verified family with one order type and alignment-determined roots."""

    dimension: int
    ground: OrdSet
    family: dict[OrdSet, OrdSet]
    order_type: int
    roots: dict[Pattern, Pattern]


def verify_uniform(family: Mapping[OrdSet, OrdSet]) -> Optional[UniformDeltaSystem]:
    """Check the three uniformity clauses over every aligned pair.

    Roots are extracted from witness pairs; any disagreement between two
    witnesses of the same pattern, a non-aligned image pair, or a failure of
    the root lattice identity returns None.
    """
    if not family:
        return None
    ground = as_ordset(sorted({x for b in family for x in b}))
    dims = {len(b) for b in family}
    if len(dims) != 1:
        return None
    n = dims.pop()
    if set(family) != set(combinations(ground, n)):
        return None
    rhos = {len(u) for u in family.values()}
    if len(rhos) != 1:
        return None
    rho = rhos.pop()
    keys = sorted(family)
    roots: dict[Pattern, Pattern] = {}
    for a, b in combinations(keys, 2):
        pat = aligned(a, b)
        if pat is None:
            continue
        upat = aligned(family[a], family[b])
        if upat is None:
            return None
        if roots.setdefault(pat, upat) != upat:
            return None
    roots[frozenset(range(n))] = frozenset(range(rho))
    for m0 in roots:
        for m1 in roots:
            both = m0 & m1
            if both in roots and roots[both] != roots[m0] & roots[m1]:
                return None
    return UniformDeltaSystem(n, ground, dict(family), rho, roots)


def derive_root(sys: UniformDeltaSystem, a: OrdSet) -> OrdSet:
    """Root attached to a shorter prefix tuple, via any end-extension.

    Every end-extension of ``a`` inside the ground set must give the same
    answer; all of them are checked, not just one.
    """
    m = len(a)
    if m >= sys.dimension:
        raise DomainError("prefix must be shorter than the system dimension")
    pattern = frozenset(range(m))
    if pattern not in sys.roots:
        raise DomainError(f"no witnessed root for the initial pattern of size {m}")
    tail_pool = [x for x in sys.ground if not a or x > a[-1]]
    if len(tail_pool) < sys.dimension - m:
        raise DomainError("not enough room above the prefix to extend")
    root = None
    for tail in combinations(tail_pool, sys.dimension - m):
        b = a + tail
        candidate = positions(sys.family[b], sys.roots[pattern])
        if root is None:
            root = candidate
        elif root != candidate:
            raise AssertionError(f"root at {a} depends on the extension {b}")
    assert root is not None
    return root


def addable(ground: OrdSet, a: OrdSet, k: int, alpha: int) -> bool:
    """Whether alpha slots into position k of ``a`` as a new element."""
    return alpha in ground and alpha not in a and sum(1 for x in a if x < alpha) == k


def addable_root(sys: UniformDeltaSystem, a: OrdSet, k: int) -> OrdSet:
    """Common root of the sets attached to all one-element k-extensions of a.

    Requires the system dimension to exceed len(a); verifies both that the
    root is independent of the added element and that the extension family
    forms a sunflower with that root.
    """
    s = len(a)
    if not 0 <= k <= s:
        raise DomainError(f"position {k} out of range for a tuple of length {s}")
    if s + 1 >= sys.dimension:
        raise DomainError("system dimension leaves no room above the extended tuple")
    pattern = frozenset(range(s + 1)) - {k}
    if pattern not in sys.roots:
        raise DomainError(f"no witnessed root for pattern {sorted(pattern)}")
    candidates = []
    for alpha in sys.ground:
        if not addable(sys.ground, a, k, alpha):
            continue
        extended = tuple(sorted(a + (alpha,)))
        tail_pool = [x for x in sys.ground if x > extended[-1]]
        if len(tail_pool) < sys.dimension - s - 1:
            continue
        candidates.append((alpha, extended, tail_pool))
    if not candidates:
        raise DomainError(f"no usable {k}-addable element for {a}")
    root = None
    for _alpha, extended, tail_pool in candidates:
        for tail in combinations(tail_pool, sys.dimension - s - 1):
            b = extended + tail
            value = positions(sys.family[b], sys.roots[pattern])
            if root is None:
                root = value
            elif root != value:
                raise AssertionError(f"root at ({a}, {k}) depends on the witness {b}")
    assert root is not None
    extension_sets = [set(derive_root(sys, ext)) for _alpha, ext, _pool in candidates]
    for u1, u2 in combinations(extension_sets, 2):
        if u1 & u2 != set(root):
            raise AssertionError(f"extension family at ({a}, {k}) is not a sunflower on {root}")
    return root


def search_delta(
    coloring: Mapping[OrdSet, Hashable] | Callable[[OrdSet], Hashable],
    family: Mapping[OrdSet, OrdSet],
    target: int,
    budget: int | None = None,
) -> Optional[tuple[OrdSet, Hashable, UniformDeltaSystem]]:
    """First ground subset (in lexicographic order) carrying a monochromatic
    uniform subsystem, or None.

    ``budget`` bounds the number of candidate subsets examined; running past
    it raises BudgetExceeded rather than silently truncating the search.
    """
    color_of = coloring.__getitem__ if isinstance(coloring, Mapping) else coloring
    universe = as_ordset(sorted({x for b in family for x in b}))
    dims = {len(b) for b in family}
    if len(dims) != 1:
        raise DomainError("family keys must share one dimension")
    n = dims.pop()
    if target < n:
        raise DomainError("target size must be at least the dimension")
    examined = 0
    for cand in combinations(universe, target):
        examined += 1
        if budget is not None and examined > budget:
            raise BudgetExceeded(f"examined {examined - 1} candidates")
        subsets = list(combinations(cand, n))
        colors = {color_of(b) for b in subsets}
        if len(colors) != 1:
            continue
        sub = {b: family[b] for b in subsets}
        cert = verify_uniform(sub)
        if cert is not None:
            return cand, colors.pop(), cert
    return None


def roots_from_slot_owners(owners: list[Pattern], n: int) -> dict[Pattern, Pattern]:
    """Roots map induced by assigning each slot a set of owning positions.

    Slot t survives in the root of pattern m exactly when its owners all lie
    in m; maps built this way always satisfy the intersection identity.
    """
    rho = len(owners)
    out: dict[Pattern, Pattern] = {}
    subsets = [frozenset(c) for r in range(n + 1) for c in combinations(range(n), r)]
    for m in subsets:
        out[m] = frozenset(t for t in range(rho) if owners[t] <= m)
    return out


def _owners_from_roots(roots: Mapping[Pattern, Pattern], n: int, rho: int) -> list[Pattern]:
    full = frozenset(range(n))
    owners: list[Pattern] = []
    for t in range(rho):
        containing = [m for m, r in roots.items() if t in r]
        if not containing:
            raise DomainError(f"slot {t} appears in no root")
        acc = full
        for m in containing:
            acc = acc & m
        owners.append(acc)
    return owners


def generate_uniform(
    seed: int,
    n: int,
    h: int,
    rho: int,
    roots_spec: Mapping[Pattern, Pattern],
) -> UniformDeltaSystem:
    """Deterministic uniform system realizing a consistent roots map.

    The spec must be total on the subsets of range(n), send the full pattern
    to all of range(rho), and respect the intersection identity; anything
    else is rejected as inconsistent.
    """
    if n < 1 or h < n or rho < 0:
        raise DomainError("need n >= 1, h >= n, rho >= 0")
    subsets = [frozenset(c) for r in range(n + 1) for c in combinations(range(n), r)]
    roots = {frozenset(m): frozenset(r) for m, r in roots_spec.items()}
    if set(roots) != set(subsets):
        raise DomainError("roots spec must cover every subset of range(n)")
    if roots[frozenset(range(n))] != frozenset(range(rho)):
        raise DomainError("the full pattern must map onto all slots")
    if any(not r <= frozenset(range(rho)) for r in roots.values()):
        raise DomainError("root entries must be slot positions below rho")
    for m0 in subsets:
        for m1 in subsets:
            if roots[m0 & m1] != roots[m0] & roots[m1]:
                raise DomainError(
                    f"intersection identity fails at {sorted(m0)} and {sorted(m1)}"
                )
    owners = _owners_from_roots(roots, n, rho)
    if roots != roots_from_slot_owners(owners, n):
        raise DomainError("roots spec is not realizable by slot ownership")

    rng = random.Random(seed)
    ground = as_ordset(sorted(rng.sample(range(1, 4 * h + 2), h)))
    base = max(ground) + 1
    block = base ** n

    def slot_value(t: int, b: OrdSet) -> int:
        code = 0
        for i in sorted(owners[t]):
            code = code * base + b[i]
        return t * block + code

    family = {
        b: tuple(slot_value(t, b) for t in range(rho))
        for b in combinations(ground, n)
    }
    cert = verify_uniform(family)
    if cert is None:
        raise AssertionError("generated family failed verification")
    for m, r in cert.roots.items():
        if roots[m] != r:
            raise AssertionError(f"witnessed root at {sorted(m)} disagrees with the spec")
    return UniformDeltaSystem(n, ground, family, rho, dict(roots))
