"""Integer cochain complexes of alternating families, with exact cohomology.

Three systems are built over one index set: the full product system ("B"),
the subcomplex of functions supported in columns <= ell ("A"), and the
quotient supported in columns > ell ("BmodA").  Degree-n cochains are stored
as arity-(n + 1) families; matrices of the differentials are assembled in a
reproducible basis order and reduced over the integers by Smith normal form,
so every rank and torsion coefficient is exact.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .core import (
    DomainError,
    GridPoint,
    Index,
    IndexTuple,
    Region,
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
    boundary,
    evaluate,
    is_coherent,
    is_trivialization_type1,
    is_trivialization_type2,
    make_family,
    zero_below,
)

SYSTEM_A = "A"
SYSTEM_B = "B"
SYSTEM_QUOT = "BmodA"
SYSTEMS = (SYSTEM_A, SYSTEM_B, SYSTEM_QUOT)


def _admits(system: str, split: int, point: GridPoint) -> bool:
    if system == SYSTEM_B:
        return True
    if system == SYSTEM_A:
        return point[0] <= split
    if system == SYSTEM_QUOT:
        return point[0] > split
    raise DomainError(f"unknown system tag {system!r}")


@dataclass
class CochainSpace:
    """Enumerated basis of degree-n cochains for one system tag.

    Basis elements are (tuple, point) pairs: tuples are the increasing
    (n + 1)-tuples in lexicographic order, points of each tuple's meet-region
    in column-major order, filtered by the tag's column split.
    """

    system: str
    degree: int
    index_map: dict[Index, TruncFn]
    split: int
    basis: list[tuple[IndexTuple, GridPoint]] = field(init=False)
    position: dict[tuple[IndexTuple, GridPoint], int] = field(init=False)

    def __post_init__(self) -> None:
        if self.degree < 0:
            raise DomainError("cochain degree must be nonnegative")
        if self.system not in SYSTEMS:
            raise DomainError(f"unknown system tag {self.system!r}")
        ids = sorted(self.index_map)
        self.basis = []
        for t in combinations(ids, self.degree + 1):
            dom = region(meet([self.index_map[i] for i in t]))
            for p in sorted(dom):
                if _admits(self.system, self.split, p):
                    self.basis.append((t, p))
        self.position = {bp: i for i, bp in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def successor(self) -> "CochainSpace":
        return CochainSpace(self.system, self.degree + 1, self.index_map, self.split)

    def to_vector(self, fam: Family) -> np.ndarray:
        """Read the admitted coordinates of an arity-(degree + 1) family.

        Coordinates outside the tag's column split are dropped, which is the
        quotient projection for BmodA and a support assumption for A.
        """
        if fam.arity != self.degree + 1:
            raise DomainError(f"expected a family of arity {self.degree + 1}")
        vec = np.zeros(self.dim, dtype=np.int64)
        for i, (t, p) in enumerate(self.basis):
            vec[i] = fam.table[t].entries.get(p, 0)
        return vec

    def from_vector(self, vec: np.ndarray) -> Family:
        values: dict[IndexTuple, dict[GridPoint, int]] = {}
        for i, (t, p) in enumerate(self.basis):
            v = int(vec[i])
            if v:
                values.setdefault(t, {})[p] = v
        return make_family(self.degree + 1, self.index_map, values)


@dataclass
class IntMatrix:
    """Dense integer matrix with basis labels on rows and columns."""

    data: np.ndarray
    row_labels: list
    col_labels: list

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def differential(space: CochainSpace) -> IntMatrix:
    """Matrix of the degree-raising map from ``space`` to its successor.

    Entry at row (t, x), column (t minus its i-th index, x) is (-1)^i.
    Removing an entry of an increasing tuple keeps it increasing, so no
    sign-extension is needed beyond the alternating removal signs.
    """
    target = space.successor()
    mat = np.zeros((target.dim, space.dim), dtype=np.int64)
    for r, (t, x) in enumerate(target.basis):
        for i in range(len(t)):
            key = (remove_entry(t, i), x)
            c = space.position.get(key)
            if c is None:
                # x lies in the smaller meet-region, so it is admitted for
                # every removal; absence can only mean a split mismatch.
                raise AssertionError(f"missing source basis element {key}")
            mat[r, c] += 1 if i % 2 == 0 else -1
    return IntMatrix(mat, list(target.basis), list(space.basis))


def exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over Python integers (no fixed-width overflow)."""
    return np.dot(a.astype(object), b.astype(object))


@dataclass
class SmithForm:
    """Diagonalization U @ M @ V = D with unimodular U, V.

    ``invariants`` lists the nonzero diagonal entries in divisibility order.
    """

    invariants: list[int]
    left: np.ndarray
    right: np.ndarray
    diag: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.invariants)

    @property
    def torsion(self) -> list[int]:
        return [d for d in self.invariants if d > 1]

    def reproduces(self, m: np.ndarray) -> bool:
        return bool(np.array_equal(exact_matmul(exact_matmul(self.left, m), self.right), self.diag))


def _snf_reduce(a: list[list[int]], u: list[list[int]] | None, v: list[list[int]] | None) -> list[int]:
    """In-place Smith reduction of ``a``; row/col transforms mirrored into u, v."""
    m = len(a)
    n = len(a[0]) if m else 0

    def swap_rows(i: int, j: int) -> None:
        a[i], a[j] = a[j], a[i]
        if u is not None:
            u[i], u[j] = u[j], u[i]

    def swap_cols(i: int, j: int) -> None:
        for row in a:
            row[i], row[j] = row[j], row[i]
        if v is not None:
            for row in v:
                row[i], row[j] = row[j], row[i]

    def add_row(dst: int, src: int, q: int) -> None:
        ad, asrc = a[dst], a[src]
        for k in range(n):
            ad[k] += q * asrc[k]
        if u is not None:
            ud, usrc = u[dst], u[src]
            for k in range(m):
                ud[k] += q * usrc[k]

    def add_col(dst: int, src: int, q: int) -> None:
        for row in a:
            row[dst] += q * row[src]
        if v is not None:
            for row in v:
                row[dst] += q * row[src]

    invariants: list[int] = []
    t = 0
    limit = min(m, n)
    while t < limit:
        # Smallest-magnitude pivot keeps coefficient growth mild.
        pivot = None
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best):
                    best = abs(x)
                    pivot = (i, j)
                    if best == 1:
                        break
            if best == 1:
                break
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        while True:
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // a[t][t]))
            if any(a[i][t] for i in range(t + 1, m)):
                # Residues shrank; move a smaller pivot up and repeat.
                i = min(
                    (i for i in range(t, m) if a[i][t]),
                    key=lambda i: abs(a[i][t]),
                )
                if i != t:
                    swap_rows(t, i)
                continue
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // a[t][t]))
            if any(a[t][j] for j in range(t + 1, n)):
                j = min(
                    (j for j in range(t, n) if a[t][j]),
                    key=lambda j: abs(a[t][j]),
                )
                if j != t:
                    swap_cols(t, j)
                continue
            d = a[t][t]
            offender = None
            for i in range(t + 1, m):
                row = a[i]
                for j in range(t + 1, n):
                    if row[j] % d:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(t, offender, 1)
        if a[t][t] < 0:
            for j in range(n):
                a[t][j] = -a[t][j]
            if u is not None:
                for j in range(m):
                    u[t][j] = -u[t][j]
        invariants.append(a[t][t])
        t += 1
    return invariants


def smith_normal_form(mat: Union[IntMatrix, np.ndarray]) -> SmithForm:
    """Full Smith normal form with unimodular transform certificates."""
    data = mat.data if isinstance(mat, IntMatrix) else np.asarray(mat)
    m, n = data.shape
    a = [[int(x) for x in row] for row in data]
    u = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    v = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    invariants = _snf_reduce(a, u, v)
    return SmithForm(
        invariants,
        np.array(u, dtype=object).reshape(m, m),
        np.array(v, dtype=object).reshape(n, n),
        np.array(a, dtype=object).reshape(m, n),
    )


def invariant_factors(mat: Union[IntMatrix, np.ndarray]) -> list[int]:
    """Invariant factors only, skipping transform bookkeeping (much faster)."""
    data = mat.data if isinstance(mat, IntMatrix) else np.asarray(mat)
    a = [[int(x) for x in row] for row in data]
    return _snf_reduce(a, None, None)


@dataclass
class CohomologyReport:
    degree: int
    rank: int
    torsion: list[int]

    def is_trivial(self) -> bool:
        return self.rank == 0 and not self.torsion

    def to_json(self) -> dict:
        return {"degree": self.degree, "rank": self.rank, "torsion": list(self.torsion)}


def cohomology(system: str, index_map: Mapping[Index, TruncFn], split: int, degree: int) -> CohomologyReport:
    """Kernel-mod-image report at one degree: free rank and torsion list."""
    index_map = dict(index_map)
    space = CochainSpace(system, degree, index_map, split)
    if space.dim == 0:
        return CohomologyReport(degree, 0, [])
    rank_out = len(invariant_factors(differential(space)))
    if degree == 0:
        rank_in = 0
        torsion: list[int] = []
    else:
        below = CochainSpace(system, degree - 1, index_map, split)
        inv = invariant_factors(differential(below))
        rank_in = len(inv)
        torsion = [d for d in inv if d > 1]
    rank = space.dim - rank_out - rank_in
    if rank < 0:
        raise AssertionError("negative rank: differential matrices are inconsistent")
    return CohomologyReport(degree, rank, torsion)


def is_cocycle(fam: Family) -> bool:
    """Exact vanishing of every boundary sum, on every column."""
    return is_coherent(fam, -1)


def contracting_homotopy(
    cocycle: Family,
    choice: Mapping[GridPoint, Index] | Callable[[GridPoint], Index],
) -> Family:
    """Explicit primitive of a full-system cocycle in positive degree.

    ``choice`` picks, for each grid point x, an index whose region contains
    x; the output family b satisfies boundary(b, t) == cocycle's member at t,
    exactly, whenever the input is a cocycle.
    """
    degree = cocycle.arity - 1
    if degree < 1:
        raise DomainError("the homotopy needs degree at least 1 (arity at least 2)")
    if cocycle.cap is not None:
        raise DomainError("the homotopy applies to uncapped families")
    if not is_cocycle(cocycle):
        raise DomainError("input is not a cocycle")
    pick = choice.__getitem__ if isinstance(choice, Mapping) else choice
    sign = 1 if degree % 2 == 0 else -1

    def fill(t: IndexTuple, dom: Region) -> dict[GridPoint, int]:
        vals: dict[GridPoint, int] = {}
        for x in dom:
            fx = pick(x)
            if fx not in cocycle.index_map or x not in region(cocycle.index_map[fx]):
                raise DomainError(f"choice at {x} does not contain the point in its region")
            v = evaluate(cocycle, t + (fx,)).entries.get(x, 0)
            if v:
                vals[x] = sign * v
        return vals

    return make_family(degree, dict(cocycle.index_map), fill=fill)


def default_choice(index_map: Mapping[Index, TruncFn]) -> Callable[[GridPoint], Index]:
    """Pick, for each grid point, the smallest index covering it."""
    ids = sorted(index_map)

    def pick(x: GridPoint) -> Index:
        for i in ids:
            if x in region(index_map[i]):
                return i
        raise DomainError(f"no index covers the point {x}")

    return pick


def witness_from_vanishing(fam: Family, ell: int) -> Witness:
    """Constructive lower-arity witness when boundary sums vanish exactly
    above ell.

    Arity 1 patches values from any member covering each point (coherence
    above ell makes this unambiguous); higher arities zero the family at low
    columns and apply the contracting homotopy.  This route is independent
    of the integer linear solver and must agree with it on feasibility.
    """
    if fam.cap is not None:
        raise DomainError("constructive witnesses apply to uncapped families")
    if not is_coherent(fam, ell):
        raise DomainError(f"boundary sums do not vanish above column {ell}")
    if fam.arity == 1:
        dom = region(join(list(fam.index_map.values())))
        vals: dict[GridPoint, int] = {}
        for t in fam.increasing_tuples(1):
            for p, v in fam.table[t].entries.items():
                if p[0] > ell and v:
                    vals[p] = v
        witness: Witness = SparseZFn(dom, vals)
    else:
        witness = contracting_homotopy(
            zero_below(fam, ell), default_choice(fam.index_map)
        )
    if not is_trivialization_type1(fam, witness, ell):
        raise AssertionError("constructive witness failed the checker")
    return witness


def connecting_map(fam: Family, ell: int) -> Family:
    """Boundary-sum family of a family that is coherent above ell.

    The output has arity one higher, is supported in columns <= ell, and is
    itself an exact cocycle (checked).  Families that fail coherence above
    ell are rejected because their boundary leaves the low-column support.
    """
    if fam.cap is not None:
        raise DomainError("boundary-sum families are built from uncapped input")
    if not is_coherent(fam, ell):
        raise DomainError(f"family is not coherent above column {ell}")

    def fill(t: IndexTuple, dom: Region) -> dict[GridPoint, int]:
        return dict(boundary(fam, t).entries)

    out = make_family(fam.arity + 1, dict(fam.index_map), fill=fill)
    if not is_cocycle(out):
        raise AssertionError("boundary-sum family failed the cocycle postcondition")
    return out


def is_coboundary(space: CochainSpace, fam: Family) -> bool:
    """Membership of a degree-n cochain in the image of the degree-(n-1) map."""
    if space.degree == 0:
        return all(v == 0 for v in space.to_vector(fam))
    below = CochainSpace(space.system, space.degree - 1, space.index_map, space.split)
    mat = differential(below)
    system = _LinearSystem(tuple(map(tuple, mat.data.tolist())))
    return system.solve(tuple(int(x) for x in space.to_vector(fam))) is not None


@dataclass
class InfeasibilityCertificate:
    """A row functional proving an integer system A x = b unsolvable.

    ``row @ A`` is divisible by ``modulus`` entrywise (identically zero when
    modulus is 0) while ``row @ b = offset`` is not, so no integer solution
    can exist.
    """

    row: tuple[int, ...]
    modulus: int
    offset: int

    def verify(self, a: np.ndarray, b: np.ndarray) -> bool:
        row = np.array(self.row, dtype=object)
        lhs = np.dot(row, a.astype(object))
        rhs = int(np.dot(row, np.asarray(b, dtype=object)))
        if rhs != self.offset:
            return False
        if self.modulus == 0:
            return all(x == 0 for x in np.atleast_1d(lhs)) and self.offset != 0
        return all(x % self.modulus == 0 for x in np.atleast_1d(lhs)) and self.offset % self.modulus != 0


class _LinearSystem:
    """A factored integer system A x = b, reusable across right-hand sides."""

    def __init__(self, rows: tuple[tuple[int, ...], ...], width: int | None = None):
        if rows:
            width = len(rows[0])
        elif width is None:
            width = 0
        self.matrix = np.array(rows, dtype=np.int64).reshape(len(rows), width)
        self.snf = smith_normal_form(self.matrix)
        self._u = [[int(x) for x in row] for row in self.snf.left]
        self._v = [[int(x) for x in row] for row in self.snf.right]
        self._d = self.snf.invariants

    def _transformed(self, b: tuple[int, ...]) -> list[int]:
        return [sum(uij * bj for uij, bj in zip(row, b)) for row in self._u]

    def solve(self, b: tuple[int, ...]) -> Optional[list[int]]:
        y = self._transformed(b)
        rank = len(self._d)
        coeffs = []
        for i, yi in enumerate(y):
            if i < rank:
                d = self._d[i]
                if yi % d:
                    return None
                coeffs.append(yi // d)
            elif yi != 0:
                return None
        cols = len(self._v)
        x = [0] * cols
        for j in range(cols):
            row = self._v[j]
            x[j] = sum(row[i] * coeffs[i] for i in range(min(rank, cols)))
        return x

    def certificate(self, b: tuple[int, ...]) -> Optional[InfeasibilityCertificate]:
        y = self._transformed(b)
        rank = len(self._d)
        for i, yi in enumerate(y):
            if i < rank:
                if yi % self._d[i]:
                    return InfeasibilityCertificate(tuple(self._u[i]), self._d[i], yi)
            elif yi != 0:
                return InfeasibilityCertificate(tuple(self._u[i]), 0, yi)
        return None


def _hashable_family_shape(fam: Family) -> tuple:
    return (
        fam.arity,
        tuple(sorted(fam.index_map.items())),
        fam.cap,
    )


@functools.lru_cache(maxsize=256)
def _type1_system(shape: tuple, ell: int) -> tuple[_LinearSystem, list, list]:
    """Factored witness-equation system for one family shape and threshold.

    Variables are the witness coordinates; equations demand that the witness
    boundary matches the family above the threshold.  Only the right-hand
    side depends on the family's values, so the factorization is shared.
    """
    arity, items, cap = shape
    index_map = dict(items)
    ids = sorted(index_map)

    def dom_of(fs: list[TruncFn]) -> Region:
        if cap is not None:
            fs = fs + [cap]
        return region(meet(fs))

    if arity == 1:
        psi_dom = sorted(dom_of([join([index_map[i] for i in ids])]))
        var_pos = {x: c for c, x in enumerate(psi_dom)}
        rows: list[tuple[int, ...]] = []
        eqs: list[tuple[IndexTuple, GridPoint]] = []
        for i in ids:
            for x in sorted(dom_of([index_map[i]])):
                if x[0] <= ell:
                    continue
                row = [0] * len(var_pos)
                row[var_pos[x]] = 1
                rows.append(tuple(row))
                eqs.append(((i,), x))
        return _LinearSystem(tuple(rows), len(var_pos)), psi_dom, eqs

    var_list: list[tuple[IndexTuple, GridPoint]] = []
    for s in combinations(ids, arity - 1):
        for x in sorted(dom_of([index_map[i] for i in s])):
            var_list.append((s, x))
    var_pos = {sx: c for c, sx in enumerate(var_list)}
    rows = []
    eqs = []
    for t in combinations(ids, arity):
        for x in sorted(dom_of([index_map[i] for i in t])):
            if x[0] <= ell:
                continue
            row = [0] * len(var_list)
            for i in range(arity):
                row[var_pos[(remove_entry(t, i), x)]] += 1 if i % 2 == 0 else -1
            rows.append(tuple(row))
            eqs.append((t, x))
    return _LinearSystem(tuple(rows), len(var_list)), var_list, eqs


def _type1_rhs(fam: Family, eqs: list) -> tuple[int, ...]:
    return tuple(fam.table[t].entries.get(x, 0) for t, x in eqs)


def _witness_from_solution(fam: Family, var_list: list, x: list[int]) -> Witness:
    if fam.arity == 1:
        dom = frozenset(var_list)
        return SparseZFn(dom, {p: v for p, v in zip(var_list, x) if v})
    values: dict[IndexTuple, dict[GridPoint, int]] = {}
    for (s, p), v in zip(var_list, x):
        if v:
            values.setdefault(s, {})[p] = v
    return make_family(fam.arity - 1, dict(fam.index_map), values, cap=fam.cap)


def solve_typeI(fam: Family, ell: int) -> Optional[Witness]:
    """Find a lower-arity witness whose boundary matches the family above ell.

    Solved as an integer linear system; feasibility is over the integers, not
    the rationals.  A returned witness has already passed the checker.
    """
    system, var_list, eqs = _type1_system(_hashable_family_shape(fam), ell)
    x = system.solve(_type1_rhs(fam, eqs))
    if x is None:
        return None
    witness = _witness_from_solution(fam, var_list, x)
    if not is_trivialization_type1(fam, witness, ell):
        raise AssertionError("solver produced a witness that fails the checker")
    return witness


def typeI_certificate(fam: Family, ell: int) -> Optional[InfeasibilityCertificate]:
    """Infeasibility proof for the witness system, or None when solvable."""
    system, _var_list, eqs = _type1_system(_hashable_family_shape(fam), ell)
    return system.certificate(_type1_rhs(fam, eqs))


def typeI_system_matrix(fam: Family, ell: int) -> tuple[np.ndarray, np.ndarray]:
    """The raw (matrix, rhs) pair behind solve_typeI, for certificate checks."""
    system, _var_list, eqs = _type1_system(_hashable_family_shape(fam), ell)
    return system.matrix, np.array(_type1_rhs(fam, eqs), dtype=np.int64)


def solve_typeII(fam: Family) -> Optional[tuple[int, Family]]:
    """Smallest threshold with a same-arity witness, plus the witness.

    The witness is required to be supported in columns <= ell (the
    low-column subsystem), which makes its boundary vanish above ell; the
    smallest feasible threshold is therefore the largest column where some
    boundary sum of the family is nonzero.  The sweep runs ell = 0 .. J and
    returns None only if no threshold in that range works.
    """
    worst = -1
    for t in fam.increasing_tuples(fam.arity + 1):
        worst = max(worst, boundary(fam, t).max_nonzero_column())
    ell = max(worst, 0)
    if ell > fam.columns:
        return None
    psi = make_family(
        fam.arity,
        dict(fam.index_map),
        {t: dict(fn.zero_above(ell).entries) for t, fn in fam.table.items()},
        cap=fam.cap,
    )
    if not is_trivialization_type2(fam, psi, ell):
        raise AssertionError("type-II witness failed its checker")
    return ell, psi
