"""Picard lattice data for both families and exact rational cone computations.

Everything here is exact: generator degrees are integer vectors, linear programs
are solved with :class:`fractions.Fraction` by enumerating bases, which is
affordable because the lattices have rank at most 4 and cones at most 8
generators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .arith import gcd_all

FAMILIES = ("X", "Xprime")


class GeometryError(ValueError):
    pass


class NoFiniteInfimum(GeometryError):
    pass


class MembershipError(GeometryError):
    pass


@dataclass(frozen=True)
class DivisorClass:
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def rank(self) -> int:
        return len(self.coords)

    def __add__(self, other: DivisorClass) -> DivisorClass:
        _same_rank(self.coords, other.coords)
        return DivisorClass(tuple(x + y for x, y in zip(self.coords, other.coords)))

    def __sub__(self, other: DivisorClass) -> DivisorClass:
        _same_rank(self.coords, other.coords)
        return DivisorClass(tuple(x - y for x, y in zip(self.coords, other.coords)))

    def __neg__(self) -> DivisorClass:
        return DivisorClass(tuple(-x for x in self.coords))

    def scaled(self, k: int) -> DivisorClass:
        return DivisorClass(tuple(k * x for x in self.coords))

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True)
class ConeSpec:
    generators: tuple[DivisorClass, ...]

    def __post_init__(self) -> None:
        gens = tuple(g if isinstance(g, DivisorClass) else DivisorClass(tuple(g)) for g in self.generators)
        if not gens:
            raise GeometryError("a cone needs at least one generator")
        if len({g.rank for g in gens}) != 1:
            raise GeometryError("cone generators must share one lattice rank")
        object.__setattr__(self, "generators", gens)

    @property
    def rank(self) -> int:
        return self.generators[0].rank


@dataclass(frozen=True)
class PicardData:
    family: str
    n: int
    rank: int
    variables: tuple[str, ...]
    generator_degrees: dict[str, DivisorClass] = field(hash=False)
    relation_degree: DivisorClass
    anticanonical: DivisorClass
    pullback_anticanonical: tuple[Fraction, ...]
    height_class: DivisorClass
    # height_class = height_scale * pullback_anticanonical
    height_scale: Fraction

    def effective_cone(self) -> ConeSpec:
        seen: list[DivisorClass] = []
        for var in self.variables:
            g = self.generator_degrees[var]
            if g not in seen:
                seen.append(g)
        return ConeSpec(tuple(seen))

    def degree(self, exponents: Sequence[int]) -> tuple[int, ...]:
        out = [0] * self.rank
        for var, e in zip(self.variables, exponents):
            for i, x in enumerate(self.generator_degrees[var].coords):
                out[i] += e * x
        return tuple(out)

    def to_json(self) -> str:
        payload = {
            "family": self.family,
            "n": self.n,
            "rank": self.rank,
            "degrees": {v: list(self.generator_degrees[v].coords) for v in self.variables},
            "antiK": list(self.anticanonical.coords),
            "relation": list(self.relation_degree.coords),
        }
        return json.dumps(payload, sort_keys=True)


def _same_rank(u: Sequence, v: Sequence) -> None:
    if len(u) != len(v):
        raise GeometryError(f"rank mismatch: {len(u)} vs {len(v)}")


def _build(family: str, n: int, variables: tuple[str, ...], degrees: dict[str, tuple[int, ...]],
           relation_vars: tuple[str, str], height_class: tuple[int, ...] | None,
           height_scale: Fraction) -> PicardData:
    gens = {v: DivisorClass(degrees[v]) for v in variables}
    rank = len(next(iter(degrees.values())))
    relation = gens[relation_vars[0]] + gens[relation_vars[1]]
    total = DivisorClass((0,) * rank)
    for v in variables:
        total = total + gens[v]
    anti = total - relation
    if height_class is None:
        height = anti
        pullback = tuple(Fraction(x) for x in anti.coords)
    else:
        height = DivisorClass(height_class)
        pullback = tuple(Fraction(x) / height_scale for x in height.coords)
    return PicardData(family, n, rank, variables, gens, relation, anti, pullback, height, height_scale)


def cox_data(family: str, n: int, rank: int | None = None) -> PicardData:
    """Grading tables of the Cox rings.

    ``X`` offers rank 2 (the blow-up, default, used for the invariants) and
    rank 3 (the model with the extra variable ``t`` used for enumeration).
    ``Xprime`` offers rank 4 (the resolution, default) and rank 3 (the class
    group of the singular threefold itself).
    """
    if family not in FAMILIES:
        raise GeometryError(f"unknown family {family!r}")
    if not isinstance(n, int) or n < 2:
        raise GeometryError("n must be an integer >= 2")
    if family == "X":
        rank = 2 if rank is None else rank
        if rank == 2:
            degrees = {"a": (1, 0), "b": (n, 1), "c": (1, 0), "d": (n, 1), "z": (1, 0), "w": (0, 1)}
            return _build(family, n, ("a", "b", "c", "d", "z", "w"), degrees, ("a", "d"),
                          (n, 1), Fraction(n, n + 2))
        if rank == 3:
            degrees = {"a": (1, 0, -1), "b": (n, 1, 1), "c": (1, 0, -1), "d": (n, 1, 1),
                       "z": (1, 0, 0), "w": (0, 1, 0), "t": (0, 0, 1)}
            return _build(family, n, ("a", "b", "c", "d", "z", "w", "t"), degrees, ("a", "d"),
                          (n, 1, 1), Fraction(n, n + 2))
        raise GeometryError("family X has models of rank 2 and 3")
    rank = 4 if rank is None else rank
    if rank == 4:
        degrees = {"a": (1, 1, -1, 0), "b": (n, n - 1, 1, 1), "c": (1, 1, -1, 0), "d": (n, n - 1, 1, 1),
                   "y": (0, 1, 0, 0), "z": (1, 0, 0, 0), "t": (0, 0, 1, 0), "w": (0, 0, 0, 1)}
        height = (n * n + 3 * n + 2, n * n + 2 * n + 1, n + 1, n + 3)
        return _build(family, n, ("a", "b", "c", "d", "y", "z", "t", "w"), degrees, ("a", "d"),
                      height, Fraction(n + 1))
    if rank == 3:
        degrees = {"a": (1, 1, -1), "b": (n, n - 1, 1), "c": (1, 1, -1), "d": (n, n - 1, 1),
                   "y": (0, 1, 0), "z": (1, 0, 0), "t": (0, 0, 1)}
        return _build(family, n, ("a", "b", "c", "d", "y", "z", "t"), degrees, ("a", "d"),
                      None, Fraction(1))
    raise GeometryError("family Xprime has models of rank 3 and 4")


# ---------------------------------------------------------------------------
# exact linear programming


def _solve_square(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Gaussian elimination; None if the matrix is singular."""
    m = len(rows)
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(m):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [aug[r][m] for r in range(m)]


def _row_basis(A: list[list[Fraction]], b: list[Fraction]) -> tuple[list[list[Fraction]], list[Fraction]] | None:
    """Drop dependent equality rows; None if the system is inconsistent."""
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    echelon: list[tuple[int, list[Fraction]]] = []
    for row, val in zip(A, b):
        r = list(row) + [val]
        for lead, e in echelon:
            if r[lead] != 0:
                f = r[lead] / e[lead]
                r = [x - f * y for x, y in zip(r, e)]
        lead = next((i for i, x in enumerate(r[:-1]) if x != 0), None)
        if lead is None:
            if r[-1] != 0:
                return None
            continue
        echelon.append((lead, r))
        rows.append(list(row))
        rhs.append(val)
    return rows, rhs


def _vertices(A: list[list[Fraction]], b: list[Fraction]):
    """Yield the basic feasible solutions of {x >= 0 : A x = b}."""
    reduced = _row_basis(A, b)
    if reduced is None:
        return
    rows, rhs = reduced
    m = len(rows)
    ncols = len(A[0])
    if m == 0:
        yield [Fraction(0)] * ncols
        return
    for basis in combinations(range(ncols), m):
        sub = [[row[j] for j in basis] for row in rows]
        sol = _solve_square(sub, rhs)
        if sol is None or any(x < 0 for x in sol):
            continue
        x = [Fraction(0)] * ncols
        for j, val in zip(basis, sol):
            x[j] = val
        yield x


class _Unbounded(Exception):
    pass


def _lp_min(A: list[list[Fraction]], b: list[Fraction], cost: list[Fraction]) -> Fraction | None:
    """min cost.x over {x >= 0 : A x = b}; None if infeasible, _Unbounded if unbounded."""
    best: Fraction | None = None
    for x in _vertices(A, b):
        val = sum((c * xi for c, xi in zip(cost, x)), Fraction(0))
        if best is None or val < best:
            best = val
    if best is None:
        return None
    # recession directions: d >= 0, A d = 0, sum d = 1
    A_rec = [list(r) for r in A] + [[Fraction(1)] * len(cost)]
    b_rec = [Fraction(0)] * len(A) + [Fraction(1)]
    for d in _vertices(A_rec, b_rec):
        if sum((c * di for c, di in zip(cost, d)), Fraction(0)) < 0:
            raise _Unbounded
    return best


def _as_fractions(v) -> list[Fraction]:
    coords = v.coords if isinstance(v, DivisorClass) else v
    return [Fraction(x) for x in coords]


def _generator_matrix(cone: ConeSpec) -> list[list[Fraction]]:
    return [[Fraction(g.coords[i]) for g in cone.generators] for i in range(cone.rank)]


def cone_contains(cone: ConeSpec, v) -> bool:
    target = _as_fractions(v)
    _same_rank(target, cone.generators[0].coords)
    A = _generator_matrix(cone)
    return _lp_min(A, target, [Fraction(0)] * len(cone.generators)) is not None


def min_t_effective(cone: ConeSpec, L, K) -> Fraction:
    """inf{t : t*L + K lies in the cone}, exactly."""
    Lf, Kf = _as_fractions(L), _as_fractions(K)
    _same_rank(Lf, cone.generators[0].coords)
    _same_rank(Kf, Lf)
    G = _generator_matrix(cone)
    # t = t_plus - t_minus;  t*L - sum(lambda_i g_i) = -K
    A = [[Lf[i], -Lf[i]] + [-x for x in G[i]] for i in range(cone.rank)]
    cost = [Fraction(1), Fraction(-1)] + [Fraction(0)] * len(cone.generators)
    try:
        best = _lp_min(A, [-k for k in Kf], cost)
    except _Unbounded:
        raise NoFiniteInfimum("t*L + K stays effective as t -> -infinity") from None
    if best is None:
        raise NoFiniteInfimum("t*L + K is never effective")
    return best


def _rank_of(vectors: list[list[Fraction]]) -> int:
    if not vectors:
        return 0
    reduced = _row_basis(vectors, [Fraction(0)] * len(vectors))
    return len(reduced[0]) if reduced else 0


def minimal_face(cone: ConeSpec, v) -> list[DivisorClass]:
    """Generators that carry a strictly positive coefficient in some representation of v."""
    target = _as_fractions(v)
    _same_rank(target, cone.generators[0].coords)
    A = _generator_matrix(cone)
    k = len(cone.generators)
    if _lp_min(A, target, [Fraction(0)] * k) is None:
        raise MembershipError(f"{tuple(target)} is not in the cone")
    face = []
    for j, g in enumerate(cone.generators):
        cost = [Fraction(0)] * k
        cost[j] = Fraction(-1)
        try:
            best = _lp_min(A, target, cost)
        except _Unbounded:
            best = Fraction(-1)
        if best is not None and best < 0:
            face.append(g)
    return face


def b_invariant(cone: ConeSpec, v) -> int:
    face = minimal_face(cone, v)
    return cone.rank - _rank_of([_as_fractions(g) for g in face])


def _primitive_ray(g: DivisorClass) -> tuple[int, ...]:
    d = gcd_all(g.coords)
    return tuple(x // d for x in g.coords) if d else g.coords


def extremal_rays(cone: ConeSpec) -> list[DivisorClass]:
    rays: list[DivisorClass] = []
    seen: set[tuple[int, ...]] = set()
    distinct: list[DivisorClass] = []
    for g in cone.generators:
        key = _primitive_ray(g)
        if key not in seen and any(key):
            seen.add(key)
            distinct.append(g)
    for j, g in enumerate(distinct):
        others = distinct[:j] + distinct[j + 1:]
        if not others or not cone_contains(ConeSpec(tuple(others)), g):
            rays.append(g)
    return rays


def is_simplicial(cone: ConeSpec) -> bool:
    rays = extremal_rays(cone)
    return len(rays) == _rank_of([_as_fractions(g) for g in cone.generators])


@dataclass(frozen=True)
class Invariants:
    family: str
    n: int
    a: Fraction
    b: int
    t_min: Fraction
    residual: tuple[Fraction, ...]
    simplicial: bool


def invariants(family: str, n: int) -> Invariants:
    """a- and b-invariants for the height class of the family's main model."""
    data = cox_data(family, n)
    cone = data.effective_cone()
    K = [-x for x in data.anticanonical.coords]
    t = min_t_effective(cone, data.height_class, K)
    residual = tuple(t * h + k for h, k in zip(data.height_class.coords, K))
    return Invariants(family, n, data.height_scale * t, b_invariant(cone, residual), t, residual,
                      is_simplicial(cone))


def alpha_constant(cone: ConeSpec, antiK) -> Fraction:
    """rank * vol{t in dual cone : <t, -K> <= 1} for a simplicial full-rank cone."""
    rays = extremal_rays(cone)
    r = cone.rank
    if len(rays) != r:
        raise GeometryError("closed form only for simplicial full-rank cones")
    G = [[Fraction(g.coords[i]) for g in rays] for i in range(r)]
    coeffs = _solve_square(G, _as_fractions(antiK))
    if coeffs is None or any(c <= 0 for c in coeffs):
        raise GeometryError("-K must lie in the interior of the cone")
    det = _determinant(G)
    vol = Fraction(1, 1)
    for c in coeffs:
        vol /= c
    factorial = 1
    for i in range(2, r + 1):
        factorial *= i
    return r * vol / (abs(det) * factorial)


def _determinant(M: list[list[Fraction]]) -> Fraction:
    M = [list(r) for r in M]
    size = len(M)
    det = Fraction(1)
    for col in range(size):
        pivot = next((r for r in range(col, size) if M[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            M[col], M[pivot] = M[pivot], M[col]
            det = -det
        det *= M[col][col]
        for r in range(col + 1, size):
            f = M[r][col] / M[col][col]
            M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return det
