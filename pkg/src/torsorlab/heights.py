"""Monomial sets of the height classes and exact anticanonical heights."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from math import gcd, prod
from typing import Sequence

from .arith import gcd_all
from .geometry import PicardData, cox_data

VARIABLES = {
    ("X", 6): ("a", "b", "c", "d", "z", "w"),
    ("X", 7): ("a", "b", "c", "d", "z", "w", "t"),
    ("Xprime", 8): ("a", "b", "c", "d", "y", "z", "t", "w"),
}


class InvalidPoint(ValueError):
    pass


@dataclass(frozen=True)
class MonomialSet:
    family: str
    n: int
    variables: tuple[str, ...]
    monomials: tuple[tuple[int, ...], ...]
    reduced: tuple[tuple[int, ...], ...]

    def max_abs(self, values: Sequence[int], reduced: bool = True) -> int:
        monos = self.reduced if reduced else self.monomials
        return max_abs_monomial(monos, values)

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n, "variables": list(self.variables),
                           "monomials": [list(m) for m in self.monomials],
                           "reduced": [list(m) for m in self.reduced]})


def max_abs_monomial(monomials: Sequence[Sequence[int]], values: Sequence[int]) -> int:
    absvals = [abs(int(v)) for v in values]
    return max(prod(x**e for x, e in zip(absvals, mono) if e) for mono in monomials)


def _positive_functional(data: PicardData) -> tuple[int, ...]:
    degrees = [data.generator_degrees[v].coords for v in data.variables]
    for phi in itertools.product(range(1, 4), repeat=data.rank):
        if all(sum(p * x for p, x in zip(phi, g)) > 0 for g in degrees):
            return phi
    raise ValueError("no small positive functional on the generator degrees")


def exponents_of_degree(data: PicardData, target: Sequence[int]) -> list[tuple[int, ...]]:
    """All exponent vectors over data.variables whose degree equals target."""
    variables = data.variables
    degrees = {v: data.generator_degrees[v].coords for v in variables}
    phi = _positive_functional(data)
    weight = {v: sum(p * x for p, x in zip(phi, degrees[v])) for v in variables}
    # pick the last `rank` variables forming a basis with unit-determinant solve
    from .geometry import _solve_square  # local to keep the public surface small

    basis = None
    for combo in itertools.combinations(reversed(variables), data.rank):
        rows = [[Fraction(degrees[v][i]) for v in combo] for i in range(data.rank)]
        if _solve_square(rows, [Fraction(0)] * data.rank) is not None:
            basis = combo
            break
    assert basis is not None
    free = [v for v in variables if v not in basis]
    rows = [[Fraction(degrees[v][i]) for v in basis] for i in range(data.rank)]
    out: list[tuple[int, ...]] = []

    def rec(idx: int, partial: dict[str, int], remaining: tuple[int, ...]) -> None:
        budget = sum(p * x for p, x in zip(phi, remaining))
        if budget < 0:
            return
        if idx == len(free):
            sol = _solve_square(rows, [Fraction(x) for x in remaining])
            if sol is None or any(s < 0 or s.denominator != 1 for s in sol):
                return
            full = dict(partial)
            full.update({v: int(s) for v, s in zip(basis, sol)})
            out.append(tuple(full[v] for v in variables))
            return
        v = free[idx]
        for e in range(budget // weight[v] + 1):
            rem = tuple(r - e * g for r, g in zip(remaining, degrees[v]))
            rec(idx + 1, {**partial, v: e}, rem)

    rec(0, {}, tuple(target))
    return sorted(out)


def _reduced_x(n: int, nvars: int) -> list[tuple[int, ...]]:
    if nvars == 6:  # a b c d z w
        return [(0, 1, 0, 0, 0, 0), (0, 0, 0, 1, 0, 0), (n, 0, 0, 0, 0, 1), (0, 0, n, 0, 0, 1),
                (0, 0, 0, 0, n, 1)]
    # a b c d z w t
    return [(0, 1, 0, 0, 0, 0, 0), (0, 0, 0, 1, 0, 0, 0), (n, 0, 0, 0, 0, 1, n + 1),
            (0, 0, n, 0, 0, 1, n + 1), (0, 0, 0, 0, n, 1, 1)]


def _reduced_xprime(n: int) -> list[tuple[int, ...]]:
    # a b c d y z t w
    out = []
    for pb, pd in ((1, 0), (0, 1)):
        for pa, pc in ((1, 0), (0, 1)):
            out.append((2 * pa, (n + 3) * pb, 2 * pc, (n + 3) * pd, 2, 0, 0, 0))
            out.append(((2 * n + 2) * pa, (n + 1) * pb, (2 * n + 2) * pc, (n + 1) * pd, 0, 0, 2 * n + 2, 2))
        out.append((0, (n + 1) * pb, 0, (n + 1) * pd, 2 * n + 2, 2 * n + 2, 0, 2))
    sq = (n + 1) ** 2
    top = n * n + 3 * n + 2
    out.append((sq, 0, 0, 0, 0, n + 1, top, n + 3))
    out.append((0, 0, sq, 0, 0, n + 1, top, n + 3))
    out.append((0, 0, 0, 0, sq, top, n + 1, n + 3))
    return out


def monomial_set(family: str, n: int, nvars: int | None = None) -> MonomialSet:
    """Degree-L monomials and the dominating subset used for evaluation.

    For ``X`` the default is the seven-variable model; ``nvars=6`` gives the
    six-variable form (its t = 1 specialization).
    """
    if family == "X":
        nvars = 7 if nvars is None else nvars
        data = cox_data("X", n, rank=2 if nvars == 6 else 3)
        reduced = _reduced_x(n, nvars)
    elif family == "Xprime":
        nvars = 8
        data = cox_data("Xprime", n)
        reduced = _reduced_xprime(n)
    else:
        raise ValueError(f"unknown family {family!r}")
    full = exponents_of_degree(data, data.height_class.coords)
    return MonomialSet(family, n, data.variables, tuple(full), tuple(reduced))


@total_ordering
@dataclass(frozen=True)
class HeightValue:
    """The height base**exponent, kept exact."""

    base: int
    exponent: Fraction

    def __float__(self) -> float:
        return float(self.base) ** float(self.exponent)

    def bounded_by(self, B: int) -> bool:
        """Whether the height is at most B**exponent, i.e. base <= B."""
        return self.base <= B

    def _key(self, other: HeightValue) -> tuple[int, int]:
        p1, q1 = self.exponent.numerator, self.exponent.denominator
        p2, q2 = other.exponent.numerator, other.exponent.denominator
        return self.base ** (p1 * q2), other.base ** (p2 * q1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeightValue):
            return NotImplemented
        if self.exponent == other.exponent:
            return self.base == other.base
        lhs, rhs = self._key(other)
        return lhs == rhs

    def __lt__(self, other: HeightValue) -> bool:
        if self.exponent == other.exponent:
            return self.base < other.base
        lhs, rhs = self._key(other)
        return lhs < rhs

    def __hash__(self) -> int:
        return hash((self.base, self.exponent))


def height_exponent(family: str, n: int) -> Fraction:
    return Fraction(n + 2, n) if family == "X" else Fraction(1, n + 1)


@dataclass(frozen=True)
class TorsorPoint:
    family: str
    n: int
    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))
        if (self.family, len(self.coords)) not in VARIABLES:
            raise InvalidPoint(f"{self.family} torsor points have 6/7 (X) or 8 (Xprime) coordinates")

    @property
    def variables(self) -> tuple[str, ...]:
        return VARIABLES[(self.family, len(self.coords))]

    def named(self) -> dict[str, int]:
        return dict(zip(self.variables, self.coords))

    def violations(self) -> list[str]:
        v = self.named()
        n = self.n
        a, b, c, d, z, w = (v[k] for k in "abcdzw")
        problems = []
        if self.family == "X":
            t = v.get("t", 1)
            if w * t == 0:
                problems.append("w*t must be nonzero")
            if a * d - b * c - z ** (n + 1) * w != 0:
                problems.append("torsor equation fails")
            if "t" in v:
                pairs = [("a,c", (a, c)), ("b,d,w", (b, d, w)), ("z,t", (z, t))]
            else:
                pairs = [("a,c,z", (a, c, z)), ("b,d,w", (b, d, w))]
        else:
            y, t = v["y"], v["t"]
            if y * z * t * w == 0:
                problems.append("y*z*t*w must be nonzero")
            if a * d - b * c - y**n * z ** (n + 1) * w != 0:
                problems.append("torsor equation fails")
            pairs = [("a,c", (a, c)), ("z,t", (z, t)), ("y,t", (y, t)), ("b,d,z", (b, d, z)),
                     ("b,d,w", (b, d, w)), ("y,w", (y, w))]
        for name, vals in pairs:
            if gcd_all(vals) != 1:
                problems.append(f"gcd({name}) != 1")
        return problems

    def is_valid(self) -> bool:
        return not self.violations()

    def validate(self) -> TorsorPoint:
        problems = self.violations()
        if problems:
            raise InvalidPoint("; ".join(problems))
        return self


def height_torsor(family: str, n: int, point: TorsorPoint | Sequence[int]) -> HeightValue:
    if not isinstance(point, TorsorPoint):
        point = TorsorPoint(family, n, tuple(point))
    if point.family != family or point.n != n:
        raise InvalidPoint("point belongs to a different family or n")
    point.validate()
    reduced = _reduced_x(n, len(point.coords)) if family == "X" else _reduced_xprime(n)
    return HeightValue(max_abs_monomial(reduced, point.coords), height_exponent(family, n))


def height_projective(n: int, coords: Sequence[int]) -> HeightValue:
    """Height of (a:b:c:d:z) in the weighted projective space of weights (1,n,1,n,1)."""
    a, b, c, d, z = (int(x) for x in coords)
    if not any((a, b, c, d, z)):
        raise InvalidPoint("zero tuple")
    if a * d - b * c - z ** (n + 1) != 0:
        raise InvalidPoint("point is not on the hypersurface")
    weighted = (a**n, b, c**n, d, z**n)
    g = gcd_all(weighted)
    return HeightValue(max(abs(x) for x in weighted) // g, Fraction(n + 2, n))


def torsor_to_projective(n: int, coords: Sequence[int]) -> tuple[int, int, int, int, int]:
    """Image of a six- or seven-variable torsor tuple in weighted projective coordinates."""
    coords = tuple(int(x) for x in coords)
    if len(coords) == 7:
        a, b, c, d, z, w, t = coords
        coords = (a * t, b, c * t, d, z, w * t)
    a, b, c, d, z, w = coords
    return (a * w, b * w ** (n - 1), c * w, d * w ** (n - 1), z * w)


def seven_to_six(coords: Sequence[int]) -> tuple[int, ...]:
    a, b, c, d, z, w, t = (int(x) for x in coords)
    return (a * t, b, c * t, d, z, w * t)


def six_to_seven_lifts(coords: Sequence[int]) -> list[tuple[int, ...]]:
    """Both seven-variable lifts of a valid six-variable tuple (t = +-gcd(a, c))."""
    a, b, c, d, z, w = (int(x) for x in coords)
    g = gcd(a, c)
    if g == 0:
        return []
    return [(a // t, b, c // t, d, z, w // t, t) for t in (g, -g)]
