"""Exact enumeration of torsor points of bounded height.

Counts are reported at the monomial-max bound B.  For X_n the raw count is the
number of seven-variable torsor tuples (eight per rational point); for X'_n it
is the number of eight-variable tuples and the quotient divides by 16.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import __version__
from . import _kernels as K
from .arith import egcd, gcd_all, iroot, primitive_normalized, squarefree_divisors

INT64_SAFE = 1 << 62
DEFAULT_BLOCKS = 8
ORACLE_LIMIT = 20000


class OracleRefusal(ValueError):
    """Raised when a brute-force request is too large to be run."""


# ---------------------------------------------------------------------------
# series containers


@dataclass
class CountEntry:
    B: int
    raw: int
    quotient: int
    fibers: dict[tuple[int, int, int], int] | None = None

    def to_dict(self) -> dict:
        out = {"B": str(self.B), "raw_count": str(self.raw), "quotient_count": str(self.quotient)}
        if self.fibers is not None:
            out["fibers"] = [{"base": list(k), "count": str(v)} for k, v in sorted(self.fibers.items())]
        return out


@dataclass
class CountSeries:
    family: str
    n: int
    entries: list[CountEntry] = field(default_factory=list)
    provenance: str = ""

    def counts(self) -> dict[int, int]:
        return {e.B: e.quotient for e in self.entries}

    def to_json(self) -> str:
        return json.dumps({"family": self.family, "n": self.n, "version": __version__,
                           "provenance": self.provenance,
                           "entries": [e.to_dict() for e in self.entries]}, sort_keys=True)

    def to_csv(self, prediction=None) -> str:
        lines = ["B,N,logB,N_over_prediction"]
        for e in self.entries:
            ratio = "" if prediction is None else repr(e.quotient / prediction(e.B))
            lines.append(f"{e.B},{e.quotient},{math.log(e.B)!r},{ratio}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# lines ad - bc = N


def _line_interval(a: int, c: int, b0: int, d0: int, b_bound: int, d_bound: int) -> tuple[int, int]:
    lo, hi = -math.inf, math.inf
    for coef, off, R in ((a, b0, b_bound), (c, d0, d_bound)):
        if coef == 0:
            if abs(off) > R:
                return 1, 0
        elif coef > 0:
            lo = max(lo, -((R + off) // coef))
            hi = min(hi, (R - off) // coef)
        else:
            m = -coef
            lo = max(lo, -((R - off) // m))
            hi = min(hi, (off + R) // m)
    return int(lo), int(hi)


def _line_base(a: int, c: int, N: int) -> tuple[int, int, int, int] | None:
    g = math.gcd(a, c)
    if N % g:
        return None
    a, c, N = a // g, c // g, N // g
    _, x, y = egcd(a, c)  # a x + c y = 1, so (b, d) = (-yN, xN) solves ad - bc = N
    return a, c, -y * N, x * N


def solve_line(a: int, c: int, N: int, b_bound: int, d_bound: int) -> int:
    """Number of integers (b, d) with ad - bc = N, |b| <= b_bound, |d| <= d_bound."""
    if a == 0 and c == 0:
        raise ValueError("(a, c) = (0, 0) does not define a line")
    base = _line_base(a, c, N)
    if base is None:
        return 0
    a, c, b0, d0 = base
    lo, hi = _line_interval(a, c, b0, d0, b_bound, d_bound)
    return max(0, hi - lo + 1)


def iter_line(a: int, c: int, N: int, b_bound: int, d_bound: int) -> Iterator[tuple[int, int]]:
    if a == 0 and c == 0:
        raise ValueError("(a, c) = (0, 0) does not define a line")
    base = _line_base(a, c, N)
    if base is None:
        return
    a, c, b0, d0 = base
    lo, hi = _line_interval(a, c, b0, d0, b_bound, d_bound)
    for k in range(lo, hi + 1):
        yield b0 + a * k, d0 + c * k


@lru_cache(maxsize=1 << 16)
def _mobius_pairs(m: int) -> tuple[tuple[int, int], ...]:
    return tuple(squarefree_divisors(m))


def count_line_coprime(a: int, c: int, N: int, R: int, modulus: int) -> int:
    """Line points in the box |b|, |d| <= R with gcd(b, d, modulus) = 1.

    Requires gcd(a, c) = 1 and modulus | N up to its squarefree kernel, so
    that e | gcd(b, d) is equivalent to e | k on the parametrized line.
    """
    _, x, y = egcd(a, c)
    b0, d0 = -y * N, x * N
    lo, hi = _line_interval(a, c, b0, d0, R, R)
    if hi < lo:
        return 0
    if hi - lo + 1 <= K.SHORT_LINE:
        return sum(1 for k in range(lo, hi + 1) if math.gcd(b0 + a * k, d0 + c * k, modulus) == 1)
    return sum(mu * (hi // e - (lo - 1) // e) for e, mu in _mobius_pairs(abs(modulus)))


# ---------------------------------------------------------------------------
# X_n


def _x_int64_ok(n: int, B: int) -> bool:
    return B < INT64_SAFE and (B + 1) ** (n + 2) < INT64_SAFE**n


_TABLE_CACHE: dict[str, tuple] = {}


def _squarefree_table(limit: int):
    cached = _TABLE_CACHE.get("sqf")
    if cached is None or cached[0] < limit:
        size = max(limit, 1024)
        cached = (size, *K.squarefree_table(size))
        _TABLE_CACHE["sqf"] = cached
    return cached[1:]


def _spf_table(limit: int) -> np.ndarray:
    cached = _TABLE_CACHE.get("spf")
    if cached is None or cached[0] < limit:
        size = max(limit, 1024)
        cached = (size, K.smallest_prime_factors(size))
        _TABLE_CACHE["spf"] = cached
    return cached[1]


def _run_blocks(fn, nblocks: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(nblocks)))


def _merge_fibers(parts: Iterable[dict]) -> dict[tuple[int, int, int], int]:
    out: dict[tuple[int, int, int], int] = {}
    for part in parts:
        for k, v in part.items():
            key = (int(k[0]), int(k[1]), int(k[2]))
            out[key] = out.get(key, 0) + int(v)
    return dict(sorted(out.items()))


def _normalize_bounds(B: int | Sequence[int]) -> list[int]:
    bounds = sorted({int(b) for b in ([B] if isinstance(B, (int, np.integer)) else B)})
    if not bounds or bounds[0] < 0:
        raise ValueError("bounds must be nonnegative")
    return bounds


def count_X(n: int, B: int | Sequence[int], *, workers: int = 1, nblocks: int = DEFAULT_BLOCKS,
            fibers: bool = False, method: str = "auto") -> CountSeries:
    """Seven-variable torsor tuples of X_n with monomial max at most B, for one or several B.

    The quotient in each entry is the number of rational points (raw / 8).
    With ``fibers=True`` the largest bound also carries the fiber breakdown
    (raw units, keyed by the normalized base (a t : c t : z)).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    bounds = _normalize_bounds(B)
    positive = [b for b in bounds if b >= 1]
    raws = {b: 0 for b in bounds}
    fiber_map: dict | None = {} if fibers else None
    if positive:
        Bm = positive[-1]
        compiled = _x_int64_ok(n, Bm) if method == "auto" else method == "compiled"
        if compiled:
            ptr, div, mu = _squarefree_table(Bm)
            arr = np.array(positive, dtype=np.int64)

            def block(i: int):
                d = K.new_fiber_dict()
                out = K.x_counts(n, arr, i, nblocks, ptr, div, mu, K.SHORT_LINE, d, fibers)
                return out, dict(d) if fibers else {}

            parts = _run_blocks(block, nblocks, workers)
            for j, b in enumerate(positive):
                raws[b] = sum(int(p[0][j]) for p in parts)
            if fibers:
                fiber_map = _merge_fibers(p[1] for p in parts)
        else:
            res, fm = _count_x_python(n, positive, fibers)
            raws.update(res)
            if fibers:
                fiber_map = fm
    series = CountSeries("X", n, provenance=f"count_X n={n} blocks={nblocks}")
    for b in bounds:
        series.entries.append(CountEntry(b, raws[b], raws[b] // 8,
                                         fiber_map if (fibers and b == bounds[-1]) else None))
    return series


def _count_x_python(n: int, bounds: list[int], fibers: bool):
    """Big-integer version of the compiled X_n enumerator (same loop structure)."""
    Bm = bounds[-1]
    raws = {b: 0 for b in bounds}
    fm: dict[tuple[int, int, int], int] = {}
    for a in range(0, iroot(Bm, n) + 1):
        an = a**n
        lead = max(an, 1)
        t = 1
        while lead * t ** (n + 1) <= Bm:
            tn1 = t ** (n + 1)
            for w in range(1, Bm // (lead * tn1) + 1):
                wt1 = w * tn1
                cs = [1] if a == 0 else range(-iroot(Bm // wt1, n), iroot(Bm // wt1, n) + 1)
                for z in range(0, iroot(Bm // (w * t), n) + 1):
                    if math.gcd(z, t) != 1:
                        continue
                    N = z ** (n + 1) * w
                    mult = 16 if z else 8
                    for c in cs:
                        if math.gcd(a, c) != 1:
                            continue
                        m0 = max(an * wt1, abs(c) ** n * wt1, z**n * w * t)
                        last = 0
                        for b in bounds:
                            if b >= m0:
                                last = count_line_coprime(a, c, N, b, w)
                                raws[b] += mult * last
                        if fibers and last:
                            for sgn, share in ((1, 8), (-1, mult - 8)):
                                key = primitive_normalized((a * t, c * t, sgn * z))
                                fm[key] = fm.get(key, 0) + share * last
            t += 1
    return raws, dict(sorted(fm.items()))


def oracle_histogram(n: int, B: int) -> np.ndarray:
    """hist[h] = number of six-variable torsor tuples whose monomial max is exactly h."""
    if B > ORACLE_LIMIT:
        raise OracleRefusal(f"brute-force oracle refuses B={B}; limit is {ORACLE_LIMIT} "
                            f"(work grows roughly like B^{(n + 2) / n:.2f} solutions)")
    if B < 1:
        return np.zeros(max(B, 0) + 1, dtype=np.int64)
    return K.oracle_histogram(n, B)


def count_direct_oracle(n: int, B: int) -> int:
    """Brute-force count of six-variable torsor tuples (four per rational point)."""
    return int(oracle_histogram(n, B).sum())


def oracle_series(n: int, bounds: Sequence[int]) -> dict[int, int]:
    """Cumulative brute-force counts for every requested bound, from one histogram."""
    bounds = _normalize_bounds(bounds)
    cum = np.cumsum(oracle_histogram(n, bounds[-1]))
    return {b: int(cum[b]) if b >= 1 else 0 for b in bounds}


def oracle_line_series(n: int, bounds: Sequence[int]) -> dict[int, int]:
    """Six-variable tuple counts from an independent enumeration (all signs, line counting).

    Shares no loop structure with count_X: signs are enumerated rather than
    folded, gcd(a, c, z) = 1 replaces the seven-variable split, and
    gcd(b, d, w) = 1 is imposed by substitution over squarefree e | w.
    """
    bounds = _normalize_bounds(bounds)
    positive = [b for b in bounds if b >= 1]
    out = {b: 0 for b in bounds}
    if positive:
        if not _x_int64_ok(n, positive[-1]):
            raise OracleRefusal("line oracle is limited to the int64 range")
        ptr, div, mu = _squarefree_table(positive[-1])
        vals = K.oracle_line_counts(n, np.array(positive, dtype=np.int64), ptr, div, mu)
        out.update({b: int(v) for b, v in zip(positive, vals)})
    return out


def brute_force_points_X(n: int, B: int) -> set[tuple[int, ...]]:
    """Rational points of X_n (as normalized projective 5-tuples) from six-variable tuples; tiny B only."""
    pts = set()
    amax = iroot(B, n)
    for w in range(-B, B + 1):
        if w == 0:
            continue
        for a in range(-amax, amax + 1):
            for c in range(-amax, amax + 1):
                for z in range(-amax, amax + 1):
                    if (a, c) == (0, 0) or gcd_all((a, c, z)) != 1:
                        continue
                    if max(abs(a) ** n, abs(c) ** n, abs(z) ** n) * abs(w) > B:
                        continue
                    for b, d in iter_line(a, c, z ** (n + 1) * w, B, B):
                        if math.gcd(b, d, w) == 1:
                            pts.add(_weighted_normal(n, (a * w, b * w ** (n - 1), c * w, d * w ** (n - 1), z * w)))
    return pts


def _weighted_normal(n: int, p: tuple[int, ...]) -> tuple[int, ...]:
    """Canonical representative of a point of P(1,n,1,n,1) under lambda-scaling."""
    g0, h = gcd_all((p[0], p[2], p[4])), math.gcd(p[1], p[3])
    g = max(lam for lam in range(1, g0 + 1) if g0 % lam == 0 and h % lam**n == 0)
    weights = (1, n, 1, n, 1)
    base = tuple(x // g**wt for x, wt in zip(p, weights))
    flipped = tuple(x * (-1) ** wt for x, wt in zip(base, weights))
    return max(base, flipped)


# ---------------------------------------------------------------------------
# X'_n


def _xp_radius(n: int, A: int, y: int, z: int, t: int, w: int, B: int) -> int:
    caps = ((A * A * y * y, n + 3), ((A * t) ** (2 * n + 2) * w * w, n + 1),
            ((y * z) ** (2 * n + 2) * w * w, n + 1))
    r = None
    for coef, k in caps:
        if coef > B:
            return 0
        v = iroot(B // coef, k)
        r = v if r is None else min(r, v)
    return r


def _xp_outer_ok(n: int, A: int, y: int, z: int, t: int, w: int, B: int) -> bool:
    sq, top = (n + 1) ** 2, n * n + 3 * n + 2
    return (A**sq * z ** (n + 1) * t**top * w ** (n + 3) <= B
            and y**sq * z**top * t ** (n + 1) * w ** (n + 3) <= B)


def _xp_python_ac(n: int, B: int, fibers: dict | None = None) -> int:
    """Representatives (y, z, t, w > 0, a > 0 or (a, c) = (0, 1)), a and c outermost."""
    sq = (n + 1) ** 2
    Amax = iroot(B, sq)
    total = 0
    for a in range(0, Amax + 1):
        for c in ([1] if a == 0 else range(-Amax, Amax + 1)):
            if math.gcd(a, c) != 1:
                continue
            A = max(a, abs(c))
            t = 1
            while _xp_outer_ok(n, A, 1, 1, t, 1, B) and _xp_radius(n, A, 1, 1, t, 1, B) > 0:
                z = 1
                while _xp_outer_ok(n, A, 1, z, t, 1, B) and z ** (n + 1) <= 2 * A * _xp_radius(n, A, 1, z, t, 1, B):
                    if math.gcd(z, t) == 1:
                        w = 1
                        while (_xp_outer_ok(n, A, 1, z, t, w, B)
                               and z ** (n + 1) * w <= 2 * A * _xp_radius(n, A, 1, z, t, w, B)):
                            y = 1
                            while _xp_outer_ok(n, A, y, z, t, w, B):
                                R = _xp_radius(n, A, y, z, t, w, B)
                                N = y**n * z ** (n + 1) * w
                                if N > 2 * A * R:
                                    break
                                if math.gcd(y, t) == 1 and math.gcd(y, w) == 1:
                                    k = count_line_coprime(a, c, N, R, z * w)
                                    total += k
                                    if fibers is not None and k:
                                        for s in (1, -1):
                                            key = primitive_normalized((a * t, c * t, s * y * z))
                                            fibers[key] = fibers.get(key, 0) + 16 * k
                                y += 1
                            w += 1
                    z += 1
                t += 1
    return total


def _xp_python_wt(n: int, B: int) -> int:
    """Same count with w and t outermost and (a, c) innermost; no pruning by line length."""
    sq, top = (n + 1) ** 2, n * n + 3 * n + 2
    total = 0
    w = 1
    while w ** (n + 3) <= B:
        t = 1
        while t**top * w ** (n + 3) <= B:
            z = 1
            while z ** (n + 1) * t**top * w ** (n + 3) <= B:
                if math.gcd(z, t) == 1:
                    y = 1
                    while y**sq * z**top * t ** (n + 1) * w ** (n + 3) <= B:
                        if math.gcd(y, t) == 1 and math.gcd(y, w) == 1:
                            Amax = iroot(B // (z ** (n + 1) * t**top * w ** (n + 3)), sq)
                            N = y**n * z ** (n + 1) * w
                            for a in range(0, Amax + 1):
                                for c in ([1] if a == 0 else range(-Amax, Amax + 1)):
                                    if math.gcd(a, c) != 1:
                                        continue
                                    R = _xp_radius(n, max(a, abs(c)), y, z, t, w, B)
                                    if R > 0 or N == 0:
                                        total += count_line_coprime(a, c, N, R, z * w)
                        y += 1
                z += 1
            t += 1
        w += 1
    return total


def _xp_compiled(n: int, B: int, workers: int, nblocks: int, fibers: bool):
    sq = (n + 1) ** 2
    Amax = iroot(B, sq)
    spf = _spf_table(2 * max(Amax, 1) * iroot(B, n + 3) + 2)

    def block(i: int):
        d = K.new_fiber_dict()
        total = K.xp_counts(n, B, i, nblocks, spf, K.SHORT_LINE, d, fibers)
        return int(total), dict(d) if fibers else {}

    parts = _run_blocks(block, nblocks, workers)
    reps = sum(p[0] for p in parts)
    return reps, (_merge_fibers(p[1] for p in parts) if fibers else None)


def count_Xp(n: int, B: int | Sequence[int], *, workers: int = 1, nblocks: int = DEFAULT_BLOCKS,
             fibers: bool = False, method: str = "auto") -> CountSeries:
    """Eight-variable torsor tuples of X'_n with all 13 monomials at most B.

    ``method`` is one of auto, compiled, python-ac, python-wt; the two Python
    variants use different loop orders and serve as mutual oracles.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    bounds = _normalize_bounds(B)
    series = CountSeries("Xprime", n, provenance=f"count_Xp n={n} method={method} blocks={nblocks}")
    for b in bounds:
        fib = None
        want = fibers and b == bounds[-1]
        if b < 1:
            reps = 0
        elif method == "python-wt":
            if want:
                raise ValueError("fiber breakdown is only produced by the a,c-outer enumerators")
            reps = _xp_python_wt(n, b)
        elif method == "python-ac" or (method == "auto" and b >= INT64_SAFE):
            fib = {} if want else None
            reps = _xp_python_ac(n, b, fib)
            fib = dict(sorted(fib.items())) if want else None
        else:
            reps, fib = _xp_compiled(n, b, workers, nblocks, want)
        raw = 32 * reps
        series.entries.append(CountEntry(b, raw, raw // 16, fib))
    return series


def count_fiberwise(family: str, n: int, B: int, *, workers: int = 1) -> dict[tuple[int, int, int], int]:
    """Raw tuple counts grouped by the normalized fiber base; sums to the raw total."""
    if family == "X":
        series = count_X(n, B, workers=workers, fibers=True)
    elif family == "Xprime":
        series = count_Xp(n, B, workers=workers, fibers=True)
    else:
        raise ValueError(f"unknown family {family!r}")
    return series.entries[-1].fibers or {}


# ---------------------------------------------------------------------------
# single fibers


def fiber_count_X(n: int, x: Sequence[int], B: int) -> int:
    """Rational points of X_n over the base x = (a : c : z) with monomial max <= B."""
    a, c, z = primitive_normalized(x)
    g = math.gcd(a, c)
    if g == 0:
        raise ValueError("fibers over V(a, c) are not counted")
    A, C = a // g, c // g
    z = abs(z)
    lead = max(abs(A) ** n, abs(C) ** n) * g ** (n + 1)
    if _x_int64_ok(n, B) and B // lead <= 50_000_000:
        ptr, div, mu = _squarefree_table(B // lead + 1)
        return int(K.x_fiber_count(n, A, C, z, g, B, ptr, div, mu, K.SHORT_LINE))
    total, w = 0, 1
    while lead * w <= B and abs(z) ** n * g * w <= B:
        total += count_line_coprime(A, C, z ** (n + 1) * w, B, w)
        w += 1
    return total


def fiber_count_Xp(n: int, x: Sequence[int], B: int) -> int:
    """Rational points of X'_n over x = (a^ : c^ : y^) with all monomials <= B.

    The base determines t = gcd(a^, c^) and y z = |y^|; the sum runs over the
    splittings y z = |y^| and over w.  Each point has 16 torsor tuples; the
    normalized base has (a^, c^) in the half-plane used by the enumerator, so
    a = a^/t and c = c^/t with no sign choice; x and its y^-sign twin have
    equal counts.
    """
    ah, ch, yh = primitive_normalized(x)
    if yh == 0 or (ah, ch) == (0, 0):
        raise ValueError("fibers over V(a^, c^) or V(y^) are not admissible")
    t = math.gcd(ah, ch)
    Y = abs(yh)
    a, c = ah // t, ch // t
    A = max(abs(a), abs(c))
    sq, top = (n + 1) ** 2, n * n + 3 * n + 2
    total = 0
    for z in (d for d in range(1, Y + 1) if Y % d == 0):
        y = Y // z
        if math.gcd(z, t) != 1 or math.gcd(y, t) != 1:
            continue
        w = 1
        while (A**sq * z ** (n + 1) * t**top * w ** (n + 3) <= B
               and y**sq * z**top * t ** (n + 1) * w ** (n + 3) <= B):
            if math.gcd(y, w) == 1:
                R = _xp_radius(n, A, y, z, t, w, B)
                N = y**n * z ** (n + 1) * w
                if N > 2 * A * R:
                    break
                total += count_line_coprime(a, c, N, R, z * w)
            w += 1
    return total


# ---------------------------------------------------------------------------
# singular locus


def count_singular_locus(n: int, B: int | float) -> int:
    """Points (b : d) of P^1 whose standard height, raised to (n+2)/(2n), is at most B.

    Equivalently primitive (b, d) with max(|b|, |d|) <= T, T the largest
    integer with T^(n+2) <= B^n, counted up to sign.
    """
    if B < 1:
        return 0
    if isinstance(B, float) and not B.is_integer():
        T = int(math.floor(B ** (n / (n + 2)) + 1e-12))
        while (T + 1) ** (n + 2) <= B**n:
            T += 1
        while T > 0 and T ** (n + 2) > B**n:
            T -= 1
    else:
        T = iroot(int(B) ** n, n + 2)
    mu = _mobius_table(T)
    total = 0
    for e in range(1, T + 1):
        if mu[e]:
            m = T // e
            total += int(mu[e]) * ((2 * m + 1) ** 2 - 1)
    return total // 2


def _mobius_table(T: int) -> np.ndarray:
    mu = np.ones(T + 1, dtype=np.int8)
    if T >= 0:
        mu[0] = 0
    is_comp = np.zeros(T + 1, dtype=bool)
    for p in range(2, T + 1):
        if not is_comp[p]:
            is_comp[2 * p::p] = True
            mu[p::p] *= -1
            mu[p * p::p * p] = 0
    return mu
